"""Log-likelihoods and log-priors of the latent-space model.

Edge intensities use the log link, ``theta_ij = exp(alpha - ||f_i - f_j||^2)``,
and only the ``i < j`` pairs of the undirected network enter the Poisson
likelihood. Everything the sampler accepts or rejects is ultimately checked
against :func:`log_posterior`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DimensionError, InvalidState, NumericError
from .model import (
    Hyperparams,
    LatentState,
    LoadingState,
    RestrictionPattern,
    WeightedNetwork,
    position_prior_var,
    validate_state,
)

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class InterpData:
    """``p x n`` matrix of node-level interpretation variables (row l = variable l)."""

    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float, copy=True)
        if y.ndim != 2:
            raise DimensionError(f"interpretation data must be p x n, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise NumericError("interpretation data must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def p(self) -> int:
        return self.y.shape[0]

    @property
    def n(self) -> int:
        return self.y.shape[1]

    def __eq__(self, other):
        return isinstance(other, InterpData) and np.array_equal(self.y, other.y)


def intensity(alpha: float, fi, fj) -> float:
    fi = np.asarray(fi, dtype=float)
    fj = np.asarray(fj, dtype=float)
    if fi.shape != fj.shape:
        raise DimensionError(f"position shapes differ: {fi.shape} vs {fj.shape}")
    if not (np.isfinite(alpha) and np.all(np.isfinite(fi)) and np.all(np.isfinite(fj))):
        raise NumericError("intensity needs finite alpha and positions")
    diff = fi - fj
    return float(np.exp(alpha - diff @ diff))


def pair_sq_dists(positions: np.ndarray) -> np.ndarray:
    """Squared distances of the ``i < j`` pairs, row-major order."""
    n = positions.shape[1]
    iu, ju = np.triu_indices(n, k=1)
    diff = positions[:, iu] - positions[:, ju]
    return np.einsum("kp,kp->p", diff, diff)


def intensities(lat: LatentState) -> np.ndarray:
    """Full symmetric ``n x n`` intensity matrix (zero diagonal)."""
    f = lat.positions
    sq = np.sum(f * f, axis=0)
    dist = np.maximum(sq[:, None] + sq[None, :] - 2.0 * f.T @ f, 0.0)
    theta = np.exp(lat.alpha - dist)
    np.fill_diagonal(theta, 0.0)
    return theta


def network_log_lik(net, lat: LatentState) -> float:
    if not isinstance(net, WeightedNetwork):
        net = WeightedNetwork(np.asarray(net))
    if net.n != lat.n:
        raise DimensionError(f"network has {net.n} nodes, positions have {lat.n}")
    w = net.upper()
    log_theta = lat.alpha - pair_sq_dists(lat.positions)
    terms = w * log_theta - np.exp(log_theta) - gammaln(w + 1.0)
    return float(np.sum(terms))


def interp_log_lik(y: InterpData, load: LoadingState, lat: LatentState) -> float:
    if y.p != load.p or y.n != lat.n or load.d != lat.d:
        raise DimensionError(
            f"shape mismatch: Y {y.y.shape}, loadings {load.lam.shape}, positions {lat.positions.shape}"
        )
    s2 = load.idio_var
    if not np.all(s2 > 0):
        raise NumericError("idiosyncratic variances must be > 0")
    resid = y.y - load.lam @ lat.positions
    rss = np.sum(resid * resid, axis=1)
    return float(np.sum(-0.5 * y.n * (LOG_2PI + np.log(s2)) - 0.5 * rss / s2))


def _log_normal(x, var):
    return -0.5 * (LOG_2PI + np.log(var) + x * x / var)


def _log_inv_gamma(x, shape, rate):
    return shape * np.log(rate) - gammaln(shape) - (shape + 1.0) * np.log(x) - rate / x


def _log_beta(x, a, b):
    return (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - (gammaln(a) + gammaln(b) - gammaln(a + b))


def log_prior(lat: LatentState, load: LoadingState, hp: Hyperparams, pat: RestrictionPattern) -> float:
    problems = [m for m in validate_state(lat, load, pat) if not m.startswith("center drift")]
    if problems:
        raise InvalidState("; ".join(problems))

    total = _log_normal(lat.alpha, hp.sigma2_alpha)
    total += np.sum(_log_normal(lat.positions, position_prior_var(lat.d)))
    total += np.sum(_log_inv_gamma(load.idio_var, hp.c0, hp.C0))
    total += np.sum(_log_inv_gamma(load.col_scale, hp.c_sigma, hp.b_sigma))
    total += _log_inv_gamma(load.kappa, hp.c_kappa, hp.b_kappa)
    total += np.sum(_log_beta(load.tau, hp.tau_a, hp.tau_b))

    slab_var = load.kappa * load.col_scale[None, :]
    tau = load.tau[:, None]
    active = load.indicators == 1
    free_on = pat.free & active
    free_off = pat.free & ~active
    slab = _log_normal(load.lam, slab_var)
    total += np.sum(np.where(free_on, np.log(tau) + slab, 0.0))
    total += np.sum(np.where(free_off, np.log1p(-tau), 0.0))
    # half-normal: twice the slab density on (0, inf)
    total += np.sum(np.where(pat.positive, np.log(2.0) + slab, 0.0))
    return float(total)


def log_posterior(net, y: InterpData, lat: LatentState, load: LoadingState, hp: Hyperparams,
                  pat: RestrictionPattern) -> float:
    """Unnormalized joint log-posterior; ``net=None`` drops the network layer."""
    net_term = 0.0 if net is None else network_log_lik(net, lat)
    return net_term + interp_log_lik(y, load, lat) + log_prior(lat, load, hp, pat)
