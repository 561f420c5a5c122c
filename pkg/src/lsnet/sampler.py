"""Metropolis-within-Gibbs sampler for the sparse latent-space model.

One sweep updates, in order: the intercept (random-walk MH), every latent
position in a fresh random order (MH), a recentering pass, a rigid
orthogonal move of the whole configuration, each loading row (spike-and-slab
Gibbs), the row inclusion probabilities, and the variance parameters
(inverse-gamma Gibbs).

Each position update is a random-walk step or, with probability
``jump_prob``, an independence proposal from the node's Gaussian conditional
under the prior and the interpretation data alone. The jump lets a weakly
connected node cross a region the network likelihood makes improbable.

The orthogonal move draws a Haar-random ``Q`` and rotates every position.
The network likelihood is unchanged, so the acceptance ratio involves only
the interpretation data, with the loadings and their indicators integrated
out; on acceptance the loadings are redrawn from their joint conditional.

Position proposals come in two flavours:

``"subspace"`` (default)
    node i moves by ``delta`` while every other node moves by
    ``-delta / (n - 1)``. The proposal never leaves the sum-to-zero subspace,
    so the chain targets the constrained posterior exactly; recentering only
    removes floating-point drift.
``"free"``
    node i moves alone and the configuration is recentered after the
    position pass. Cheaper to reason about but only approximately invariant
    because the interpretation likelihood is not translation invariant.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.special import expit, log_ndtr, ndtri_exp
from scipy.stats import ortho_group

from .errors import DimensionError, InitError
from .likelihood import InterpData, log_posterior, pair_sq_dists
from .model import (
    Cell,
    Hyperparams,
    LatentState,
    LoadingState,
    RestrictionPattern,
    WeightedNetwork,
    position_prior_var,
    validate_state,
)

logger = logging.getLogger(__name__)

BLOCKS = ("init", "alpha", "positions", "orientation", "loadings", "variances")
POSITION_MOVES = ("subspace", "free")
TAU_EPS = 1e-12


class Streams:
    """Independent Philox streams, one per sampler block.

    Philox is counter based, so each block's stream is fixed by the seed
    alone and does not shift when another block consumes more numbers.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        children = np.random.SeedSequence(self.seed).spawn(len(BLOCKS))
        for name, child in zip(BLOCKS, children):
            setattr(self, name, np.random.Generator(np.random.Philox(child)))


@dataclass(frozen=True)
class SamplerConfig:
    iters: int = 2000
    burnin: int = 1000
    thin: int = 1
    seed: int = 0
    mh_step_alpha: float = 0.05
    mh_step_f: float = 0.2
    adapt_window: int = 25
    target_accept: float = 0.234
    position_move: str = "subspace"
    orientation_move: bool = True
    jump_prob: float = 0.2

    def __post_init__(self):
        if self.iters < 1 or self.burnin < 0 or self.burnin >= self.iters:
            raise ValueError(f"need 0 <= burnin < iters, got burnin={self.burnin}, iters={self.iters}")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.mh_step_alpha <= 0 or self.mh_step_f <= 0:
            raise ValueError("initial MH step sizes must be > 0")
        if self.adapt_window < 1:
            raise ValueError("adapt_window must be >= 1")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.position_move not in POSITION_MOVES:
            raise ValueError(f"position_move must be one of {POSITION_MOVES}")
        if not 0 <= self.jump_prob < 1:
            raise ValueError("jump_prob must lie in [0, 1)")


@dataclass(frozen=True)
class State:
    latent: LatentState
    loading: LoadingState


@dataclass
class Steps:
    """Random-walk proposal scales: one for alpha, one per node."""

    alpha: float
    f: np.ndarray

    def copy(self) -> "Steps":
        return Steps(self.alpha, self.f.copy())


@dataclass(frozen=True, eq=False)
class ChainRecord:
    draw: int
    alpha: float
    positions: np.ndarray
    lam: np.ndarray
    indicators: np.ndarray
    tau: np.ndarray
    col_scale: np.ndarray
    kappa: float
    idio_var: np.ndarray
    log_post: float

    @classmethod
    def from_state(cls, draw: int, state: State, log_post: float) -> "ChainRecord":
        lat, load = state.latent, state.loading
        return cls(draw, lat.alpha, lat.positions, load.lam, load.indicators, load.tau,
                   load.col_scale, load.kappa, load.idio_var, log_post)

    def latent(self) -> LatentState:
        return LatentState(self.alpha, self.positions, centered=True)

    def loading(self) -> LoadingState:
        return LoadingState(self.lam, self.indicators, self.tau, self.col_scale, self.kappa, self.idio_var)

    def __eq__(self, other):
        if not isinstance(other, ChainRecord):
            return False
        scalars = ("draw", "alpha", "kappa", "log_post")
        arrays = ("positions", "lam", "indicators", "tau", "col_scale", "idio_var")
        return all(getattr(self, k) == getattr(other, k) for k in scalars) and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in arrays
        )


@dataclass
class ChainResult:
    records: list[ChainRecord]
    acceptance: dict[str, float]
    burnin_acceptance: dict[str, float]
    steps: Steps
    wall_time: float = 0.0
    n_records: int = 0


# ---------------------------------------------------------------------------
# intercept


def alpha_log_accept_ratio(alpha: float, alpha_new: float, w_sum: float, exp_sum: float,
                           sigma2_alpha: float = np.inf) -> float:
    """Log MH ratio for moving the intercept.

    ``w_sum`` is the total edge weight over ``i < j`` pairs and ``exp_sum`` is
    ``sum_{i<j} exp(-||f_i - f_j||^2)``; together they are sufficient for the
    Poisson layer as a function of alpha.
    """
    d_lik = (alpha_new - alpha) * w_sum - (np.exp(alpha_new) - np.exp(alpha)) * exp_sum
    d_prior = -(alpha_new**2 - alpha**2) / (2.0 * sigma2_alpha)
    return float(d_lik + d_prior)


def update_alpha(state: State, net: WeightedNetwork | None, hp: Hyperparams, step: float,
                 rng: np.random.Generator) -> tuple[State, bool]:
    lat = state.latent
    if net is None:
        w_sum, exp_sum = 0.0, 0.0
    else:
        w_sum = float(net.upper().sum())
        exp_sum = float(np.sum(np.exp(-pair_sq_dists(lat.positions))))
    proposal = lat.alpha + step * rng.standard_normal()
    log_ratio = alpha_log_accept_ratio(lat.alpha, proposal, w_sum, exp_sum, hp.sigma2_alpha)
    if np.log(rng.random()) < log_ratio:
        return replace(state, latent=replace(lat, alpha=proposal)), True
    return state, False


# ---------------------------------------------------------------------------
# positions


def _shift_factor(n: int, move: str) -> float:
    if move == "subspace":
        return 1.0 / (n - 1)
    if move == "free":
        return 0.0
    raise ValueError(f"unknown position move {move!r}")


def position_log_accept_ratio(F: np.ndarray, alpha: float, i: int, delta: np.ndarray,
                              weights: np.ndarray | None, y: np.ndarray, lam: np.ndarray,
                              idio_var: np.ndarray, prior_var: float, shift: float,
                              fsum: np.ndarray | None = None, ysum: np.ndarray | None = None) -> float:
    """Incremental log posterior change for moving node ``i`` by ``delta``.

    Every other node moves by ``-shift * delta``. Pairs not involving ``i``
    keep their distance, so only row ``i`` of the network enters; the
    Gaussian and prior changes are computed from running sums instead of a
    full re-evaluation. ``fsum`` and ``ysum`` are the row sums of ``F`` and
    ``y``; pass them to skip recomputing.
    """
    n = F.shape[1]
    fi = F[:, i]
    if fsum is None:
        fsum = F.sum(axis=1)
    if ysum is None:
        ysum = y.sum(axis=1)
    dd = float(delta @ delta)
    c = 1.0 + shift

    total = 0.0
    if weights is not None:
        diff = fi[:, None] - F
        d_old = (diff * diff).sum(axis=0)
        d_step = 2.0 * c * (delta @ diff) + c * c * dd
        e_diff = np.exp(-d_old) * np.expm1(-d_step)
        e_diff[i] = 0.0
        total -= weights[i] @ d_step + math.exp(alpha) * e_diff.sum()

    others = fsum - fi
    sq_change = 2.0 * fi @ delta + dd - 2.0 * shift * (others @ delta) + (n - 1) * shift * shift * dd
    total -= sq_change / (2.0 * prior_var)

    u = lam @ delta
    r_i = y[:, i] - lam @ fi
    r_rest = ysum - lam @ fsum - r_i
    rss_change = (-2.0 * r_i + 2.0 * shift * r_rest + (1.0 + (n - 1) * shift * shift) * u) * u
    total -= 0.5 * float(rss_change @ (1.0 / idio_var))
    return float(total)


def _jump_proposal(lam: np.ndarray, idio_var: np.ndarray, prior_var: float):
    """Gaussian conditional of one position under prior x interpretation likelihood.

    Returns ``(gain, chol, prec)``: the proposal mean for node i is
    ``gain @ y[:, i]``, ``chol`` is the Cholesky factor of its covariance and
    ``prec`` the precision used for the proposal log-density.
    """
    d = lam.shape[1]
    prec = lam.T @ (lam / idio_var[:, None]) + np.eye(d) / prior_var
    cov = np.linalg.inv(prec)
    gain = cov @ (lam.T / idio_var[None, :])
    return gain, np.linalg.cholesky(cov), prec


def _position_pass(F: np.ndarray, alpha: float, order, weights, y: np.ndarray, lam: np.ndarray,
                   idio_var: np.ndarray, prior_var: float, shift: float, steps: np.ndarray,
                   rng: np.random.Generator, jump_prob: float = 0.0):
    """Sequential MH updates of the nodes in ``order``; mutates ``F`` in place.

    Each node takes a random-walk step, or with probability ``jump_prob`` an
    independence proposal drawn from :func:`_jump_proposal`. The latter lets
    weakly connected nodes cross regions the network makes improbable.
    Returns per-node random-walk acceptances and attempts, and the number of
    accepted jumps.
    """
    d = F.shape[0]
    rw_acc = np.zeros(F.shape[1], dtype=bool)
    rw_tried = np.zeros(F.shape[1], dtype=bool)
    jumps = 0
    fsum = F.sum(axis=1)
    ysum = y.sum(axis=1)
    if jump_prob > 0:
        gain, chol, jprec = _jump_proposal(lam, idio_var, prior_var)
    for i in order:
        jump = jump_prob > 0 and rng.random() < jump_prob
        if jump:
            mu = gain @ y[:, i]
            target = mu + chol @ rng.standard_normal(d)
            delta = target - F[:, i]
            r_old, r_new = F[:, i] - mu, target - mu
            log_q = 0.5 * (r_new @ jprec @ r_new - r_old @ jprec @ r_old)
        else:
            delta = steps[i] * rng.standard_normal(d)
            log_q = 0.0
            rw_tried[i] = True
        log_ratio = position_log_accept_ratio(F, alpha, i, delta, weights, y, lam, idio_var,
                                              prior_var, shift, fsum, ysum) + log_q
        if np.log(rng.random()) < log_ratio:
            if shift:
                F -= shift * delta[:, None]
                F[:, i] += (1.0 + shift) * delta
            else:
                F[:, i] += delta
                fsum = fsum + delta
            if jump:
                jumps += 1
            else:
                rw_acc[i] = True
    return rw_acc, rw_tried, jumps


def update_position(state: State, net: WeightedNetwork | None, y: InterpData, i: int,
                    hp: Hyperparams, step: float, rng: np.random.Generator,
                    move: str = "subspace") -> tuple[State, bool]:
    lat, load = state.latent, state.loading
    n = lat.n
    if not 0 <= i < n:
        raise IndexError(f"node index {i} out of range for n={n}")
    F = np.array(lat.positions)
    steps = np.full(n, float(step))
    weights = None if net is None else net.float_weights
    acc, _, _ = _position_pass(F, lat.alpha, [i], weights, y.y, load.lam, load.idio_var,
                               position_prior_var(lat.d), _shift_factor(n, move), steps, rng)
    if not acc[i]:
        return state, False
    centered = lat.centered and move == "subspace"
    return replace(state, latent=LatentState(lat.alpha, F, centered=centered)), True


def recenter(state: State) -> State:
    lat = state.latent
    F = lat.positions - lat.positions.mean(axis=1, keepdims=True)
    return replace(state, latent=LatentState(lat.alpha, F, centered=True))


# ---------------------------------------------------------------------------
# loadings


def slab_moments(fk: np.ndarray, resid: np.ndarray, idio_var: float, slab_var: float) -> tuple[float, float]:
    """Conditional mean and variance of one loading given its residual target."""
    v = 1.0 / (fk @ fk / idio_var + 1.0 / slab_var)
    m = v * (fk @ resid) / idio_var
    return m, v


def inclusion_log_odds(fk: np.ndarray, resid: np.ndarray, idio_var: float, slab_var: float,
                       tau: float) -> float:
    m, v = slab_moments(fk, resid, idio_var, slab_var)
    return float(np.log(tau) - np.log1p(-tau) + 0.5 * np.log(v / slab_var) + m * m / (2.0 * v))


def inclusion_probability(fk, resid, idio_var, slab_var, tau) -> float:
    return float(expit(inclusion_log_odds(np.asarray(fk, float), np.asarray(resid, float),
                                          idio_var, slab_var, tau)))


def sample_positive_normal(m: float, v: float, rng: np.random.Generator) -> float:
    """Draw from N(m, v) truncated to (0, inf) by log-space inverse CDF."""
    sd = np.sqrt(v)
    lower = -m / sd
    # Z > lower with P(Z > z) = Phi(-z) / Phi(-lower)
    z = -ndtri_exp(np.log(rng.random()) + log_ndtr(-lower))
    x = m + sd * z
    if not x > 0.0:
        x = np.nextafter(0.0, 1.0)
    return float(x)


def _loadings_row(lam_row: np.ndarray, ind_row: np.ndarray, cells_row: np.ndarray, y_row: np.ndarray,
                  F: np.ndarray, idio_var: float, slab_var: np.ndarray, tau: float,
                  rng: np.random.Generator) -> None:
    """Gibbs pass over one loading row; mutates ``lam_row`` and ``ind_row``."""
    open_cells = np.flatnonzero(cells_row != Cell.FIXED_ZERO)
    lam_row[cells_row == Cell.FIXED_ZERO] = 0.0
    ind_row[cells_row == Cell.FIXED_ZERO] = 0
    if open_cells.size == 0:
        return
    fit = lam_row @ F
    for k in rng.permutation(open_cells):
        fk = F[k]
        resid = y_row - fit + lam_row[k] * fk
        m, v = slab_moments(fk, resid, idio_var, slab_var[k])
        old = lam_row[k]
        if cells_row[k] == Cell.POSITIVE:
            lam_row[k] = sample_positive_normal(m, v, rng)
            ind_row[k] = 1
        else:
            log_odds = np.log(tau) - np.log1p(-tau) + 0.5 * np.log(v / slab_var[k]) + m * m / (2.0 * v)
            if rng.random() < expit(log_odds):
                lam_row[k] = m + np.sqrt(v) * rng.standard_normal()
                ind_row[k] = 1
            else:
                lam_row[k] = 0.0
                ind_row[k] = 0
        fit += (lam_row[k] - old) * fk


def update_loadings_row(state: State, y: InterpData, l: int, pat: RestrictionPattern,
                        rng: np.random.Generator) -> State:
    lat, load = state.latent, state.loading
    lam = np.array(load.lam)
    ind = np.array(load.indicators)
    slab_var = load.kappa * load.col_scale
    _loadings_row(lam[l], ind[l], pat.cells[l], y.y[l], lat.positions, load.idio_var[l], slab_var,
                  load.tau[l], rng)
    return replace(state, loading=replace(load, lam=lam, indicators=ind))


def tau_posterior_params(ind: np.ndarray, pat: RestrictionPattern, hp: Hyperparams) -> tuple[np.ndarray, np.ndarray]:
    """Beta parameters of each tau_l, counting Free cells only."""
    free = pat.free
    active = np.sum(free & (ind == 1), axis=1)
    inactive = np.sum(free & (ind == 0), axis=1)
    return hp.tau_a + active, hp.tau_b + inactive


def update_tau(state: State, pat: RestrictionPattern, hp: Hyperparams, rng: np.random.Generator) -> State:
    a, b = tau_posterior_params(state.loading.indicators, pat, hp)
    tau = np.clip(rng.beta(a, b), TAU_EPS, 1.0 - TAU_EPS)
    return replace(state, loading=replace(state.loading, tau=tau))


def _inv_gamma(shape, rate, rng):
    return rate / rng.gamma(shape)


def idio_var_posterior_params(state: State, y: InterpData, hp: Hyperparams):
    resid = y.y - state.loading.lam @ state.latent.positions
    shape = np.full(y.p, hp.c0 + 0.5 * y.n)
    rate = hp.C0 + 0.5 * np.sum(resid * resid, axis=1)
    return shape, rate


def col_scale_posterior_params(load: LoadingState, hp: Hyperparams):
    active = load.indicators == 1
    shape = hp.c_sigma + 0.5 * active.sum(axis=0)
    rate = hp.b_sigma + np.sum(np.where(active, load.lam**2, 0.0), axis=0) / (2.0 * load.kappa)
    return shape, rate


def kappa_posterior_params(load: LoadingState, hp: Hyperparams):
    active = load.indicators == 1
    shape = hp.c_kappa + 0.5 * active.sum()
    rate = hp.b_kappa + np.sum(np.where(active, load.lam**2 / (2.0 * load.col_scale[None, :]), 0.0))
    return float(shape), float(rate)


def update_variances(state: State, y: InterpData, pat: RestrictionPattern, hp: Hyperparams,
                     rng: np.random.Generator) -> State:
    """Inverse-gamma draws for idio_var, then col_scale, then kappa (each uses the freshest values)."""
    load = state.loading
    shape, rate = idio_var_posterior_params(state, y, hp)
    load = replace(load, idio_var=_inv_gamma(shape, rate, rng))
    shape, rate = col_scale_posterior_params(load, hp)
    load = replace(load, col_scale=_inv_gamma(shape, rate, rng))
    shape, rate = kappa_posterior_params(load, hp)
    load = replace(load, kappa=float(_inv_gamma(shape, rate, rng)))
    return replace(state, loading=load)


# ---------------------------------------------------------------------------
# orientation


@dataclass(frozen=True)
class RowConfigs:
    """Every admissible active set of every loading row, rows contiguous.

    PositiveDiagonal cells are always active and FixedZero cells never are,
    so a row with ``m`` Free cells contributes ``2**m`` configurations.
    """

    row: np.ndarray       # (M,)
    active: np.ndarray    # (M, d) bool
    n_on: np.ndarray      # (M,) active Free cells
    n_off: np.ndarray     # (M,) inactive Free cells
    pos: np.ndarray       # (M,) PositiveDiagonal column, -1 if none
    starts: np.ndarray    # (p,) offset of each row's first configuration


def row_configs(pat: RestrictionPattern) -> RowConfigs:
    rows, active, n_on, n_off, pos, starts = [], [], [], [], [], []
    for l in range(pat.p):
        starts.append(len(rows))
        free = np.flatnonzero(pat.free[l])
        pk = np.flatnonzero(pat.positive[l])
        if pk.size > 1:
            raise ValueError(f"row {l + 1} has more than one PositiveDiagonal cell")
        for bits in range(2 ** free.size):
            on = np.array([(bits >> b) & 1 for b in range(free.size)], dtype=bool)
            mask = pat.positive[l].copy()
            mask[free[on]] = True
            rows.append(l)
            active.append(mask)
            n_on.append(on.sum())
            n_off.append(free.size - on.sum())
            pos.append(pk[0] if pk.size else -1)
    return RowConfigs(np.array(rows), np.array(active, dtype=bool).reshape(-1, pat.d),
                      np.array(n_on), np.array(n_off), np.array(pos), np.array(starts))


def config_log_evidence(gram: np.ndarray, cross: np.ndarray, load: LoadingState, cfgs: RowConfigs):
    """Log marginal likelihood of each row configuration with its loadings integrated out.

    ``gram`` is ``F F^T`` and ``cross`` is ``Y F^T``. Terms that do not depend
    on the positions or the configuration are dropped. Returns the log
    evidences together with the conditional mean and covariance of the
    loadings under each configuration (inactive coordinates padded).
    """
    d = gram.shape[0]
    M = cfgs.row.size
    s2 = load.idio_var[cfgs.row]
    slab = load.kappa * load.col_scale
    A = cfgs.active
    prec = np.where(A[:, :, None] & A[:, None, :], gram[None] / s2[:, None, None], 0.0)
    prec[:, np.arange(d), np.arange(d)] += np.where(A, 1.0 / slab, 1.0)
    b = np.where(A, cross[cfgs.row] / s2[:, None], 0.0)
    cov = np.linalg.inv(prec)
    mean = np.einsum("mij,mj->mi", cov, b)
    _, logdet = np.linalg.slogdet(prec)

    le = -0.5 * np.sum(np.where(A, np.log(slab), 0.0), axis=1) - 0.5 * logdet
    le += 0.5 * np.einsum("mi,mi->m", b, mean)
    tau = load.tau[cfgs.row]
    le += cfgs.n_on * np.log(tau) + cfgs.n_off * np.log1p(-tau)
    has_pos = cfgs.pos >= 0
    k = np.where(has_pos, cfgs.pos, 0)
    idx = np.arange(M)
    z = mean[idx, k] / np.sqrt(cov[idx, k, k])
    le += np.where(has_pos, np.log(2.0) + log_ndtr(z), 0.0)
    return le, mean, cov


def loadings_log_marginal(F: np.ndarray, y: np.ndarray, load: LoadingState, cfgs: RowConfigs) -> float:
    """Interpretation log-likelihood with loadings and indicators summed/integrated out, up to a constant."""
    le, _, _ = config_log_evidence(F @ F.T, y @ F.T, load, cfgs)
    return float(np.sum(np.logaddexp.reduceat(le, cfgs.starts)))


def _draw_loadings_block(le, mean, cov, cfgs: RowConfigs, p: int, d: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Joint draw of (indicators, loadings) for every row from their exact conditional."""
    lam = np.zeros((p, d))
    ind = np.zeros((p, d), dtype=np.int8)
    bounds = list(cfgs.starts) + [cfgs.row.size]
    for l in range(p):
        lo, hi = bounds[l], bounds[l + 1]
        w = np.exp(le[lo:hi] - le[lo:hi].max())
        e = lo + rng.choice(hi - lo, p=w / w.sum())
        act = np.flatnonzero(cfgs.active[e])
        if act.size == 0:
            continue
        m = mean[e, act]
        V = cov[e][np.ix_(act, act)]
        if cfgs.pos[e] >= 0:
            j = int(np.flatnonzero(act == cfgs.pos[e])[0])
            xj = sample_positive_normal(m[j], V[j, j], rng)
            rest = np.delete(np.arange(act.size), j)
            x = np.empty(act.size)
            x[j] = xj
            if rest.size:
                gain = V[rest, j] / V[j, j]
                cm = m[rest] + gain * (xj - m[j])
                cv = V[np.ix_(rest, rest)] - np.outer(gain, V[j, rest])
                x[rest] = rng.multivariate_normal(cm, cv, method="cholesky")
        else:
            x = rng.multivariate_normal(m, V, method="cholesky")
        lam[l, act] = x
        ind[l, act] = 1
    return lam, ind


def update_orientation(state: State, y: InterpData, pat: RestrictionPattern, rng: np.random.Generator,
                       cfgs: RowConfigs | None = None) -> tuple[State, bool]:
    """Rigid orthogonal move of the whole configuration.

    Proposes ``F' = Q F`` with ``Q`` Haar-distributed on O(d), which is a
    symmetric proposal. Distances, norms and the sum-to-zero constraint are
    unchanged, so only the interpretation layer enters the acceptance ratio,
    with loadings and indicators integrated out. On acceptance the loadings
    are redrawn jointly from their conditional given ``F'``.
    """
    cfgs = cfgs if cfgs is not None else row_configs(pat)
    lat, load = state.latent, state.loading
    F = lat.positions
    Q = ortho_group.rvs(lat.d, random_state=rng)
    F_new = Q @ F
    gram, cross = F @ F.T, y.y @ F.T
    le_old, _, _ = config_log_evidence(gram, cross, load, cfgs)
    le_new, mean, cov = config_log_evidence(Q @ gram @ Q.T, cross @ Q.T, load, cfgs)
    log_ratio = np.sum(np.logaddexp.reduceat(le_new, cfgs.starts)) - np.sum(
        np.logaddexp.reduceat(le_old, cfgs.starts))
    if not np.log(rng.random()) < log_ratio:
        return state, False
    lam, ind = _draw_loadings_block(le_new, mean, cov, cfgs, load.p, load.d, rng)
    new_lat = LatentState(lat.alpha, F_new, centered=lat.centered)
    return State(new_lat, replace(load, lam=lam, indicators=ind)), True


# ---------------------------------------------------------------------------
# sweep and chain


@dataclass
class SweepStats:
    alpha_accepted: bool
    position_accepted: np.ndarray
    position_tried: np.ndarray
    jumps_accepted: int = 0
    orientation_accepted: bool = False


def sweep(state: State, net: WeightedNetwork | None, y: InterpData, pat: RestrictionPattern,
          hp: Hyperparams, steps: Steps, streams: Streams, move: str = "subspace",
          tau_update: Callable = update_tau, orientation: bool = True,
          cfgs: RowConfigs | None = None, jump_prob: float = 0.0) -> tuple[State, SweepStats]:
    """One full cycle over every block.

    ``net=None`` drops the Poisson layer and the alpha update.
    ``orientation=False`` skips the rigid orthogonal move.
    """
    if net is None:
        alpha_acc = False
    else:
        state, alpha_acc = update_alpha(state, net, hp, steps.alpha, streams.alpha)

    lat, load = state.latent, state.loading
    F = np.array(lat.positions)
    order = streams.positions.permutation(lat.n)
    weights = None if net is None else net.float_weights
    pos_acc, pos_tried, jumps = _position_pass(
        F, lat.alpha, order, weights, y.y, load.lam, load.idio_var, position_prior_var(lat.d),
        _shift_factor(lat.n, move), steps.f, streams.positions, jump_prob)
    F -= F.mean(axis=1, keepdims=True)
    lat = LatentState(lat.alpha, F, centered=True)

    orient_acc = False
    if orientation:
        state, orient_acc = update_orientation(State(lat, load), y, pat, streams.orientation, cfgs)
        lat, load = state.latent, state.loading
        F = lat.positions

    lam = np.array(load.lam)
    ind = np.array(load.indicators)
    slab_var = load.kappa * load.col_scale
    for l in range(load.p):
        _loadings_row(lam[l], ind[l], pat.cells[l], y.y[l], F, load.idio_var[l], slab_var,
                      load.tau[l], streams.loadings)
    state = State(lat, replace(load, lam=lam, indicators=ind))
    state = tau_update(state, pat, hp, streams.loadings)
    state = update_variances(state, y, pat, hp, streams.variances)
    return state, SweepStats(alpha_acc, pos_acc, pos_tried, jumps, orient_acc)


def prior_mean_ig(shape: float, rate: float) -> float:
    return rate / (shape - 1.0) if shape > 1.0 else 1.0


def initialize(net: WeightedNetwork, y: InterpData, pat: RestrictionPattern, hp: Hyperparams,
               rng: np.random.Generator) -> State:
    """Starting point: data-driven intercept, prior positions, least-squares loadings."""
    n, p, d = net.n, y.p, pat.d
    w = net.upper()
    pos = w[w > 0]
    alpha = float(np.log(pos.mean() + 1.0)) if pos.size else 0.0

    F = rng.normal(0.0, np.sqrt(position_prior_var(d)), size=(d, n))
    F -= F.mean(axis=1, keepdims=True)

    lam, *_ = np.linalg.lstsq(F.T, y.y.T, rcond=None)
    lam = lam.T
    lam[pat.fixed_zero] = 0.0
    lam[pat.positive] = np.abs(lam[pat.positive]) + 0.1
    ind = (lam != 0).astype(np.int8)

    load = LoadingState(
        lam=lam,
        indicators=ind,
        tau=np.full(p, 0.5),
        col_scale=np.full(d, prior_mean_ig(hp.c_sigma, hp.b_sigma)),
        kappa=prior_mean_ig(hp.c_kappa, hp.b_kappa),
        idio_var=np.full(p, prior_mean_ig(hp.c0, hp.C0)),
    )
    return State(LatentState(alpha, F, centered=True), load)


def check_dims(net: WeightedNetwork | None, y: InterpData, pat: RestrictionPattern) -> None:
    if net is not None and net.n != y.n:
        raise DimensionError(f"network has {net.n} nodes but interpretation data has {y.n} columns")
    if pat.p != y.p:
        raise DimensionError(f"pattern has {pat.p} rows but interpretation data has {y.p} variables")


def run_chain(net: WeightedNetwork, y: InterpData, pat: RestrictionPattern, hp: Hyperparams,
              cfg: SamplerConfig, init: State | None = None, callback: Callable | None = None,
              store: bool = True) -> ChainResult:
    """Run ``cfg.iters`` sweeps, the first ``cfg.burnin`` of which adapt the MH scales.

    Every ``thin``-th post-burnin state becomes a :class:`ChainRecord`. Records
    are passed to ``callback`` as they are produced and kept in memory only
    when ``store`` is true.
    """
    check_dims(net, y, pat)
    started = time.perf_counter()
    streams = Streams(cfg.seed)
    state = init if init is not None else initialize(net, y, pat, hp, streams.init)

    problems = validate_state(state.latent, state.loading, pat)
    if problems:
        raise InitError("initial state invalid: " + "; ".join(problems))
    lp0 = log_posterior(net, y, state.latent, state.loading, hp, pat)
    if not np.isfinite(lp0):
        raise InitError(
            f"non-finite log-posterior at initialization (alpha={state.latent.alpha:.4g}, "
            f"max |f|={np.abs(state.latent.positions).max():.4g}, log_post={lp0})"
        )

    n = net.n
    steps = Steps(cfg.mh_step_alpha, np.full(n, cfg.mh_step_f))
    log_step_alpha = np.log(steps.alpha)
    log_step_f = np.log(steps.f)
    win_alpha, win_f, win_tried, n_windows = 0, np.zeros(n), np.zeros(n), 0
    burn_tried_f, post_tried_f, burn_jumps, post_jumps = 0, 0, 0, 0
    burn_acc_alpha, burn_acc_f, burn_acc_o = 0, 0, 0
    post_acc_alpha, post_acc_f, post_acc_o = 0, 0, 0
    cfgs = row_configs(pat)

    records: list[ChainRecord] = []
    n_records = 0
    for t in range(cfg.iters):
        state, stats = sweep(state, net, y, pat, hp, steps, streams, cfg.position_move,
                             orientation=cfg.orientation_move, cfgs=cfgs, jump_prob=cfg.jump_prob)
        if t < cfg.burnin:
            burn_acc_o += stats.orientation_accepted
            burn_acc_alpha += stats.alpha_accepted
            burn_acc_f += stats.position_accepted.sum()
            burn_tried_f += stats.position_tried.sum()
            burn_jumps += stats.jumps_accepted
            win_alpha += stats.alpha_accepted
            win_f += stats.position_accepted
            win_tried += stats.position_tried
            if (t + 1) % cfg.adapt_window == 0:
                n_windows += 1
                gain = n_windows**-0.6
                log_step_alpha += gain * (win_alpha / cfg.adapt_window - cfg.target_accept)
                rate_f = np.where(win_tried > 0, win_f / np.maximum(win_tried, 1), cfg.target_accept)
                log_step_f += gain * (rate_f - cfg.target_accept)
                steps = Steps(float(np.exp(log_step_alpha)), np.exp(log_step_f))
                win_alpha, win_f, win_tried = 0, np.zeros(n), np.zeros(n)
            continue

        post_acc_alpha += stats.alpha_accepted
        post_acc_o += stats.orientation_accepted
        post_acc_f += stats.position_accepted.sum()
        post_tried_f += stats.position_tried.sum()
        post_jumps += stats.jumps_accepted
        if (t - cfg.burnin + 1) % cfg.thin == 0:
            lp = log_posterior(net, y, state.latent, state.loading, hp, pat)
            rec = ChainRecord.from_state(n_records, state, lp)
            n_records += 1
            if callback is not None:
                callback(rec)
            if store:
                records.append(rec)

    n_burn = max(cfg.burnin, 1)
    n_post = cfg.iters - cfg.burnin
    return ChainResult(
        records=records,
        acceptance={"alpha": post_acc_alpha / n_post,
                    "positions": post_acc_f / max(post_tried_f, 1),
                    "position_jumps": post_jumps / max(n_post * n - post_tried_f, 1),
                    "orientation": post_acc_o / n_post},
        burnin_acceptance={"alpha": burn_acc_alpha / n_burn,
                           "positions": burn_acc_f / max(burn_tried_f, 1),
                           "position_jumps": burn_jumps / max(cfg.burnin * n - burn_tried_f, 1),
                           "orientation": burn_acc_o / n_burn},
        steps=steps,
        wall_time=time.perf_counter() - started,
        n_records=n_records,
    )
