"""Synthetic ground truth and data for the latent-space model.

Every generator is a pure function of its arguments and an integer seed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import truncnorm

from .errors import DimensionError
from .likelihood import InterpData, intensities, pair_sq_dists
from .model import (
    Hyperparams,
    LatentState,
    LoadingState,
    RestrictionPattern,
    WeightedNetwork,
    position_prior_var,
)
from .sampler import State


def seeded_rng(seed) -> np.random.Generator:
    """Philox generator from an integer seed or a SeedSequence."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class TruthSettings:
    """Knobs for the simulated ground truth.

    ``zero_rows`` are 1-based rows of the loading matrix forced to zero. The
    default picks the last row when p > d and that row holds no pivot.
    """

    sigma2_alpha: float = 10.0
    mean_weight: tuple[float, float] = (0.5, 5.0)
    kappa: float = 1.0
    col_scale: float = 1.0
    min_abs_loading: float = 0.5
    idio_var: float = 0.5
    zero_rows: tuple[int, ...] | None = None


def default_zero_rows(pat: RestrictionPattern) -> tuple[int, ...]:
    p, d = pat.cells.shape
    if p > d and not pat.positive[p - 1].any():
        return (p,)
    return ()


def gen_truth(n: int, d: int, p: int, pat: RestrictionPattern, seed,
              settings: TruthSettings | None = None) -> tuple[LatentState, LoadingState, dict]:
    if n < 3 or d < 2 or p < d:
        raise DimensionError(f"need n >= 3, d >= 2, p >= d; got n={n}, d={d}, p={p}")
    if pat.cells.shape != (p, d):
        raise DimensionError(f"pattern shape {pat.cells.shape} does not match (p, d) = {(p, d)}")
    s = settings or TruthSettings()
    zero_rows = default_zero_rows(pat) if s.zero_rows is None else tuple(s.zero_rows)
    for row in zero_rows:
        if not 1 <= row <= p or pat.positive[row - 1].any():
            raise ValueError(f"row {row} cannot be a zero row under this pattern")
    rng_pos, rng_alpha, rng_lam = [seeded_rng(c) for c in np.random.SeedSequence(seed).spawn(3)]

    F = rng_pos.normal(0.0, np.sqrt(position_prior_var(d)), size=(d, n))
    F -= F.mean(axis=1, keepdims=True)

    # alpha ~ N(0, s2) restricted so the expected mean edge weight is in range
    mean_exp = float(np.mean(np.exp(-pair_sq_dists(F))))
    sd = np.sqrt(s.sigma2_alpha)
    lo, hi = (np.log(b / mean_exp) for b in s.mean_weight)
    alpha = float(truncnorm.rvs(lo / sd, hi / sd, scale=sd, random_state=rng_alpha))

    slab_sd = np.sqrt(s.kappa * s.col_scale)
    lam = np.zeros((p, d))
    for l in range(p):
        if l + 1 in zero_rows:
            continue
        for k in range(d):
            if pat.fixed_zero[l, k]:
                continue
            x = 0.0
            while abs(x) < s.min_abs_loading:
                x = rng_lam.normal(0.0, slab_sd)
            lam[l, k] = abs(x) if pat.positive[l, k] else x
    ind = (lam != 0).astype(np.int8)

    free = pat.free
    n_free = free.sum(axis=1)
    n_on = (free & (ind == 1)).sum(axis=1)
    tau = (n_on + 1.0) / (n_free + 2.0)

    lat = LatentState(alpha, F, centered=True)
    load = LoadingState(lam, ind, tau, np.full(d, s.col_scale), s.kappa, np.full(p, s.idio_var))
    meta = {
        "n": n, "d": d, "p": p,
        "seed": int(seed),
        "restriction": pat.kind.value,
        "pivots": list(pat.pivots) if pat.pivots else None,
        "zero_rows": list(zero_rows),
        "settings": asdict(s),
        "alpha": alpha,
        "expected_mean_weight": float(np.exp(alpha) * mean_exp),
        "positions": F.tolist(),
        "lambda": lam.tolist(),
        "indicators": ind.tolist(),
        "tau": tau.tolist(),
        "col_scale": load.col_scale.tolist(),
        "kappa": load.kappa,
        "idio_var": load.idio_var.tolist(),
    }
    return lat, load, meta


def gen_network(lat: LatentState, seed) -> WeightedNetwork:
    rng = seeded_rng(seed)
    theta = intensities(lat)
    iu = np.triu_indices(lat.n, k=1)
    w = np.zeros((lat.n, lat.n), dtype=np.int64)
    w[iu] = rng.poisson(theta[iu])
    return WeightedNetwork(w + w.T)


def gen_interp(lat: LatentState, load: LoadingState, seed) -> InterpData:
    if load.d != lat.d:
        raise DimensionError(f"loadings have {load.d} columns, positions have dimension {lat.d}")
    rng = seeded_rng(seed)
    noise = rng.standard_normal((load.p, lat.n)) * np.sqrt(load.idio_var)[:, None]
    return InterpData(load.lam @ lat.positions + noise)


def draw_prior_state(n: int, pat: RestrictionPattern, hp: Hyperparams, rng: np.random.Generator) -> State:
    """One draw of every unknown from the prior, positions recentered."""
    p, d = pat.cells.shape
    alpha = rng.normal(0.0, np.sqrt(hp.sigma2_alpha))
    F = rng.normal(0.0, np.sqrt(position_prior_var(d)), size=(d, n))
    F -= F.mean(axis=1, keepdims=True)

    idio_var = hp.C0 / rng.gamma(hp.c0, size=p)
    col_scale = hp.b_sigma / rng.gamma(hp.c_sigma, size=d)
    kappa = hp.b_kappa / rng.gamma(hp.c_kappa)
    tau = np.clip(rng.beta(hp.tau_a, hp.tau_b, size=p), 1e-12, 1 - 1e-12)

    slab_sd = np.sqrt(kappa * col_scale)
    ind = ((rng.random((p, d)) < tau[:, None]) & pat.free) | pat.positive
    lam = rng.standard_normal((p, d)) * slab_sd[None, :]
    lam[pat.positive] = np.abs(lam[pat.positive])
    lam[~ind] = 0.0
    load = LoadingState(lam, ind.astype(np.int8), tau, col_scale, kappa, idio_var)
    return State(LatentState(alpha, F, centered=True), load)
