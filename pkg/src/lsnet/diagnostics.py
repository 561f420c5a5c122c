"""Post-processing of chains and sampler validation.

Includes Procrustes alignment of position draws, posterior summaries,
effective sample size, and a Geweke joint-distribution test.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyChain, TestError
from .formats import flatten_record, record_columns
from .likelihood import InterpData
from .model import Hyperparams, RestrictionPattern, WeightedNetwork
from .sampler import ChainRecord, SamplerConfig, State, Steps, Streams, row_configs, sweep
from .simulate import draw_prior_state, seeded_rng

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Procrustes


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    """Root mean squared node displacement between two ``d x n`` configurations."""
    diff = np.asarray(a) - np.asarray(b)
    return float(np.sqrt(np.sum(diff * diff) / diff.shape[-1]))


@dataclass
class Alignment:
    aligned: np.ndarray          # (m, d, n)
    rotations: np.ndarray        # (m, d, d)
    translations: np.ndarray     # (m, d)
    rmse_raw: np.ndarray         # (m,)
    rmse_aligned: np.ndarray     # (m,)
    degenerate: np.ndarray       # (m,) bool; identity rotation was used


def procrustes_align(draws, target: np.ndarray, rank_tol: float = 1e-12) -> Alignment:
    """Map each draw onto ``target`` by the best orthogonal transform plus translation.

    Reflections are allowed (the full orthogonal group), which matches the
    invariance class of the network likelihood. A draw whose centred
    cross-covariance with the target is rank deficient keeps the identity
    rotation and is flagged in ``degenerate``.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 2:
        draws = draws[None]
    target = np.asarray(target, dtype=float)
    m, d, n = draws.shape
    if target.shape != (d, n):
        raise ValueError(f"target shape {target.shape} != draw shape {(d, n)}")
    if d > n:
        raise ValueError("need d <= n for alignment")

    t_mean = target.mean(axis=1)
    t_c = target - t_mean[:, None]
    aligned = np.empty_like(draws)
    rots = np.empty((m, d, d))
    shifts = np.empty((m, d))
    degenerate = np.zeros(m, dtype=bool)
    for s in range(m):
        F = draws[s]
        f_mean = F.mean(axis=1)
        cross = t_c @ (F - f_mean[:, None]).T
        u, sv, vt = np.linalg.svd(cross)
        if sv[0] <= 0 or sv[-1] <= rank_tol * sv[0]:
            Q = np.eye(d)
            degenerate[s] = True
        else:
            Q = u @ vt
        rots[s] = Q
        shifts[s] = t_mean - Q @ f_mean
        aligned[s] = Q @ F + shifts[s][:, None]
    if degenerate.any():
        logger.warning("%d draw(s) had a rank-deficient cross-covariance; identity rotation used",
                       int(degenerate.sum()))
    raw = np.array([rmse(F, target) for F in draws])
    post = np.array([rmse(F, target) for F in aligned])
    return Alignment(aligned, rots, shifts, raw, post, degenerate)


def identification_rmse(records: Sequence[ChainRecord], truth: np.ndarray) -> dict:
    """RMSE of the posterior mean positions to the truth, with and without per-draw alignment."""
    if not records:
        raise EmptyChain("no draws")
    draws = np.array([r.positions for r in records])
    al = procrustes_align(draws, truth)
    raw = rmse(draws.mean(axis=0), truth)
    aligned = rmse(al.aligned.mean(axis=0), truth)
    return {"raw_rmse": raw, "aligned_rmse": aligned, "ratio": raw / aligned if aligned > 0 else np.inf}


# ---------------------------------------------------------------------------
# summaries


def summarize(records: Sequence[ChainRecord]) -> dict:
    if not records:
        raise EmptyChain("cannot summarize an empty chain")
    d, n = records[0].positions.shape
    p = records[0].lam.shape[0]
    names = record_columns(n, d, p)
    table = np.array([flatten_record(r) for r in records], dtype=float)

    params = {}
    for j, name in enumerate(names):
        if name == "draw":
            continue
        col = table[:, j]
        lo, hi = np.quantile(col, [0.025, 0.975])
        params[name] = {
            "mean": float(col.mean()),
            "sd": float(col.std()),
            "q025": float(lo),
            "q975": float(hi),
        }

    ind = np.array([r.indicators for r in records], dtype=float)
    lam = np.array([r.lam for r in records])
    return {
        "n_draws": len(records),
        "dims": {"n": n, "d": d, "p": p},
        "parameters": params,
        "lambda_mean": lam.mean(axis=0).tolist(),
        "positions_mean": np.mean([r.positions for r in records], axis=0).tolist(),
        "inclusion_prob": ind.mean(axis=0).tolist(),
        "row_zero_prob": np.mean(np.all(ind == 0, axis=2), axis=0).tolist(),
    }


def edge_fit(records: Sequence[ChainRecord], net: WeightedNetwork) -> np.ndarray:
    """Per-pair rows ``(i, j, w, theta_hat, |w - theta_hat|)`` with 1-based indices.

    ``theta_hat`` is the posterior mean intensity.
    """
    if not records:
        raise EmptyChain("no draws")
    iu, ju = net.pairs()
    theta = np.zeros(iu.size)
    for r in records:
        diff = r.positions[:, iu] - r.positions[:, ju]
        theta += np.exp(r.alpha - np.einsum("kp,kp->p", diff, diff))
    theta /= len(records)
    w = net.weights[iu, ju].astype(float)
    return np.column_stack([iu + 1, ju + 1, w, theta, np.abs(w - theta)])


# ---------------------------------------------------------------------------
# effective sample size


def ess(series, return_flag: bool = False):
    """Effective sample size by Geyer's initial monotone positive sequence.

    Autocovariances are summed in adjacent pairs until a pair turns
    non-positive; pairs are also forced to be non-increasing. The result
    is clipped to ``(0, len(series)]``. A constant series returns its length
    with the degeneracy flag set.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 10:
        raise ValueError("ess needs at least 10 values")
    x = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    freq = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(freq * np.conj(freq), nfft)[:n] / n
    if not acov[0] > 1e-300 * max(1.0, np.max(np.abs(series))):
        return (float(n), True) if return_flag else float(n)

    rho = acov / acov[0]
    n_pairs = n // 2
    gamma = rho[: 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    total = 0.0
    prev = np.inf
    for g in gamma:
        if g <= 0:
            break
        g = min(g, prev)
        total += g
        prev = g
    tau = -1.0 + 2.0 * total
    value = float(n) if tau <= 1.0 else n / tau
    value = min(max(value, np.finfo(float).tiny), float(n))
    return (value, False) if return_flag else value


# ---------------------------------------------------------------------------
# Geweke joint-distribution test

GEWEKE_HP = Hyperparams(sigma2_alpha=1.0, c0=6.0, C0=5.0, c_sigma=6.0, b_sigma=5.0,
                        c_kappa=6.0, b_kappa=5.0)


def monitored_moments(state: State, pat: RestrictionPattern) -> dict[str, float]:
    lat, load = state.latent, state.loading
    out = {
        "alpha": lat.alpha,
        "alpha_sq": lat.alpha**2,
        "mean_sq_norm_f": float(np.mean(np.sum(lat.positions**2, axis=0))),
    }
    for l, k in zip(*np.nonzero(~pat.fixed_zero)):
        out[f"lambda_{l + 1}_{k + 1}"] = float(load.lam[l, k])
    for l, k in zip(*np.nonzero(~pat.fixed_zero)):
        out[f"lambda_sq_{l + 1}_{k + 1}"] = float(load.lam[l, k] ** 2)
    out["kappa"] = load.kappa
    out["mean_log_col_scale"] = float(np.mean(np.log(load.col_scale)))
    out["mean_log_idio_var"] = float(np.mean(np.log(load.idio_var)))
    out["mean_tau"] = float(np.mean(load.tau))
    rows = np.flatnonzero(pat.free.any(axis=1))
    if rows.size:
        free = pat.free[rows]
        share = np.sum(free & (load.indicators[rows] == 1), axis=1) / free.sum(axis=1)
        out["inclusion_rate"] = float(np.mean(share))
        out["tau_x_inclusion"] = float(np.mean(load.tau[rows] * share))
    return out


@dataclass
class GewekeReport:
    z: dict[str, float]
    threshold: float
    draws: int
    marginal_mean: dict[str, float] = field(default_factory=dict)
    successive_mean: dict[str, float] = field(default_factory=dict)
    successive_ess: dict[str, float] = field(default_factory=dict)

    @property
    def max_abs_z(self) -> float:
        return max(abs(v) for v in self.z.values())

    @property
    def passed(self) -> bool:
        return self.max_abs_z < self.threshold


def geweke_joint_test(hp: Hyperparams, pat: RestrictionPattern, n: int, cfg: SamplerConfig,
                      draws: int = 5000, threshold: float = 4.0,
                      kernel: Callable | None = None) -> GewekeReport:
    """Compare the marginal-conditional and successive-conditional simulators.

    The marginal stream draws parameters from the prior and data given the
    parameters, independently each time. The successive stream alternates
    regenerating data from the current parameters with ``cfg.thin`` sampler
    sweeps. Both target the same joint law when the sampler is correct.

    ``kernel(state, net, y, streams)`` replaces the sampler sweep, e.g. to
    run the test against a deliberately broken update. MH step sizes are
    fixed at ``cfg.mh_step_alpha`` and ``cfg.mh_step_f``.
    """
    seq = np.random.SeedSequence(cfg.seed)
    mc_seq, sc_seq, sweep_seq = seq.spawn(3)
    mc_rng, sc_rng = seeded_rng(mc_seq), seeded_rng(sc_seq)
    streams = Streams(int(sweep_seq.generate_state(1, np.uint64)[0]))
    steps = Steps(cfg.mh_step_alpha, np.full(n, cfg.mh_step_f))
    cfgs = row_configs(pat)

    if kernel is None:
        def kernel(state, net, y, streams):
            return sweep(state, net, y, pat, hp, steps, streams, cfg.position_move,
                         orientation=cfg.orientation_move, cfgs=cfgs, jump_prob=cfg.jump_prob)[0]

    def gen_data(state, rng):
        lat, load = state.latent, state.loading
        iu = np.triu_indices(n, k=1)
        diff = lat.positions[:, iu[0]] - lat.positions[:, iu[1]]
        theta = np.exp(lat.alpha - np.einsum("kp,kp->p", diff, diff))
        w = np.zeros((n, n), dtype=np.int64)
        w[iu] = rng.poisson(theta)
        y = load.lam @ lat.positions + rng.standard_normal((pat.p, n)) * np.sqrt(load.idio_var)[:, None]
        return WeightedNetwork(w + w.T), InterpData(y)

    mc, sc = [], []
    for _ in range(draws):
        mc.append(monitored_moments(draw_prior_state(n, pat, hp, mc_rng), pat))

    state = draw_prior_state(n, pat, hp, sc_rng)
    for _ in range(draws):
        net, y = gen_data(state, sc_rng)
        for _ in range(cfg.thin):
            state = kernel(state, net, y, streams)
        sc.append(monitored_moments(state, pat))

    z, mc_mean, sc_mean, sc_ess = {}, {}, {}, {}
    for name in mc[0]:
        a = np.array([m[name] for m in mc])
        b = np.array([m[name] for m in sc])
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise TestError(f"non-finite values for monitored moment {name}")
        eff = ess(b)
        se = np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / eff)
        z[name] = float((a.mean() - b.mean()) / se) if se > 0 else 0.0
        mc_mean[name], sc_mean[name], sc_ess[name] = float(a.mean()), float(b.mean()), float(eff)
    return GewekeReport(z, threshold, draws, mc_mean, sc_mean, sc_ess)
