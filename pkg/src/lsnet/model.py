"""Model objects for the sparse latent-space network model.

All containers are frozen dataclasses over read-only numpy arrays. Samplers
never mutate them in place; they build new instances with
:func:`dataclasses.replace`.

Index conventions: arrays are 0-based, but pivot rows and the cell
coordinates quoted in validation messages are 1-based, matching the CLI.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DataError, DimensionError, InvalidPivots

CENTER_TOL = 1e-8


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Cell(enum.IntEnum):
    FREE = 0
    FIXED_ZERO = 1
    POSITIVE = 2


class RestrictionKind(str, enum.Enum):
    UNRESTRICTED = "unrestricted"
    PLT = "plt"
    GLT = "glt"


@dataclass(frozen=True, eq=False)
class WeightedNetwork:
    """Undirected integer-weighted network without self-loops.

    ``weights`` is the full symmetric ``n x n`` matrix. The diagonal is
    zeroed on construction since no likelihood term reads it.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DataError(f"weights must be a square matrix, got shape {w.shape}")
        if w.shape[0] < 2:
            raise DataError("a network needs at least 2 nodes")
        if not np.issubdtype(w.dtype, np.number) or np.issubdtype(w.dtype, np.complexfloating):
            raise DataError("weights must be numeric")
        if not np.all(np.isfinite(w)):
            raise DataError("weights must be finite")
        if np.any(w < 0):
            raise DataError("weights must be non-negative")
        if np.any(w != np.round(w)):
            raise DataError("weights must be integer-valued")
        if np.any(w != w.T):
            raise DataError("weights must be symmetric (undirected network)")
        w = w.astype(np.int64, copy=True)
        np.fill_diagonal(w, 0)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def float_weights(self) -> np.ndarray:
        """Read-only float copy of ``weights`` for inner loops."""
        return _frozen(self.weights)

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Row/column indices of the ``i < j`` pairs, in row-major order."""
        return np.triu_indices(self.n, k=1)

    def upper(self) -> np.ndarray:
        return self.weights[self.pairs()]

    def __eq__(self, other):
        return isinstance(other, WeightedNetwork) and np.array_equal(self.weights, other.weights)


@dataclass(frozen=True, eq=False)
class LatentState:
    """Intercept and the ``d x n`` matrix of latent positions (column i is node i)."""

    alpha: float
    positions: np.ndarray
    centered: bool = False

    def __post_init__(self):
        f = _frozen(self.positions)
        if f.ndim != 2:
            raise DimensionError("positions must be a d x n matrix")
        if f.shape[0] < 2:
            raise DimensionError(
                f"latent dimension d must be >= 2 (prior variance 1/(1-1/d) is undefined at d=1), got {f.shape[0]}"
            )
        object.__setattr__(self, "positions", f)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def d(self) -> int:
        return self.positions.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, LatentState)
            and self.alpha == other.alpha
            and self.centered == other.centered
            and np.array_equal(self.positions, other.positions)
        )


@dataclass(frozen=True, eq=False)
class LoadingState:
    """Loadings, slab indicators and every variance-type parameter."""

    lam: np.ndarray
    indicators: np.ndarray
    tau: np.ndarray
    col_scale: np.ndarray
    kappa: float
    idio_var: np.ndarray

    def __post_init__(self):
        lam = _frozen(self.lam)
        if lam.ndim != 2:
            raise DimensionError("lam must be a p x d matrix")
        p, d = lam.shape
        ind = _frozen(self.indicators, dtype=np.int8)
        tau = _frozen(self.tau)
        col_scale = _frozen(self.col_scale)
        idio = _frozen(self.idio_var)
        if ind.shape != (p, d):
            raise DimensionError(f"indicators shape {ind.shape} != loadings shape {(p, d)}")
        if tau.shape != (p,) or idio.shape != (p,):
            raise DimensionError("tau and idio_var must have length p")
        if col_scale.shape != (d,):
            raise DimensionError("col_scale must have length d")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "indicators", ind)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "col_scale", col_scale)
        object.__setattr__(self, "idio_var", idio)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def p(self) -> int:
        return self.lam.shape[0]

    @property
    def d(self) -> int:
        return self.lam.shape[1]

    def __eq__(self, other):
        if not isinstance(other, LoadingState):
            return False
        return self.kappa == other.kappa and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("lam", "indicators", "tau", "col_scale", "idio_var")
        )


@dataclass(frozen=True, eq=False)
class RestrictionPattern:
    cells: np.ndarray
    kind: RestrictionKind
    pivots: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "cells", _frozen(self.cells, dtype=np.int8))

    @property
    def p(self) -> int:
        return self.cells.shape[0]

    @property
    def d(self) -> int:
        return self.cells.shape[1]

    @property
    def free(self) -> np.ndarray:
        return self.cells == Cell.FREE

    @property
    def fixed_zero(self) -> np.ndarray:
        return self.cells == Cell.FIXED_ZERO

    @property
    def positive(self) -> np.ndarray:
        return self.cells == Cell.POSITIVE

    def __eq__(self, other):
        return isinstance(other, RestrictionPattern) and np.array_equal(self.cells, other.cells)


@dataclass(frozen=True)
class Hyperparams:
    sigma2_alpha: float = 10.0
    c0: float = 2.5
    C0: float = 2.5
    c_sigma: float = 2.5
    b_sigma: float = 2.5
    c_kappa: float = 2.5
    b_kappa: float = 2.5
    tau_a: float = 1.0
    tau_b: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"hyperparameter {name} must be finite and > 0, got {value}")


def position_prior_var(d: int) -> float:
    """Per-coordinate prior variance of a latent position, ``(1 - 1/d)^-1``."""
    if d < 2:
        raise DimensionError("latent dimension d must be >= 2")
    return 1.0 / (1.0 - 1.0 / d)


def build_pattern(kind, p: int, d: int, pivots: Sequence[int] | None = None) -> RestrictionPattern:
    """Build the per-cell constraint map for a ``p x d`` loading matrix.

    Parameters
    ----------
    kind : {"unrestricted", "plt", "glt"} or RestrictionKind
    p, d : int
        Number of interpretation variables and latent dimension.
    pivots : sequence of int, optional
        1-based pivot rows, one per column, strictly increasing. Required for
        GLT; PLT is GLT with pivots ``(1, ..., d)``.
    """
    kind = RestrictionKind(kind)
    if d < 2:
        raise DimensionError(f"latent dimension d must be >= 2, got {d}")
    if p < d:
        raise DimensionError(f"need p >= d, got p={p}, d={d}")

    cells = np.full((p, d), Cell.FREE, dtype=np.int8)
    if kind is RestrictionKind.UNRESTRICTED:
        return RestrictionPattern(cells, kind, None)

    if kind is RestrictionKind.PLT:
        pivots = tuple(range(1, d + 1))
    else:
        if pivots is None:
            raise InvalidPivots("GLT needs one pivot row per column")
        pivots = tuple(int(x) for x in pivots)
        if len(pivots) != d:
            raise InvalidPivots(f"expected {d} pivots, got {len(pivots)}")
        if any(b <= a for a, b in zip(pivots, pivots[1:])):
            raise InvalidPivots(f"pivots must be strictly increasing, got {pivots}")
        if pivots[0] < 1 or pivots[-1] > p:
            raise InvalidPivots(f"pivots must lie in 1..{p}, got {pivots}")

    for k, row in enumerate(pivots):
        cells[: row - 1, k] = Cell.FIXED_ZERO
        cells[row - 1, k] = Cell.POSITIVE
    return RestrictionPattern(cells, kind, pivots)


def validate_state(lat: LatentState, load: LoadingState, pat: RestrictionPattern) -> list[str]:
    """Return every violated invariant as a readable message (empty when valid)."""
    if lat.d != load.d:
        raise DimensionError(f"latent dimension {lat.d} != loading columns {load.d}")
    if pat.cells.shape != load.lam.shape:
        raise DimensionError(f"pattern shape {pat.cells.shape} != loadings shape {load.lam.shape}")

    problems: list[str] = []
    if not np.isfinite(lat.alpha):
        problems.append("alpha not finite")
    if not np.all(np.isfinite(lat.positions)):
        problems.append("positions not finite")
    if lat.centered:
        sums = lat.positions.sum(axis=1)
        for k in np.flatnonzero(np.abs(sums) > CENTER_TOL):
            problems.append(f"center drift row {k + 1}")

    lam, ind = load.lam, load.indicators
    if not np.all(np.isin(ind, (0, 1))):
        problems.append("indicators not binary")
    for l, k in zip(*np.nonzero((ind == 0) & (lam != 0))):
        problems.append(f"inactive cell nonzero at ({l + 1},{k + 1})")
    for l, k in zip(*np.nonzero((ind == 1) & (lam == 0))):
        problems.append(f"active cell zero at ({l + 1},{k + 1})")
    for l, k in zip(*np.nonzero(pat.fixed_zero & (lam != 0))):
        problems.append(f"FixedZero cell nonzero at ({l + 1},{k + 1})")
    for l, k in zip(*np.nonzero(pat.fixed_zero & (ind != 0))):
        problems.append(f"FixedZero cell active at ({l + 1},{k + 1})")
    for l, k in zip(*np.nonzero(pat.positive & ~(lam > 0))):
        problems.append(f"PositiveDiagonal cell not positive at ({l + 1},{k + 1})")
    for l, k in zip(*np.nonzero(pat.positive & (ind != 1))):
        problems.append(f"PositiveDiagonal cell inactive at ({l + 1},{k + 1})")
    if not np.all(np.isfinite(lam)):
        problems.append("loadings not finite")

    for name in ("col_scale", "idio_var"):
        v = getattr(load, name)
        if not np.all(np.isfinite(v) & (v > 0)):
            problems.append(f"{name} not strictly positive")
    if not (np.isfinite(load.kappa) and load.kappa > 0):
        problems.append("kappa not strictly positive")
    if not np.all((load.tau > 0) & (load.tau < 1)):
        problems.append("tau outside (0,1)")
    return problems
