"""On-disk formats: network.csv, interp.csv, chain.csv, truth/meta JSON.

network.csv
    header ``i,j,weight``; 1-based node indices; one row per pair with i < j.
interp.csv
    p rows by n columns of plain decimals, no header; row l is variable l.
chain.csv
    a ``#`` comment line carrying the format version and dimensions, a
    header line with the column names, then one row per retained draw.
    Floats are written with ``repr`` so a read-back is bit-exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataError, IoError
from .likelihood import InterpData
from .model import LatentState, LoadingState, WeightedNetwork
from .sampler import ChainRecord

CHAIN_FORMAT = "lsnet-chain"
CHAIN_VERSION = 1
META_VERSION = 1


def record_columns(n: int, d: int, p: int) -> list[str]:
    """Chain column names in their fixed order (all indices 1-based).

    ``f_k_i`` is coordinate k of node i, ``lambda_l_k`` and ``delta_l_k`` the
    loading and its inclusion indicator.
    """
    cols = ["draw", "alpha"]
    cols += [f"f_{k + 1}_{i + 1}" for k in range(d) for i in range(n)]
    cols += [f"lambda_{l + 1}_{k + 1}" for l in range(p) for k in range(d)]
    cols += [f"delta_{l + 1}_{k + 1}" for l in range(p) for k in range(d)]
    cols += [f"tau_{l + 1}" for l in range(p)]
    cols += [f"col_scale_{k + 1}" for k in range(d)]
    cols += ["kappa"]
    cols += [f"idio_var_{l + 1}" for l in range(p)]
    cols += ["log_post"]
    return cols


def flatten_record(rec: ChainRecord) -> list:
    return [
        rec.draw, rec.alpha,
        *rec.positions.ravel(), *rec.lam.ravel(), *rec.indicators.ravel(),
        *rec.tau, *rec.col_scale, rec.kappa, *rec.idio_var, rec.log_post,
    ]


def unflatten_record(values, n: int, d: int, p: int) -> ChainRecord:
    v = list(values)
    pos = 2
    def take(size):
        nonlocal pos
        out = v[pos:pos + size]
        pos += size
        return out
    F = np.array(take(d * n), dtype=float).reshape(d, n)
    lam = np.array(take(p * d), dtype=float).reshape(p, d)
    ind = np.array(take(p * d), dtype=float).astype(np.int8).reshape(p, d)
    tau = np.array(take(p), dtype=float)
    col_scale = np.array(take(d), dtype=float)
    kappa = float(take(1)[0])
    idio = np.array(take(p), dtype=float)
    log_post = float(take(1)[0])
    return ChainRecord(int(v[0]), float(v[1]), F, lam, ind, tau, col_scale, kappa, idio, log_post)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _open_for_write(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _open_for_read(path):
    try:
        return open(path, newline="")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


class ChainWriter:
    """Streams chain records to ``chain.csv``; usable as a ``run_chain`` callback."""

    def __init__(self, path, n: int, d: int, p: int):
        self.n, self.d, self.p = n, d, p
        self._fh = _open_for_write(path)
        self._fh.write(f"# {CHAIN_FORMAT} v{CHAIN_VERSION} n={n} d={d} p={p}\n")
        self._fh.write(",".join(record_columns(n, d, p)) + "\n")

    def __call__(self, rec: ChainRecord) -> None:
        self._fh.write(",".join(_fmt(x) for x in flatten_record(rec)) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_chain(path, records: list[ChainRecord]) -> None:
    if not records:
        raise DataError("no records to write")
    d, n = records[0].positions.shape
    p = records[0].lam.shape[0]
    with ChainWriter(path, n, d, p) as w:
        for rec in records:
            w(rec)


def read_chain(path) -> list[ChainRecord]:
    with _open_for_read(path) as fh:
        first = fh.readline().split()
        if len(first) < 3 or first[1] != CHAIN_FORMAT:
            raise DataError(f"{path}: not an lsnet chain file")
        if first[2] != f"v{CHAIN_VERSION}":
            raise DataError(f"{path}: unsupported chain version {first[2]}")
        dims = dict(tok.split("=") for tok in first[3:])
        n, d, p = int(dims["n"]), int(dims["d"]), int(dims["p"])
        header = fh.readline().strip().split(",")
        if header != record_columns(n, d, p):
            raise DataError(f"{path}: column header does not match v{CHAIN_VERSION} layout")
        return [unflatten_record(row, n, d, p) for row in csv.reader(fh) if row]


def write_network(path, net: WeightedNetwork) -> None:
    iu, ju = net.pairs()
    with _open_for_write(path) as fh:
        fh.write("i,j,weight\n")
        for i, j, w in zip(iu, ju, net.weights[iu, ju]):
            fh.write(f"{i + 1},{j + 1},{w}\n")


def read_network(path, n: int | None = None) -> WeightedNetwork:
    """Read an edge list. Pairs not listed have weight 0.

    ``n`` fixes the node count; by default it is the largest index seen.
    """
    entries: dict[tuple[int, int], int] = {}
    with _open_for_read(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["i", "j", "weight"]:
            raise DataError(f"{path}: expected header 'i,j,weight'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                i, j = int(row[0]), int(row[1])
                wf = float(row[2])
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: malformed row {row}") from exc
            if not np.isfinite(wf) or wf < 0 or wf != int(wf):
                raise DataError(f"{path}:{lineno}: weight must be a non-negative integer, got {row[2]}")
            if i < 1 or j < 1:
                raise DataError(f"{path}:{lineno}: node indices are 1-based")
            if i == j:
                raise DataError(f"{path}:{lineno}: self-loop ({i},{j}) not allowed")
            key = (min(i, j), max(i, j))
            if key in entries:
                kind = "duplicate" if entries[key] == int(wf) else "asymmetric redundant"
                raise DataError(f"{path}:{lineno}: {kind} pair ({i},{j})")
            entries[key] = int(wf)
    top = max((j for _, j in entries), default=0)
    n = top if n is None else n
    if top > n:
        raise DataError(f"{path}: node index {top} exceeds n={n}")
    w = np.zeros((n, n), dtype=np.int64)
    for (i, j), val in entries.items():
        w[i - 1, j - 1] = w[j - 1, i - 1] = val
    return WeightedNetwork(w)


def write_interp(path, y: InterpData) -> None:
    with _open_for_write(path) as fh:
        for row in y.y:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_interp(path) -> InterpData:
    rows = []
    with _open_for_read(path) as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric entry") from exc
    if not rows or len({len(r) for r in rows}) != 1:
        raise DataError(f"{path}: expected a rectangular p x n table")
    return InterpData(np.array(rows))


def write_json(path, obj) -> None:
    with _open_for_write(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with _open_for_read(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from exc


def truth_from_json(obj) -> tuple[LatentState, LoadingState]:
    lat = LatentState(obj["alpha"], np.array(obj["positions"]), centered=True)
    load = LoadingState(np.array(obj["lambda"]), np.array(obj["indicators"]), np.array(obj["tau"]),
                        np.array(obj["col_scale"]), obj["kappa"], np.array(obj["idio_var"]))
    return lat, load
