"""Command-line interface: ``lsnet {simulate,fit,summarize,geweke}``.

Exit codes: 0 success, 1 Geweke gate failed, 2 usage error, 3 data error,
4 I/O error. ``LSNET_SEED``, when set, overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .diagnostics import GEWEKE_HP, edge_fit, ess, geweke_joint_test, identification_rmse, summarize
from .errors import DataError, IoError, LsnetError, UsageError
from .experiment import simulate_dataset
from .formats import (
    CHAIN_FORMAT,
    CHAIN_VERSION,
    META_VERSION,
    ChainWriter,
    read_chain,
    read_interp,
    read_json,
    read_network,
    write_interp,
    write_json,
    write_network,
)
from .model import Hyperparams, build_pattern
from .sampler import POSITION_MOVES, SamplerConfig, run_chain
from .simulate import TruthSettings
from .svg import positions_svg

log = logging.getLogger("lsnet")

EXIT_OK, EXIT_TEST, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _pivots(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"pivots must be comma-separated integers, got {text!r}")


def _seed(args) -> int:
    env = os.environ.get("LSNET_SEED")
    if env is None or env == "":
        return args.seed
    try:
        seed = int(env)
    except ValueError:
        raise UsageError(f"LSNET_SEED must be an integer, got {env!r}")
    if not 0 <= seed < 2**64:
        raise UsageError("LSNET_SEED must be a 64-bit unsigned integer")
    return seed


def _pattern(args, p: int, d: int):
    if args.restriction == "glt" and args.pivots is None:
        raise UsageError("--restriction glt needs --pivots")
    if args.restriction != "glt" and args.pivots is not None:
        raise UsageError("--pivots only applies to --restriction glt")
    return build_pattern(args.restriction, p, d, args.pivots)


def _add_restriction(p):
    p.add_argument("--restriction", choices=("unrestricted", "plt", "glt"), default="plt")
    p.add_argument("--pivots", type=_pivots, default=None, help="1-based pivot rows for GLT, e.g. 2,3")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lsnet", description="Sparse Bayesian latent-space network model.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic fixture")
    p.add_argument("--nodes", type=int, default=30)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--p", type=int, default=4)
    _add_restriction(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--idio-var", type=float, default=TruthSettings.idio_var)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("fit", help="run the sampler")
    p.add_argument("--network", type=Path, required=True)
    p.add_argument("--interp", type=Path, required=True)
    _add_restriction(p)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--iters", type=int, default=2000, help="total sweeps, burn-in included")
    p.add_argument("--burnin", type=int, default=1000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-alpha", type=float, default=SamplerConfig.mh_step_alpha)
    p.add_argument("--step-f", type=float, default=SamplerConfig.mh_step_f)
    p.add_argument("--jump-prob", type=float, default=SamplerConfig.jump_prob)
    p.add_argument("--position-move", choices=POSITION_MOVES, default="subspace")
    p.add_argument("--no-orientation", action="store_true", help="disable the rigid orthogonal move")
    p.add_argument("--hyper", type=Path, default=None, help="JSON file overriding hyperparameters")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("summarize", help="posterior summaries and plots")
    p.add_argument("--chain", type=Path, required=True, help="directory written by fit")
    p.add_argument("--truth", type=Path, default=None, help="truth.json written by simulate")
    p.add_argument("--network", type=Path, default=None, help="defaults to the path recorded by fit")
    p.add_argument("--out", type=Path, default=None, help="defaults to the chain directory")

    p = sub.add_parser("geweke", help="joint-distribution test on a micro model")
    p.add_argument("--nodes", type=int, default=4)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--p", type=int, default=3)
    _add_restriction(p)
    p.add_argument("--draws", type=int, default=5000)
    p.add_argument("--thin", type=int, default=1, help="sweeps between successive draws")
    p.add_argument("--threshold", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", type=Path, default=None, help="also write the report as JSON")
    return parser


def _check_dims(args):
    if args.dim < 2:
        raise UsageError(f"--dim must be >= 2 (the latent dimension d >= 2 is required), got {args.dim}")
    if getattr(args, "p", args.dim) < args.dim:
        raise UsageError(f"--p must be >= --dim, got p={args.p}, dim={args.dim}")
    if getattr(args, "nodes", 3) < 3:
        raise UsageError(f"--nodes must be >= 3, got {args.nodes}")


def cmd_simulate(args) -> int:
    _check_dims(args)
    if args.idio_var <= 0:
        raise UsageError("--idio-var must be > 0")
    seed = _seed(args)
    _pattern(args, args.p, args.dim)
    settings = TruthSettings(idio_var=args.idio_var)
    lat, load, meta, net, y = simulate_dataset(seed, args.nodes, args.dim, args.p, settings,
                                               args.restriction, args.pivots)
    out = args.out
    write_json(out / "truth.json", meta)
    write_network(out / "network.csv", net)
    write_interp(out / "interp.csv", y)
    write_json(out / "config-echo.json", {
        "command": "simulate",
        "nodes": args.nodes, "dim": args.dim, "p": args.p,
        "restriction": args.restriction,
        "pivots": list(args.pivots) if args.pivots else None,
        "seed": seed,
        "settings": asdict(settings),
    })
    log.info("wrote fixture to %s", out)
    return EXIT_OK


def _load_hyper(path) -> Hyperparams:
    if path is None:
        return Hyperparams()
    obj = read_json(path)
    names = {f.name for f in fields(Hyperparams)}
    unknown = set(obj) - names
    if unknown:
        raise DataError(f"{path}: unknown hyperparameters {sorted(unknown)}")
    try:
        return Hyperparams(**obj)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def cmd_fit(args) -> int:
    _check_dims(args)
    seed = _seed(args)
    try:
        cfg = SamplerConfig(iters=args.iters, burnin=args.burnin, thin=args.thin, seed=seed,
                            mh_step_alpha=args.step_alpha, mh_step_f=args.step_f,
                            position_move=args.position_move,
                            orientation_move=not args.no_orientation, jump_prob=args.jump_prob)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    hp = _load_hyper(args.hyper)
    y = read_interp(args.interp)
    net = read_network(args.network)
    if net.n != y.n:
        raise DataError(f"{args.network} describes a network of shape ({net.n}, {net.n}) but "
                        f"{args.interp} has shape ({y.p}, {y.n}); the node counts must agree")
    if y.p < args.dim:
        raise DataError(f"{args.interp} has shape ({y.p}, {y.n}); need at least --dim={args.dim} rows")
    pat = _pattern(args, y.p, args.dim)

    out = args.out
    with ChainWriter(out / "chain.csv", net.n, args.dim, y.p) as writer:
        res = run_chain(net, y, pat, hp, cfg, callback=writer, store=False)
    write_json(out / "meta.json", {
        "format": CHAIN_FORMAT,
        "format_version": META_VERSION,
        "chain_version": CHAIN_VERSION,
        "seed": seed,
        "config": asdict(cfg),
        "restriction": args.restriction,
        "pivots": list(pat.pivots) if pat.pivots else None,
        "dims": {"n": net.n, "d": args.dim, "p": y.p},
        "hyperparams": asdict(hp),
        "acceptance": _plain(res.acceptance),
        "burnin_acceptance": _plain(res.burnin_acceptance),
        "final_steps": {"alpha": res.steps.alpha, "f": res.steps.f.tolist()},
        "n_records": res.n_records,
        "wall_time_s": res.wall_time,
        "inputs": {"network": str(args.network.resolve()), "interp": str(args.interp.resolve())},
    })
    log.info("%d draws written to %s in %.1fs", res.n_records, out, res.wall_time)
    return EXIT_OK


def _plain(d: dict) -> dict:
    return {k: float(v) for k, v in d.items()}


def cmd_summarize(args) -> int:
    chain_dir = args.chain
    chain_path = chain_dir / "chain.csv"
    if not chain_path.is_file():
        raise IoError(f"missing chain file {chain_path}")
    records = read_chain(chain_path)
    meta_path = chain_dir / "meta.json"
    meta = read_json(meta_path) if meta_path.is_file() else {}
    out = args.out or chain_dir

    summ = summarize(records)
    summ["alpha_ess"] = float(ess([r.alpha for r in records]))
    truth = None
    if args.truth is not None:
        t = read_json(args.truth)
        truth = np.array(t["positions"], dtype=float)
        if truth.shape != records[0].positions.shape:
            raise DataError(f"truth positions have shape {truth.shape}, chain has {records[0].positions.shape}")
        summ["identification"] = identification_rmse(records, truth)

    net_path = args.network or meta.get("inputs", {}).get("network")
    if net_path is None:
        raise IoError("no network file: pass --network or summarize a chain written by fit")
    net = read_network(net_path)
    if net.n != records[0].positions.shape[1]:
        raise DataError(f"network has {net.n} nodes, chain has {records[0].positions.shape[1]}")

    write_json(out / "summary.json", summ)
    draws = np.array([r.positions for r in records])
    _write_text(out / "positions.svg", positions_svg(draws, truth))
    lam = np.array(summ["lambda_mean"])
    _write_text(out / "loadings.csv", "row," + ",".join(f"lambda_{k + 1}" for k in range(lam.shape[1])) + "\n"
                + "".join(f"{l + 1}," + ",".join(repr(float(v)) for v in row) + "\n"
                          for l, row in enumerate(lam)))
    fit = edge_fit(records, net)
    _write_text(out / "edgefit.csv", "i,j,weight,theta_hat,abs_error\n"
                + "".join(f"{int(i)},{int(j)},{int(w)},{float(th)!r},{float(e)!r}\n" for i, j, w, th, e in fit))
    log.info("summaries written to %s", out)
    return EXIT_OK


def _write_text(path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def cmd_geweke(args) -> int:
    _check_dims(args)
    if args.draws < 10:
        raise UsageError("--draws must be >= 10")
    seed = _seed(args)
    pat = _pattern(args, args.p, args.dim)
    cfg = SamplerConfig(iters=2, burnin=0, thin=args.thin, seed=seed, mh_step_alpha=0.3, mh_step_f=0.4)
    rep = geweke_joint_test(GEWEKE_HP, pat, args.nodes, cfg, draws=args.draws, threshold=args.threshold)
    width = max(len(k) for k in rep.z)
    for name, z in rep.z.items():
        flag = "ok" if abs(z) < rep.threshold else "FAIL"
        print(f"{name:<{width}}  z={z:+7.3f}  {flag}")
    verdict = "PASS" if rep.passed else "FAIL"
    print(f"{verdict}: max |z| = {rep.max_abs_z:.3f} (threshold {rep.threshold}, {rep.draws} draws)")
    if args.report is not None:
        write_json(args.report, {"z": rep.z, "threshold": rep.threshold, "draws": rep.draws,
                                 "passed": rep.passed, "max_abs_z": rep.max_abs_z,
                                 "marginal_mean": rep.marginal_mean,
                                 "successive_mean": rep.successive_mean,
                                 "successive_ess": rep.successive_ess})
    return EXIT_OK if rep.passed else EXIT_TEST


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "summarize": cmd_summarize, "geweke": cmd_geweke}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"lsnet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IoError as exc:
        print(f"lsnet: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LsnetError as exc:
        print(f"lsnet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
