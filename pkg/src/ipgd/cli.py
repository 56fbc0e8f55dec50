"""Command-line entry point: ``ipgd {spectra,compare,noise,check,fetch}``."""
import argparse
import logging
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import checks, datasets
from .experiment import (ExperimentConfig, format_table, prepare, run_compare, run_noise)
from .solvers import SOLVERS, tune

# config-file keys and how to coerce them
CONFIG_KEYS = {
    "dataset": str, "synthetic": str, "agents": int, "solvers": None, "params": str,
    "tol": float, "max_iters": int, "noise": str, "out": str, "seed": int, "workers": int,
    "line_search": str, "apc_average": str, "stall_window": int, "stall_tol": float,
}


def _solvers(value):
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",") if v.strip()]
    return [v.lower() for v in value]


def _overrides(items):
    """``["ipg.alpha=0.01", ...]`` -> ``{"ipg": {"alpha": 0.01}}``."""
    out = {}
    for item in items or []:
        key, _, val = item.partition("=")
        solver, _, name = key.partition(".")
        if not name or not val:
            raise argparse.ArgumentTypeError(f"expected SOLVER.PARAM=VALUE, got {item!r}")
        try:
            v = float(val)
        except ValueError:
            v = val
        out.setdefault(solver, {})[name] = v
    return out


def load_config(path):
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    cfg = {}
    for k, v in raw.items():
        k = k.replace("-", "_")
        if k == "set":
            cfg["overrides"] = {s: dict(p) for s, p in v.items()}
        elif k in CONFIG_KEYS:
            conv = CONFIG_KEYS[k]
            cfg[k] = _solvers(v) if k == "solvers" else conv(v)
        else:
            raise ValueError(f"unknown config key {k!r}")
    return cfg


def build_config(args):
    merged = load_config(args.config) if args.config else {}
    for k in CONFIG_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = _solvers(v) if k == "solvers" else v
    # a flag-selected source replaces a file-selected one
    if args.dataset is not None:
        merged.pop("synthetic", None)
    elif args.synthetic is not None:
        merged.pop("dataset", None)
    ov = merged.pop("overrides", {})
    for s, p in _overrides(args.set).items():
        ov.setdefault(s, {}).update(p)
    return ExperimentConfig(overrides=ov, **merged)


def _source_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--dataset", help="dataset name (ash608, bcsstm07, gr_30_30, qc324) "
                                       "or path to a .mtx file")
    src.add_argument("--synthetic", metavar="N,d,kappa,rank,seed",
                     help="random matrix with a prescribed Gram spectrum")
    p.add_argument("--agents", type=int, help="number of agents (default 10)")


def _run_args(p):
    _source_args(p)
    p.add_argument("--solvers", help=f"comma list from {','.join(SOLVERS)} (default: all)")
    p.add_argument("--params", choices=("tuned", "published"),
                   help="rate-optimal values from the spectrum, or the published settings")
    p.add_argument("--set", action="append", metavar="SOLVER.PARAM=VALUE",
                   help="override one solver parameter (repeatable)")
    p.add_argument("--tol", type=float, help="relative-error tolerance (default 1e-4)")
    p.add_argument("--max-iters", dest="max_iters", type=int,
                   help="iteration cap (default 100000; 2000 for bfgs under noise)")
    p.add_argument("--noise", help="none | round:K | uniform:LO,HI[,SEED]")
    p.add_argument("--out", help="directory for trace_<solver>.csv and summary.csv")
    p.add_argument("--config", help="TOML file with the same keys as the flags")
    p.add_argument("--seed", type=int, help="seed for random noise streams")
    p.add_argument("--workers", type=int, help="threads for agent computations")
    p.add_argument("--line-search", dest="line_search", choices=("exact", "backtracking"),
                   help="BFGS step rule (default exact)")
    p.add_argument("--apc-average", dest="apc_average", choices=("updated", "previous"))


def cmd_spectra(args):
    cfg = build_config(args)
    problem, shards, s = prepare(cfg)
    print(f"dataset     {cfg.name}  ({problem.N} x {problem.d}, {cfg.agents} agents)")
    print(f"lambda_1    {s.lambda1:.6g}")
    print(f"lambda_r    {s.lambda_r:.6g}")
    print(f"lambda_d    {s.lambda_d:.6g}")
    print(f"rank        {s.rank}")
    note = " (on the row space)" if s.kappa_on_row_space else ""
    print(f"kappa       {s.kappa:.6g}{note}")
    print("tuned parameters:")
    for kind in SOLVERS:
        try:
            prm = tune(kind, s, shards=shards)
        except Exception as exc:
            print(f"  {kind:<5} N/A ({exc})")
            continue
        text = ", ".join(f"{k}={v:.6g}" for k, v in prm.items()) or "line search"
        print(f"  {kind:<5} {text}")
    return 0


def cmd_compare(args):
    rows = run_compare(build_config(args))
    print(format_table(rows))
    return 0


def cmd_noise(args):
    rows = run_noise(build_config(args))
    print(format_table(rows, noise_mode=True))
    return 0


def cmd_check(args):
    seeds = range(args.seed, args.seed + args.sweep) if args.sweep else [args.seed]
    failed = 0
    for seed in seeds:
        for r in checks.run_all(seed, alpha_inflation=args.inflate_alpha):
            print(f"seed {seed} {r.line()}")
            failed += not r.passed
    print(f"{failed} failure(s)")
    return 1 if failed else 0


def cmd_fetch(args):
    names = args.names or sorted(datasets.KNOWN)
    status = 0
    for name in names:
        try:
            path = datasets.fetch(name, args.dest)
            print(f"{name}: {path}")
        except Exception as exc:
            print(f"{name}: failed ({exc})", file=sys.stderr)
            status = 1
    return status


def make_parser():
    parser = argparse.ArgumentParser(
        prog="ipgd", description="Distributed least-squares solver comparisons.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectra", help="Gram spectrum, condition number and tuned parameters")
    _source_args(p)
    p.add_argument("--config")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("compare", help="iterations to tolerance for each solver")
    _run_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("noise", help="asymptotic error under system noise")
    _run_args(p)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("check", help="randomised property suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep", type=int, default=0, help="run seeds seed..seed+sweep-1")
    p.add_argument("--inflate-alpha", dest="inflate_alpha", type=float, default=1.0,
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fetch", help="download benchmark matrices")
    p.add_argument("names", nargs="*")
    p.add_argument("--dest", help="target directory (default $IPGD_DATA_DIR or ~/.cache/ipgd)")
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "spectra":
        for k in CONFIG_KEYS:
            if not hasattr(args, k):
                setattr(args, k, None)
        args.set = None
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
