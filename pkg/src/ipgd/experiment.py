"""Experiment plumbing: configuration, per-solver runs, CSV output."""
import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from . import analysis, datasets
from .errors import (DivergenceError, LineSearchError, RankDeficientError, SingularMatrixError,
                     SolverInapplicableError)
from .linalg import gram, spectral_summary
from .problem import ones_problem, partition, synthetic_matrix
from .protocol import NoiseChannel, RoundEngine
from .solvers import SOLVERS, StopCriteria, make_solver, published_params, run_until, tune

log = logging.getLogger(__name__)

GD_CAP = 100_000
# default caps under noise for methods whose rounds cost O(d^3)
NOISE_CAPS = {"bfgs": 2_000}

# per-dataset BFGS noise ranges for the noise study
BFGS_NOISE = {"ash608": (0.0, 5e-6), "gr_30_30": (0.0, 2e-6)}


@dataclass
class ExperimentConfig:
    dataset: Optional[str] = None
    synthetic: Optional[str] = None       # "N,d,kappa,rank,seed"
    agents: int = 10
    solvers: List[str] = field(default_factory=lambda: list(SOLVERS))
    params: str = "tuned"                 # "tuned" or "published"
    overrides: Dict[str, Dict[str, float]] = field(default_factory=dict)
    tol: float = 1e-4
    max_iters: Optional[int] = None     # None: GD_CAP, or NOISE_CAPS under noise
    noise: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0
    workers: int = 1
    line_search: str = "exact"
    apc_average: str = "updated"
    stall_window: int = 100
    stall_tol: float = 1e-3

    def __post_init__(self):
        if not self.solvers:
            raise ValueError("at least one solver is required")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad:
            raise ValueError(f"unknown solvers {bad}; choose from {SOLVERS}")
        if self.agents < 1:
            raise ValueError("agents must be >= 1")
        if self.params not in ("tuned", "published"):
            raise ValueError("params must be 'tuned' or 'published'")
        if (self.dataset is None) == (self.synthetic is None):
            raise ValueError("give exactly one of dataset / synthetic")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def iteration_cap(self, kind, noisy=False):
        if self.max_iters is not None:
            return self.max_iters
        return NOISE_CAPS.get(kind, GD_CAP) if noisy else GD_CAP

    @property
    def name(self):
        if self.dataset is not None:
            return Path(self.dataset).stem
        return "synthetic"


@dataclass
class ResultRow:
    solver: str
    status: str                      # ok | max_iters | N/A | unbounded
    iterations: Optional[int]
    final_rel_error: Optional[float]
    asymptotic_error: Optional[float]
    stop_reason: str
    params: dict
    noise: str
    wall_time: float = 0.0
    record: object = None


def parse_synthetic(spec):
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != 5:
        raise ValueError("synthetic spec is N,d,kappa,rank,seed")
    N, d = int(parts[0]), int(parts[1])
    return N, d, float(parts[2]), int(parts[3]), int(parts[4])


def build_problem(cfg):
    if cfg.dataset is not None:
        return datasets.problem(cfg.dataset)
    N, d, kappa, rank, seed = parse_synthetic(cfg.synthetic)
    return ones_problem(synthetic_matrix(N, d, kappa, rank, seed), name="synthetic")


def solver_params(kind, cfg, summary, shards):
    prm = None
    if cfg.params == "published":
        prm = published_params(cfg.name, kind)
        if prm is None:
            log.warning("no published %s setting for %s; using tuned values", kind, cfg.name)
    if prm is None:
        prm = tune(kind, summary, shards=shards)
        if kind == "ipg":
            prm.pop("beta")
    prm = dict(prm)
    prm.update(cfg.overrides.get(kind, {}))
    if kind == "bfgs":
        prm.setdefault("line_search", cfg.line_search)
    if kind == "apc":
        prm.setdefault("average", cfg.apc_average)
    return prm


def default_noise(kind, dataset, seed):
    """Noise channel used for ``kind`` in the noise study."""
    if kind in ("gd", "nag", "hbm", "ipg"):
        return NoiseChannel.round_decimals(4)
    if kind == "apc":
        return NoiseChannel.uniform(0.0, 1e-6, seed)
    lo, hi = BFGS_NOISE.get(dataset, (0.0, 2e-6))
    return NoiseChannel.uniform(lo, hi, seed)


def _inapplicable(kind, exc, noise):
    log.info("%s not applicable: %s", kind, exc)
    return ResultRow(kind, "N/A", None, None, None, f"inapplicable: {exc}", {}, noise)


def run_one(kind, cfg, problem, shards, summary, noise=None, noise_mode=False):
    noise = noise or NoiseChannel.none()
    noise_label = str(noise)
    try:
        prm = solver_params(kind, cfg, summary, shards)
        solver = make_solver(kind, **prm)
    except (SolverInapplicableError, RankDeficientError) as exc:
        return _inapplicable(kind, exc, noise_label)
    if noise_mode and noise.active:
        stop = StopCriteria(max_iters=cfg.iteration_cap(kind, True),
                            stall_window=cfg.stall_window, stall_tol=cfg.stall_tol)
    else:
        stop = StopCriteria(max_iters=cfg.iteration_cap(kind), rel_err_eps=cfg.tol)
    engine = RoundEngine(shards, noise=noise, workers=cfg.workers)
    t0 = time.perf_counter()
    status = "ok"
    try:
        rec = run_until(solver, engine, stop, x_star=problem.x_star)
    except (SolverInapplicableError, RankDeficientError) as exc:
        return _inapplicable(kind, exc, noise_label)
    except DivergenceError as exc:
        rec, status = exc.record, "unbounded"
    except (SingularMatrixError, LineSearchError) as exc:
        log.info("%s stopped: %s", kind, exc)
        rec, status = None, "unbounded"
    finally:
        engine.close()
    wall = time.perf_counter() - t0
    if rec is None:
        return ResultRow(kind, status, None, None, float("inf"), status, prm, noise_label, wall)
    if status == "ok" and rec.stop_reason == "max_iters":
        status = "max_iters"
    its = analysis.iterations_to_tolerance(rec, cfg.tol)
    asym = None
    if noise_mode:
        asym = float("inf") if status == "unbounded" else analysis.asymptotic_error(
            rec, cfg.stall_window, cfg.stall_tol)[0]
    return ResultRow(kind, status, its, float(rec.rel_error[-1]), asym, rec.stop_reason,
                     prm, noise_label, wall, rec)


def _fmt(v):
    if v is None:
        return "N/A"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_trace(path, rec):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "grad_norm", "rel_error"])
        for t, (g, r) in enumerate(zip(rec.grad_norm, rec.rel_error)):
            w.writerow([t, format(float(g), ".17g"), format(float(r), ".17g")])

SUMMARY_HEADER = ["solver", "status", "iterations_to_tol", "final_rel_error",
                  "asymptotic_error", "stop_reason", "noise", "params"]


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            prm = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(r.params.items()))
            w.writerow([r.solver, r.status, _fmt(r.iterations), _fmt(r.final_rel_error),
                        _fmt(r.asymptotic_error), r.stop_reason, r.noise, prm])


def write_outputs(out, rows):
    """Trace and summary CSVs plus a separate timing file (kept out of the CSVs
    so that repeated runs give byte-identical CSV output)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for r in rows:
        if r.record is not None and r.record.rel_error is not None:
            write_trace(out / f"trace_{r.solver}.csv", r.record)
    write_summary(out / "summary.csv", rows)
    (out / "timing.json").write_text(
        json.dumps({r.solver: r.wall_time for r in rows}, indent=2) + "\n")


def prepare(cfg):
    problem = build_problem(cfg)
    shards = partition(problem, cfg.agents)
    summary = spectral_summary(gram(problem.A))
    return problem, shards, summary


def run_compare(cfg):
    problem, shards, summary = prepare(cfg)
    rows = []
    for kind in cfg.solvers:
        noise = NoiseChannel.parse(cfg.noise) if cfg.noise else None
        rows.append(run_one(kind, cfg, problem, shards, summary, noise))
    if cfg.out:
        write_outputs(cfg.out, rows)
    return rows


def run_noise(cfg):
    problem, shards, summary = prepare(cfg)
    rows = []
    for kind in cfg.solvers:
        if cfg.noise:
            noise = NoiseChannel.parse(cfg.noise)
        else:
            noise = default_noise(kind, cfg.name, cfg.seed)
        rows.append(run_one(kind, cfg, problem, shards, summary, noise, noise_mode=True))
    if cfg.out:
        write_outputs(cfg.out, rows)
    return rows


def format_table(rows, noise_mode=False):
    head = f"{'solver':<6} {'status':<10} {'iters':>8} {'final rel err':>14}"
    if noise_mode:
        head += f" {'asym error':>12}"
    head += f" {'time[s]':>8}  params"
    lines = [head]
    for r in rows:
        its = "N/A" if r.iterations is None else str(r.iterations)
        fre = "N/A" if r.final_rel_error is None else f"{r.final_rel_error:.3e}"
        line = f"{r.solver:<6} {r.status:<10} {its:>8} {fre:>14}"
        if noise_mode:
            ae = "N/A" if r.asymptotic_error is None else f"{r.asymptotic_error:.3e}"
            line += f" {ae:>12}"
        prm = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in r.params.items())
        lines.append(line + f" {r.wall_time:>8.2f}  {prm}")
    return "\n".join(lines)
