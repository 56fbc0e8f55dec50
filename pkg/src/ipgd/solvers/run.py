"""Run loop with per-iteration traces and stop criteria."""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DivergenceError


@dataclass
class StopCriteria:
    """Any criterion that fires stops the run.

    ``stall_window``/``stall_tol`` stop once the absolute error has changed by
    at most ``stall_tol`` times its current value over the last
    ``stall_window`` iterations (used for noisy runs).
    """

    max_iters: Optional[int] = None
    grad_eps: Optional[float] = None
    rel_err_eps: Optional[float] = None
    stall_window: Optional[int] = None
    stall_tol: float = 1e-3

    def __post_init__(self):
        if self.max_iters is None and self.grad_eps is None and self.rel_err_eps is None:
            raise ValueError("at least one stop criterion must be set")


@dataclass
class RunRecord:
    solver: str
    params: dict
    grad_norm: np.ndarray
    rel_error: Optional[np.ndarray]
    abs_error: Optional[np.ndarray]
    k_dist: Optional[np.ndarray]
    stop_reason: str
    iterations: int
    x_final: np.ndarray
    meta: dict = field(default_factory=dict)


def _finite(state, fields):
    for name in fields:
        v = getattr(state, name)
        if isinstance(v, list):
            if not all(np.all(np.isfinite(u)) for u in v):
                return False
        elif not np.all(np.isfinite(v)):
            return False
    return True


class _Trace:
    def __init__(self, x_star, k_ref):
        self.x_star = None if x_star is None else np.asarray(x_star, dtype=np.float64)
        self.x_norm = None if x_star is None else float(np.linalg.norm(self.x_star))
        self.k_ref = k_ref
        self.g, self.rel, self.abs, self.kd = [], [], [], []

    def record(self, engine, state, x):
        gn = float(np.linalg.norm(engine.gradient(x)))
        self.g.append(gn)
        if self.x_star is not None:
            e = float(np.linalg.norm(x - self.x_star))
            self.abs.append(e)
            self.rel.append(e / self.x_norm if self.x_norm > 0 else e)
        if self.k_ref is not None:
            self.kd.append(float(np.linalg.norm(state.K - self.k_ref)))
        return gn

    def finish(self, solver, reason, t, x, meta):
        arr = lambda v: np.asarray(v, dtype=np.float64)
        return RunRecord(
            solver=solver.name, params=solver.params(), grad_norm=arr(self.g),
            rel_error=arr(self.rel) if self.x_star is not None else None,
            abs_error=arr(self.abs) if self.x_star is not None else None,
            k_dist=arr(self.kd) if self.k_ref is not None else None,
            stop_reason=reason, iterations=t, x_final=np.array(x, copy=True), meta=meta)


def run_until(solver, engine, stop, x_star=None, x0=None, k_ref=None, state=None):
    """Iterate ``solver`` on ``engine`` until a stop criterion fires.

    Traces are recorded at t = 0 and after every round.  ``k_ref`` enables
    the ``||K(t) - K_ref||_F`` trace (IPG only).

    Raises
    ------
    DivergenceError
        When an iterate becomes non-finite; the partial record is attached as
        ``exc.record``.
    """
    if stop.rel_err_eps is not None and x_star is None:
        raise ValueError("rel_err_eps needs x_star")
    if stop.stall_window is not None and x_star is None:
        raise ValueError("stall detection needs x_star")
    if state is None:
        state = solver.init(engine, x0)
    trace = _Trace(x_star, k_ref)
    meta = {"backend_rounds_start": engine.round_counter}
    t = 0
    x = solver.estimate(state)
    while True:
        gn = trace.record(engine, state, x)
        if not math.isfinite(gn):
            rec = trace.finish(solver, "diverged", t, x, meta)
            raise _diverged(solver, t, rec)
        if stop.rel_err_eps is not None and trace.rel[-1] <= stop.rel_err_eps:
            reason = "rel_err"
            break
        if stop.grad_eps is not None and gn <= stop.grad_eps:
            reason = "grad"
            break
        w = stop.stall_window
        if w is not None and len(trace.abs) > w:
            tail = trace.abs[-(w + 1):]
            if max(tail) - min(tail) <= stop.stall_tol * trace.abs[-1]:
                reason = "stalled"
                break
        if stop.max_iters is not None and t >= stop.max_iters:
            reason = "max_iters"
            break
        try:
            state = engine.run_round(state, solver)
        except FloatingPointError:
            rec = trace.finish(solver, "diverged", t, x, meta)
            raise _diverged(solver, t + 1, rec) from None
        t += 1
        x = solver.estimate(state)
        if not _finite(state, solver.noise_fields):
            rec = trace.finish(solver, "diverged", t - 1, x, meta)
            raise _diverged(solver, t, rec)
    meta["rounds"] = engine.round_counter - meta.pop("backend_rounds_start")
    rec = trace.finish(solver, reason, t, x, meta)
    rec.meta["state"] = state
    return rec


def _diverged(solver, t, record):
    exc = DivergenceError(f"{solver.name} produced a non-finite iterate at t={t}", iteration=t)
    exc.record = record
    return exc
