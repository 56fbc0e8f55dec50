"""Synchronous server/agent rounds and the system-noise channels.

A round is: broadcast, every agent computes a reply from its own shard,
replies are summed in ascending ``agent_id`` order (left fold), the server
updates its state, and finally the noise channel perturbs each iterated
variable the solver names.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import DimensionError


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------


@dataclass
class NoiseChannel:
    """Per-entry perturbation applied to iterated variables.

    ``kind`` is ``"none"``, ``"round"`` (``digits`` decimals, ties away from
    zero) or ``"uniform"`` (additive, drawn from ``[lo, hi)``).
    """

    kind: str = "none"
    digits: int = 4
    lo: float = 0.0
    hi: float = 0.0
    seed: int = 0
    _rng: Optional[np.random.Generator] = field(default=None, init=False, repr=False,
                                                compare=False)

    def __post_init__(self):
        if self.kind not in ("none", "round", "uniform"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "uniform":
            if self.lo > self.hi:
                raise ValueError(f"noise range is empty: lo={self.lo} > hi={self.hi}")
            self.reset()

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def round_decimals(cls, digits):
        return cls("round", digits=int(digits))

    @classmethod
    def uniform(cls, lo, hi, seed=0):
        return cls("uniform", lo=float(lo), hi=float(hi), seed=int(seed))

    @classmethod
    def parse(cls, spec):
        """``none`` | ``round:K`` | ``uniform:LO,HI[,SEED]``."""
        spec = (spec or "none").strip()
        if spec == "none":
            return cls.none()
        kind, _, rest = spec.partition(":")
        if kind == "round":
            return cls.round_decimals(int(rest))
        if kind == "uniform":
            parts = [p for p in rest.split(",") if p]
            if len(parts) not in (2, 3):
                raise ValueError(f"bad uniform noise spec {spec!r}")
            seed = int(parts[2]) if len(parts) == 3 else 0
            return cls.uniform(float(parts[0]), float(parts[1]), seed)
        raise ValueError(f"bad noise spec {spec!r}")

    def __str__(self):
        if self.kind == "round":
            return f"round:{self.digits}"
        if self.kind == "uniform":
            return f"uniform:{self.lo!r},{self.hi!r},{self.seed}"
        return "none"

    def reset(self):
        """Restart the random stream from ``seed``."""
        self._rng = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def active(self):
        return self.kind != "none"

    def entry_bound(self):
        """Largest possible per-entry perturbation."""
        if self.kind == "round":
            return 0.5 * 10.0 ** (-self.digits)
        if self.kind == "uniform":
            return max(abs(self.lo), abs(self.hi))
        return 0.0

    def norm_bound(self, d):
        """Bound ``w`` on the norm of the perturbation of a d-vector."""
        return self.entry_bound() * math.sqrt(d)

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        if self.kind == "none":
            return v
        if self.kind == "round":
            return kernels.round_half_away(v, self.digits)
        return v + self._rng.uniform(self.lo, self.hi, size=v.shape)


def apply_noise(channel, v):
    return channel.apply(v)


# ---------------------------------------------------------------------------
# round engine
# ---------------------------------------------------------------------------


def ordered_sum(replies):
    """Left fold over replies in list order; tuples are summed componentwise."""
    if not replies:
        raise ValueError("no replies to reduce")
    first = replies[0]
    if isinstance(first, tuple):
        acc = [np.array(c, dtype=np.float64, copy=True) for c in first]
        for r in replies[1:]:
            for k, c in enumerate(r):
                acc[k] += c
        return tuple(acc)
    acc = np.array(first, dtype=np.float64, copy=True)
    for r in replies[1:]:
        acc += r
    return acc


def _local_gradient(shard, x):
    return shard.gradient(x)


def _local_cost(shard, x):
    return shard.cost(x)


class RoundEngine:
    """Drives solver rounds over a fixed list of shards.

    Parameters
    ----------
    shards : list of AgentShard or QuadraticShard
        Sorted internally by ``agent_id``.
    noise : NoiseChannel, optional
    workers : int
        Agent computations run on a thread pool when ``workers > 1``.  The
        reduction order does not depend on it.
    """

    def __init__(self, shards, noise=None, workers=1):
        if not shards:
            raise ValueError("engine needs at least one shard")
        self.shards = sorted(shards, key=lambda s: s.agent_id)
        dims = {s.d for s in self.shards}
        if len(dims) != 1:
            raise DimensionError(f"shards disagree on d: {sorted(dims)}")
        self.d = dims.pop()
        self.m = len(self.shards)
        self.noise = noise if noise is not None else NoiseChannel.none()
        self.workers = int(workers)
        self.round_counter = 0
        self._last_grad = None  # (x bytes, gradient) of the most recent query
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def gather(self, fn, *payload, local=None):
        """Call ``fn(shard, *payload)`` for every agent; replies in agent order.

        ``local``, when given, is a list aligned with the agents whose entry
        is passed as the second argument: ``fn(shard, local[i], *payload)``.
        """
        if local is None:
            calls = [(s,) + payload for s in self.shards]
        else:
            if len(local) != self.m:
                raise DimensionError(f"expected {self.m} local states, got {len(local)}")
            calls = [(s, loc) + payload for s, loc in zip(self.shards, local)]
        if self._pool is None:
            replies = [fn(*args) for args in calls]
        else:
            replies = list(self._pool.map(lambda args: fn(*args), calls))
        if len(replies) != self.m or any(r is None for r in replies):
            raise RuntimeError("missing agent reply")
        return replies

    def reduce(self, replies):
        return ordered_sum(replies)

    def gradient(self, x):
        """Aggregate gradient at ``x`` (one broadcast + ordered reduction).

        A repeat query at the same point, as made by the trace recorder and
        the following step, reuses the previous reduction.
        """
        self._check_vec(x)
        key = np.asarray(x, dtype=np.float64).tobytes()
        if self._last_grad is not None and self._last_grad[0] == key:
            return self._last_grad[1].copy()
        g = self.reduce(self.gather(_local_gradient, x))
        self._last_grad = (key, g.copy())
        return g

    def cost(self, x):
        self._check_vec(x)
        total = 0.0
        for c in self.gather(_local_cost, x):
            total += c
        return total

    def _check_vec(self, x):
        if np.shape(x) != (self.d,):
            raise DimensionError(f"expected a {self.d}-vector, got shape {np.shape(x)}")

    def perturb(self, state, fields):
        """Apply the noise channel to ``fields`` of ``state`` in listed order."""
        if not self.noise.active:
            return state
        changes = {}
        for name in fields:
            val = getattr(state, name)
            if isinstance(val, list):
                changes[name] = [self.noise.apply(v) for v in val]
            elif np.ndim(val) == 2:
                # column by column, matching the k_j bookkeeping
                changes[name] = np.ascontiguousarray(self.noise.apply(val.T).T)
            else:
                changes[name] = self.noise.apply(val)
        return replace(state, **changes)

    def run_round(self, state, solver):
        """One synchronous round of ``solver`` followed by noise injection."""
        new = solver.step(state, self)
        new = self.perturb(new, solver.noise_fields)
        self.round_counter += 1
        return new
