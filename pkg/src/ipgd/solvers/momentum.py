"""Plain gradient descent, Nesterov's accelerated method and the heavy-ball method.

All three need only the aggregate gradient each round; they differ in the
server update.
"""
from dataclasses import dataclass, replace

import numpy as np

from .base import Solver, initial_x


@dataclass(frozen=True)
class GdState:
    x: np.ndarray


@dataclass(frozen=True)
class MomentumState:
    x: np.ndarray
    aux: np.ndarray
    delta: float
    eta: float


def gd_step(x, sum_g, delta):
    return x - delta * sum_g


def nag_step(state, sum_g):
    """``y+ = x - delta g``; ``x+ = (1 + eta) y+ - eta y``."""
    y_next = state.x - state.delta * sum_g
    x_next = (1.0 + state.eta) * y_next - state.eta * state.aux
    return replace(state, x=x_next, aux=y_next)


def hbm_step(state, sum_g):
    """``w+ = eta w + g``; ``x+ = x - delta w+``."""
    w_next = state.eta * state.aux + sum_g
    return replace(state, x=state.x - state.delta * w_next, aux=w_next)


class GD(Solver):
    name = "gd"

    def __init__(self, delta):
        self.delta = float(delta)

    def params(self):
        return {"delta": self.delta}

    def init(self, engine, x0=None):
        return GdState(initial_x(engine, x0))

    def step(self, state, engine):
        return GdState(gd_step(state.x, engine.gradient(state.x), self.delta))


class NAG(Solver):
    """Memory vector ``y`` starts equal to ``x(0)``."""

    name = "nag"
    noise_fields = ("x", "aux")

    def __init__(self, delta, eta):
        self.delta, self.eta = float(delta), float(eta)

    def params(self):
        return {"delta": self.delta, "eta": self.eta}

    def init(self, engine, x0=None):
        x = initial_x(engine, x0)
        return MomentumState(x, x.copy(), self.delta, self.eta)

    def step(self, state, engine):
        return nag_step(state, engine.gradient(state.x))


class HBM(Solver):
    """Momentum vector ``w`` starts at zero."""

    name = "hbm"
    noise_fields = ("x", "aux")

    def __init__(self, delta, eta):
        self.delta, self.eta = float(delta), float(eta)

    def params(self):
        return {"delta": self.delta, "eta": self.eta}

    def init(self, engine, x0=None):
        return MomentumState(initial_x(engine, x0), np.zeros(engine.d), self.delta, self.eta)

    def step(self, state, engine):
        return hbm_step(state, engine.gradient(state.x))
