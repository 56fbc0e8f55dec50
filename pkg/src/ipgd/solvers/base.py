import numpy as np


class Solver:
    """Server-side logic of one algorithm.

    Subclasses implement ``init`` (build the state at t = 0) and ``step``
    (one synchronous round through a :class:`~ipgd.protocol.RoundEngine`).
    ``noise_fields`` lists the state attributes the noise channel perturbs
    after each round.
    """

    name = "solver"
    noise_fields = ("x",)

    def init(self, engine, x0=None):
        raise NotImplementedError

    def step(self, state, engine):
        raise NotImplementedError

    def estimate(self, state):
        return state.x

    def params(self):
        return {}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


def initial_x(engine, x0):
    if x0 is None:
        return np.zeros(engine.d)
    x0 = np.array(x0, dtype=np.float64, copy=True)
    engine._check_vec(x0)
    return x0
