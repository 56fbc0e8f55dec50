"""Numba switch.

Kernels in :mod:`ipgd.kernels` come in two flavours: an explicit-loop body
compiled with ``numba.njit`` and a vectorised numpy body.  Which one is
exported is decided once, at import time:

* ``IPGD_DISABLE_NUMBA=1`` forces the numpy path;
* a missing numba install falls back to numpy silently.
"""
import logging
import os

_FALSY = ("", "0", "false", "no", "off")

try:
    import numba

    logging.getLogger("numba").setLevel(logging.WARNING)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

NUMBA_DISABLED = os.environ.get("IPGD_DISABLE_NUMBA", "0").strip().lower() not in _FALSY
USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    The loop bodies are always compiled when numba is present so that the
    benchmark can time both paths in one process; the env flag only decides
    which body the public kernels dispatch to.
    """
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    return numba.njit(*args, cache=False, **kwargs)


def backend():
    return "numba" if USE_NUMBA else "numpy"
