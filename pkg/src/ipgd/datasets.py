"""Benchmark matrices from the SuiteSparse collection.

Files are not shipped.  ``fetch`` downloads the Matrix Market archives and
checks their shapes; ``local_path`` finds a local copy.  ``gr_30_30`` is a
generated grid operator, so when no file is present it is rebuilt with
:func:`ipgd.problem.grid_stencil_matrix`.
"""
import io
import logging
import os
import tarfile
import urllib.request
from pathlib import Path

from .problem import grid_stencil_matrix, load_matrix_market, ones_problem

log = logging.getLogger(__name__)

SUITESPARSE_URL = "https://sparse.tamu.edu/MM/{group}/{name}.tar.gz"

# name -> (group, rows, cols)
KNOWN = {
    "ash608": ("HB", 608, 188),
    "bcsstm07": ("HB", 420, 420),
    "gr_30_30": ("HB", 900, 900),
    "qc324": ("Bai", 324, 324),
}

GENERATED = {"gr_30_30": lambda: grid_stencil_matrix(30)}


def data_dir():
    return Path(os.environ.get("IPGD_DATA_DIR", Path.home() / ".cache" / "ipgd"))


def fetch(name, dest=None, timeout=60):
    """Download ``name`` into ``dest`` (default :func:`data_dir`) and verify it."""
    if name not in KNOWN:
        raise KeyError(f"unknown dataset {name!r}; known: {sorted(KNOWN)}")
    group, rows, cols = KNOWN[name]
    dest = Path(dest) if dest is not None else data_dir()
    dest.mkdir(parents=True, exist_ok=True)
    target = dest / f"{name}.mtx"
    url = SUITESPARSE_URL.format(group=group, name=name)
    log.info("downloading %s", url)
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        payload = resp.read()
    with tarfile.open(fileobj=io.BytesIO(payload), mode="r:gz") as tar:
        member = next(m for m in tar.getmembers() if m.name.endswith(f"/{name}.mtx"))
        target.write_bytes(tar.extractfile(member).read())
    A = load_matrix_market(target)
    if A.shape != (rows, cols):
        target.unlink()
        raise ValueError(f"{name}: expected {rows}x{cols}, got {A.shape}")
    return target


def local_path(name, search=None):
    for d in ([Path(search)] if search else []) + [data_dir()]:
        p = d / f"{name}.mtx"
        if p.exists():
            return p
    return None


def load(name_or_path, search=None):
    """Dense matrix for a dataset name or an ``.mtx`` path."""
    p = Path(name_or_path)
    if p.suffix == ".mtx" or p.exists():
        return load_matrix_market(p)
    name = str(name_or_path)
    found = local_path(name, search)
    if found is not None:
        return load_matrix_market(found)
    if name in GENERATED:
        log.info("%s.mtx not found; generating it", name)
        return GENERATED[name]()
    raise FileNotFoundError(
        f"dataset {name!r} not found in {data_dir()}; run `ipgd fetch {name}` first")


def available(name, search=None):
    return name in GENERATED or local_path(name, search) is not None


def problem(name_or_path, search=None):
    """Least-squares problem with all-ones solution on a named dataset."""
    A = load(name_or_path, search)
    return ones_problem(A, name=Path(str(name_or_path)).stem)
