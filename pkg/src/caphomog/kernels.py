"""Backend selection for the element kernels.

The compiled extension is used when it imports; setting the environment
variable ``CAPHOMOG_PURE_PYTHON=1`` forces the numpy fallback. Both backends
produce the same numbers up to rounding of the element arithmetic.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("CAPHOMOG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

tet_gradients = _kernels_py.tet_gradients


def set_threads(n: int | None) -> None:
    """Set the OpenMP thread count of the compiled kernels (no-op for numpy)."""
    if n is not None and n > 0 and hasattr(_impl, "set_num_threads"):
        _impl.set_num_threads(int(n))


def tet_stiffness(nodes: np.ndarray, tets: np.ndarray, D: np.ndarray) -> np.ndarray:
    return _impl.tet_stiffness(np.ascontiguousarray(nodes, dtype=np.float64),
                               np.ascontiguousarray(tets, dtype=np.int64),
                               np.ascontiguousarray(D, dtype=np.float64))


def tri_lb_mass(nodes: np.ndarray, tri: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return _impl.tri_lb_mass(np.ascontiguousarray(nodes, dtype=np.float64),
                             np.ascontiguousarray(tri, dtype=np.int64))


def csr_matvec(indptr: np.ndarray, indices: np.ndarray, data: np.ndarray, x: np.ndarray) -> np.ndarray:
    return _impl.csr_matvec(np.ascontiguousarray(indptr, dtype=np.int32),
                            np.ascontiguousarray(indices, dtype=np.int32),
                            np.ascontiguousarray(data, dtype=np.float64),
                            np.ascontiguousarray(x, dtype=np.float64))
