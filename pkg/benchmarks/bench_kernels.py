"""Compare the compiled and numpy element kernels on cell meshes.

Usage: python3 benchmarks/bench_kernels.py [--refine 1 2 3] [--repeat 3]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from caphomog import _kernels_py
from caphomog.assembly import assemble_bulk
from caphomog.material import ElasticTensor
from caphomog.mesh import build_cell_mesh

try:
    from caphomog import _kernels
except ImportError:
    _kernels = None


def _time(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench(refine: int, repeat: int) -> list[tuple]:
    mesh = build_cell_mesh(0.2, refine)
    D = ElasticTensor.from_isotropic(1.0, 1.0).kelvin()
    X = np.ascontiguousarray(mesh.nodes)
    T = np.ascontiguousarray(mesh.tets, dtype=np.int64)
    tri = np.ascontiguousarray(mesh.cavity.tri, dtype=np.int64)
    K = assemble_bulk(mesh, ElasticTensor.from_isotropic(1.0, 1.0)).full
    ip, ix, dat = K.indptr.astype(np.int32), K.indices.astype(np.int32), K.data
    x = np.random.default_rng(0).normal(size=K.shape[0])
    cases = [
        ("tet_stiffness", lambda m: m.tet_stiffness(X, T, D)),
        ("tri_lb_mass", lambda m: m.tri_lb_mass(X, tri)),
        ("csr_matvec", lambda m: m.csr_matvec(ip, ix, dat, x)),
    ]
    rows = []
    for name, call in cases:
        t_py = _time(lambda: call(_kernels_py), repeat)
        ref = call(_kernels_py)
        if _kernels is None:
            rows.append((refine, len(T), name, t_py, float("nan"), float("nan"), float("nan")))
            continue
        t_cy = _time(lambda: call(_kernels), repeat)
        out = call(_kernels)
        ref_t = ref if isinstance(ref, tuple) else (ref,)
        out_t = out if isinstance(out, tuple) else (out,)
        err = max(float(np.abs(o - r).max() / np.abs(r).max()) for o, r in zip(out_t, ref_t))
        rows.append((refine, len(T), name, t_py, t_cy, t_py / t_cy, err))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--refine", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'refine':>6} {'tets':>8} {'kernel':>14} {'python s':>10} {'cython s':>10} {'speedup':>8} {'rel diff':>9}")
    for r in args.refine:
        for row in bench(r, args.repeat):
            print("{:>6} {:>8} {:>14} {:>10.4f} {:>10.4f} {:>8.1f} {:>9.1e}".format(*row))


if __name__ == "__main__":
    main()
