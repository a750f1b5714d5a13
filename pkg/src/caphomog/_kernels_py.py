"""Pure numpy element kernels (fallback for the compiled extension)."""
from __future__ import annotations

import numpy as np

_S = 1.0 / np.sqrt(2.0)


def tet_gradients(nodes: np.ndarray, tets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shape-function gradients (n, 4, 3) and volumes (n,) of P1 tetrahedra."""
    p = nodes[tets]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=1)  # rows are edges
    vol = np.linalg.det(J) / 6.0
    Jinv = np.linalg.inv(J)  # columns give grads of lambda_1..3
    g = np.empty((len(tets), 4, 3))
    g[:, 1:] = np.swapaxes(Jinv, 1, 2)
    g[:, 0] = -g[:, 1:].sum(axis=1)
    return g, vol


def strain_matrix(g: np.ndarray) -> np.ndarray:
    """Kelvin strain-displacement matrices (n, 6, 12) from gradients (n, 4, 3)."""
    n = len(g)
    B = np.zeros((n, 6, 12))
    for a in range(4):
        gx, gy, gz = g[:, a, 0], g[:, a, 1], g[:, a, 2]
        c = 3 * a
        B[:, 0, c] = gx
        B[:, 1, c + 1] = gy
        B[:, 2, c + 2] = gz
        B[:, 3, c + 1] = _S * gz
        B[:, 3, c + 2] = _S * gy
        B[:, 4, c] = _S * gz
        B[:, 4, c + 2] = _S * gx
        B[:, 5, c] = _S * gy
        B[:, 5, c + 1] = _S * gx
    return B


def tet_stiffness(nodes: np.ndarray, tets: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Element matrices vol * B^T D B, shape (n, 12, 12)."""
    g, vol = tet_gradients(nodes, tets)
    B = strain_matrix(g)
    return np.einsum("n,nIa,IJ,nJb->nab", vol, B, D, B)


def tri_lb_mass(nodes: np.ndarray, tri: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P1 Laplace-Beltrami stiffness and consistent mass per flat triangle."""
    p = nodes[tri]
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    nrm = np.cross(e2, -e1)
    area = 0.5 * np.linalg.norm(nrm, axis=1)
    E = np.stack([e0, e1, e2], axis=1)
    k = np.einsum("nai,nbi->nab", E, E) / (4 * area)[:, None, None]
    m = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12.0)[:, None, None]
    return k, m


def csr_matvec(indptr: np.ndarray, indices: np.ndarray, data: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = len(indptr) - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(rows, weights=data * x[indices], minlength=n)
