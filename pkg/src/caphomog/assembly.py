"""P1 finite-element assembly of the linearized bulk/surface/fluid energy.

Unknowns are nodal displacements U with dof 3*i + c for node i, component c.
The discrete energy of a field U is

    1/2 U.K U + 1/2 U.K_LB U - 1/2 U.M_neg U + c (g.U)^2 - f.U

where phi_h = U_i . e_r(i) on cavity nodes carries the surface terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import InconsistentConstraints
from .material import CapillaryParams, ElasticTensor, ball_volume
from .mesh import SurfacePatch


@dataclass
class SparseSym:
    """Symmetric sparse matrix stored as its upper triangle (CSR)."""

    upper: sp.csr_matrix
    _full: sp.csr_matrix | None = field(default=None, repr=False)

    @classmethod
    def from_triplets(cls, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, n: int) -> "SparseSym":
        keep = rows <= cols
        U = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
        U.sum_duplicates()
        U.sort_indices()
        return cls(U)

    @classmethod
    def from_matrix(cls, M: sp.spmatrix) -> "SparseSym":
        U = sp.triu(M, format="csr")
        U.sum_duplicates()
        U.sort_indices()
        return cls(U)

    @property
    def shape(self) -> tuple[int, int]:
        return self.upper.shape

    @property
    def full(self) -> sp.csr_matrix:
        if self._full is None:
            F = (self.upper + sp.triu(self.upper, k=1, format="csr").T).tocsr()
            F.sort_indices()
            self._full = F
        return self._full

    def diagonal(self) -> np.ndarray:
        return self.upper.diagonal()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        F = self.full
        return kernels.csr_matvec(F.indptr, F.indices, F.data, x)

    def quad(self, x: np.ndarray) -> float:
        return float(x @ self.matvec(x))

    def __add__(self, other: "SparseSym") -> "SparseSym":
        return SparseSym.from_matrix(self.upper + other.upper)

    def scaled(self, s: float) -> "SparseSym":
        return SparseSym(self.upper * s)

    @property
    def nnz(self) -> int:
        return self.upper.nnz


@dataclass(frozen=True)
class RankOneTerm:
    """Energy contribution c (g.U)^2, never densified."""

    g: np.ndarray
    c: float

    def energy(self, U: np.ndarray) -> float:
        return self.c * float(self.g @ U) ** 2

    def matvec(self, U: np.ndarray) -> np.ndarray:
        return 2 * self.c * float(self.g @ U) * self.g


def _element_dofs(conn: np.ndarray) -> np.ndarray:
    return (3 * conn[:, :, None] + np.arange(3)).reshape(len(conn), -1)


def _scatter(dofs: np.ndarray, Ke: np.ndarray, n: int) -> SparseSym:
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    return SparseSym.from_triplets(rows, cols, Ke.reshape(-1), n)


def assemble_bulk(mesh, A: ElasticTensor) -> SparseSym:
    """Stiffness K with U.K U = int A E(u_h) . E(u_h) dx."""
    Ke = kernels.tet_stiffness(mesh.nodes, mesh.tets, np.ascontiguousarray(A.kelvin()))
    return _scatter(_element_dofs(mesh.tets), Ke, 3 * mesh.n_nodes)


def _radial_weights(patch: SurfacePatch, n_nodes: int) -> np.ndarray:
    er = np.zeros((n_nodes, 3))
    er[patch.node_ids] = patch.e_r
    return er


def _surface_scalar(patch: SurfacePatch, n_nodes: int, ke: np.ndarray, coef: float) -> SparseSym:
    """Lift a scalar surface matrix to displacement dofs through phi_i = U_i . e_r(i)."""
    er = _radial_weights(patch, n_nodes)
    tri = patch.tri
    ee = er[tri]  # (T, 3, 3): node-in-tri, component
    Ke = coef * np.einsum("tab,tai,tbj->taibj", ke, ee, ee).reshape(len(tri), 9, 9)
    return _scatter(_element_dofs(tri), Ke, 3 * n_nodes)


def surface_matrices(nodes: np.ndarray, patch: SurfacePatch) -> tuple[np.ndarray, np.ndarray]:
    return kernels.tri_lb_mass(nodes, patch.tri)


def assemble_surface(mesh, params: CapillaryParams) -> tuple[SparseSym, SparseSym]:
    """(K_LB, M_neg) with U.K_LB U = gamma int|grad_tau phi_h|^2 and
    U.M_neg U = (2 gamma/a^2) int phi_h^2 (exact radius a in the coefficient)."""
    k, m = surface_matrices(mesh.nodes, mesh.cavity)
    g, a = params.gamma, params.a
    K_LB = _surface_scalar(mesh.cavity, mesh.n_nodes, k, g)
    M_neg = _surface_scalar(mesh.cavity, mesh.n_nodes, m, 2 * g / a**2)
    return K_LB, M_neg


def radial_moment_vector(mesh) -> np.ndarray:
    """g with g.U = int phi_h dH on the faceted cavity."""
    patch = mesh.cavity
    g = np.zeros((mesh.n_nodes, 3))
    w = np.zeros(mesh.n_nodes)
    np.add.at(w, patch.tri.ravel(), np.repeat(patch.areas / 3.0, 3))
    g[patch.node_ids] = w[patch.node_ids, None] * patch.e_r
    return g.ravel()


def assemble_nonlocal(mesh, params: CapillaryParams, eps: float = 1.0) -> RankOneTerm:
    """Fluid term lambda_fl/(2 eps^3 |B_a|) (int u.e_r)^2."""
    c = params.lambda_fl / (2 * eps**3 * ball_volume(params.a))
    return RankOneTerm(radial_moment_vector(mesh), c)


def assemble_load(mesh, f: np.ndarray | Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Consistent P1 load vector of int f . v dx (exact for affine f)."""
    vol = mesh.volumes
    n = mesh.n_nodes
    if callable(f):
        fn = np.asarray(f(mesh.nodes), dtype=float).reshape(n, 3)
        fe = fn[mesh.tets]  # (T, 4, 3)
        # int phi_a phi_b = vol/20 (1 + delta_ab)
        loc = (fe.sum(axis=1)[:, None, :] + fe) * (vol / 20.0)[:, None, None]
    else:
        fc = np.broadcast_to(np.asarray(f, dtype=float), (3,))
        loc = np.broadcast_to(fc, (len(vol), 4, 3)) * (vol / 4.0)[:, None, None]
    out = np.zeros((n, 3))
    for c in range(3):
        out[:, c] = np.bincount(mesh.tets.ravel(), weights=loc[:, :, c].ravel(), minlength=n)
    return out.ravel()


def scalar_laplacian(mesh) -> sp.csr_matrix:
    """P1 stiffness of the scalar Laplacian (used for harmonic lifts)."""
    g, vol = kernels.tet_gradients(mesh.nodes, mesh.tets)
    Ke = np.einsum("n,nai,nbi->nab", vol, g, g)
    rows = np.repeat(mesh.tets, 4, axis=1).ravel()
    cols = np.tile(mesh.tets, (1, 4)).ravel()
    return sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(mesh.n_nodes,) * 2).tocsr()


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class ConstraintSet:
    """Dirichlet data, periodic orbit masters and an optional mean-zero condition.

    ``master[i] == i`` marks independent nodes; other nodes copy their master.
    """

    n_nodes: int
    dirichlet_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dirichlet_values: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    master: np.ndarray | None = None
    mean_weights: np.ndarray | None = None

    def validate(self) -> None:
        dn = np.asarray(self.dirichlet_nodes)
        dv = np.asarray(self.dirichlet_values).reshape(-1, 3)
        if len(dn) != len(dv):
            raise InconsistentConstraints("Dirichlet node and value counts differ")
        if len(dn):
            if dn.min() < 0 or dn.max() >= self.n_nodes:
                raise InconsistentConstraints("Dirichlet node index out of range")
            order = np.argsort(dn, kind="stable")
            sdn, sdv = dn[order], dv[order]
            same = sdn[1:] == sdn[:-1]
            if np.any(same & np.any(sdv[1:] != sdv[:-1], axis=1)):
                raise InconsistentConstraints("node carries two different Dirichlet values")
        if self.master is not None:
            m = np.asarray(self.master)
            if len(m) != self.n_nodes or np.any(m[m] != m):
                raise InconsistentConstraints("periodic master map is not a projection")
            if len(dn) and np.any(m[dn] != dn):
                raise InconsistentConstraints("node is both Dirichlet and a periodic slave")
        if self.mean_weights is not None and len(self.mean_weights) != self.n_nodes:
            raise InconsistentConstraints("mean-zero weights have the wrong length")


@dataclass
class ReducedSystem:
    """Operator restricted to independent dofs: U = P x + lift."""

    P: sp.csr_matrix
    K: SparseSym
    rank_one: list[RankOneTerm]
    dirichlet_dofs: np.ndarray
    mean_rows: np.ndarray | None
    _mean_gram: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.P.shape[1]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.K.matvec(x)
        for r in self.rank_one:
            y += r.matvec(x)
        return y

    def diagonal(self) -> np.ndarray:
        d = self.K.diagonal().copy()
        for r in self.rank_one:
            d += 2 * r.c * r.g**2
        return d

    def project(self, v: np.ndarray) -> np.ndarray:
        """Euclidean projection onto {mean_rows . x = 0}."""
        if self.mean_rows is None:
            return v
        W = self.mean_rows
        if self._mean_gram is None:
            self._mean_gram = W @ W.T
        return v - W.T @ np.linalg.solve(self._mean_gram, W @ v)

    def expand(self, x: np.ndarray, lift: np.ndarray | None = None) -> np.ndarray:
        U = self.P @ x
        return U if lift is None else U + lift


def prolongation(n_nodes: int, master: np.ndarray | None, dirichlet_nodes: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray]:
    m = np.arange(n_nodes) if master is None else np.asarray(master)
    fixed = np.zeros(n_nodes, dtype=bool)
    fixed[np.asarray(dirichlet_nodes, dtype=np.int64)] = True
    indep = np.nonzero((m == np.arange(n_nodes)) & ~fixed)[0]
    col_of = -np.ones(n_nodes, dtype=np.int64)
    col_of[indep] = np.arange(len(indep))
    rows_n = np.nonzero(~fixed[m])[0]
    cols_n = col_of[m[rows_n]]
    rows = (3 * rows_n[:, None] + np.arange(3)).ravel()
    cols = (3 * cols_n[:, None] + np.arange(3)).ravel()
    P = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(3 * n_nodes, 3 * len(indep)))
    ddofs = (3 * np.nonzero(fixed)[0][:, None] + np.arange(3)).ravel()
    return P, ddofs


def dirichlet_lift(cons: ConstraintSet) -> np.ndarray:
    lift = np.zeros((cons.n_nodes, 3))
    lift[np.asarray(cons.dirichlet_nodes, dtype=np.int64)] = np.asarray(cons.dirichlet_values).reshape(-1, 3)
    return lift.ravel()


def apply_constraints(K: SparseSym, rank_one: list[RankOneTerm], cons: ConstraintSet) -> ReducedSystem:
    """Eliminate periodic slaves and Dirichlet dofs; record the mean-zero rows."""
    cons.validate()
    P, ddofs = prolongation(cons.n_nodes, cons.master, cons.dirichlet_nodes)
    Kr = SparseSym.from_matrix(P.T @ K.full @ P)
    r1 = [RankOneTerm(P.T @ r.g, r.c) for r in rank_one]
    mean_rows = None
    if cons.mean_weights is not None:
        w = np.asarray(cons.mean_weights, dtype=float)
        W = np.zeros((3, 3 * cons.n_nodes))
        for c in range(3):
            W[c, c::3] = w
        mean_rows = np.asarray((P.T @ W.T).T)
    return ReducedSystem(P.tocsr(), Kr, r1, ddofs, mean_rows)


def reduced_rhs(system: ReducedSystem, K: SparseSym, rank_one: list[RankOneTerm],
                load: np.ndarray, lift: np.ndarray) -> np.ndarray:
    """P^T (load - H lift)."""
    r = load - K.matvec(lift)
    for t in rank_one:
        r -= t.matvec(lift)
    return system.P.T @ r


def null_space_dim(system: ReducedSystem, tol: float = 1e-9) -> int:
    """Numerical kernel dimension of the reduced operator (dense; small meshes only)."""
    H = system.K.full.toarray()
    for r in system.rank_one:
        H += 2 * r.c * np.outer(r.g, r.g)
    if system.mean_rows is not None:
        Q, _ = np.linalg.qr(system.mean_rows.T, mode="complete")
        Z = Q[:, system.mean_rows.shape[0]:]
        H = Z.T @ H @ Z
    ev = np.linalg.eigvalsh(H)
    return int(np.sum(np.abs(ev) <= tol * max(abs(ev).max(), 1e-300)))


def smallest_eigenvalue(system: ReducedSystem) -> float:
    """Smallest eigenvalue on the constrained subspace (dense; small meshes only)."""
    H = system.K.full.toarray()
    for r in system.rank_one:
        H += 2 * r.c * np.outer(r.g, r.g)
    if system.mean_rows is not None:
        Q, _ = np.linalg.qr(system.mean_rows.T, mode="complete")
        Z = Q[:, system.mean_rows.shape[0]:]
        H = Z.T @ H @ Z
    return float(np.linalg.eigvalsh(H)[0])


def total_area(patch: SurfacePatch) -> float:
    return float(patch.areas.sum())


def sphere_area(a: float) -> float:
    return 4 * math.pi * a**2
