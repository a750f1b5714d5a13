"""Constrained linear solves: cell problems, the homogenized tensor and the
single-inclusion problem.

All systems are symmetric and positive definite on their constrained
subspace, so a Jacobi-preconditioned conjugate gradient is used throughout.
A mean-zero condition is imposed by projecting residuals and search
directions inside CG instead of adding a multiplier row.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .assembly import (ConstraintSet, RankOneTerm, ReducedSystem, SparseSym, apply_constraints,
                       assemble_bulk, assemble_load, assemble_nonlocal, assemble_surface,
                       dirichlet_lift, radial_moment_vector, reduced_rhs, scalar_laplacian)
from .errors import OutOfDomain, SolverFault, StabilityFault
from .kernels import tet_gradients, tri_lb_mass
from .material import CapillaryParams, ElasticTensor, kelvin_basis, to_kelvin
from .mesh import DomainMesh, PeriodicMesh, node_volume_weights

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SolverStats:
    iterations: int
    rel_residual: float
    converged: bool


def pcg(matvec: Callable[[np.ndarray], np.ndarray], b: np.ndarray, diag: np.ndarray,
        project: Callable[[np.ndarray], np.ndarray] | None = None, tol: float = DEFAULT_TOL,
        maxiter: int | None = None, x0: np.ndarray | None = None) -> tuple[np.ndarray, SolverStats]:
    """Projected Jacobi-preconditioned conjugate gradients.

    Stops when ||r|| <= tol ||b|| with r measured in the constrained space.
    """
    proj = project or (lambda v: v)
    n = len(b)
    maxiter = 20 * n if maxiter is None else maxiter
    b = proj(b)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolverStats(0, 0.0, True)
    x = np.zeros(n) if x0 is None else proj(np.asarray(x0, dtype=float).copy())
    r = proj(b - matvec(x)) if x0 is not None else b.copy()
    dinv = 1.0 / diag
    z = proj(dinv * r)
    p = z.copy()
    rz = float(r @ z)
    rel = float(np.linalg.norm(r)) / bnorm
    it = 0
    while rel > tol and it < maxiter:
        Ap = proj(matvec(p))
        pAp = float(p @ Ap)
        if pAp <= 0:
            raise SolverFault(f"operator not positive definite (p.Ap = {pAp:.3e}) at iteration {it}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        # recompute the true residual now and then to limit drift
        if it % 200 == 0:
            r = proj(b - matvec(x))
        rel = float(np.linalg.norm(r)) / bnorm
        z = proj(dinv * r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    true_rel = float(np.linalg.norm(proj(b - matvec(x)))) / bnorm
    stats = SolverStats(it, true_rel, true_rel <= 10 * tol)
    if not stats.converged:
        raise SolverFault(f"CG stopped after {it} iterations at relative residual {true_rel:.3e}")
    return x, stats


def _check_stable(params: CapillaryParams) -> None:
    if not (params.stable or params.is_void):
        raise StabilityFault(
            f"gamma = {params.gamma} violates gamma < 1.5 lambda_fl a = {1.5 * params.lambda_fl * params.a}")


# ---------------------------------------------------------------------------
# cell problem


@dataclass
class CellOperator:
    """Assembled full operator H = K + K_LB - M_neg + 2 c g g^T on a periodic mesh."""

    mesh: PeriodicMesh
    A: ElasticTensor
    params: CapillaryParams
    K: SparseSym
    rank_one: list[RankOneTerm]
    bulk: SparseSym

    @classmethod
    def build(cls, mesh, A: ElasticTensor, params: CapillaryParams, bulk: SparseSym | None = None) -> "CellOperator":
        bulk = bulk if bulk is not None else assemble_bulk(mesh, A)
        if params.is_void:
            return cls(mesh, A, params, bulk, [], bulk)
        K_LB, M_neg = assemble_surface(mesh, params)
        K = SparseSym.from_matrix(bulk.upper + K_LB.upper - M_neg.upper)
        return cls(mesh, A, params, K, [assemble_nonlocal(mesh, params)], bulk)

    def matvec(self, U: np.ndarray) -> np.ndarray:
        y = self.K.matvec(U)
        for r in self.rank_one:
            y += r.matvec(U)
        return y

    def energy(self, U: np.ndarray) -> float:
        return 0.5 * float(U @ self.matvec(U))


def affine_field(mesh, F: np.ndarray) -> np.ndarray:
    return (mesh.nodes @ np.asarray(F, dtype=float).T).ravel()


@dataclass(frozen=True)
class CellSolution:
    """Kelvin-indexed correctors and energies of one cell configuration."""

    mesh: PeriodicMesh
    params: CapillaryParams
    correctors: np.ndarray  # (6, 3 n_nodes)
    energies: np.ndarray    # F_per at the six Kelvin basis strains
    matrix: np.ndarray      # 6x6 Kelvin matrix
    stats: tuple[SolverStats, ...]
    kind: str = "capillary"
    tol: float = DEFAULT_TOL

    def corrector_for(self, F: np.ndarray) -> np.ndarray:
        k = to_kelvin(0.5 * (F + F.T))
        return np.tensordot(k, self.correctors, axes=(0, 0))


class CellProblem:
    """Periodic cell problem with reusable reduced operator."""

    def __init__(self, mesh: PeriodicMesh, A: ElasticTensor, params: CapillaryParams,
                 tol: float = DEFAULT_TOL, bulk: SparseSym | None = None):
        _check_stable(params)
        self.mesh, self.A, self.params, self.tol = mesh, A, params, tol
        self.op = CellOperator.build(mesh, A, params, bulk)
        self.cons = ConstraintSet(mesh.n_nodes, master=mesh.master, mean_weights=node_volume_weights(mesh))
        self.system = apply_constraints(self.op.K, self.op.rank_one, self.cons)
        self._diag = self.system.diagonal()

    def energy(self, F: np.ndarray, psi: np.ndarray) -> float:
        """Discrete F_per(F, psi) for a full nodal field psi."""
        return self.op.energy(psi + affine_field(self.mesh, F))

    def solve(self, F: np.ndarray, x0: np.ndarray | None = None) -> tuple[np.ndarray, float, SolverStats]:
        YF = affine_field(self.mesh, F)
        b = -(self.system.P.T @ self.op.matvec(YF))
        x, st = pcg(self.system.matvec, b, self._diag, self.system.project, self.tol, x0=x0)
        psi = self.system.expand(x)
        return psi, self.energy(F, psi), st


def solve_cell(F: np.ndarray, mesh: PeriodicMesh, A: ElasticTensor, params: CapillaryParams,
               tol: float = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """Corrector lambda_F (nodal, periodic, mean zero) and the energy F_per(F, lambda_F)."""
    F = np.asarray(F, dtype=float)
    prob = CellProblem(mesh, A, params, tol)
    psi, e, _ = prob.solve(F)
    return psi, e


def _polarize(op_energy_fields: list[np.ndarray], matvec: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """M_IJ = 1/2 [q(W_I + W_J) - q(W_I) - q(W_J)] with q(W) = W.H W."""
    HW = [matvec(W) for W in op_energy_fields]
    q = np.array([W @ h for W, h in zip(op_energy_fields, HW)])
    M = np.diag(q)
    for i, j in itertools.combinations(range(6), 2):
        Wij = op_energy_fields[i] + op_energy_fields[j]
        qij = float(Wij @ (HW[i] + HW[j]))
        M[i, j] = M[j, i] = 0.5 * (qij - q[i] - q[j])
    return M


def compute_Ahom(mesh: PeriodicMesh, A: ElasticTensor, params: CapillaryParams,
                 tol: float = DEFAULT_TOL, bulk: SparseSym | None = None) -> CellSolution:
    """Homogenized Kelvin matrix from the six basis strains plus polarization."""
    prob = CellProblem(mesh, A, params, tol, bulk)
    E = kelvin_basis()
    cors, fields, stats, en = [], [], [], []
    for I in range(6):
        psi, e, st = prob.solve(E[I])
        cors.append(psi)
        fields.append(psi + affine_field(mesh, E[I]))
        stats.append(st)
        en.append(e)
    M = _polarize(fields, prob.op.matvec)
    kind = "void" if params.is_void else "capillary"
    return CellSolution(mesh, params, np.array(cors), np.array(en), M, tuple(stats), kind, tol)


def mixed_form_matrix(cell: CellSolution, A: ElasticTensor, bulk: SparseSym | None = None) -> np.ndarray:
    """N_IJ = (E_I y) . H W_J without symmetrization.

    Equals the polarized matrix when each corrector is H-orthogonal to the
    periodic fields, so N - N^T measures operator symmetry and solve accuracy.
    """
    op = CellOperator.build(cell.mesh, A, cell.params, bulk)
    E = kelvin_basis()
    Y = [affine_field(cell.mesh, E[I]) for I in range(6)]
    HW = [op.matvec(cell.correctors[J] + Y[J]) for J in range(6)]
    return np.array([[Y[I] @ HW[J] for J in range(6)] for I in range(6)])


def solve_rigid_cell(F: np.ndarray, mesh: PeriodicMesh, A: ElasticTensor, tol: float = DEFAULT_TOL,
                     bulk: SparseSym | None = None) -> float:
    """1/2 A_rigid F.F: periodic psi with psi = -F y on the cavity."""
    return RigidCell(mesh, A, tol, bulk).energy(np.asarray(F, dtype=float))


class RigidCell:
    def __init__(self, mesh: PeriodicMesh, A: ElasticTensor, tol: float = DEFAULT_TOL, bulk: SparseSym | None = None):
        self.mesh, self.tol = mesh, tol
        self.K = bulk if bulk is not None else assemble_bulk(mesh, A)
        self.cav = mesh.cavity.node_ids
        cons = ConstraintSet(mesh.n_nodes, self.cav, np.zeros((len(self.cav), 3)), mesh.master)
        self.system = apply_constraints(self.K, [], cons)
        self._diag = self.system.diagonal()

    def field(self, F: np.ndarray) -> tuple[np.ndarray, SolverStats]:
        """Total displacement W = psi + F y (vanishing on the cavity)."""
        vals = -(self.mesh.nodes[self.cav] @ F.T)
        cons = ConstraintSet(self.mesh.n_nodes, self.cav, vals, self.mesh.master)
        lift = dirichlet_lift(cons)
        YF = affine_field(self.mesh, F)
        b = reduced_rhs(self.system, self.K, [], np.zeros_like(YF), lift + YF)
        x, st = pcg(self.system.matvec, b, self._diag, None, self.tol)
        return self.system.expand(x, lift) + YF, st

    def energy(self, F: np.ndarray) -> float:
        W, _ = self.field(F)
        return 0.5 * self.K.quad(W)

    def matrix(self) -> np.ndarray:
        E = kelvin_basis()
        fields = [self.field(E[I])[0] for I in range(6)]
        return _polarize(fields, self.K.matvec)


@dataclass(frozen=True)
class HomogenizedTensor:
    matrix: np.ndarray
    refine: int
    tol: float

    @property
    def symmetry_defect(self) -> float:
        M = self.matrix
        return float(np.abs(M - M.T).max() / np.abs(M).max())

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))


def cube_group_kelvin() -> list[np.ndarray]:
    """Kelvin 6x6 representations of the 48 signed permutation matrices."""
    E = kelvin_basis()
    reps = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            R = np.zeros((3, 3))
            R[np.arange(3), perm] = signs
            reps.append(np.einsum("Iij,ik,jl,Jkl->IJ", E, R, R, E))
    return reps


def cubic_symmetry_defect(M: np.ndarray) -> float:
    """max |M - group average| / max |M| over the cube symmetry group."""
    reps = cube_group_kelvin()
    avg = sum(R @ M @ R.T for R in reps) / len(reps)
    return float(np.abs(M - avg).max() / np.abs(M).max())


def loewner_slack(lower: np.ndarray, upper: np.ndarray) -> float:
    """Smallest eigenvalue of upper - lower (>= 0 when lower <= upper)."""
    D = 0.5 * ((upper - lower) + (upper - lower).T)
    return float(np.linalg.eigvalsh(D)[0])


# ---------------------------------------------------------------------------
# single inclusion


@dataclass(frozen=True)
class DisplacementField:
    mesh: DomainMesh | PeriodicMesh
    values: np.ndarray  # (n_nodes, 3)
    constraints: str
    stats: SolverStats | None = None

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()


@dataclass
class InclusionProblem:
    mesh: DomainMesh
    A: ElasticTensor
    params: CapillaryParams
    bulk: SparseSym
    K: SparseSym
    rank_one: list[RankOneTerm]
    system: ReducedSystem
    cons: ConstraintSet
    tol: float = DEFAULT_TOL

    @classmethod
    def build(cls, mesh: DomainMesh, A: ElasticTensor, params: CapillaryParams, tol: float = DEFAULT_TOL):
        _check_stable(params)
        bulk = assemble_bulk(mesh, A)
        if params.is_void:
            K, r1 = bulk, []
        else:
            K_LB, M_neg = assemble_surface(mesh, params)
            K = SparseSym.from_matrix(bulk.upper + K_LB.upper - M_neg.upper)
            r1 = [assemble_nonlocal(mesh, params)]
        cons = ConstraintSet(mesh.n_nodes, mesh.gamma_nodes, np.zeros((len(mesh.gamma_nodes), 3)))
        return cls(mesh, A, params, bulk, K, r1, apply_constraints(K, r1, cons), cons, tol)

    def matvec(self, U: np.ndarray) -> np.ndarray:
        y = self.K.matvec(U)
        for r in self.rank_one:
            y += r.matvec(U)
        return y

    def solve(self, f) -> DisplacementField:
        load = assemble_load(self.mesh, f)
        lift = dirichlet_lift(self.cons)
        b = reduced_rhs(self.system, self.K, self.rank_one, load, lift)
        x, st = pcg(self.system.matvec, b, self.system.diagonal(), None, self.tol)
        U = self.system.expand(x, lift)
        return DisplacementField(self.mesh, U.reshape(-1, 3), "dirichlet:" + self.mesh.gamma_face, st)

    def energy(self, U: np.ndarray, f) -> float:
        return 0.5 * float(U @ self.matvec(U)) - float(assemble_load(self.mesh, f) @ U)


def solve_single_inclusion(mesh: DomainMesh, A: ElasticTensor, params: CapillaryParams, f,
                           tol: float = DEFAULT_TOL) -> DisplacementField:
    """Galerkin solution with u = 0 on Gamma and natural conditions elsewhere."""
    return InclusionProblem.build(mesh, A, params, tol).solve(f)


def patch_test(mesh: DomainMesh, A: ElasticTensor, F: np.ndarray, tol: float = 1e-14) -> float:
    """Max nodal error / max |F y| for affine Dirichlet data on the whole boundary.

    Bulk elasticity only, no load; P1 elements must reproduce y -> F y.
    """
    bulk = assemble_bulk(mesh, A)
    fixed = np.union1d(mesh.boundary_nodes, mesh.cavity.node_ids)
    exact = mesh.nodes @ np.asarray(F, dtype=float).T
    cons = ConstraintSet(mesh.n_nodes, fixed, exact[fixed])
    system = apply_constraints(bulk, [], cons)
    lift = dirichlet_lift(cons)
    b = reduced_rhs(system, bulk, [], np.zeros(3 * mesh.n_nodes), lift)
    x, _ = pcg(system.matvec, b, system.diagonal(), None, tol)
    U = system.expand(x, lift).reshape(-1, 3)
    return float(np.abs(U - exact).max() / np.abs(exact).max())


def radial_test_field(mesh: DomainMesh, tol: float = 1e-12) -> np.ndarray:
    """Discrete harmonic lift V: e_r on cavity nodes, 0 on Gamma, P1-harmonic elsewhere."""
    L = scalar_laplacian(mesh)
    n = mesh.n_nodes
    cav = mesh.cavity.node_ids
    fixed = np.zeros(n, dtype=bool)
    fixed[cav] = True
    fixed[mesh.gamma_nodes] = True
    free = np.nonzero(~fixed)[0]
    Lff = L[free][:, free].tocsr()
    Lfc = L[free][:, cav]
    V = np.zeros((n, 3))
    V[cav] = mesh.cavity.e_r
    Sff = SparseSym.from_matrix(Lff)
    for c in range(3):
        b = -(Lfc @ mesh.cavity.e_r[:, c])
        x, _ = pcg(Sff.matvec, b, Lff.diagonal(), None, tol)
        V[free, c] = x
    return V.ravel()


@dataclass(frozen=True)
class InterfaceIdentity:
    lhs: float
    rhs: float
    residual: float


def check_interface_identity(u: DisplacementField, A: ElasticTensor, params: CapillaryParams, f,
                             V: np.ndarray | None = None) -> InterfaceIdentity:
    """Weak radial traction pairing against (3 lambda_fl/a - 2 gamma/a^2) int u.e_r.

    The traction pairing is the load minus bulk residual tested with the lifted
    radial field V, which by the discrete equations equals the surface terms
    tested with V.
    """
    mesh = u.mesh
    U = u.flat
    V = radial_test_field(mesh) if V is None else V
    bulk = assemble_bulk(mesh, A)
    load = assemble_load(mesh, f)
    lhs = float(load @ V - bulk.matvec(U) @ V)
    gU = float(radial_moment_vector(mesh) @ U)
    a = params.a
    rhs = (3 * params.lambda_fl / a - 2 * params.gamma / a**2) * gU
    res = abs(lhs - rhs) / (abs(lhs) + abs(rhs) + np.finfo(float).eps)
    return InterfaceIdentity(lhs, rhs, float(res))


# ---------------------------------------------------------------------------
# corrector reconstruction


class _Locator:
    def __init__(self, mesh):
        self.mesh = mesh
        p = mesh.nodes[mesh.tets]
        self.centroids = p.mean(axis=1)
        self.tree = cKDTree(self.centroids)
        T = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=2)
        self.Tinv = np.linalg.inv(T)
        self.origin = p[:, 0]

    def locate(self, y: np.ndarray, k: int = 32) -> np.ndarray:
        out = np.empty(len(y), dtype=np.int64)
        kk = min(k, len(self.centroids))
        _, cand = self.tree.query(y, k=kk)
        cand = np.atleast_2d(cand)
        for n, (pt, cs) in enumerate(zip(y, cand)):
            lam = np.einsum("cij,cj->ci", self.Tinv[cs], pt - self.origin[cs])
            bary = np.concatenate([1 - lam.sum(axis=1, keepdims=True), lam], axis=1)
            score = bary.min(axis=1)
            best = int(np.argmax(score))
            if score[best] < -1e-9:
                # brute force over all tets before giving up
                lam = np.einsum("cij,cj->ci", self.Tinv, pt - self.origin)
                bary = np.concatenate([1 - lam.sum(axis=1, keepdims=True), lam], axis=1)
                sc = bary.min(axis=1)
                b2 = int(np.argmax(sc))
                if sc[b2] < -1e-9:
                    raise OutOfDomain(f"point {pt} is not covered by the mesh")
                out[n] = b2
            else:
                out[n] = cs[best]
        return out


def tet_strains(mesh, U: np.ndarray) -> np.ndarray:
    """Constant symmetric gradient per tet, shape (T, 3, 3)."""
    g, _ = tet_gradients(mesh.nodes, mesh.tets)
    Ue = U.reshape(-1, 3)[mesh.tets]  # (T, 4, 3)
    G = np.einsum("tai,taj->tij", Ue, g)
    return 0.5 * (G + np.swapaxes(G, 1, 2))


def corrector_reconstruct(grad_u: Callable[[np.ndarray], np.ndarray] | np.ndarray, cell: CellSolution,
                          eps: float, x: np.ndarray) -> np.ndarray:
    """E_x u(x) + sum_I k_I(x) E_y lambda_I(x/eps) at sample points x.

    ``grad_u`` is a constant 3x3 matrix or a callable returning (N, 3, 3).
    Raises :class:`OutOfDomain` for points whose cell coordinate lies in the cavity.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    G = grad_u(x) if callable(grad_u) else np.broadcast_to(np.asarray(grad_u, dtype=float), (len(x), 3, 3))
    Eu = 0.5 * (G + np.swapaxes(G, 1, 2))
    y = x / eps
    y = y - np.floor(y + 0.5)
    if np.any(np.linalg.norm(y, axis=1) < cell.mesh.a):
        raise OutOfDomain("sample point falls inside an inclusion")
    tets = _Locator(cell.mesh).locate(y)
    strains = np.stack([tet_strains(cell.mesh, c)[tets] for c in cell.correctors])  # (6, N, 3, 3)
    k = to_kelvin(Eu)  # (N, 6)
    return Eu + np.einsum("nI,Inij->nij", k, strains)


def surface_reconstruct(grad_u: np.ndarray, cell: CellSolution) -> np.ndarray:
    """Per-triangle grad_tau P2[(grad_u y + sum E_jk lambda_jk(y)) . e_r] on the cavity."""
    mesh = cell.mesh
    patch = mesh.cavity
    G = np.asarray(grad_u, dtype=float)
    W = (mesh.nodes @ G.T).ravel() + cell.corrector_for(0.5 * (G + G.T))
    Wn = W.reshape(-1, 3)
    phi = np.zeros(mesh.n_nodes)
    phi[patch.node_ids] = np.einsum("ni,ni->n", Wn[patch.node_ids], patch.e_r)
    # discrete L2 projection onto affine functions, then remove it
    _, m = tri_lb_mass(mesh.nodes, patch.tri)
    ids = patch.node_ids
    loc = -np.ones(mesh.n_nodes, dtype=np.int64)
    loc[ids] = np.arange(len(ids))
    t = loc[patch.tri]
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    Ms = sp.coo_matrix((m.ravel(), (rows, cols)), shape=(len(ids),) * 2).tocsr()
    B = np.column_stack([np.ones(len(ids)), patch.positions / patch.a])
    MB = Ms @ B
    coef = np.linalg.solve(B.T @ MB, MB.T @ phi[ids])
    p2 = phi[ids] - B @ coef
    # constant tangential gradient on each flat triangle
    P = mesh.nodes[patch.tri]
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    nrm = np.cross(e1, e2)
    A2 = np.einsum("ni,ni->n", nrm, nrm)
    v = p2[t]
    d1 = v[:, 1] - v[:, 0]
    d2 = v[:, 2] - v[:, 0]
    # grad = (d1 (e2 x n) + d2 (n x e1)) / |n|^2
    return (d1[:, None] * np.cross(e2, nrm) + d2[:, None] * np.cross(nrm, e1)) / A2[:, None]


def cell_average_check(cell: CellSolution, F: np.ndarray) -> float:
    """|int_solid E(lambda_F) + sym int_cavity lambda_F x n| / |F|.

    For a periodic field the divergence theorem makes this vanish exactly,
    so the mean strain of the corrector extended into the hole is zero.
    """
    mesh = cell.mesh
    lam = cell.corrector_for(F)
    S = tet_strains(mesh, lam)
    vol = mesh.volumes
    solid = np.einsum("t,tij->ij", vol, S)
    patch = mesh.cavity
    Ln = lam.reshape(-1, 3)[patch.tri].mean(axis=1)  # P1 average over triangle
    P = mesh.nodes[patch.tri]
    n = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    n = n / np.linalg.norm(n, axis=1)[:, None]
    # the solid's outward normal on the cavity is -n, so periodicity gives
    # int E(lambda) dx = -sym int lambda x n dH
    hole = np.einsum("t,ti,tj->ij", patch.areas, Ln, n)
    total = solid + 0.5 * (hole + hole.T)
    return float(np.abs(total).max() / max(np.abs(F).max(), 1e-300))
