import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from caphomog.errors import OutOfDomain, StabilityFault
from caphomog.material import CapillaryParams, ElasticTensor, ball_volume, kelvin_basis, make_params, to_kelvin
from caphomog.mesh import build_cell_mesh, build_domain_mesh
from caphomog.solve import (CellProblem, HomogenizedTensor, InclusionProblem, RigidCell, affine_field,
                            cell_average_check, check_interface_identity, compute_Ahom, corrector_reconstruct,
                            cube_group_kelvin, cubic_symmetry_defect, loewner_slack, mixed_form_matrix,
                            patch_test, solve_cell, solve_rigid_cell, solve_single_inclusion, surface_reconstruct,
                            tet_strains)
from caphomog.sphharm import SphereField, dirichlet_energy

sym3 = arrays(np.float64, (3, 3), elements=st.floats(-1, 1)).map(lambda F: 0.5 * (F + F.T))


def random_sym(rng):
    F = rng.normal(size=(3, 3))
    return 0.5 * (F + F.T)


@pytest.fixture(scope="module")
def prob1(cell1, iso, cap02):
    return CellProblem(cell1, iso, cap02)


@pytest.fixture(scope="module")
def hom1(cell1, iso, cap02):
    return compute_Ahom(cell1, iso, cap02)


@pytest.fixture(scope="module")
def void1(cell1, iso):
    return compute_Ahom(cell1, iso, CapillaryParams.void(0.2))


@pytest.fixture(scope="module")
def rigid1(cell1, iso):
    return RigidCell(cell1, iso).matrix()


# --- cell problem ---------------------------------------------------------


def test_zero_strain_zero_corrector(cell1, iso, cap02):
    psi, e = solve_cell(np.zeros((3, 3)), cell1, iso, cap02)
    assert np.all(psi == 0) and e == 0


def test_unstable_params_rejected(cell1, iso):
    with pytest.raises(StabilityFault):
        CellProblem(cell1, iso, make_params(31.0, 100.0, 0.2))


def test_void_softening(cell1, iso, rng):
    void = CapillaryParams.void(0.2)
    for _ in range(5):
        F = random_sym(rng)
        _, e = solve_cell(F, cell1, iso, void)
        # psi = 0 is admissible and gives the bulk energy of the solid part only
        assert e <= 0.5 * iso.Q(F) * cell1.volumes.sum() * (1 + 1e-12)
        assert e < 0.5 * iso.Q(F)


def _surface_trial(F, prm):
    """Continuous surface and fluid energy of u = F y on the sphere."""
    a = prm.a
    phi = SphereField.from_function(lambda y: np.einsum("ni,ij,nj->n", y, F, y) / a, a,
                                    grad_f=lambda y: 2 * y @ F.T / a)
    s = phi.integrate()
    return (0.5 * prm.gamma * dirichlet_energy(phi) - prm.gamma / a**2 * phi.norm2()
            + prm.lambda_fl / (2 * ball_volume(a)) * s**2)


def test_trial_bound_psi_zero(cell2, iso, cap02, rng):
    prob = CellProblem(cell2, iso, cap02)
    zero = np.zeros(3 * cell2.n_nodes)
    for _ in range(3):
        F = random_sym(rng)
        _, e, _ = prob.solve(F)
        trial = prob.energy(F, zero)
        assert e <= trial
        oracle = 0.5 * iso.Q(F) * (1 - ball_volume(0.2)) + _surface_trial(F, cap02)
        assert trial == pytest.approx(oracle, rel=0.02)


def test_surface_trial_oracle_closed_form(cap02):
    # F = I: phi = a, no gradient, fluid term lambda_fl |B| 9/2
    a, g, lf = cap02.a, cap02.gamma, cap02.lambda_fl
    ref = -g / a**2 * a**2 * 4 * math.pi * a**2 + lf / (2 * ball_volume(a)) * (4 * math.pi * a**3) ** 2
    assert _surface_trial(np.eye(3), cap02) == pytest.approx(ref, rel=1e-12)


def test_minimality_random_perturbations(prob1, rng):
    F = random_sym(rng)
    psi, e, _ = prob1.solve(F)
    sys = prob1.system
    for _ in range(10):
        dv = sys.expand(sys.project(rng.normal(size=sys.n)))
        dv *= 1e-3 / np.linalg.norm(dv)
        assert prob1.energy(F, psi + dv) >= e - 1e-12 * abs(e)


def test_corrector_periodic_and_mean_zero(cell1, prob1, rng):
    from caphomog.mesh import node_volume_weights
    psi, _, _ = prob1.solve(random_sym(rng))
    P = psi.reshape(-1, 3)
    m = cell1.master
    assert np.array_equal(P, P[m])
    w = node_volume_weights(cell1)
    assert np.abs(w @ P).max() <= 1e-12 * np.abs(P).max()


def test_uniqueness_from_initial_guess(prob1, rng):
    F = random_sym(rng)
    psi0, e0, _ = prob1.solve(F)
    psi1, e1, st = prob1.solve(F, x0=rng.normal(size=prob1.system.n))
    assert st.iterations > 0
    assert np.abs(psi1 - psi0).max() <= 1e-7 * np.abs(psi0).max()
    assert e1 == pytest.approx(e0, rel=1e-12)


def test_stationarity_residual(prob1, rng):
    F = random_sym(rng)
    psi, _, st = prob1.solve(F)
    sys = prob1.system
    b = -(sys.P.T @ prob1.op.matvec(affine_field(prob1.mesh, F)))
    r = sys.project(b - sys.P.T @ prob1.op.matvec(psi))
    assert np.linalg.norm(r) <= 1e-9 * np.linalg.norm(sys.project(b))
    assert st.rel_residual <= 1e-9


def test_polarization_consistency(hom1, prob1, rng):
    M = hom1.matrix
    E = kelvin_basis()
    for I in range(6):
        assert M[I, I] == pytest.approx(2 * hom1.energies[I], rel=1e-9)
    for _ in range(10):
        F = random_sym(rng)
        _, e, _ = prob1.solve(F)
        k = to_kelvin(F)
        assert k @ M @ k == pytest.approx(2 * e, rel=1e-9)
    assert np.allclose(E.shape, (6, 3, 3))


@given(sym3, st.floats(0.1, 10))
def test_energy_quadratic_in_strain(prob1, F, s):
    _, e1, _ = prob1.solve(F)
    _, e2, _ = prob1.solve(s * F)
    assert e2 == pytest.approx(s * s * e1, rel=1e-8, abs=1e-14)


def test_hom_symmetric_positive(hom1):
    H = HomogenizedTensor(hom1.matrix, 1, hom1.tol)
    assert H.symmetry_defect <= 1e-10
    assert H.eigenvalues[0] > 0


def test_mixed_form_symmetry(hom1, iso):
    N = mixed_form_matrix(hom1, iso)
    scale = np.abs(hom1.matrix).max()
    assert np.abs(N - N.T).max() <= 1e-10 * scale
    assert np.abs(N - hom1.matrix).max() <= 1e-9 * scale


def test_mixed_form_detects_loose_solve(cell1, iso, cap02):
    loose = compute_Ahom(cell1, iso, cap02, tol=1e-2)
    N = mixed_form_matrix(loose, iso)
    assert np.abs(N - N.T).max() > 1e-8 * np.abs(N).max()


def test_void_below_matrix(void1, iso):
    assert loewner_slack(void1.matrix, iso.kelvin()) > 0


def test_ordering_void_hom_rigid(void1, hom1, rigid1):
    scale = np.abs(rigid1).max()
    assert loewner_slack(void1.matrix, hom1.matrix) >= -1e-8 * scale
    assert loewner_slack(hom1.matrix, rigid1) >= -1e-8 * scale


def test_rigid_zero_strain(cell1, iso):
    assert solve_rigid_cell(np.zeros((3, 3)), cell1, iso) == 0


def test_rigid_strictly_above_capillary(cell2, iso, cap02, rng):
    prob = CellProblem(cell2, iso, cap02)
    rc = RigidCell(cell2, iso)
    for _ in range(3):
        F = random_sym(rng)
        assert rc.energy(F) > prob.solve(F)[1]


def test_rigid_small_inclusion_near_matrix(iso, rng):
    mesh = build_cell_mesh(0.1, 1)
    for _ in range(3):
        F = random_sym(rng)
        assert solve_rigid_cell(F, mesh, iso) == pytest.approx(0.5 * iso.Q(F), rel=0.1)


def test_rigid_field_vanishes_on_cavity(cell1, iso, rng):
    W, _ = RigidCell(cell1, iso).field(random_sym(rng))
    assert np.abs(W.reshape(-1, 3)[cell1.cavity.node_ids]).max() <= 1e-12


# --- cube symmetry ----------------------------------------------------------


def test_cube_group_orthogonal():
    reps = cube_group_kelvin()
    assert len(reps) == 48
    for R in reps:
        assert np.allclose(R @ R.T, np.eye(6), atol=1e-14)


def test_cubic_defect_zero_for_isotropic(iso):
    assert cubic_symmetry_defect(iso.kelvin()) <= 1e-14


def test_cubic_defect_detects_anisotropy(iso):
    M = iso.kelvin().copy()
    M[0, 0] += 0.5
    assert cubic_symmetry_defect(M) > 0.05


@given(arrays(np.float64, (6, 6), elements=st.floats(-1, 1)))
def test_loewner_slack_self_zero(B):
    S = B @ B.T + np.eye(6)
    assert abs(loewner_slack(S, S)) <= 1e-14
    assert loewner_slack(S, S + np.eye(6)) == pytest.approx(1.0, rel=1e-12)


# --- single inclusion -------------------------------------------------------


def test_inclusion_zero_load(box1, iso, cap02):
    u = solve_single_inclusion(box1, iso, cap02, np.zeros(3))
    assert np.all(u.values == 0)


def test_inclusion_satisfies_dirichlet(box1, iso, cap02):
    u = solve_single_inclusion(box1, iso, cap02, np.array([0.0, 0.0, 1.0]))
    assert np.all(u.values[box1.gamma_nodes] == 0)
    assert u.constraints == "dirichlet:" + box1.gamma_face


def _independent_void_solve(mesh, A, f):
    """P1 elasticity from barycentric coordinates, solved directly."""
    X = mesh.nodes[mesh.tets]  # (T, 4, 3)
    M = np.concatenate([np.ones((len(X), 4, 1)), X], axis=2)
    grads = np.linalg.inv(M)[:, 1:, :].transpose(0, 2, 1)  # (T, 4, 3)
    vol = np.abs(np.linalg.det(M)) / 6
    E = np.eye(3)
    B = np.zeros((len(X), 6, 12))
    for a in range(4):
        for i in range(3):
            G = np.einsum("i,tj->tij", E[i], grads[:, a])
            B[:, :, 3 * a + i] = to_kelvin(0.5 * (G + np.swapaxes(G, 1, 2)))
    Ke = vol[:, None, None] * np.einsum("tIa,IJ,tJb->tab", B, A.kelvin(), B)
    dofs = (3 * mesh.tets[:, :, None] + np.arange(3)).reshape(len(X), 12)
    n = 3 * mesh.n_nodes
    K = sp.coo_matrix((Ke.ravel(), (np.repeat(dofs, 12, axis=1).ravel(), np.tile(dofs, (1, 12)).ravel())),
                      shape=(n, n)).tocsc()
    load = np.zeros(n)
    np.add.at(load, dofs.ravel(), (vol[:, None, None] / 4 * np.tile(f, (4, 1))[None]).reshape(-1))
    fixed = np.zeros(n, dtype=bool)
    fixed[(3 * mesh.gamma_nodes[:, None] + np.arange(3)).ravel()] = True
    free = ~fixed
    U = np.zeros(n)
    U[free] = spla.spsolve(K[free][:, free], load[free])
    return U


def test_void_inclusion_matches_independent_path(box1, iso):
    f = np.array([0.3, -0.2, 1.0])
    u = solve_single_inclusion(box1, iso, CapillaryParams.void(0.2), f, tol=1e-14)
    ref = _independent_void_solve(box1, iso, f)
    assert np.abs(u.flat - ref).max() <= 1e-10 * np.abs(ref).max()


def test_inclusion_is_energy_minimizer(box1, iso, cap02, rng):
    f = np.array([0.0, 0.0, 1.0])
    prob = InclusionProblem.build(box1, iso, cap02)
    u = prob.solve(f)
    e = prob.energy(u.flat, f)
    assert e < 0
    for _ in range(5):
        dv = prob.system.expand(rng.normal(size=prob.system.n))
        dv *= 1e-3 / np.linalg.norm(dv)
        assert prob.energy(u.flat + dv, f) >= e - 1e-12 * abs(e)


def test_interface_identity_void_vanishes(box1, iso):
    void = CapillaryParams.void(0.2)
    f = np.array([0.0, 0.0, 1.0])
    u = solve_single_inclusion(box1, iso, void, f, tol=1e-13)
    r = check_interface_identity(u, iso, void, f)
    assert r.rhs == 0
    scale = float(np.abs(u.flat).max() * np.abs(f).max())
    assert abs(r.lhs) <= 1e-9 * scale


def test_interface_identity_stable_small(box1, iso, cap02):
    f = np.array([0.0, 0.0, 1.0])
    u = solve_single_inclusion(box1, iso, cap02, f)
    r = check_interface_identity(u, iso, cap02, f)
    assert r.residual < 0.1
    assert np.sign(r.lhs) == np.sign(r.rhs)


def test_interface_identity_flags_random_field(box1, iso, cap02, rng):
    from caphomog.solve import DisplacementField
    f = np.array([0.0, 0.0, 1.0])
    U = rng.normal(size=(box1.n_nodes, 3))
    U[box1.gamma_nodes] = 0
    r = check_interface_identity(DisplacementField(box1, U, "none"), iso, cap02, f)
    assert r.residual > 0.1


def test_patch_test(box1, iso, rng):
    for _ in range(3):
        F = rng.normal(size=(3, 3))
        assert patch_test(box1, iso, F) <= 1e-10


def test_patch_test_anisotropic(box1, rng):
    B = rng.normal(size=(6, 6))
    A = ElasticTensor.from_kelvin(B @ B.T + np.eye(6))
    assert patch_test(box1, A, rng.normal(size=(3, 3))) <= 1e-10


# --- reconstruction ---------------------------------------------------------


def test_reconstruct_zero_gradient(hom1):
    x = np.array([[0.45, 0.1, 0.0], [0.3, -0.4, 0.2]])
    assert np.all(corrector_reconstruct(np.zeros((3, 3)), hom1, 1.0, x) == 0)


def test_reconstruct_linearity(hom1, rng):
    F = random_sym(rng)
    eps = 0.1
    # generic points, away from element faces
    y = np.array([[0.4513, 0.1071, 0.0237], [0.3129, -0.4017, 0.2213], [-0.3571, 0.3419, 0.3303]])
    x = eps * (y + np.array([2.0, -1.0, 3.0]))
    out = corrector_reconstruct(F, hom1, eps, x)
    psi = hom1.corrector_for(F)
    S = tet_strains(hom1.mesh, psi)
    # locate by brute force barycentric test, independent of the kd-tree locator
    P = hom1.mesh.nodes[hom1.mesh.tets]
    for n, pt in enumerate(y):
        M = np.concatenate([np.ones((len(P), 4, 1)), P], axis=2)
        lam = np.linalg.solve(np.swapaxes(M, 1, 2), np.broadcast_to(np.r_[1.0, pt], (len(P), 4))[..., None])[..., 0]
        t = int(np.argmax(lam.min(axis=1)))
        assert np.allclose(out[n], F + S[t], atol=1e-12)


def test_reconstruct_callable_gradient(hom1):
    x = np.array([[0.45, 0.1, 0.0], [0.3, -0.4, 0.2]])
    F = np.diag([1.0, 2.0, 3.0])
    a = corrector_reconstruct(lambda p: np.broadcast_to(F, (len(p), 3, 3)), hom1, 1.0, x)
    b = corrector_reconstruct(F, hom1, 1.0, x)
    assert np.array_equal(a, b)


def test_reconstruct_inside_inclusion(hom1):
    with pytest.raises(OutOfDomain):
        corrector_reconstruct(np.eye(3), hom1, 0.5, np.array([[1.0, 1.0, 1.0]]))


def test_cell_average_zero(hom1, rng):
    for _ in range(3):
        assert cell_average_check(hom1, random_sym(rng)) <= 1e-8


def test_surface_reconstruct_kills_affine(hom1):
    # for a rigid motion plus dilation the normal trace is affine, so P2 removes it
    g = surface_reconstruct(np.zeros((3, 3)), hom1)
    assert np.all(g == 0)
    g = surface_reconstruct(np.eye(3), hom1)
    assert g.shape == (len(hom1.mesh.cavity.tri), 3)
    assert np.all(np.isfinite(g))
