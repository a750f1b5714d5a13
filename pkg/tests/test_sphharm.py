import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from caphomog.errors import ExpansionRequired
from caphomog.material import make_params
from caphomog.sphharm import (SphereField, SphereRule, coercivity_gap, default_rule, dirichlet_energy, eigencheck,
                              harmonic, harmonic_indices, poincare_gap, project_components, random_band_limited,
                              tangential_gradient)

RULE = default_rule()


def monomial_moment(i, j, k):
    # closed form of int_{S^2} x^i y^j z^k
    if i % 2 or j % 2 or k % 2:
        return 0.0
    b = [(p + 1) / 2 for p in (i, j, k)]
    return 2 * math.gamma(b[0]) * math.gamma(b[1]) * math.gamma(b[2]) / math.gamma(sum(b))


def test_rule_weights_and_monomials():
    assert RULE.weights.sum() == pytest.approx(4 * math.pi, rel=1e-14)
    assert np.all(RULE.weights > 0)
    x = RULE.nodes
    for i, j, k in itertools.product(range(RULE.degree + 1), repeat=3):
        if i + j + k > RULE.degree:
            continue
        val = RULE.integrate(x[:, 0] ** i * x[:, 1] ** j * x[:, 2] ** k)
        assert abs(val - monomial_moment(i, j, k)) <= 1e-12


def test_harmonics_orthonormal():
    idx = harmonic_indices()
    Y = np.stack([harmonic(l, m, RULE.nodes)[0] for l, m in idx], axis=1)
    G = RULE.integrate(Y[:, :, None] * Y[:, None, :])
    assert np.abs(G - np.eye(len(idx))).max() <= 1e-12


@pytest.mark.parametrize("l,m", harmonic_indices())
@pytest.mark.parametrize("a", [1.0, 0.3])
def test_eigencheck(l, m, a):
    q = eigencheck(l, m, a)
    assert q == pytest.approx(l * (l + 1) / a**2, rel=1e-8, abs=1e-12)


def test_projection_examples():
    a = 0.7
    c = np.array([0.2, -1.0, 0.5])
    lin = SphereField.from_function(lambda y: y @ c / a, a)
    assert np.abs(project_components(lin)[2].values).max() <= 1e-12
    sq = SphereField.from_function(lambda y: (y[:, 2] / a) ** 2, a)
    p0, p1, p2 = project_components(sq)
    assert np.allclose(p0.values, 1 / 3, atol=1e-13)
    assert np.abs(p1.values).max() <= 1e-13
    assert np.allclose(p2.values, (sq.points[:, 2] / a) ** 2 - 1 / 3, atol=1e-13)


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 2.0))
def test_parseval_and_orthogonality(seed, a):
    phi = random_band_limited(np.random.default_rng(seed), a)
    parts = project_components(phi)
    n = phi.norm2()
    assert abs(sum(p.norm2() for p in parts) - n) <= 1e-10 * n
    for p, q in itertools.combinations(parts, 2):
        assert abs(phi.integrate(p.values * q.values)) <= 1e-10 * n


def test_tangential_gradient_examples():
    a = 0.5
    const = SphereField.from_function(lambda y: np.full(len(y), 2.0), a, grad_f=lambda y: np.zeros_like(y))
    assert np.abs(tangential_gradient(const).values).max() == 0.0
    # phi = y3/|y| extended off the sphere; its ambient gradient is already tangential
    f = SphereField.from_function(lambda y: y[:, 2] / a, a,
                                  grad_f=lambda y: (np.eye(3)[2] - (y[:, 2:3] / a) * y / a) / a)
    g = tangential_gradient(f).values
    nu = RULE.nodes
    exp = (np.eye(3)[2] - nu[:, 2:3] * nu) / a
    assert np.abs(g - exp).max() <= 1e-13
    assert np.abs(np.einsum("ni,ni->n", g, nu)).max() <= 1e-12


def test_tangential_gradient_requires_expansion():
    f = SphereField(1.0, RULE, np.ones(len(RULE)))
    with pytest.raises(ExpansionRequired):
        tangential_gradient(f)


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 2.0))
def test_dirichlet_energy_spectral(seed, a):
    phi = random_band_limited(np.random.default_rng(seed), a)
    ls = np.array([l for l, _ in harmonic_indices()])
    ref = np.sum(ls * (ls + 1) * phi.coeffs**2)  # ||Y||^2 = a^2 on radius a, gradient scales 1/a
    assert dirichlet_energy(phi) == pytest.approx(ref, rel=1e-9)
    p1 = project_components(phi)[1]
    assert dirichlet_energy(p1) == pytest.approx(2 / a**2 * p1.norm2(), rel=1e-9)
    p2 = project_components(phi)[2]
    assert dirichlet_energy(p2) >= 6 / a**2 * p2.norm2() * (1 - 1e-10)


def _single(l, m, a):
    c = np.zeros(len(harmonic_indices()))
    c[harmonic_indices().index((l, m))] = 1.0
    return SphereField.from_coeffs(c, a)


def test_poincare_examples():
    a = 0.4
    assert abs(poincare_gap(_single(0, 0, a))) <= 1e-12
    assert abs(poincare_gap(_single(1, 2, a))) <= 1e-12
    f = _single(2, 1, a)
    assert poincare_gap(f) == pytest.approx(2 * f.norm2(), rel=1e-10)


def test_coercivity_examples():
    a = 0.4
    prm = make_params(0.3, 2.0, a)
    c = np.zeros(len(harmonic_indices()))
    c[:4] = [0.7, -0.2, 0.5, 1.1]
    lhs, rhs, slack = coercivity_gap(SphereField.from_coeffs(c, a), prm)
    assert abs(slack) <= 1e-12 * max(abs(lhs), 1.0)
    f = _single(2, 0, a)
    lhs, rhs, slack = coercivity_gap(f, prm)
    assert lhs == pytest.approx(2 * prm.gamma * f.norm2() / a**2, rel=1e-10)
    assert slack >= -1e-10 * prm.gamma * f.norm2() / a**2


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 1.0), st.floats(0.0, 0.999), st.floats(0.1, 50.0))
def test_inequalities_random(seed, a, frac, lf):
    prm = make_params(frac * 1.5 * lf * a, lf, a)
    phi = random_band_limited(np.random.default_rng(seed), a)
    n = phi.norm2()
    assert poincare_gap(phi) >= -1e-10 * n
    lhs, _, slack = coercivity_gap(phi, prm)
    # the fluid terms set the rounding scale when gamma = 0
    scale = max(prm.gamma, prm.lambda_fl * a) * n / a**2
    assert slack >= -1e-10 * scale
    assert lhs >= -1e-10 * scale


def test_sphere_field_rejects_wrong_count():
    with pytest.raises(ValueError):
        SphereField(1.0, RULE, np.ones(3))


def test_custom_rule_degree():
    r = SphereRule.gauss_product(8)
    x = r.nodes
    assert r.integrate(x[:, 2] ** 8) == pytest.approx(monomial_moment(0, 0, 8), rel=1e-13)
