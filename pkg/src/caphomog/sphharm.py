"""Sphere quadrature, real harmonics up to degree 4, and the affine projections.

Scalar fields on the sphere of radius ``a`` are sampled at the nodes of a
:class:`SphereRule`. The split phi = P0 phi + P1 phi + P2 phi uses only four
moments: the mean (constants) and the three first moments (restrictions of
linear functions). P2 is whatever is left, i.e. the part orthogonal to
affine functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ExpansionRequired
from .material import CapillaryParams


@dataclass(frozen=True)
class SphereRule:
    """Product rule on the unit sphere, exact for polynomials of ``degree``."""

    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    @classmethod
    def gauss_product(cls, degree: int = 20) -> "SphereRule":
        n_theta = degree // 2 + 1
        n_phi = degree + 1
        x, w = np.polynomial.legendre.leggauss(n_theta)
        ph = 2 * np.pi * np.arange(n_phi) / n_phi
        ct = np.repeat(x, n_phi)
        st = np.sqrt(1.0 - ct**2)
        P = np.tile(ph, n_theta)
        nodes = np.stack([st * np.cos(P), st * np.sin(P), ct], axis=1)
        weights = np.repeat(w, n_phi) * (2 * np.pi / n_phi)
        return cls(nodes, weights, degree)

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray, radius: float = 1.0) -> np.ndarray:
        """Integral over the sphere of the given radius (values at the nodes)."""
        return radius**2 * np.tensordot(self.weights, values, axes=(0, 0))


@lru_cache(maxsize=8)
def default_rule(degree: int = 20) -> SphereRule:
    return SphereRule.gauss_product(degree)


# ---------------------------------------------------------------------------
# real solid harmonics as monomial tables {(i, j, k): coefficient}

_SOLID = {
    0: [{(0, 0, 0): 1.0}],
    1: [{(1, 0, 0): 1.0}, {(0, 1, 0): 1.0}, {(0, 0, 1): 1.0}],
    2: [
        {(1, 1, 0): 1.0},
        {(0, 1, 1): 1.0},
        {(1, 0, 1): 1.0},
        {(2, 0, 0): 1.0, (0, 2, 0): -1.0},
        {(0, 0, 2): 2.0, (2, 0, 0): -1.0, (0, 2, 0): -1.0},
    ],
    3: [
        {(2, 1, 0): 3.0, (0, 3, 0): -1.0},
        {(1, 1, 1): 1.0},
        {(0, 1, 2): 4.0, (2, 1, 0): -1.0, (0, 3, 0): -1.0},
        {(0, 0, 3): 2.0, (2, 0, 1): -3.0, (0, 2, 1): -3.0},
        {(1, 0, 2): 4.0, (3, 0, 0): -1.0, (1, 2, 0): -1.0},
        {(2, 0, 1): 1.0, (0, 2, 1): -1.0},
        {(3, 0, 0): 1.0, (1, 2, 0): -3.0},
    ],
    4: [
        {(3, 1, 0): 1.0, (1, 3, 0): -1.0},
        {(2, 1, 1): 3.0, (0, 3, 1): -1.0},
        {(1, 1, 2): 6.0, (3, 1, 0): -1.0, (1, 3, 0): -1.0},
        {(0, 1, 3): 4.0, (2, 1, 1): -3.0, (0, 3, 1): -3.0},
        # 35 z^4 - 30 z^2 r^2 + 3 r^4 expanded
        {(0, 0, 4): 8.0, (4, 0, 0): 3.0, (0, 4, 0): 3.0, (2, 2, 0): 6.0,
         (2, 0, 2): -24.0, (0, 2, 2): -24.0},
        {(1, 0, 3): 4.0, (3, 0, 1): -3.0, (1, 2, 1): -3.0},
        {(2, 0, 2): 6.0, (0, 2, 2): -6.0, (4, 0, 0): -1.0, (0, 4, 0): 1.0},
        {(3, 0, 1): 1.0, (1, 2, 1): -3.0},
        {(4, 0, 0): 1.0, (2, 2, 0): -6.0, (0, 4, 0): 1.0},
    ],
}

MAX_DEGREE = 4


def _eval_poly(poly: dict, x: np.ndarray) -> np.ndarray:
    out = np.zeros(len(x))
    for (i, j, k), c in poly.items():
        out += c * x[:, 0] ** i * x[:, 1] ** j * x[:, 2] ** k
    return out


def _eval_poly_grad(poly: dict, x: np.ndarray) -> np.ndarray:
    out = np.zeros((len(x), 3))
    for (i, j, k), c in poly.items():
        if i:
            out[:, 0] += c * i * x[:, 0] ** (i - 1) * x[:, 1] ** j * x[:, 2] ** k
        if j:
            out[:, 1] += c * j * x[:, 0] ** i * x[:, 1] ** (j - 1) * x[:, 2] ** k
        if k:
            out[:, 2] += c * k * x[:, 0] ** i * x[:, 1] ** j * x[:, 2] ** (k - 1)
    return out


@lru_cache(maxsize=None)
def _norms() -> dict[tuple[int, int], float]:
    # degree-8 products are integrated exactly by a degree-8 rule
    rule = SphereRule.gauss_product(10)
    return {(l, m): math.sqrt(rule.integrate(_eval_poly(p, rule.nodes) ** 2))
            for l, polys in _SOLID.items() for m, p in enumerate(polys)}


def harmonic_indices(max_degree: int = MAX_DEGREE) -> list[tuple[int, int]]:
    """(l, m) pairs with m = 0..2l enumerating the real harmonics."""
    return [(l, m) for l in range(max_degree + 1) for m in range(2 * l + 1)]


def harmonic(l: int, m: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """L2(unit sphere)-normalized harmonic Y_lm at directions x/|x|.

    Returns values and the tangential gradient on the unit sphere.
    """
    if not (0 <= l <= MAX_DEGREE and 0 <= m <= 2 * l):
        raise ValueError(f"invalid harmonic index ({l}, {m})")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x / np.linalg.norm(x, axis=1)[:, None]
    p = _SOLID[l][m]
    s = 1.0 / _norms()[(l, m)]
    val = s * _eval_poly(p, n)
    g = s * _eval_poly_grad(p, n)
    g -= np.einsum("ni,ni->n", g, n)[:, None] * n
    return val, g


@dataclass(frozen=True)
class SphereField:
    """Scalar (or vector) samples on the sphere of radius ``radius``.

    ``grad`` holds ambient gradients of some extension at the nodes;
    ``coeffs`` an expansion over :func:`harmonic_indices`. Either one
    enables tangential differentiation.
    """

    radius: float
    rule: SphereRule
    values: np.ndarray
    grad: np.ndarray | None = None
    coeffs: np.ndarray | None = None

    def __post_init__(self):
        if len(self.values) != len(self.rule):
            raise ValueError("sample count must equal rule node count")

    @property
    def points(self) -> np.ndarray:
        return self.radius * self.rule.nodes

    def integrate(self, values: np.ndarray | None = None) -> np.ndarray:
        return self.rule.integrate(self.values if values is None else values, self.radius)

    def norm2(self) -> float:
        return float(self.integrate(self.values**2))

    @classmethod
    def from_function(cls, f, radius: float, rule: SphereRule | None = None, grad_f=None):
        rule = rule or default_rule()
        y = radius * rule.nodes
        return cls(radius, rule, f(y), None if grad_f is None else grad_f(y))

    @classmethod
    def from_coeffs(cls, coeffs: np.ndarray, radius: float, rule: SphereRule | None = None):
        rule = rule or default_rule()
        coeffs = np.asarray(coeffs, dtype=float)
        vals = np.zeros(len(rule))
        for c, (l, m) in zip(coeffs, harmonic_indices()):
            if c:
                vals += c * harmonic(l, m, rule.nodes)[0]
        return cls(radius, rule, vals, coeffs=coeffs)


def tangential_gradient(phi: SphereField) -> SphereField:
    """Vector field grad_tau phi at the rule nodes."""
    nu = phi.rule.nodes
    if phi.grad is not None:
        g = np.asarray(phi.grad, dtype=float)
        g = g - np.einsum("ni,ni->n", g, nu)[:, None] * nu
    elif phi.coeffs is not None:
        g = np.zeros((len(nu), 3))
        for c, (l, m) in zip(phi.coeffs, harmonic_indices()):
            if c:
                g += c * harmonic(l, m, nu)[1]
        g /= phi.radius
    else:
        raise ExpansionRequired("field carries neither a gradient nor a harmonic expansion")
    return SphereField(phi.radius, phi.rule, g)


def project_components(phi: SphereField) -> tuple[SphereField, SphereField, SphereField]:
    """L2 projections onto constants, linear functions, and their complement."""
    a = phi.radius
    nu = phi.rule.nodes
    area = 4 * math.pi * a**2
    mean = phi.integrate() / area
    mom = phi.rule.integrate(phi.values[:, None] * nu, a)  # int phi y_i/a
    lin_c = 3.0 / area * mom
    p0 = np.full(len(nu), mean)
    p1 = nu @ lin_c
    g0 = g1 = g2 = None
    c0 = c1 = c2 = None
    if phi.grad is not None:
        g0 = np.zeros((len(nu), 3))
        g1 = np.broadcast_to(lin_c / a, (len(nu), 3)).copy()
        g2 = phi.grad - g1
    if phi.coeffs is not None:
        c0 = np.zeros_like(phi.coeffs)
        c1 = np.zeros_like(phi.coeffs)
        c0[0] = phi.coeffs[0]
        c1[1:4] = phi.coeffs[1:4]
        c2 = phi.coeffs - c0 - c1
    return (SphereField(a, phi.rule, p0, g0, c0),
            SphereField(a, phi.rule, p1, g1, c1),
            SphereField(a, phi.rule, phi.values - p0 - p1, g2, c2))


def eigencheck(l: int, m: int, radius: float = 1.0, rule: SphereRule | None = None) -> float:
    """Rayleigh quotient int|grad_tau Y|^2 / int Y^2 on the sphere of given radius."""
    rule = rule or default_rule()
    val, g = harmonic(l, m, rule.nodes)
    g = g / radius
    return float(rule.integrate(np.einsum("ni,ni->n", g, g), radius) / rule.integrate(val**2, radius))


def dirichlet_energy(phi: SphereField) -> float:
    g = tangential_gradient(phi).values
    return float(phi.integrate(np.einsum("ni,ni->n", g, g)))


def poincare_gap(phi: SphereField) -> float:
    """a^2/2 int|grad_tau phi|^2 + (int phi)^2/(4 pi a^2) - int phi^2 (>= 0)."""
    a = phi.radius
    return 0.5 * a**2 * dirichlet_energy(phi) + float(phi.integrate()) ** 2 / (4 * math.pi * a**2) - phi.norm2()


def coercivity_gap(phi: SphereField, params: CapillaryParams) -> tuple[float, float, float]:
    """(lhs, rhs, lhs - rhs) of the capillary coercivity estimate at radius a."""
    a = phi.radius
    g, lf = params.gamma, params.lambda_fl
    vol = 4.0 / 3.0 * math.pi * a**3
    s = float(phi.integrate())
    lhs = 0.5 * g * dirichlet_energy(phi) - g / a**2 * phi.norm2() + lf / (2 * vol) * s**2
    p2 = project_components(phi)[2]
    rhs = g / 3.0 * dirichlet_energy(p2) + (1.5 * lf - g / a) * s**2 / (4 * math.pi * a**3)
    return lhs, rhs, lhs - rhs


def random_band_limited(rng: np.random.Generator, radius: float, max_degree: int = MAX_DEGREE,
                        rule: SphereRule | None = None) -> SphereField:
    n = (max_degree + 1) ** 2
    c = np.zeros((MAX_DEGREE + 1) ** 2)
    c[:n] = rng.normal(size=n)
    return SphereField.from_coeffs(c, radius, rule)
