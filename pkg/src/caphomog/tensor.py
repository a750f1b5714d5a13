"""Small-matrix algebra and the nonlinear capillary/fluid energy of a cavity.

The energy of a deformation y restricted to a neighbourhood of the sphere of
radius a is

    J(y) = gamma * int |cof(grad y) e_r| dH
           + lambda_fl/2 * |B_a| * (|y(B_a)|/|B_a| - 1)**2 - p * |y(B_a)|

with the deformed volume obtained from the divergence theorem,
``|y(B_a)| = 1/3 int cof(grad y) e_r . y dH``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import OrientationFault, SingularBase
from .material import CapillaryParams

Vec3Field = Callable[[np.ndarray], np.ndarray]


def cofactor(A: np.ndarray) -> np.ndarray:
    """Cofactor matrix via the Cayley-Hamilton form.

    cof A = 1/2((tr A)^2 - tr A^2) I - (tr A) A^T + (A^T)^2. Works for a
    single matrix or a stack with trailing shape (3, 3).
    """
    A = np.asarray(A, dtype=float)
    At = np.swapaxes(A, -1, -2)
    tr = np.trace(A, axis1=-2, axis2=-1)
    tr2 = np.trace(A @ A, axis1=-2, axis2=-1)
    inv2 = 0.5 * (tr**2 - tr2)
    return inv2[..., None, None] * np.eye(3) - tr[..., None, None] * At + At @ At


def cof_sum_expansion(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """cof(A + B) from cof A, cof B and the rank-type correction.

    Raises :class:`SingularBase` when |det A| < 1e-14.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    d = np.linalg.det(A)
    if abs(d) < 1e-14:
        raise SingularBase(f"det A = {d:.3e} is too small for the expansion")
    cA = cofactor(A)
    return cA + cofactor(B) + (np.sum(cA * B) * cA - cA @ B.T @ cA) / d


def det_expansion_terms(G: np.ndarray) -> tuple[float, float, float, float]:
    """Coefficients (1, div, tr cof G, det G) of det(I + eps G) in powers of eps."""
    G = np.asarray(G, dtype=float)
    return 1.0, float(np.trace(G)), float(np.trace(cofactor(G))), float(np.linalg.det(G))


def cof_expansion_terms(G: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Matrix coefficients of cof(I + eps G) in powers of eps.

    The quadratic coefficient is written out explicitly rather than as cof G,
    so comparing it to :func:`cofactor` is a genuine identity check.
    """
    G = np.asarray(G, dtype=float)
    I = np.eye(3)
    div = np.trace(G)
    Gt = G.T
    c2 = 0.5 * (div**2 - np.trace(G @ G)) * I - div * Gt + Gt @ Gt
    return I.copy(), div * I - Gt, c2


def tangent_frame(nu: np.ndarray, seed_vec: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal (tau1, tau2) with tau1 x tau2 = nu."""
    nu = np.asarray(nu, dtype=float)
    if seed_vec is None:
        seed_vec = np.eye(3)[int(np.argmin(np.abs(nu)))]
    t1 = seed_vec - np.dot(seed_vec, nu) * nu
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(nu, t1)
    return t1, t2


def cof_normal_on_sphere(G: np.ndarray, nu: np.ndarray,
                         frame: tuple[np.ndarray, np.ndarray] | None = None) -> tuple[np.ndarray, float]:
    """(cof G) nu computed as G tau1 x G tau2, and its Euclidean norm."""
    nu = np.asarray(nu, dtype=float)
    if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
        raise ValueError("nu must be a unit vector")
    t1, t2 = frame if frame is not None else tangent_frame(nu)
    G = np.asarray(G, dtype=float)
    v = np.cross(G @ t1, G @ t2)
    return v, float(np.linalg.norm(v))


# ---------------------------------------------------------------------------
# energy J


@dataclass(frozen=True)
class SurfaceDeformation:
    """Closed-form deformation near the sphere of radius ``a``.

    ``position`` maps points (N, 3) -> (N, 3). ``gradient`` maps (N, 3) ->
    (N, 3, 3); when omitted, central differences with step 1e-6*a are used.
    """

    position: Vec3Field
    a: float
    gradient: Vec3Field | None = None

    def grad(self, x: np.ndarray) -> np.ndarray:
        if self.gradient is not None:
            return self.gradient(x)
        return fd_gradient(self.position, x, 1e-6 * self.a)

    @classmethod
    def identity_plus(cls, u: Vec3Field, grad_u: Vec3Field | None, eps: float, a: float):
        pos = lambda x: x + eps * u(x)
        if grad_u is None:
            return cls(pos, a)
        return cls(pos, a, lambda x: np.eye(3) + eps * grad_u(x))


def fd_gradient(f: Vec3Field, x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference Jacobian, out[n, i, j] = d f_i / d x_j."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    J = np.empty((len(x), 3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, :, j] = (f(x + e) - f(x - e)) / (2 * h)
    return J


@dataclass(frozen=True)
class _ProductRule:
    nodes: np.ndarray   # unit vectors
    weights: np.ndarray  # sum to 4 pi


def product_rule(n_theta: int = 32, n_phi: int = 64) -> _ProductRule:
    """Gauss-Legendre in cos(theta) times uniform azimuth."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    ct = np.repeat(x, n_phi)
    st = np.sqrt(1.0 - ct**2)
    P = np.tile(ph, n_theta)
    nodes = np.stack([st * np.cos(P), st * np.sin(P), ct], axis=1)
    weights = np.repeat(w, n_phi) * (2 * np.pi / n_phi)
    return _ProductRule(nodes, weights)


def surface_energy_J(deformation: SurfaceDeformation, params: CapillaryParams,
                     quad_order: tuple[int, int] = (32, 64)) -> float:
    """Evaluate J by sphere quadrature.

    Raises :class:`OrientationFault` if det(grad y) <= 0 at any node.
    """
    a = params.a
    rule = product_rule(*quad_order)
    x = a * rule.nodes
    w = a**2 * rule.weights
    Gy = deformation.grad(x)
    if np.any(np.linalg.det(Gy) <= 0):
        raise OrientationFault("deformation reverses orientation on the cavity surface")
    cn = np.einsum("nij,nj->ni", cofactor(Gy), rule.nodes)
    area = np.sum(w * np.linalg.norm(cn, axis=1))
    vol = np.sum(w * np.einsum("ni,ni->n", cn, deformation.position(x))) / 3.0
    V = params.volume
    return params.gamma * area + 0.5 * params.lambda_fl * V * (vol / V - 1.0) ** 2 - params.p * vol


def radial_phi_and_grad(u: Vec3Field, grad_u: Vec3Field, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi = u . x/|x| and its tangential gradient on the sphere through x."""
    r = np.linalg.norm(x, axis=1)
    er = x / r[:, None]
    U = u(x)
    Gu = grad_u(x)
    phi = np.einsum("ni,ni->n", U, er)
    # grad(u . x/|x|) = (grad u)^T e_r + (I - e_r e_r^T) u / |x|
    g = np.einsum("nij,ni->nj", Gu, er) + (U - phi[:, None] * er) / r[:, None]
    g_tan = g - np.einsum("ni,ni->n", g, er)[:, None] * er
    return phi, g_tan


def quadratic_surface_form(u: Vec3Field, grad_u: Vec3Field, params: CapillaryParams,
                           quad_order: tuple[int, int] = (32, 64)) -> float:
    """gamma/2 int|grad_tau phi|^2 - gamma/a^2 int phi^2 + lambda_fl/(2|B_a|) (int phi)^2."""
    a = params.a
    rule = product_rule(*quad_order)
    x = a * rule.nodes
    w = a**2 * rule.weights
    phi, gt = radial_phi_and_grad(u, grad_u, x)
    g = params.gamma
    return (0.5 * g * np.sum(w * np.einsum("ni,ni->n", gt, gt))
            - g / a**2 * np.sum(w * phi**2)
            + params.lambda_fl / (2 * params.volume) * np.sum(w * phi) ** 2)


def linearization_residual(u: Vec3Field, grad_u: Vec3Field, params: CapillaryParams,
                           eps_list: Sequence[float] = (1e-1, 1e-2, 1e-3),
                           quad_order: tuple[int, int] = (32, 64)) -> np.ndarray:
    """|J(id + eps u) - J(id) - eps^2 Q_surf(u)| for each eps.

    The second-order form should match J to O(eps^3) for smooth u.
    """
    J0 = surface_energy_J(SurfaceDeformation(lambda x: x, params.a, lambda x: np.broadcast_to(np.eye(3), (len(x), 3, 3))),
                          params, quad_order)
    q = quadratic_surface_form(u, grad_u, params, quad_order)
    out = []
    for eps in eps_list:
        J = surface_energy_J(SurfaceDeformation.identity_plus(u, grad_u, eps, params.a), params, quad_order)
        out.append(abs(J - J0 - eps**2 * q))
    return np.array(out)


def identity_energy(params: CapillaryParams) -> float:
    """Closed-form J(id) = 4/3 pi gamma a^2."""
    return 4.0 / 3.0 * math.pi * params.gamma * params.a**2
