"""Axisymmetric shell trial fields and the dual lower bound on the effective energy.

The trial stress is built inside the shell a < |y| < b from closed-form radial
coefficients and equals a constant diagonal stress
``sigma_bar = diag(s11, s11, s33)`` outside. It is in equilibrium, matches
tractions at |y| = b and carries a purely radial traction on the cavity. The
bound is a concave quadratic in (s11, s33); we assemble it from the two unit
fields and maximize exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConcavityFault, DegenerateDenominator, DomainFault, InsideCavity, StabilityFault
from .material import ElasticTensor, ball_volume, make_params
from .sphharm import SphereRule, default_rule

DEFAULT_B = 0.45


def shear_strain(f: float) -> np.ndarray:
    """Axisymmetric isochoric strain F(f) = f (e3 x e3 - (e1 x e1 + e2 x e2)/2)."""
    return f * np.diag([-0.5, -0.5, 1.0])


def _guard(den: float, scale: float, what: str) -> None:
    if not math.isfinite(den) or abs(den) <= 1e-12 * scale:
        raise DegenerateDenominator(f"{what} vanishes ({den:.3e} vs scale {scale:.3e})")


@dataclass(frozen=True)
class ShellCoeffs:
    lam: float
    mu: float
    lambda_fl: float
    gamma: float
    a: float
    b: float
    k: tuple[float, float, float, float, float, float]
    K: float

    def betas(self, s11: float, s33: float) -> np.ndarray:
        """beta_1..beta_8 for the outer stress diag(s11, s11, s33)."""
        k1, k2, k3, k4, k5, k6 = self.k
        lam, mu, a = self.lam, self.mu, self.a
        d = s11 - s33
        h = 2 * s11 + s33
        b1, b2, b3, b4 = k1 * d, k2 * d, k3 * d, k4 * d
        b5, b6 = k5 * h, k6 * h
        b7 = 6 * b2 + (18 * a**7 * b1 * lam + 6 * a**2 * b3 * (5 * mu + 3 * lam)
                       - 9 * b4 * (mu + lam)) / (a**5 * (mu + lam))
        b8 = 3 * (b6 / a**3 + b5) * ball_volume(a)
        return np.array([b1, b2, b3, b4, b5, b6, b7, b8])

    def alphas(self, r: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, ...]:
        """alpha_1..alpha_7 at radii r."""
        lam, mu = self.lam, self.mu
        b1, b2, b3, b4, b5, b6 = beta[:6]
        ml = mu + lam
        r = np.asarray(r, dtype=float)
        a1 = (15 * b1 * mu * lam * r**2 / ml - 2 * b2 * mu + b5 * (2 * mu + 3 * lam)
              + (2 * b6 * mu - 10 * b3 * mu**2 / ml) / r**3 + 3 * b4 * mu / r**5)
        a2 = (-12 * b1 * mu * lam / ml + 3 * mu * (2 * b3 * (5 * mu + 3 * lam) / ml - 2 * b6) / r**5
              - 15 * b4 * mu / r**7)
        a3 = -3 * b1 * mu * (14 * mu + 25 * lam) / ml + 18 * b3 * mu**2 / (r**5 * ml) - 15 * b4 * mu / r**7
        a4 = 105 * b4 * mu / r**9 - 90 * b3 * mu / r**7
        a5 = (6 * b1 * mu * lam / ml + (6 * b3 * mu * (5 * mu + 6 * lam) / ml - 6 * b6 * mu) / r**5
              - 45 * b4 * mu / r**7)
        a6 = (3 * b1 * mu * r**2 * (14 * mu + 15 * lam) / ml + 4 * b2 * mu + b5 * (2 * mu + 3 * lam)
              + (2 * b3 * mu**2 / ml + 2 * b6 * mu) / r**3 + 9 * b4 * mu / r**5)
        a7 = (-3 * b1 * mu * (14 * mu + 17 * lam) / ml - 6 * mu * (b6 * ml - b3 * (8 * mu + 9 * lam)) / (r**5 * ml)
              - 90 * b4 * mu / r**7)
        return a1, a2, a3, a4, a5, a6, a7


def shell_coeffs(lam: float, mu: float, lambda_fl: float, gamma: float, a: float, b: float) -> ShellCoeffs:
    if not (0 < a < b <= 0.5):
        raise DomainFault(f"need 0 < a < b <= 1/2, got a={a!r}, b={b!r}")
    if mu <= 0:
        raise DomainFault(f"shear modulus must be positive, got {mu!r}")
    g, lf = gamma, lambda_fl
    terms = [
        2 * a**11 * mu * (14 * mu + 9 * lam) * (14 * mu + 19 * lam),
        -8 * a**10 * g * (7 * mu + 5 * lam) * (14 * mu + 9 * lam),
        -50 * a**8 * b**3 * mu * (28 * mu**2 + 56 * mu * lam + 27 * lam**2),
        -200 * a**7 * b**3 * g * (7 * mu**2 + 11 * mu * lam + 3 * lam**2),
        2016 * a**6 * b**5 * mu * (mu + lam) ** 2,
        1008 * a**5 * b**5 * g * mu * (mu + lam),
        -50 * a**4 * b**7 * mu * (28 * mu**2 + 56 * mu * lam + 27 * lam**2),
        25 * a**3 * b**7 * g * (28 * mu**2 + 56 * mu * lam + 27 * lam**2),
        2 * a * b**10 * mu * (14 * mu + 9 * lam) * (14 * mu + 19 * lam),
        b**10 * g * (34 * mu + 15 * lam) * (14 * mu + 19 * lam),
    ]
    K = mu * sum(terms)
    _guard(K, mu * sum(abs(t) for t in terms), "K")

    k1 = (-20 * a**3 * b**3 / K * (mu + lam)
          * (2 * a**3 * mu * (mu + lam) + a**2 * g * mu - 2 * a * b**2 * mu * (mu + lam) + b**2 * g * (mu + lam)))
    k2 = b**3 / (6 * K) * (
        50 * a**8 * mu * (28 * mu**2 + 56 * mu * lam + 27 * lam**2)
        + 200 * a**7 * g * (7 * mu**2 + 11 * mu * lam + 3 * lam**2)
        - 1008 * a**6 * b**2 * mu * (mu + lam) ** 2
        - 504 * a**5 * b**2 * g * mu * (mu + lam)
        - 2 * a * b**7 * mu * (14 * mu + 9 * lam) * (14 * mu + 19 * lam)
        - b**7 * g * (34 * mu + 15 * lam) * (14 * mu + 19 * lam))
    k3 = 5.0 / 6.0 * a**3 * b**3 / K * (mu + lam) * (
        2 * a**8 * mu * (14 * mu + 19 * lam) - 8 * a**7 * g * (7 * mu + 5 * lam)
        - 2 * a * b**7 * mu * (14 * mu + 19 * lam) + b**7 * g * (14 * mu + 19 * lam))
    k4 = a**5 * b**5 / K * (
        2 * a**6 * mu * (mu + lam) * (14 * mu + 19 * lam) - 8 * a**5 * g * (mu + lam) * (7 * mu + 5 * lam)
        - 2 * a * b**5 * mu * (mu + lam) * (14 * mu + 19 * lam) - b**5 * g * mu * (14 * mu + 19 * lam))

    d56 = [12 * a**4 * mu * (2 * mu + 3 * lam - 3 * lf), 24 * a**3 * g * mu,
           -3 * a * b**3 * (2 * mu + 3 * lam) * (4 * mu + 3 * lf), 6 * b**3 * g * (2 * mu + 3 * lam)]
    D = sum(d56)
    _guard(D, sum(abs(t) for t in d56), "k5/k6 denominator")
    k5 = b**3 * (2 * g - 4 * a * mu - 3 * a * lf) / D
    # the k6 denominator is the same polynomial divided by 3
    k6 = -a**3 * b**3 * (2 * g + a * (2 * mu + 3 * lam - 3 * lf)) / D
    return ShellCoeffs(float(lam), float(mu), float(lf), float(g), float(a), float(b),
                       (k1, k2, k3, k4, k5, k6), K)


def _shell_sigma(Y: np.ndarray, coeffs: ShellCoeffs, beta: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(Y, axis=1)
    a1, a2, a3, a4, a5, a6, a7 = coeffs.alphas(r, beta)
    y1, y2, y3 = Y.T
    s = np.empty((len(Y), 3, 3))
    s[:, 0, 0] = a1 + a2 * y1**2 + a3 * y3**2 + a4 * y1**2 * y3**2
    s[:, 1, 1] = a1 + a2 * y2**2 + a3 * y3**2 + a4 * y2**2 * y3**2
    s[:, 2, 2] = a6 + a7 * y3**2 + a4 * y3**4
    s[:, 0, 1] = s[:, 1, 0] = a2 * y1 * y2 + a4 * y1 * y2 * y3**2
    s[:, 0, 2] = s[:, 2, 0] = a5 * y1 * y3 + a4 * y1 * y3**3
    s[:, 1, 2] = s[:, 2, 1] = a5 * y2 * y3 + a4 * y2 * y3**3
    return s


def shell_stress(y: np.ndarray, coeffs: ShellCoeffs, sigma_bar: tuple[float, float]) -> np.ndarray:
    """Trial stress at y (shape (3,) or (N, 3)).

    Raises :class:`InsideCavity` for any |y| < a.
    """
    Y = np.asarray(y, dtype=float)
    single = Y.ndim == 1
    Y = np.atleast_2d(Y)
    r = np.linalg.norm(Y, axis=1)
    if np.any(r < coeffs.a * (1 - 1e-14)):
        raise InsideCavity("stress requested inside the inclusion")
    s11, s33 = sigma_bar
    out = np.broadcast_to(np.diag([s11, s11, s33]).astype(float), (len(Y), 3, 3)).copy()
    inner = r <= coeffs.b
    if np.any(inner):
        out[inner] = _shell_sigma(Y[inner], coeffs, coeffs.betas(s11, s33))
    return out[0] if single else out


def xi_field(y: np.ndarray, beta7: float, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Tangential field on the cavity and its ambient gradient (N, 3, 3)."""
    y = np.atleast_2d(y)
    y1, y2, y3 = y.T
    a3 = a**3
    xi = beta7 * np.stack([-y1 * y3**2 / a3, -y2 * y3**2 / a3, y3 / a - y3**3 / a3], axis=1)
    G = np.zeros((len(y), 3, 3))
    G[:, 0, 0] = -y3**2 / a3
    G[:, 0, 2] = -2 * y1 * y3 / a3
    G[:, 1, 1] = -y3**2 / a3
    G[:, 1, 2] = -2 * y2 * y3 / a3
    G[:, 2, 2] = 1 / a - 3 * y3**2 / a3
    return xi, beta7 * G


def surface_divergence(grad: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """div_tau = tr((I - nu nu) grad) for an ambient gradient."""
    return np.trace(grad, axis1=1, axis2=2) - np.einsum("ni,nij,nj->n", nu, grad, nu)


# ---------------------------------------------------------------------------
# admissibility checks


def divergence_residual(coeffs: ShellCoeffs, sigma_bar: tuple[float, float], points: np.ndarray,
                        step: float | None = None) -> float:
    """max |div sigma| / (max |sigma| / a) by central differences (step 1e-5 a)."""
    h = 1e-5 * coeffs.a if step is None else step
    P = np.atleast_2d(points)
    div = np.zeros((len(P), 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        div += (shell_stress(P + e, coeffs, sigma_bar)[:, :, j] - shell_stress(P - e, coeffs, sigma_bar)[:, :, j]) / (2 * h)
    scale = np.abs(shell_stress(P, coeffs, sigma_bar)).max() / coeffs.a
    return float(np.abs(div).max() / scale)


def traction_residuals(coeffs: ShellCoeffs, sigma_bar: tuple[float, float], nu: np.ndarray) -> tuple[float, float]:
    """(continuity at |y| = b, tangential traction at |y| = a), both relative."""
    s11, s33 = sigma_bar
    sb = np.diag([s11, s11, s33])
    beta = coeffs.betas(s11, s33)
    tb = np.einsum("nij,nj->ni", _shell_sigma(coeffs.b * nu, coeffs, beta), nu)
    tbar = nu @ sb.T
    cont = np.abs(tb - tbar).max() / max(np.abs(tbar).max(), np.finfo(float).tiny)
    ta = np.einsum("nij,nj->ni", _shell_sigma(coeffs.a * nu, coeffs, beta), nu)
    tn = np.einsum("ni,ni->n", ta, nu)
    tang = np.linalg.norm(ta - tn[:, None] * nu, axis=1)
    par = float(np.max(tang / np.maximum(np.linalg.norm(ta, axis=1), np.finfo(float).tiny)))
    return float(cont), par


@dataclass(frozen=True)
class InterfaceReport:
    cond_i: float
    cond_ii: float
    tol: float = 1e-7

    @property
    def ok(self) -> bool:
        return self.cond_i <= self.tol and self.cond_ii <= self.tol


def verify_interface_conditions(coeffs: ShellCoeffs, sigma_bar: tuple[float, float],
                                nu: np.ndarray | None = None, rule: SphereRule | None = None,
                                beta_scale: float = 1.0) -> InterfaceReport:
    """Residuals of the two cavity conditions linking xi, t and the radial traction.

    ``beta_scale`` multiplies beta_7 (negative control only).
    """
    a, g = coeffs.a, coeffs.gamma
    s11, s33 = sigma_bar
    beta = coeffs.betas(s11, s33)
    b7 = beta[6] * beta_scale
    t = beta[7]
    rule = rule or default_rule()

    # (i) integral condition, by quadrature
    y = a * rule.nodes
    xi, G = xi_field(y, b7, a)
    integrand = -surface_divergence(G, rule.nodes) + 2.0 / a * np.einsum("ni,ni->n", xi, rule.nodes)
    vec = rule.integrate(integrand[:, None] * y, a)
    scale_i = rule.integrate(np.abs(integrand) * a, a) + np.finfo(float).tiny
    r1 = float(np.abs(vec).max() / scale_i)

    # (ii) pointwise balance
    if nu is None:
        nu = np.random.default_rng(0).normal(size=(1000, 3))
    nu = nu / np.linalg.norm(nu, axis=1)[:, None]
    y = a * nu
    xi, G = xi_field(y, b7, a)
    term_xi = 2 * g / 3 * (-surface_divergence(G, nu) + 2.0 / a * np.einsum("ni,ni->n", xi, nu))
    srr = np.einsum("ni,nij,nj->n", nu, _shell_sigma(y, coeffs, beta), nu)
    term_t = (coeffs.lambda_fl - 2 * g / (3 * a)) * t / ball_volume(a)
    res = term_xi - srr + term_t
    scale_ii = np.abs(term_xi).max() + np.abs(srr).max() + abs(term_t) + np.finfo(float).tiny
    return InterfaceReport(r1, float(np.abs(res).max() / scale_ii))


# ---------------------------------------------------------------------------
# the bound


def radial_rule(a: float, b: float, panels: int = 8, points: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre in s with r = a (b/a)^s (geometric grading toward a)."""
    x, w = np.polynomial.legendre.leggauss(points)
    L = math.log(b / a)
    rs, ws = [], []
    for p in range(panels):
        s = (p + (x + 1) / 2) / panels
        r = a * np.exp(L * s)
        rs.append(r)
        ws.append(w / (2 * panels) * L * r)
    return np.concatenate(rs), np.concatenate(ws)


@dataclass(frozen=True)
class BoundResult:
    bound: float
    sigma_bar: tuple[float, float]
    hessian: np.ndarray
    matrix_energy: float
    residuals: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def admissible(self) -> bool:
        r = self.residuals
        return (r.get("divergence", 0.0) <= 1e-6 and r.get("traction_b", 0.0) <= 1e-8
                and r.get("radial_a", 0.0) <= 1e-8 and r.get("cond_i", 0.0) <= 1e-7
                and r.get("cond_ii", 0.0) <= 1e-7)

    @property
    def certifies_enhancement(self) -> bool:
        return self.bound > self.matrix_energy


class _BoundForms:
    """Quadrature of the bound terms for the two unit outer stresses."""

    def __init__(self, coeffs: ShellCoeffs, A: ElasticTensor, rule: SphereRule, radial: tuple[np.ndarray, np.ndarray]):
        self.coeffs = coeffs
        a, b = coeffs.a, coeffs.b
        rr, rw = radial
        self.Y = (rr[:, None, None] * rule.nodes[None]).reshape(-1, 3)
        self.wt = (rw[:, None] * rr[:, None] ** 2 * rule.weights[None]).ravel()
        self.ys = a * rule.nodes
        self.ws = a**2 * rule.weights
        self.nu = rule.nodes
        self.A = A
        self.out_vol = 1.0 - ball_volume(b)
        self.units = [(1.0, 0.0), (0.0, 1.0)]
        self.sig = [_shell_sigma(self.Y, coeffs, coeffs.betas(*u)) for u in self.units]
        self.sig_a = [_shell_sigma(self.ys, coeffs, coeffs.betas(*u)) for u in self.units]
        self.sbar = [np.diag([u[0], u[0], u[1]]) for u in self.units]
        self.beta = [coeffs.betas(*u) for u in self.units]

    def linear(self, F: np.ndarray) -> np.ndarray:
        """Per unit field: (int_{Y minus B_a} sigma + int (sigma e_r) x y) . F, plus sigma_bar . F."""
        quad, direct = np.zeros(2), np.zeros(2)
        for i in range(2):
            vol = np.einsum("n,nij->ij", self.wt, self.sig[i]) + self.sbar[i] * self.out_vol
            tr = np.einsum("nij,nj->ni", self.sig_a[i], self.nu)
            surf = np.einsum("n,ni,nj->ij", self.ws, tr, self.ys)
            quad[i] = np.sum((vol + surf) * F)
            direct[i] = np.sum(self.sbar[i] * F)
        return quad, direct

    def hessian(self) -> np.ndarray:
        """Matrix of the quadratic part: -1/2 int Q^-1 - gamma/3 int|xi|^2 - L t^2/(2|B_a|)."""
        c = self.coeffs
        a, g = c.a, c.gamma
        L = c.lambda_fl - 2 * g / (3 * a)
        H = np.zeros((2, 2))
        xis = [xi_field(self.ys, bt[6], a)[0] for bt in self.beta]
        for i in range(2):
            for j in range(i, 2):
                sp = 0.5 * (self.sig[i] + self.sig[j])
                sm = 0.5 * (self.sig[i] - self.sig[j])
                # polarization of the compliance form
                qin = np.sum(self.wt * (self.A.Q_inv(sp) - self.A.Q_inv(sm)))
                bp = 0.5 * (self.sbar[i] + self.sbar[j])
                bm = 0.5 * (self.sbar[i] - self.sbar[j])
                qout = (self.A.Q_inv(bp) - self.A.Q_inv(bm)) * self.out_vol
                xx = np.sum(self.ws * np.einsum("ni,ni->n", xis[i], xis[j]))
                tt = self.beta[i][7] * self.beta[j][7]
                H[i, j] = H[j, i] = -(qin + qout) - 2 * g / 3 * xx - L * tt / ball_volume(a)
        return H


def lower_bound(f_mag: float, lam: float, mu: float, gamma: float, lambda_fl: float, a: float,
                b: float = DEFAULT_B, rule: SphereRule | None = None,
                radial: tuple[int, int] = (8, 32), check: bool = True,
                A: ElasticTensor | None = None) -> BoundResult:
    """Maximized dual lower bound on 1/2 A_hom F(f) . F(f).

    Raises :class:`ConcavityFault` when the 2x2 Hessian is not negative definite.
    """
    params = make_params(gamma, lambda_fl, a)
    if not params.stable:
        raise StabilityFault(f"gamma={gamma} >= 1.5*lambda_fl*a={1.5 * lambda_fl * a}")
    coeffs = shell_coeffs(lam, mu, lambda_fl, gamma, a, b)
    A = A or ElasticTensor.from_isotropic(lam, mu)
    rule = rule or default_rule()
    forms = _BoundForms(coeffs, A, rule, radial_rule(a, b, *radial))
    F = shear_strain(f_mag)
    lin, lin_direct = forms.linear(F)
    H = forms.hessian()
    ev = np.linalg.eigvalsh(H)
    if not ev[-1] < 0:
        raise ConcavityFault(f"bound Hessian eigenvalues {ev} are not all negative")
    x = np.linalg.solve(H, -lin)
    value = float(lin @ x + 0.5 * x @ H @ x)
    residuals = {"linear_term": float(np.abs(lin - lin_direct).max() / max(np.abs(lin_direct).max(), 1e-300)),
                 "hessian_max_eig": float(ev[-1])}
    if check:
        sb = (float(x[0]), float(x[1]))
        if np.any(x != 0):
            rng = np.random.default_rng(0)
            d = rng.normal(size=(200, 3))
            d /= np.linalg.norm(d, axis=1)[:, None]
            pts = (a + (b - a) * rng.random(200))[:, None] * d
            residuals["divergence"] = divergence_residual(coeffs, sb, pts)
            residuals["traction_b"], residuals["radial_a"] = traction_residuals(coeffs, sb, d)
            rep = verify_interface_conditions(coeffs, sb, d, rule)
            residuals["cond_i"], residuals["cond_ii"] = rep.cond_i, rep.cond_ii
    return BoundResult(value, (float(x[0]), float(x[1])), H, 0.5 * float(A.Q(F)), residuals,
                       dict(lam=lam, mu=mu, gamma=gamma, lambda_fl=lambda_fl, a=a, b=b, f=f_mag))


# ---------------------------------------------------------------------------
# dilute limit


def dilute_coefficient(lam: float, mu: float, gamma: float, a: float) -> float:
    """First-order coefficient (*) of the dilute expansion of the bound."""
    if mu <= 0 or a <= 0:
        raise DomainFault("need mu > 0 and a > 0")
    q = gamma / (2 * mu * a)
    den = 14 * mu + 9 * lam + (34 * mu + 15 * lam) * q
    if den <= 0 or abs(den) <= 1e-12 * (abs(14 * mu) + abs(9 * lam) + abs((34 * mu + 15 * lam) * q)):
        raise DegenerateDenominator(f"dilute denominator {den!r} is not positive")
    return 15 * mu * (lam + 2 * mu) * (q - 1) / den


def dilute_bound(f_mag: float, lam: float, mu: float, gamma: float, a: float, theta: float) -> float:
    """(3 mu/2) f^2 (1 + (*) theta)."""
    return 1.5 * mu * f_mag**2 * (1 + dilute_coefficient(lam, mu, gamma, a) * theta)


def enhancement_predicate(gamma: float, mu: float, a: float) -> bool:
    if mu <= 0 or a <= 0:
        raise DomainFault("need mu > 0 and a > 0")
    return gamma / mu > 2 * a


def radius_from_theta(theta: float) -> float:
    return (3 * theta / (4 * math.pi)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class SlopeCheck:
    thetas: tuple[float, ...]
    slopes: tuple[float, ...]
    extrapolated: float
    star: float

    @property
    def rel_deviation(self) -> float:
        return abs(self.extrapolated - self.star) / abs(self.star) if self.star else abs(self.extrapolated)


def bound_slope(lam: float, mu: float, q: float, theta: float, b: float = DEFAULT_B,
                lambda_fl_ratio: float = 100.0) -> float:
    """s(theta) = (bound/((3mu/2) f^2) - 1)/theta at gamma = 2 q mu a(theta), f = 1.

    The fluid modulus is lambda_fl_ratio * mu (kept above the stability threshold).
    """
    a = radius_from_theta(theta)
    res = lower_bound(1.0, lam, mu, 2 * q * mu * a, lambda_fl_ratio * mu, a, b, check=False)
    return (res.bound / (1.5 * mu) - 1.0) / theta


def dilute_limit_check(lam: float, mu: float, q: float, thetas=(1e-3, 1e-4), b: float = DEFAULT_B,
                       lambda_fl_ratio: float = 100.0) -> SlopeCheck:
    """Richardson-extrapolated slope at theta -> 0 against (*), with q = gamma/(2 mu a).

    The slope error is O(theta), so two thetas with ratio r extrapolate as
    (r s(t/r) - s(t)) / (r - 1).
    """
    if len(thetas) != 2:
        raise ValueError("exactly two theta values are needed")
    if max(thetas) > 1e-2:
        raise DomainFault("dilute check needs theta <= 1e-2")
    t0, t1 = thetas
    s0 = bound_slope(lam, mu, q, t0, b, lambda_fl_ratio)
    s1 = bound_slope(lam, mu, q, t1, b, lambda_fl_ratio)
    r = t0 / t1
    ext = (r * s1 - s0) / (r - 1)
    star = dilute_coefficient(lam, mu, 2 * q * mu, 1.0)
    return SlopeCheck((t0, t1), (s0, s1), ext, star)
