"""Material records, equilibrium pressure and the cavity-volume energy profile.

Symmetric 3x3 tensors are mapped to 6-vectors in the orthonormal Kelvin basis
ordered as (11, 22, 33, sqrt2*23, sqrt2*13, sqrt2*12). In that basis the
Frobenius product of two symmetric tensors is the Euclidean product of their
Kelvin vectors, so a rank-4 Hooke tensor becomes an ordinary 6x6 matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainFault

SQRT2 = math.sqrt(2.0)
ISOPERIMETRIC_C = (36.0 * math.pi) ** (1.0 / 3.0)

# (row, col) index pair behind each Kelvin component
KELVIN_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
KELVIN_LABELS = ("11", "22", "33", "23", "13", "12")


def kelvin_basis() -> np.ndarray:
    """Return the six orthonormal basis tensors, shape (6, 3, 3)."""
    E = np.zeros((6, 3, 3))
    for I, (i, j) in enumerate(KELVIN_PAIRS):
        if i == j:
            E[I, i, i] = 1.0
        else:
            E[I, i, j] = E[I, j, i] = 1.0 / SQRT2
    return E


def to_kelvin(S: np.ndarray) -> np.ndarray:
    """Kelvin 6-vector(s) of symmetric tensor(s) with trailing shape (3, 3)."""
    S = np.asarray(S, dtype=float)
    return np.stack(
        [S[..., 0, 0], S[..., 1, 1], S[..., 2, 2],
         SQRT2 * S[..., 1, 2], SQRT2 * S[..., 0, 2], SQRT2 * S[..., 0, 1]],
        axis=-1,
    )


def from_kelvin(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_kelvin`."""
    v = np.asarray(v, dtype=float)
    S = np.empty(v.shape[:-1] + (3, 3))
    S[..., 0, 0], S[..., 1, 1], S[..., 2, 2] = v[..., 0], v[..., 1], v[..., 2]
    S[..., 1, 2] = S[..., 2, 1] = v[..., 3] / SQRT2
    S[..., 0, 2] = S[..., 2, 0] = v[..., 4] / SQRT2
    S[..., 0, 1] = S[..., 1, 0] = v[..., 5] / SQRT2
    return S


def ball_volume(a: float) -> float:
    return 4.0 / 3.0 * math.pi * a**3


@dataclass(frozen=True)
class CapillaryParams:
    """Surface tension, fluid bulk modulus and cavity radius.

    The pressure is derived, never stored independently, so that the
    equilibrium relation ``p * a == 2 * gamma`` always holds.
    """

    gamma: float
    lambda_fl: float
    a: float

    @property
    def p(self) -> float:
        return 2.0 * self.gamma / self.a

    @property
    def stable(self) -> bool:
        # strict: the boundary case gamma = 1.5 lambda_fl a is unstable
        return self.gamma < 1.5 * self.lambda_fl * self.a

    @property
    def is_void(self) -> bool:
        return self.gamma == 0.0 and self.lambda_fl == 0.0

    @property
    def volume(self) -> float:
        return ball_volume(self.a)

    @classmethod
    def void(cls, a: float) -> "CapillaryParams":
        """Empty, tension-free cavity (no fluid, no surface energy)."""
        if not (math.isfinite(a) and a > 0):
            raise DomainFault(f"cavity radius must be positive, got {a!r}")
        return cls(0.0, 0.0, float(a))


def make_params(gamma: float, lambda_fl: float, a: float) -> CapillaryParams:
    """Validate and build a :class:`CapillaryParams` record."""
    vals = (gamma, lambda_fl, a)
    if not all(math.isfinite(v) for v in vals):
        raise DomainFault(f"non-finite parameter in {vals!r}")
    if gamma < 0:
        raise DomainFault(f"surface tension must be >= 0, got {gamma!r}")
    if lambda_fl <= 0:
        raise DomainFault(f"fluid bulk modulus must be > 0, got {lambda_fl!r}")
    if a <= 0:
        raise DomainFault(f"cavity radius must be > 0, got {a!r}")
    return CapillaryParams(float(gamma), float(lambda_fl), float(a))


@dataclass(frozen=True)
class ElasticTensor:
    """Rank-4 Hooke tensor with minor and major symmetries."""

    components: np.ndarray
    isotropic: tuple[float, float] | None = None
    _kelvin: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        C = np.array(self.components, dtype=float)
        if C.shape != (3, 3, 3, 3) or not np.all(np.isfinite(C)):
            raise DomainFault("Hooke tensor must be a finite (3,3,3,3) array")
        sym = (np.allclose(C, C.transpose(1, 0, 2, 3), atol=1e-12 * max(1.0, abs(C).max()))
               and np.allclose(C, C.transpose(0, 1, 3, 2), atol=1e-12 * max(1.0, abs(C).max()))
               and np.allclose(C, C.transpose(2, 3, 0, 1), atol=1e-12 * max(1.0, abs(C).max())))
        if not sym:
            raise DomainFault("Hooke tensor lacks minor/major symmetry")
        C.setflags(write=False)
        object.__setattr__(self, "components", C)
        E = kelvin_basis()
        K = np.einsum("Iij,ijkl,Jkl->IJ", E, C, E)
        K = 0.5 * (K + K.T)
        K.setflags(write=False)
        object.__setattr__(self, "_kelvin", K)

    @classmethod
    def from_isotropic(cls, lam: float, mu: float) -> "ElasticTensor":
        d = np.eye(3)
        C = (lam * np.einsum("ij,kl->ijkl", d, d)
             + mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)))
        return cls(C, isotropic=(float(lam), float(mu)))

    @classmethod
    def from_kelvin(cls, K: np.ndarray) -> "ElasticTensor":
        E = kelvin_basis()
        C = np.einsum("IJ,Iij,Jkl->ijkl", np.asarray(K, dtype=float), E, E)
        return cls(C)

    def kelvin(self) -> np.ndarray:
        """6x6 matrix in the Kelvin basis."""
        return self._kelvin

    def Q(self, F: np.ndarray) -> float | np.ndarray:
        """Quadratic form A F . F (on the symmetric part of F)."""
        F = np.asarray(F, dtype=float)
        v = to_kelvin(0.5 * (F + np.swapaxes(F, -1, -2)))
        return np.einsum("...I,IJ,...J->...", v, self._kelvin, v)

    def Q_inv(self, S: np.ndarray) -> float | np.ndarray:
        """Complementary form A^{-1} S . S for symmetric S."""
        v = to_kelvin(np.asarray(S, dtype=float))
        if self.isotropic is not None:
            lam, mu = self.isotropic
            tr = v[..., 0] + v[..., 1] + v[..., 2]
            return (np.einsum("...I,...I->...", v, v) - lam / (2 * mu + 3 * lam) * tr**2) / (2 * mu)
        C = np.linalg.inv(self._kelvin)
        return np.einsum("...I,IJ,...J->...", v, C, v)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._kelvin)

    def is_positive_definite(self) -> bool:
        return bool(self.eigenvalues()[0] > 0)


# ---------------------------------------------------------------------------
# cavity volume energy profile


@dataclass(frozen=True)
class PhiProfile:
    """Lower envelope of the capillary energy as a function of cavity volume.

    ``t_min`` is the global minimizer on t >= 0; ``t_local`` the interior
    local minimizer beyond the inflection point ``t_star``.
    """

    params: CapillaryParams
    C: float
    t_star: float
    t_min: float
    t_local: float
    confirmed_rel_error: float


def _phi_parts(t: float, params: CapillaryParams):
    g, lf, V = params.gamma, params.lambda_fl, params.volume
    C = ISOPERIMETRIC_C
    phi = g * C * t ** (2.0 / 3.0) + 0.5 * lf * V * (t / V - 1.0) ** 2 - params.p * t
    if t > 0:
        d1 = 2.0 / 3.0 * g * C * t ** (-1.0 / 3.0) + lf * (t / V - 1.0) - params.p
        d2 = -2.0 / 9.0 * g * C * t ** (-4.0 / 3.0) + lf / V
    elif g > 0:
        d1, d2 = math.inf, -math.inf
    else:
        d1, d2 = -lf - params.p, lf / V
    return phi, d1, d2


def phi_eval(t: float, params: CapillaryParams) -> tuple[float, float, float]:
    """Return (Phi, Phi', Phi'') at volume ``t``; Phi'(0) is +inf when gamma > 0."""
    if t < 0:
        raise DomainFault(f"volume must be >= 0, got {t!r}")
    return _phi_parts(float(t), params)


def t_star(params: CapillaryParams) -> float:
    """Inflection point of Phi (0 when there is no surface tension)."""
    if params.gamma == 0:
        return 0.0
    return (9.0 * params.lambda_fl / (2.0 * params.gamma * ISOPERIMETRIC_C * params.volume)) ** (-0.75)


_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_then_bisect(params: CapillaryParams, lo: float, hi: float, scale: float) -> float:
    """Minimize the strictly convex branch of Phi on [lo, hi].

    Golden-section narrows the bracket until Phi differences drown in
    rounding; the last digits come from bisection on the sign of Phi'.
    """
    phi = lambda t: _phi_parts(t, params)[0]
    c = hi - _GOLD * (hi - lo)
    d = lo + _GOLD * (hi - lo)
    fc, fd = phi(c), phi(d)
    while hi - lo > 1e-6 * scale:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLD * (hi - lo)
            fc = phi(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLD * (hi - lo)
            fd = phi(d)
    while hi - lo > 1e-13 * scale:
        mid = 0.5 * (lo + hi)
        if _phi_parts(mid, params)[1] > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def phi_minimize(params: CapillaryParams) -> PhiProfile:
    """Locate the minimizer of Phi.

    For stable parameters the minimizer is the undeformed volume, returned
    exactly and cross-checked by a bracketed numerical search.
    """
    V = params.volume
    ts = t_star(params)
    lo = max(ts, 0.0)
    hi = max(2.0 * lo, V)
    while _phi_parts(hi, params)[1] <= 0:
        hi *= 2.0
    t_loc = _golden_then_bisect(params, lo, hi, V)
    if params.stable:
        return PhiProfile(params, ISOPERIMETRIC_C, ts, V, t_loc, abs(t_loc - V) / V)
    # past the threshold the undeformed volume is a local maximum; the global
    # minimum is either the interior one or the collapsed cavity t = 0
    t_min = t_loc if _phi_parts(t_loc, params)[0] < _phi_parts(0.0, params)[0] else 0.0
    return PhiProfile(params, ISOPERIMETRIC_C, ts, t_min, t_loc, float("nan"))


def phi_table(params: CapillaryParams, n: int = 41, t_max_factor: float = 2.0) -> np.ndarray:
    """Rows (t, Phi, Phi', Phi'') on a uniform grid of [0, t_max_factor*|B_a|]."""
    ts = np.linspace(0.0, t_max_factor * params.volume, n)
    return np.array([(t, *phi_eval(t, params)) for t in ts])
