"""Command-line front end.

Exit codes: 0 ok, 1 verification failure, 2 usage or configuration error,
3 solver, geometry or stability fault.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .errors import (CapHomogError, ConcavityFault, DegenerateDenominator, DomainFault, GeometryFault,
                     SolverFault, StabilityFault)

SCHEMA = "capillary-homog/1"
UNITS = {
    "stress": "consistent stress unit (lambda, mu, lambda_fl, p)",
    "length": "unit cell side (Y = [-1/2, 1/2]^3)",
    "gamma": "stress * length",
    "volume": "length^3",
    "energy_density": "stress (energy per unit cell volume)",
    "tensor_basis": "Kelvin (11, 22, 33, sqrt2*23, sqrt2*13, sqrt2*12)",
}
SWEEP_COLUMNS = ["theta", "b", "lambda", "mu", "gamma_over_2mua", "lambda_fl", "bound", "slope", "star", "enhanced"]

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_FAULT = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


_KEYS = {
    "stability": {"gamma": float, "lfl": float, "a": float, "n": int, "csv": str},
    "sphere-check": {"a": float, "degree": int, "fields": int},
    "verify": {"perturb": bool, "fields": int},
    "cell": {"a": float, "lambda": float, "mu": float, "gamma": float, "lfl": float},
    "solve": {"a": float, "L": float, "lambda": float, "mu": float, "gamma": float, "lfl": float,
              "f": str, "mesh": str, "field_out": str},
    "dilute": {"lambda": float, "mu": float, "q": float, "theta": str, "b": float, "lfl_ratio": float},
    "sweep": {"lambda": str, "mu": float, "q": str, "theta": str, "b": str, "lfl_ratio": float},
}
_COMMON = {"out": str, "seed": int, "threads": int, "refine": int, "tol": float}


def _convert(kind, text: str):
    if kind is bool:
        t = text.strip().lower()
        if t in ("1", "true", "yes", "on"):
            return True
        if t in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"not a boolean: {text!r}")
    try:
        return kind(text)
    except ValueError as e:
        raise UsageError(f"bad value {text!r}: {e}") from e


@dataclass
class RunConfig:
    """Normalized parameters of one command invocation."""

    command: str
    params: dict = field(default_factory=dict)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp[self.command] = {k: ("true" if v is True else "false" if v is False else repr(v) if isinstance(v, float) else str(v))
                            for k, v in sorted(self.params.items()) if v is not None}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, command: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as e:
            raise UsageError(f"config parse error: {e}") from e
        kinds = {**_COMMON, **_KEYS.get(command, {})}
        params = {}
        for section in ("common", command):
            if cp.has_section(section):
                for k, v in cp.items(section):
                    if k not in kinds:
                        raise UsageError(f"unknown key {k!r} in section [{section}]")
                    params[k] = _convert(kinds[k], v)
        return cls(command, params)

    def normalized(self) -> dict:
        return {"command": self.command, "params": {k: v for k, v in sorted(self.params.items()) if v is not None}}


# ---------------------------------------------------------------------------
# output helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _report(command: str, inputs: dict, results: dict) -> str:
    doc = {"schema": SCHEMA, "command": command, "units": UNITS, "inputs": inputs, "results": results}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]
    except ValueError as e:
        raise UsageError(f"bad number list {text!r}") from e


def _need(p: dict, *keys: str) -> None:
    missing = [k for k in keys if p.get(k) is None]
    if missing:
        raise UsageError("missing required parameter(s): " + ", ".join("--" + k for k in missing))


# ---------------------------------------------------------------------------
# commands


def cmd_stability(p: dict) -> int:
    from .material import make_params, phi_minimize, phi_table

    _need(p, "gamma", "lfl", "a")
    prm = make_params(p["gamma"], p["lfl"], p["a"])
    prof = phi_minimize(prm)
    table = phi_table(prm, n=p.get("n") or 41)
    rows = [dict(zip(("t", "phi", "dphi", "d2phi"), map(float, r))) for r in table]
    if p.get("csv"):
        Path(p["csv"]).write_text(_csv(rows, ["t", "phi", "dphi", "d2phi"]))
    res = {"p": prm.p, "stable": prm.stable, "t_star": prof.t_star, "t_min": prof.t_min,
           "ball_volume": prm.volume, "t_local": prof.t_local,
           "phi_profile": [[r["t"], r["phi"], r["dphi"], r["d2phi"]] for r in rows]}
    _emit(_report("stability", {k: p[k] for k in ("gamma", "lfl", "a")}, res), p.get("out"))
    return EXIT_OK


def _sphere_suite(rng: np.random.Generator, a: float, n_fields: int, degree: int = 20) -> list[dict]:
    from .material import make_params
    from .sphharm import (SphereRule, coercivity_gap, eigencheck, harmonic_indices, poincare_gap,
                          project_components, random_band_limited)

    rule = SphereRule.gauss_product(degree)
    checks = []
    worst = 0.0
    for l, m in harmonic_indices():
        q = eigencheck(l, m, a, rule)
        ref = l * (l + 1) / a**2
        worst = max(worst, abs(q - ref) / max(ref, 1.0 / a**2))
    checks.append(_check("sphharm.eigen_rel_err", worst, 1e-8))
    lf = rng.uniform(1.0, 10.0)
    prm = make_params(rng.uniform(0.0, 1.4) * lf * a, lf, a)
    pg = cg = math.inf
    pars = 0.0
    for _ in range(n_fields):
        f = random_band_limited(rng, a, rule=rule)
        nrm = f.norm2()
        pg = min(pg, poincare_gap(f) / nrm)
        cg = min(cg, coercivity_gap(f, prm)[2] / (max(prm.gamma, prm.lambda_fl * a) * nrm / a**2))
        parts = project_components(f)
        pars = max(pars, abs(sum(x.norm2() for x in parts) - nrm) / nrm)
    checks.append(_check("sphharm.poincare_min_gap", pg, 1e-10, lower=True))
    checks.append(_check("sphharm.coercivity_min_slack", cg, 1e-10, lower=True))
    checks.append(_check("sphharm.parseval_rel_err", pars, 1e-10))
    return checks


def _check(name: str, value: float, tol: float, lower: bool = False) -> dict:
    """Residual check (value <= tol) or, with ``lower``, a slack check (value >= -tol)."""
    value = float(value)
    ok = value >= -tol if lower else value <= tol
    return {"name": name, "value": value, "tol": tol, "pass": bool(ok)}


def cmd_sphere_check(p: dict) -> int:
    rng = np.random.default_rng(p.get("seed", 0))
    a = p.get("a") or 1.0
    checks = _sphere_suite(rng, a, p.get("fields") or 200, p.get("degree") or 20)
    ok = all(c["pass"] for c in checks)
    _emit(_report("sphere-check", {"a": a, "seed": p.get("seed", 0)}, {"checks": checks, "ok": ok}), p.get("out"))
    return EXIT_OK if ok else EXIT_VERIFY


def _tensor_suite(rng: np.random.Generator) -> list[dict]:
    from .material import CapillaryParams, make_params
    from .tensor import (SurfaceDeformation, cof_expansion_terms, cof_sum_expansion, cofactor,
                         det_expansion_terms, linearization_residual, surface_energy_J)

    A = rng.uniform(-1, 1, size=(2000, 3, 3))
    d = np.linalg.det(A)
    lhs = np.swapaxes(cofactor(A), 1, 2) @ A
    err = np.abs(lhs - d[:, None, None] * np.eye(3)).max(axis=(1, 2)) / np.maximum(np.abs(A).max(axis=(1, 2)) ** 3, 1e-300)
    checks = [_check("tensor.cofactor_identity", err.max(), 1e-10)]
    e_sum = e_det = e_cof = 0.0
    for _ in range(50):
        G = rng.uniform(-1, 1, size=(3, 3))
        B = 1e-3 * rng.uniform(-1, 1, size=(3, 3))
        ref = cofactor(np.eye(3) + B)
        e_sum = max(e_sum, np.abs(cof_sum_expansion(np.eye(3), B) - ref).max() / np.abs(ref).max())
        eps = 10.0 ** rng.uniform(-3, 0)
        c = det_expansion_terms(G)
        e_det = max(e_det, abs(np.linalg.det(np.eye(3) + eps * G) - (c[0] + eps * c[1] + eps**2 * c[2] + eps**3 * c[3])))
        t = cof_expansion_terms(G)
        e_cof = max(e_cof, np.abs(cofactor(np.eye(3) + eps * G) - (t[0] + eps * t[1] + eps**2 * t[2])).max())
    checks += [_check("tensor.cof_sum_expansion", e_sum, 1e-10), _check("tensor.det_expansion", e_det, 1e-12),
               _check("tensor.cof_expansion", e_cof, 1e-12)]
    gam, lf, a = rng.uniform(0.1, 2.0), rng.uniform(5.0, 20.0), rng.uniform(0.1, 0.4)
    prm = make_params(gam, lf, a)
    ident = SurfaceDeformation(lambda x: x, a, lambda x: np.broadcast_to(np.eye(3), (len(x), 3, 3)))
    J0 = surface_energy_J(ident, prm)
    checks.append(_check("tensor.J_identity", abs(J0 - 4 / 3 * math.pi * gam * a**2) / (gam * a**2), 1e-10))
    dl = 0.05
    dil = SurfaceDeformation(lambda x: (1 + dl) * x, a, lambda x: np.broadcast_to((1 + dl) * np.eye(3), (len(x), 3, 3)))
    V = 4 / 3 * math.pi * a**3
    ref = gam * 4 * math.pi * a**2 * (1 + dl) ** 2 + 0.5 * lf * V * ((1 + dl) ** 3 - 1) ** 2 - prm.p * V * (1 + dl) ** 3
    checks.append(_check("tensor.J_dilation", abs(surface_energy_J(dil, prm) - ref) / abs(ref), 1e-8))
    worst = 0.0
    for _ in range(3):
        C = rng.normal(size=(3, 3))
        Q = rng.normal(size=(3, 3, 3)) / a
        u = lambda x, C=C, Q=Q: x @ C.T + np.einsum("ijk,nj,nk->ni", Q, x, x)
        gu = lambda x, C=C, Q=Q: C[None] + np.einsum("ijk,nk->nij", Q + Q.transpose(0, 2, 1), x)
        r = linearization_residual(u, gu, prm, eps_list=(1e-2, 1e-3))
        ratio = (r[0] / r[1]) / 1e3
        worst = max(worst, abs(math.log2(ratio)) if ratio > 0 else math.inf)
    checks.append(_check("tensor.linearization_log2_ratio_dev", worst, 1.0))
    return checks


def _material_suite(rng: np.random.Generator) -> list[dict]:
    from .material import make_params, phi_minimize

    worst = 0.0
    for _ in range(50):
        a = rng.uniform(0.05, 0.5)
        lf = rng.uniform(0.5, 50)
        prm = make_params(rng.uniform(0, 0.99) * 1.5 * lf * a, lf, a)
        worst = max(worst, abs(phi_minimize(prm).t_min - prm.volume) / prm.volume, phi_minimize(prm).confirmed_rel_error)
    return [_check("material.phi_min_rel_err", worst, 1e-8)]


def _dilute_suite(rng: np.random.Generator, perturb: bool) -> list[dict]:
    from .dilute import divergence_residual, shell_coeffs, traction_residuals, verify_interface_conditions

    div = tb = ra = c1 = c2 = 0.0
    for _ in range(10):
        lam, mu = rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)
        a = rng.uniform(0.05, 0.3)
        b = rng.uniform(a + 0.05, 0.5)
        g = rng.uniform(0.0, 3.0) * mu * a
        lf = rng.uniform(1.1, 20.0) * g / (1.5 * a) + 0.1
        co = shell_coeffs(lam, mu, lf, g, a, b)
        sb = tuple(rng.normal(size=2))
        d = rng.normal(size=(100, 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        pts = (a + (b - a) * rng.uniform(0.01, 0.99, size=100))[:, None] * d
        div = max(div, divergence_residual(co, sb, pts))
        x, y = traction_residuals(co, sb, d)
        tb, ra = max(tb, x), max(ra, y)
        rep = verify_interface_conditions(co, sb, d, beta_scale=1.01 if perturb else 1.0)
        c1, c2 = max(c1, rep.cond_i), max(c2, rep.cond_ii)
    return [_check("dilute.divergence", div, 1e-6), _check("dilute.traction_b", tb, 1e-8),
            _check("dilute.radial_a", ra, 1e-8), _check("dilute.cond_i", c1, 1e-7),
            _check("dilute.cond_ii", c2, 1e-7)]


def verify_report(seed: int, perturb: bool = False, fields: int = 100) -> tuple[str, bool]:
    rng = np.random.default_rng(seed)
    checks = []
    checks += _tensor_suite(rng)
    checks += _material_suite(rng)
    checks += _sphere_suite(rng, rng.uniform(0.1, 1.0), fields)
    checks += _dilute_suite(rng, perturb)
    ok = all(c["pass"] for c in checks)
    return _report("verify", {"seed": seed, "perturb": perturb, "fields": fields},
                   {"checks": checks, "ok": ok}), ok


def cmd_verify(p: dict) -> int:
    text, ok = verify_report(p.get("seed", 0), bool(p.get("perturb")), p.get("fields") or 100)
    _emit(text, p.get("out"))
    return EXIT_OK if ok else EXIT_VERIFY


def _params_or_void(gamma: float, lfl: float, a: float):
    from .material import CapillaryParams, make_params

    if gamma == 0 and lfl == 0:
        return CapillaryParams.void(a)
    return make_params(gamma, lfl, a)


def cmd_cell(p: dict) -> int:
    from .material import ElasticTensor
    from .mesh import build_cell_mesh, mesh_quality
    from .solve import HomogenizedTensor, compute_Ahom, cubic_symmetry_defect

    _need(p, "a", "lambda", "mu", "gamma", "lfl")
    refine = p.get("refine") or 2
    tol = p.get("tol") or 1e-10
    prm = _params_or_void(p["gamma"], p["lfl"], p["a"])
    A = ElasticTensor.from_isotropic(p["lambda"], p["mu"])
    mesh = build_cell_mesh(p["a"], refine)
    sol = compute_Ahom(mesh, A, prm, tol)
    H = HomogenizedTensor(sol.matrix, refine, tol)
    res = {"A_hom": H.matrix, "eigenvalues": H.eigenvalues, "symmetry_defect": H.symmetry_defect,
           "cubic_symmetry_defect": cubic_symmetry_defect(H.matrix), "positive_definite": bool(H.eigenvalues[0] > 0),
           "mesh_quality": mesh_quality(mesh).as_dict(),
           "solver": {"tol": tol, "iterations": [s.iterations for s in sol.stats],
                      "rel_residuals": [s.rel_residual for s in sol.stats]}}
    inputs = {k: p[k] for k in ("a", "lambda", "mu", "gamma", "lfl")}
    inputs.update(refine=refine, tol=tol)
    _emit(_report("cell", inputs, res), p.get("out"))
    return EXIT_OK


def cmd_solve(p: dict) -> int:
    from .material import ElasticTensor
    from .mesh import DomainMesh, build_domain_mesh, mesh_quality, read_mesh, write_mesh
    from .solve import check_interface_identity, solve_single_inclusion

    lam, mu = p.get("lambda", 1.0), p.get("mu", 1.0)
    if p.get("mesh"):
        try:
            mesh, _ = read_mesh(p["mesh"])
        except GeometryFault as e:
            raise UsageError(f"bad mesh file: {e}") from e
        if not isinstance(mesh, DomainMesh):
            raise UsageError("solve needs a non-periodic mesh file")
        a = mesh.a
    else:
        a = p.get("a") if p.get("a") is not None else 0.2
        mesh = build_domain_mesh(p.get("L") or 0.5, a, p.get("refine") or 2)
    gamma = p.get("gamma") if p.get("gamma") is not None else 0.4
    lfl = p.get("lfl") if p.get("lfl") is not None else 10.0
    prm = _params_or_void(gamma, lfl, a)
    f = np.array(_floats(p.get("f") or "0,0,1"))
    if f.shape != (3,):
        raise UsageError("--f needs three components")
    A = ElasticTensor.from_isotropic(lam, mu)
    u = solve_single_inclusion(mesh, A, prm, f, p.get("tol") or 1e-10)
    ident = check_interface_identity(u, A, prm, f)
    if p.get("field_out"):
        write_mesh(mesh, p["field_out"], u.values)
    res = {"interface_identity": {"lhs": ident.lhs, "rhs": ident.rhs, "residual": ident.residual},
           "max_displacement": float(np.abs(u.values).max()),
           "solver": {"iterations": u.stats.iterations if u.stats else 0,
                      "rel_residual": u.stats.rel_residual if u.stats else 0.0},
           "mesh_quality": mesh_quality(mesh).as_dict(), "field_file": p.get("field_out")}
    inputs = {"lambda": lam, "mu": mu, "gamma": gamma, "lfl": lfl, "a": a, "f": f,
              "L": mesh.half_width, "refine": mesh.refine}
    _emit(_report("solve", inputs, res), p.get("out"))
    return EXIT_OK


def _bound_row(lam: float, mu: float, q: float, theta: float, b: float, lfl_ratio: float) -> dict:
    from .dilute import dilute_coefficient, lower_bound, radius_from_theta

    a = radius_from_theta(theta)
    g = 2 * q * mu * a
    res = lower_bound(1.0, lam, mu, g, lfl_ratio * mu, a, b)
    if not res.admissible:
        raise ConcavityFault(f"trial fields inadmissible: {res.residuals}")
    return {"theta": theta, "b": b, "lambda": lam, "mu": mu, "gamma_over_2mua": q, "lambda_fl": lfl_ratio * mu,
            "bound": res.bound, "slope": (res.bound / (1.5 * mu) - 1) / theta,
            "star": dilute_coefficient(lam, mu, g, a), "enhanced": int(res.certifies_enhancement)}


def cmd_dilute(p: dict) -> int:
    from .dilute import DEFAULT_B, dilute_limit_check

    _need(p, "lambda", "mu", "q")
    thetas = _floats(p.get("theta") or "1e-3,1e-4")
    b = p.get("b") or DEFAULT_B
    ratio = p.get("lfl_ratio") or 100.0
    rows = [_bound_row(p["lambda"], p["mu"], p["q"], t, b, ratio) for t in thetas]
    _emit(_csv(rows, SWEEP_COLUMNS), p.get("out"))
    if len(thetas) == 2 and max(thetas) <= 1e-2:
        chk = dilute_limit_check(p["lambda"], p["mu"], p["q"], tuple(thetas), b, ratio)
        sys.stderr.write(f"extrapolated slope {chk.extrapolated!r}, star {chk.star!r}, "
                         f"relative deviation {chk.rel_deviation:.3e}\n")
    return EXIT_OK


def cmd_sweep(p: dict) -> int:
    from .dilute import DEFAULT_B

    lams = _floats(p.get("lambda") or "0.5,1,2")
    qs = _floats(p.get("q") or "0.5,1,2,4")
    thetas = _floats(p.get("theta") or "1e-2,1e-3")
    bs = _floats(p.get("b") or str(DEFAULT_B))
    mu = p.get("mu") or 1.0
    ratio = p.get("lfl_ratio") or 100.0
    rows = [_bound_row(lam, mu, q, t, b, ratio) for lam in lams for q in qs for t in thetas for b in bs]
    _emit(_csv(rows, SWEEP_COLUMNS), p.get("out"))
    return EXIT_OK


COMMANDS = {"stability": cmd_stability, "sphere-check": cmd_sphere_check, "verify": cmd_verify,
            "cell": cmd_cell, "solve": cmd_solve, "dilute": cmd_dilute, "sweep": cmd_sweep}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--seed", type=int, help="random seed for property suites")
    common.add_argument("--threads", type=int, help="threads for compiled kernels")
    common.add_argument("--refine", type=int, help="mesh refinement level")
    common.add_argument("--tol", type=float, help="relative CG tolerance")
    common.add_argument("--config", help="INI file with [common] and per-command sections")

    ap = argparse.ArgumentParser(prog="caphomog", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stability", parents=[common], help="equilibrium and stability of the cavity")
    s.add_argument("--gamma", type=float)
    s.add_argument("--lfl", type=float)
    s.add_argument("--a", type=float)
    s.add_argument("--n", type=int, help="profile sample count")
    s.add_argument("--csv", help="also write the profile as CSV")

    s = sub.add_parser("sphere-check", parents=[common], help="spherical-harmonic inequality suite")
    s.add_argument("--a", type=float)
    s.add_argument("--degree", type=int)
    s.add_argument("--fields", type=int)

    s = sub.add_parser("verify", parents=[common], help="run all residual suites")
    s.add_argument("--perturb", action="store_true", default=None, help="inject a coefficient error")
    s.add_argument("--fields", type=int)

    for name in ("cell", "solve"):
        s = sub.add_parser(name, parents=[common],
                           help="homogenized tensor" if name == "cell" else "single inclusion in a box")
        s.add_argument("--a", type=float)
        s.add_argument("--lambda", dest="lambda", type=float)
        s.add_argument("--mu", type=float)
        s.add_argument("--gamma", type=float)
        s.add_argument("--lfl", type=float)
        if name == "solve":
            s.add_argument("--L", type=float, help="box half-width")
            s.add_argument("--f", help="body force, e.g. 0,0,1")
            s.add_argument("--mesh", help="capmesh file")
            s.add_argument("--field-out", dest="field_out", help="nodal field file")

    s = sub.add_parser("dilute", parents=[common], help="dual bound at given volume fractions")
    s.add_argument("--lambda", dest="lambda", type=float)
    s.add_argument("--mu", type=float)
    s.add_argument("--q", type=float, help="gamma/(2 mu a)")
    s.add_argument("--theta", help="comma separated volume fractions")
    s.add_argument("--b", type=float)
    s.add_argument("--lfl-ratio", dest="lfl_ratio", type=float, help="lambda_fl / mu")

    s = sub.add_parser("sweep", parents=[common], help="CSV sweep of the dual bound")
    s.add_argument("--lambda", dest="lambda", help="comma separated")
    s.add_argument("--mu", type=float)
    s.add_argument("--q", help="comma separated gamma/(2 mu a)")
    s.add_argument("--theta", help="comma separated")
    s.add_argument("--b", help="comma separated")
    s.add_argument("--lfl-ratio", dest="lfl_ratio", type=float)
    return ap


def parse(argv: list[str]) -> RunConfig:
    ap = build_parser()
    ns = ap.parse_args(argv)
    params = {}
    if ns.config:
        try:
            text = Path(ns.config).read_text()
        except OSError as e:
            raise UsageError(f"cannot read config: {e}") from e
        params.update(RunConfig.from_ini(text, ns.command).params)
    for k, v in vars(ns).items():
        if k in ("command", "config") or v is None:
            continue
        params[k] = v
    return RunConfig(ns.command, params)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    except UsageError as e:
        sys.stderr.write(f"caphomog: error: {e}\n")
        return EXIT_USAGE
    kernels.set_threads(cfg.params.get("threads"))
    try:
        return COMMANDS[cfg.command](cfg.params)
    except UsageError as e:
        sys.stderr.write(f"caphomog: error: {e}\n")
        return EXIT_USAGE
    except DomainFault as e:
        sys.stderr.write(f"caphomog: invalid parameters: {e}\n")
        return EXIT_USAGE
    except (SolverFault, StabilityFault, GeometryFault, ConcavityFault, DegenerateDenominator) as e:
        sys.stderr.write(f"caphomog: {type(e).__name__}: {e}\n")
        return EXIT_FAULT
    except CapHomogError as e:
        sys.stderr.write(f"caphomog: {type(e).__name__}: {e}\n")
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
