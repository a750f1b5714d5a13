"""Cube-sphere tetrahedral meshes of a box with a spherical hole.

The cube surface is covered by six equiangular n x n grids. Rays from the
origin through these grid points carry m + 1 nodes, geometrically graded from
the cavity sphere (layer 0) to the cube face (layer m). Each hexahedral block
is cut into six tetrahedra along its diagonal from the corner with the lowest
tangential grid indices on the inner layer. Since all sectors order their
grid indices by increasing global coordinate, shared faces get the same
diagonal and opposite cube faces carry identical triangulations.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GeometryFault

KUHN_PERMS = tuple(itertools.permutations(range(3)))


@dataclass(frozen=True)
class SurfacePatch:
    """Triangulated cavity sphere; ``tri`` uses global node numbers."""

    node_ids: np.ndarray
    positions: np.ndarray
    e_r: np.ndarray
    tri: np.ndarray
    areas: np.ndarray
    a: float

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @property
    def area_defect(self) -> float:
        return abs(self.total_area / (4 * math.pi * self.a**2) - 1.0)

    def normals(self, nodes: np.ndarray) -> np.ndarray:
        p = nodes[self.tri]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return n / np.linalg.norm(n, axis=1)[:, None]


@dataclass(frozen=True)
class PeriodicMesh:
    """Tetrahedral mesh of [-h, h]^3 minus the ball of radius a.

    ``pairs`` rows are (slave, partner, axis): the slave sits on the face
    x_axis = +h and the partner on x_axis = -h.
    """

    nodes: np.ndarray
    tets: np.ndarray
    pairs: np.ndarray
    cavity: SurfacePatch
    refine: int
    a: float
    half_width: float = 0.5
    master: np.ndarray = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def volumes(self) -> np.ndarray:
        return tet_volumes(self.nodes, self.tets)

    @property
    def exact_volume(self) -> float:
        return (2 * self.half_width) ** 3 - 4.0 / 3.0 * math.pi * self.a**3


@dataclass(frozen=True)
class DomainMesh:
    """Mesh of the box [-L, L]^3 minus B_a with a clamped face Gamma."""

    nodes: np.ndarray
    tets: np.ndarray
    cavity: SurfacePatch
    gamma_nodes: np.ndarray
    boundary_nodes: np.ndarray
    refine: int
    a: float
    half_width: float
    gamma_face: str = "-z"

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def volumes(self) -> np.ndarray:
        return tet_volumes(self.nodes, self.tets)

    @property
    def exact_volume(self) -> float:
        return (2 * self.half_width) ** 3 - 4.0 / 3.0 * math.pi * self.a**3


def tet_volumes(nodes: np.ndarray, tets: np.ndarray) -> np.ndarray:
    p = nodes[tets]
    return np.einsum("ni,ni->n", np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), p[:, 3] - p[:, 0]) / 6.0


def _equiangular(n: int) -> np.ndarray:
    t = np.tan(np.pi / 4 * (2 * np.arange(n + 1) / n - 1))
    t = 0.5 * (t - t[::-1])  # exact antisymmetry
    t[0], t[-1] = -1.0, 1.0
    if n % 2 == 0:
        t[n // 2] = 0.0
    return t


def _template(a: float, h: float, n: int, m: int):
    """Nodes, lattice keys, tets and cavity triangles of the cube-sphere template."""
    t = _equiangular(n)
    ids = -np.ones((n + 1, n + 1, n + 1), dtype=np.int64)
    surf = np.zeros((n + 1, n + 1, n + 1), dtype=bool)
    surf[[0, n], :, :] = surf[:, [0, n], :] = surf[:, :, [0, n]] = True
    lat = np.argwhere(surf)  # lexicographic, deterministic
    ids[tuple(lat.T)] = np.arange(len(lat))
    P = h * t[lat]
    R = np.linalg.norm(P, axis=1)
    if np.any(R <= a):
        raise GeometryFault("cavity does not fit inside the box")
    n_lat = len(lat)
    # node id = layer * n_lat + lattice id
    s = np.arange(m + 1) / m
    radii = a * (R[None, :] / a) ** s[:, None]
    dirs = P / R[:, None]
    nodes = radii[:, :, None] * dirs[None]
    nodes[0] = a * dirs
    nodes[m] = P
    nodes = nodes.reshape(-1, 3)

    tets, cav = [], []
    for d in range(3):
        p, q = [ax for ax in range(3) if ax != d]
        for side in (0, n):
            i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(m), indexing="ij")
            i, j, k = i.ravel(), j.ravel(), k.ravel()

            def node(du, dv, dw):
                L = np.empty((len(i), 3), dtype=np.int64)
                L[:, d] = side
                L[:, p] = i + du
                L[:, q] = j + dv
                return (k + dw) * n_lat + ids[L[:, 0], L[:, 1], L[:, 2]]

            corner = {c: node(*c) for c in itertools.product((0, 1), repeat=3)}
            for perm in KUHN_PERMS:
                path = [(0, 0, 0)]
                cur = [0, 0, 0]
                for ax in perm:
                    cur[ax] = 1
                    path.append(tuple(cur))
                tets.append(np.stack([corner[c] for c in path], axis=1))
            bottom = k == 0
            c00, c10, c11, c01 = (corner[(0, 0, 0)][bottom], corner[(1, 0, 0)][bottom],
                                  corner[(1, 1, 0)][bottom], corner[(0, 1, 0)][bottom])
            cav.append(np.stack([c00, c10, c11], axis=1))
            cav.append(np.stack([c00, c11, c01], axis=1))
    tets = np.concatenate(tets)
    cav = np.concatenate(cav)
    return nodes, lat, n_lat, tets, cav


def _finish(nodes: np.ndarray, tets: np.ndarray, cav: np.ndarray, a: float):
    vol = tet_volumes(nodes, tets)
    neg = vol < 0
    tets = tets.copy()
    tets[neg, 2], tets[neg, 3] = tets[neg, 3], tets[neg, 2].copy()
    vol = np.abs(vol)
    if np.any(vol <= 0):
        raise GeometryFault("degenerate tetrahedron in template")
    p = nodes[cav]
    nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = np.einsum("ni,ni->n", nrm, p.mean(axis=1)) < 0
    cav = cav.copy()
    cav[flip, 1], cav[flip, 2] = cav[flip, 2], cav[flip, 1].copy()
    return tets, cav


def make_patch(nodes: np.ndarray, tri: np.ndarray, a: float) -> SurfacePatch:
    ids = np.unique(tri)
    pos = nodes[ids]
    er = pos / np.linalg.norm(pos, axis=1)[:, None]
    p = nodes[tri]
    areas = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    return SurfacePatch(ids, pos, er, tri, areas, float(a))


def _sizes(refine: int) -> tuple[int, int]:
    if refine < 1:
        raise GeometryFault(f"refine must be >= 1, got {refine}")
    n = 2 ** (refine + 1)
    return n, n


def build_cell_mesh(a: float, refine: int) -> PeriodicMesh:
    """Periodic mesh of Y = [-1/2, 1/2]^3 minus the ball of radius a."""
    if not (0 < a < 0.5):
        raise GeometryFault(f"cavity radius must satisfy 0 < a < 1/2, got {a!r}")
    h = 0.5
    n, m = _sizes(refine)
    nodes, lat, n_lat, tets, cav = _template(a, h, n, m)
    tets, cav = _finish(nodes, tets, cav, a)
    # periodic pairs on the outer layer
    base = m * n_lat
    rows = []
    for d in range(3):
        hi = np.nonzero(lat[:, d] == n)[0]
        Lp = lat[hi].copy()
        Lp[:, d] = 0
        lookup = {tuple(x): idx for idx, x in enumerate(map(tuple, lat))}
        partner = np.array([lookup[tuple(x)] for x in Lp], dtype=np.int64)
        rows.append(np.stack([base + hi, base + partner, np.full(len(hi), d)], axis=1))
    pairs = np.concatenate(rows)
    master = periodic_masters(len(nodes), pairs)
    return PeriodicMesh(nodes, tets, pairs, make_patch(nodes, cav, a), refine, float(a), h, master)


def periodic_masters(n_nodes: int, pairs: np.ndarray) -> np.ndarray:
    """Orbit representative for every node (the copy on the low faces)."""
    master = np.arange(n_nodes)
    step = np.arange(n_nodes)
    for s, p, _ in pairs:
        step[s] = p
    # at most three hops (corner -> edge -> face -> master)
    for _ in range(3):
        master = step[master]
    if np.any(step[master] != master):
        raise GeometryFault("periodic pairing does not close")
    return master


_FACES = {"-x": (0, 0), "+x": (0, 1), "-y": (1, 0), "+y": (1, 1), "-z": (2, 0), "+z": (2, 1)}


def build_domain_mesh(L: float, a: float, refine: int, gamma_face: str = "-z") -> DomainMesh:
    """Mesh of the box [-L, L]^3 minus B_a, with Gamma on one face."""
    if not (0 < a < L):
        raise GeometryFault(f"need 0 < a < L, got a={a!r}, L={L!r}")
    if gamma_face not in _FACES:
        raise GeometryFault(f"unknown face {gamma_face!r}")
    n, m = _sizes(refine)
    nodes, lat, n_lat, tets, cav = _template(a, L, n, m)
    tets, cav = _finish(nodes, tets, cav, a)
    base = m * n_lat
    ax, hi = _FACES[gamma_face]
    gamma_nodes = base + np.nonzero(lat[:, ax] == (n if hi else 0))[0]
    boundary = base + np.arange(n_lat)
    return DomainMesh(nodes, tets, make_patch(nodes, cav, a), gamma_nodes, boundary,
                      refine, float(a), float(L), gamma_face)


# ---------------------------------------------------------------------------
# quality


@dataclass(frozen=True)
class MeshQuality:
    min_volume: float
    min_dihedral_deg: float
    max_aspect: float
    volume_defect: float
    area_defect: float
    max_cavity_radius_error: float
    n_nodes: int
    n_tets: int
    n_cavity_triangles: int

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _dihedral_angles(p: np.ndarray) -> np.ndarray:
    faces = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))
    nrm = []
    for f in faces:
        v = np.cross(p[:, f[1]] - p[:, f[0]], p[:, f[2]] - p[:, f[0]])
        nrm.append(v / np.linalg.norm(v, axis=1)[:, None])
    ang = []
    for i, j in itertools.combinations(range(4), 2):
        c = np.einsum("ni,ni->n", nrm[i], nrm[j])
        # outward normals: dihedral = pi - angle between normals
        ang.append(np.pi - np.arccos(np.clip(np.abs(c), -1, 1)))
    ang = np.stack(ang, axis=1)
    return np.minimum(ang, np.pi - ang)


def mesh_quality(mesh: PeriodicMesh | DomainMesh) -> MeshQuality:
    p = mesh.nodes[mesh.tets]
    vol = mesh.volumes
    edges = [np.linalg.norm(p[:, i] - p[:, j], axis=1) for i, j in itertools.combinations(range(4), 2)]
    hmax = np.max(edges, axis=0)
    face_area = []
    for f in ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)):
        face_area.append(0.5 * np.linalg.norm(np.cross(p[:, f[1]] - p[:, f[0]], p[:, f[2]] - p[:, f[0]]), axis=1))
    inradius = 3 * vol / np.sum(face_area, axis=0)
    # normalized so the regular tetrahedron has aspect 1
    aspect = hmax / (2 * math.sqrt(6) * inradius)
    r = np.linalg.norm(mesh.cavity.positions, axis=1)
    return MeshQuality(
        min_volume=float(vol.min()),
        min_dihedral_deg=float(np.degrees(_dihedral_angles(p).min())),
        max_aspect=float(aspect.max()),
        volume_defect=float(abs(vol.sum() - mesh.exact_volume) / mesh.exact_volume),
        area_defect=mesh.cavity.area_defect,
        max_cavity_radius_error=float(np.abs(r - mesh.a).max()),
        n_nodes=mesh.n_nodes,
        n_tets=len(mesh.tets),
        n_cavity_triangles=len(mesh.cavity.tri),
    )


def node_volume_weights(mesh) -> np.ndarray:
    """Lumped P1 weights: int phi_i dx = sum over incident tets of vol/4."""
    w = np.zeros(mesh.n_nodes)
    np.add.at(w, mesh.tets.ravel(), np.repeat(mesh.volumes / 4.0, 4))
    return w


# ---------------------------------------------------------------------------
# ASCII exchange format


def write_mesh(mesh, path: str | Path, field: np.ndarray | None = None) -> None:
    """Write the ``capmesh 1`` format, optionally followed by a nodal field block."""
    lines = ["capmesh 1", f"nodes {mesh.n_nodes}"]
    lines += ["%.17g %.17g %.17g" % tuple(x) for x in mesh.nodes]
    lines.append(f"tets {len(mesh.tets)}")
    lines += ["%d %d %d %d" % tuple(t) for t in mesh.tets]
    pairs = getattr(mesh, "pairs", np.zeros((0, 3), dtype=np.int64))
    lines.append(f"pairs {len(pairs)}")
    lines += ["%d %d %d" % tuple(p) for p in pairs]
    lines.append(f"cavity {len(mesh.cavity.tri)}")
    lines += ["%d %d %d" % tuple(t) for t in mesh.cavity.tri]
    if field is not None:
        field = np.asarray(field, dtype=float).reshape(-1, 3)
        lines.append(f"field 3 {len(field)}")
        lines += ["%.17g %.17g %.17g" % tuple(x) for x in field]
    Path(path).write_text("\n".join(lines) + "\n")


def _block(lines: list[str], pos: int, tag: str, dtype, width: int):
    head = lines[pos].split()
    if head[0] != tag:
        raise GeometryFault(f"expected '{tag}' block, found {lines[pos]!r}")
    count = int(head[-1])
    rows = lines[pos + 1: pos + 1 + count]
    if len(rows) != count:
        raise GeometryFault(f"truncated '{tag}' block")
    arr = np.array([r.split() for r in rows], dtype=dtype).reshape(count, width)
    return arr, pos + 1 + count


def read_mesh(path: str | Path):
    """Read a ``capmesh 1`` file.

    Files with periodic pairs give a :class:`PeriodicMesh` on [-1/2, 1/2]^3;
    otherwise a :class:`DomainMesh` with Gamma on the lowest z face. The
    cavity radius is inferred from the cavity nodes and ``refine`` is set to
    -1 (unknown). Returns (mesh, field or None).
    """
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    except OSError as e:
        raise GeometryFault(f"cannot read mesh file: {e}") from e
    if not lines or lines[0].split() != ["capmesh", "1"]:
        raise GeometryFault("missing 'capmesh 1' header")
    try:
        nodes, pos = _block(lines, 1, "nodes", float, 3)
        tets, pos = _block(lines, pos, "tets", np.int64, 4)
        pairs, pos = _block(lines, pos, "pairs", np.int64, 3)
        cav, pos = _block(lines, pos, "cavity", np.int64, 3)
        fld = None
        if pos < len(lines):
            fld, pos = _block(lines, pos, "field", float, 3)
    except (ValueError, IndexError) as e:
        raise GeometryFault(f"malformed mesh file: {e}") from e
    for arr in (tets, pairs[:, :2], cav):
        if arr.size and (arr.min() < 0 or arr.max() >= len(nodes)):
            raise GeometryFault("node index out of range")
    if len(cav) == 0:
        raise GeometryFault("mesh has no cavity triangles")
    a = float(np.mean(np.linalg.norm(nodes[np.unique(cav)], axis=1)))
    patch = make_patch(nodes, cav, a)
    if np.any(tet_volumes(nodes, tets) <= 0):
        raise GeometryFault("mesh contains non-positive tetrahedra")
    if len(pairs):
        h = float(np.abs(nodes).max())
        mesh = PeriodicMesh(nodes, tets, pairs, patch, -1, a, h, periodic_masters(len(nodes), pairs))
    else:
        L = float(np.abs(nodes).max())
        zmin = nodes[:, 2].min()
        gam = np.nonzero(nodes[:, 2] == zmin)[0]
        bnd = np.nonzero(np.isclose(np.abs(nodes).max(axis=1), L, rtol=0, atol=1e-12 * L))[0]
        mesh = DomainMesh(nodes, tets, patch, gam, bnd, -1, a, L, "-z")
    return mesh, fld
