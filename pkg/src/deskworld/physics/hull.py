"""Convex hull construction and rigid-body mass properties.

Quickhull over 3D point clouds produces triangle hulls used for all
collision queries.  Mass, centroid and inertia come from exact signed
tetrahedron integrals over the hull surface.  An analytic sphere collider
exists alongside triangle hulls: faceted spheres cannot deliver exact
center-line contact normals, which symmetric collision tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateInput

# Covariance of the canonical tetrahedron (origin, e1, e2, e3), unit density,
# scaled by 1/det: integral of x_i x_j over the tetra = det * C_CANON[i][j].
_C_CANON = np.array(
    [[1 / 60, 1 / 120, 1 / 120],
     [1 / 120, 1 / 60, 1 / 120],
     [1 / 120, 1 / 120, 1 / 60]],
    dtype=np.float64,
)


@dataclass
class ConvexHull:
    """Triangle hull with outward-wound faces and precomputed integrals."""

    vertices: np.ndarray          # (n, 3) float64
    faces: np.ndarray             # (m, 3) int, outward winding
    normals: np.ndarray = field(init=False)       # (m, 3) unit outward
    offsets: np.ndarray = field(init=False)       # (m,) plane offsets n.x = d
    volume: float = field(init=False)
    centroid: np.ndarray = field(init=False)      # (3,)
    inertia_unit_density: np.ndarray = field(init=False)  # (3, 3) about centroid
    edges: np.ndarray = field(init=False)         # (e, 2) unique undirected edges
    face_dirs: np.ndarray = field(init=False)     # deduped face normals for SAT
    edge_dirs: np.ndarray = field(init=False)     # deduped edge directions for SAT

    def __post_init__(self) -> None:
        v, f = self.vertices, self.faces
        a = v[f[:, 0]]
        b = v[f[:, 1]]
        c = v[f[:, 2]]
        n = np.cross(b - a, c - a)
        lens = np.linalg.norm(n, axis=1)
        if np.any(lens <= 0.0):
            raise DegenerateInput("zero-area hull face")
        self.normals = n / lens[:, None]
        self.offsets = np.einsum("ij,ij->i", self.normals, a)

        vol, cen, inertia = _surface_integrals(v, f)
        if vol <= 0.0:
            raise DegenerateInput("non-positive hull volume")
        self.volume = float(vol)
        self.centroid = cen
        self.inertia_unit_density = inertia

        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e = np.sort(e, axis=1)
        self.edges = np.unique(e, axis=0)
        self.face_dirs = _dedupe_directions(self.normals)
        dirs = v[self.edges[:, 1]] - v[self.edges[:, 0]]
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        self.edge_dirs = _dedupe_directions(dirs)

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Boolean mask: point behind every face plane within tol."""
        pts = np.atleast_2d(points)
        d = pts @ self.normals.T - self.offsets[None, :]
        return np.all(d <= tol, axis=1)

    def support(self, direction: np.ndarray) -> np.ndarray:
        return self.vertices[int(np.argmax(self.vertices @ direction))]

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


@dataclass
class SphereCollider:
    """Analytic sphere, centered at ``center`` in body space."""

    radius: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius ** 3

    @property
    def centroid(self) -> np.ndarray:
        return self.center

    @property
    def inertia_unit_density(self) -> np.ndarray:
        i = 2.0 / 5.0 * self.volume * self.radius ** 2
        return np.diag([i, i, i])

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        r = np.full(3, self.radius)
        return self.center - r, self.center + r


Collider = ConvexHull | SphereCollider


def _dedupe_directions(dirs: np.ndarray) -> np.ndarray:
    """Drop directions parallel (either sign) to an earlier one.

    Sign-canonicalizes then buckets by rounding; a missed duplicate only
    costs an extra SAT axis, never correctness.
    """
    if not len(dirs):
        return np.zeros((0, 3))
    canon = dirs.copy()
    first_nz = np.where(np.abs(canon[:, 0]) > 1e-9, canon[:, 0],
                        np.where(np.abs(canon[:, 1]) > 1e-9, canon[:, 1], canon[:, 2]))
    canon *= np.sign(first_nz)[:, None]
    _, idx = np.unique(np.round(canon, 7), axis=0, return_index=True)
    return canon[np.sort(idx)]


def _surface_integrals(v: np.ndarray, f: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Volume, centroid and unit-density inertia about the centroid.

    Sums signed tetrahedra (origin, a, b, c) over the triangle surface;
    exact for polyhedra with outward winding.
    """
    a = v[f[:, 0]]
    b = v[f[:, 1]]
    c = v[f[:, 2]]
    det = np.einsum("ij,ij->i", a, np.cross(b, c))  # 6 * signed volume
    vol = det.sum() / 6.0
    cen = ((a + b + c) * det[:, None]).sum(axis=0) / (24.0 * vol)

    t = np.stack([a, b, c], axis=2)  # (m, 3, 3), columns a|b|c
    cov = np.einsum("nij,jk,nlk,n->il", t, _C_CANON, t, det)
    inertia_origin = np.eye(3) * np.trace(cov) - cov
    # parallel-axis shift to the centroid (mass = vol at unit density)
    d = cen
    shift = vol * (np.eye(3) * (d @ d) - np.outer(d, d))
    return vol, cen, inertia_origin - shift


def quickhull(points: np.ndarray | list) -> ConvexHull:
    """Convex hull of >= 4 non-coplanar points.

    Raises DegenerateInput for collinear/coplanar input.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 4:
        raise DegenerateInput("need at least 4 points in 3D")
    scale = float(np.abs(pts).max()) or 1.0
    eps = 1e-10 * scale

    simplex = _initial_simplex(pts, eps)
    interior = pts[simplex].mean(axis=0)

    faces: dict[int, dict] = {}
    next_fid = 0

    def add_face(i: int, j: int, k: int, candidates: np.ndarray) -> int:
        nonlocal next_fid
        n = np.cross(pts[j] - pts[i], pts[k] - pts[i])
        ln = np.linalg.norm(n)
        if ln < eps * eps:
            # sliver face; keep orientation consistent anyway
            ln = ln or 1.0
        n = n / ln
        d = float(n @ pts[i])
        if n @ interior - d > 0:
            i, j, k = i, k, j
            n = -n
            d = -d
        dist = pts[candidates] @ n - d
        mask = dist > eps
        fid = next_fid
        next_fid += 1
        faces[fid] = {
            "idx": (i, j, k),
            "n": n,
            "d": d,
            "outside": candidates[mask],
            "odist": dist[mask],
        }
        return fid

    all_idx = np.arange(len(pts))
    rest = np.setdiff1d(all_idx, np.array(simplex))
    s = simplex
    for tri in ((s[0], s[1], s[2]), (s[0], s[1], s[3]), (s[0], s[2], s[3]), (s[1], s[2], s[3])):
        add_face(*tri, rest)

    pending = [fid for fid, f in faces.items() if len(f["outside"])]
    while pending:
        fid = pending.pop()
        f = faces.get(fid)
        if f is None or not len(f["outside"]):
            continue
        p = int(f["outside"][int(np.argmax(f["odist"]))])
        pp = pts[p]
        visible = [gid for gid, g in faces.items() if g["n"] @ pp - g["d"] > eps]
        if fid not in visible:
            visible.append(fid)
        # horizon = directed edges of visible faces not shared with another visible face
        edge_count: dict[tuple[int, int], tuple[int, int]] = {}
        for gid in visible:
            i, j, k = faces[gid]["idx"]
            for ea, eb in ((i, j), (j, k), (k, i)):
                key = (min(ea, eb), max(ea, eb))
                if key in edge_count:
                    edge_count.pop(key)
                else:
                    edge_count[key] = (ea, eb)
        orphan = np.unique(np.concatenate([faces[gid]["outside"] for gid in visible]))
        orphan = orphan[orphan != p]
        for gid in visible:
            faces.pop(gid)
        for ea, eb in edge_count.values():
            nfid = add_face(ea, eb, p, orphan)
            if len(faces[nfid]["outside"]):
                pending.append(nfid)

    used = sorted({i for f in faces.values() for i in f["idx"]})
    remap = {old: new for new, old in enumerate(used)}
    verts = pts[used]
    tris = np.array([[remap[i] for i in f["idx"]] for f in faces.values()], dtype=np.intp)
    hull = ConvexHull(verts, tris)
    return hull


def _initial_simplex(pts: np.ndarray, eps: float) -> list[int]:
    # two most distant points among the axis extremes
    lo = pts.argmin(axis=0)
    hi = pts.argmax(axis=0)
    cand = np.unique(np.concatenate([lo, hi]))
    best = (0.0, 0, 0)
    for ii, a in enumerate(cand):
        for b in cand[ii + 1:]:
            d = float(np.sum((pts[a] - pts[b]) ** 2))
            if d > best[0]:
                best = (d, int(a), int(b))
    if best[0] <= eps * eps:
        raise DegenerateInput("all points coincident")
    _, i0, i1 = best
    axis = pts[i1] - pts[i0]
    rel = pts - pts[i0]
    proj = np.outer(rel @ axis / (axis @ axis), axis)
    perp = np.linalg.norm(rel - proj, axis=1)
    i2 = int(np.argmax(perp))
    if perp[i2] <= eps:
        raise DegenerateInput("points are collinear")
    n = np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0])
    n = n / np.linalg.norm(n)
    dist = np.abs(rel @ n)
    i3 = int(np.argmax(dist))
    if dist[i3] <= eps:
        raise DegenerateInput("points are coplanar")
    return [i0, i1, i2, i3]


def mass_properties(
    colliders: Collider | list[Collider], density: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """(mass, center of mass, inertia about com) for one or more colliders.

    Compound colliders combine by summed volume integrals with
    parallel-axis shifts; density is uniform across parts.
    """
    if not isinstance(colliders, list):
        colliders = [colliders]
    if density <= 0.0:
        raise ValueError("density must be positive")
    total_vol = sum(c.volume for c in colliders)
    com = sum((c.centroid * c.volume for c in colliders), np.zeros(3)) / total_vol
    inertia = np.zeros((3, 3))
    for c in colliders:
        d = c.centroid - com
        shift = c.volume * (np.eye(3) * (d @ d) - np.outer(d, d))
        inertia += c.inertia_unit_density + shift
    return total_vol * density, com, inertia * density
