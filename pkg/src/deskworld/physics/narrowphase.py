"""Convex-convex contact generation.

Hull-hull pairs use separating-axis tests over face normals and edge-pair
cross products, then build a manifold by clipping the two support polygons
against each other in the contact plane.  Sphere pairs and sphere-hull
pairs are solved analytically so that symmetric collisions produce exact
center-line normals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hull import Collider, ConvexHull, SphereCollider
from ..mathutil import Quat, Vec3, q_to_matrix

CONTACT_TOL = 1e-4    # separation beyond this means no contact
SUPPORT_TOL = 1e-5    # vertex counts as supporting within this of the extreme


@dataclass
class ContactManifold:
    normal: np.ndarray            # unit, pointing from a to b
    points: list[np.ndarray]      # <= 4 world-space contact points
    depth: float                  # penetration, >= 0


def detect_contacts(
    a: Collider, pos_a: Vec3, rot_a: Quat,
    b: Collider, pos_b: Vec3, rot_b: Quat,
    tol: float = CONTACT_TOL,
    mat_a: np.ndarray | None = None,
    mat_b: np.ndarray | None = None,
) -> ContactManifold | None:
    if mat_a is None:
        mat_a = q_to_matrix(rot_a)
    if mat_b is None:
        mat_b = q_to_matrix(rot_b)
    sph_a = isinstance(a, SphereCollider)
    sph_b = isinstance(b, SphereCollider)
    if sph_a and sph_b:
        return _sphere_sphere(a, pos_a, mat_a, b, pos_b, mat_b, tol)
    if sph_a:
        m = _sphere_hull(a, pos_a, mat_a, b, pos_b, mat_b, tol)
        if m is not None:
            m.normal = -m.normal
        return m
    if sph_b:
        return _sphere_hull(b, pos_b, mat_b, a, pos_a, mat_a, tol)
    return _hull_hull(a, pos_a, mat_a, b, pos_b, mat_b, tol)


def _world_center(c: Collider, pos: Vec3, r: np.ndarray) -> np.ndarray:
    return np.asarray(pos, dtype=np.float64) + r @ np.asarray(c.centroid)


def _sphere_sphere(a, pos_a, mat_a, b, pos_b, mat_b, tol):
    ca = _world_center(a, pos_a, mat_a)
    cb = _world_center(b, pos_b, mat_b)
    d = cb - ca
    dist = float(np.linalg.norm(d))
    sep = dist - a.radius - b.radius
    if sep > tol:
        return None
    n = d / dist if dist > 1e-12 else np.array([1.0, 0.0, 0.0])
    point = ca + n * (a.radius + 0.5 * sep)
    return ContactManifold(n, [point], max(0.0, -sep))


def _sphere_hull(sph, pos_s, mat_s, hull, pos_h, rh, tol):
    """Contact with normal pointing from hull to sphere."""
    c_world = _world_center(sph, pos_s, mat_s)
    ph = np.asarray(pos_h, dtype=np.float64)
    c = rh.T @ (c_world - ph)  # sphere center in hull frame

    s = hull.normals @ c - hull.offsets
    # plane violation is a lower bound on surface distance
    if float(s.max()) - sph.radius > tol:
        return None
    if np.all(s <= 0.0):
        i = int(np.argmax(s))
        n_local = hull.normals[i]
        depth = sph.radius - float(s[i])
        surf = c + n_local * (-float(s[i]))
        return ContactManifold(rh @ n_local, [ph + rh @ surf], depth)

    # fast path: if projecting onto the most-violated face plane lands inside
    # the hull, that projection is the closest point (face region)
    i = int(np.argmax(s))
    proj = c - hull.normals[i] * s[i]
    s_proj = hull.normals @ proj - hull.offsets
    if np.all(s_proj <= 1e-12):
        sep = float(s[i]) - sph.radius
        if sep > tol:
            return None
        n_world = rh @ hull.normals[i]
        return ContactManifold(n_world, [ph + rh @ proj], max(0.0, -sep))

    cp, dist = _closest_on_hull(hull, c)
    sep = dist - sph.radius
    if sep > tol:
        return None
    n_local = (c - cp) / dist if dist > 1e-12 else hull.normals[int(np.argmax(s))]
    n_world = rh @ n_local
    point = ph + rh @ cp
    return ContactManifold(n_world, [point], max(0.0, -sep))


def _closest_on_hull(hull: ConvexHull, p: np.ndarray) -> tuple[np.ndarray, float]:
    """Closest point on the hull surface to an exterior point (Ericson)."""
    v = hull.vertices
    f = hull.faces
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp_ = p - c
    d5 = np.einsum("ij,ij->i", ab, cp_)
    d6 = np.einsum("ij,ij->i", ac, cp_)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    denom = va + vb + vc
    denom = np.where(np.abs(denom) < 1e-300, 1.0, denom)
    u = va / denom
    w_ = vc / denom
    vco = vb / denom

    cand = a + ab * vco[:, None] + ac * w_[:, None]  # interior barycentric point
    # region tests, resolved per-face
    res = np.empty_like(cand)
    # vertex regions
    reg_a = (d1 <= 0) & (d2 <= 0)
    reg_b = (d3 >= 0) & (d4 <= d3)
    reg_c = (d6 >= 0) & (d5 <= d6)
    # edge regions
    vv = d1 * d4 - d3 * d2
    reg_ab = (~reg_a) & (~reg_b) & (vv <= 0) & (d1 >= 0) & (d3 <= 0)
    ww = d5 * d2 - d1 * d6
    reg_ac = (~reg_a) & (~reg_c) & (ww <= 0) & (d2 >= 0) & (d6 <= 0)
    uu = d3 * d6 - d5 * d4
    reg_bc = (~reg_b) & (~reg_c) & (uu <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)

    res[:] = cand
    res[reg_a] = a[reg_a]
    res[reg_b] = b[reg_b]
    res[reg_c] = c[reg_c]
    t_ab = np.clip(np.where(np.abs(d1 - d3) > 1e-300, d1 / (d1 - d3), 0.0), 0, 1)
    res[reg_ab] = a[reg_ab] + ab[reg_ab] * t_ab[reg_ab, None]
    t_ac = np.clip(np.where(np.abs(d2 - d6) > 1e-300, d2 / (d2 - d6), 0.0), 0, 1)
    res[reg_ac] = a[reg_ac] + ac[reg_ac] * t_ac[reg_ac, None]
    den_bc = (d4 - d3) + (d5 - d6)
    t_bc = np.clip(np.where(np.abs(den_bc) > 1e-300, (d4 - d3) / den_bc, 0.0), 0, 1)
    res[reg_bc] = b[reg_bc] + (c[reg_bc] - b[reg_bc]) * t_bc[reg_bc, None]

    dists = np.linalg.norm(res - p, axis=1)
    i = int(np.argmin(dists))
    return res[i], float(dists[i])


def _hull_hull(a, pos_a, ra, b, pos_b, rb, tol):
    va = np.asarray(pos_a) + a.vertices @ ra.T
    vb = np.asarray(pos_b) + b.vertices @ rb.T

    axes_face = np.concatenate([a.face_dirs @ ra.T, b.face_dirs @ rb.T])
    ea = a.edge_dirs @ ra.T
    eb = b.edge_dirs @ rb.T
    cross = np.cross(ea[:, None, :], eb[None, :, :]).reshape(-1, 3)
    lens = np.linalg.norm(cross, axis=1)
    axes_edge = cross[lens > 1e-9] / lens[lens > 1e-9][:, None]

    n_face = len(axes_face)
    axes = np.concatenate([axes_face, axes_edge]) if len(axes_edge) else axes_face

    pa = va @ axes.T  # (nA, k)
    pb = vb @ axes.T
    min_a, max_a = pa.min(axis=0), pa.max(axis=0)
    min_b, max_b = pb.min(axis=0), pb.max(axis=0)
    sep = np.maximum(min_b - max_a, min_a - max_b)
    if sep.max() > tol:
        return None

    # prefer face axes: accept an edge axis only if meaningfully shallower
    best_face = int(np.argmax(sep[:n_face]))
    best = best_face
    if len(axes) > n_face:
        best_edge = n_face + int(np.argmax(sep[n_face:]))
        if sep[best_edge] > sep[best_face] + 1e-6:
            best = best_edge
    axis = axes[best]
    # orient axis from a to b
    if (vb.mean(axis=0) - va.mean(axis=0)) @ axis < 0.0:
        axis = -axis
    depth = max(0.0, -float(sep[best]))

    # adaptive support tolerance: wide enough that a micro-tilted face still
    # contributes all its vertices, narrow enough to never grab the next layer
    proj_a = va @ axis
    proj_b = vb @ axis
    tol_a = max(SUPPORT_TOL, 0.02 * (proj_a.max() - proj_a.min()))
    tol_b = max(SUPPORT_TOL, 0.02 * (proj_b.max() - proj_b.min()))
    sup_a = va[proj_a >= proj_a.max() - tol_a]
    sup_b = vb[proj_b <= proj_b.min() + tol_b]
    points = _contact_points(sup_a, sup_b, axis)
    if not points:
        return None
    return ContactManifold(axis, points, depth)


def _contact_points(sup_a: np.ndarray, sup_b: np.ndarray, axis: np.ndarray) -> list[np.ndarray]:
    """Intersect the two support sets in the contact plane; <= 4 points."""
    mid = 0.5 * ((sup_a @ axis).max() + (sup_b @ axis).min())
    u, v = _plane_basis(axis)

    def project(pts):
        return np.column_stack([pts @ u, pts @ v])

    a2 = project(sup_a)
    b2 = project(sup_b)

    if len(sup_a) == 1:
        pts2 = a2
    elif len(sup_b) == 1:
        pts2 = b2
    elif len(sup_a) == 2 and len(sup_b) == 2:
        p = _segment_segment_2d(a2[0], a2[1], b2[0], b2[1])
        pts2 = np.array(p)
    else:
        poly_a = _ordered(a2)
        poly_b = _ordered(b2)
        if len(poly_a) == 2:
            pts2 = _clip_segment_poly(poly_a, poly_b)
        elif len(poly_b) == 2:
            pts2 = _clip_segment_poly(poly_b, poly_a)
        else:
            pts2 = _clip_poly_poly(poly_a, poly_b)
        if pts2 is None or not len(pts2):
            # grazing contact: fall back to the mean of the supports
            pts2 = np.array([(a2.mean(axis=0) + b2.mean(axis=0)) * 0.5])
    pts2 = _reduce_points(np.atleast_2d(pts2))
    return [x * u + y * v + mid * axis for x, y in pts2]


def _plane_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(n, ref)
    u /= np.linalg.norm(u)
    return u, np.cross(n, u)


def _ordered(pts2: np.ndarray) -> np.ndarray:
    """Points sorted counter-clockwise around their centroid."""
    if len(pts2) <= 2:
        return pts2
    c = pts2.mean(axis=0)
    ang = np.arctan2(pts2[:, 1] - c[1], pts2[:, 0] - c[0])
    return pts2[np.argsort(ang)]


def _segment_segment_2d(p1, p2, q1, q2):
    """Closest point pair between two 2D segments, averaged."""
    d1 = p2 - p1
    d2 = q2 - q1
    r = p1 - q1
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    c = d1 @ r
    denom = a * e - (d1 @ d2) ** 2
    if abs(denom) > 1e-12:
        s = np.clip(((d1 @ d2) * f - c * e) / denom, 0.0, 1.0)
    else:
        s = 0.0
    t = np.clip(((d1 @ d2) * s + f) / e, 0.0, 1.0) if e > 1e-12 else 0.0
    cp1 = p1 + d1 * s
    cp2 = q1 + d2 * t
    return [0.5 * (cp1 + cp2)]


def _clip_poly_poly(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman; both polygons counter-clockwise."""
    out = list(subject)
    m = len(clip)
    for i in range(m):
        e1 = clip[i]
        e2 = clip[(i + 1) % m]
        edge = e2 - e1
        inp = out
        out = []
        if not inp:
            break
        prev = inp[-1]
        prev_in = _cross2(edge, prev - e1) >= -1e-12
        for cur in inp:
            cur_in = _cross2(edge, cur - e1) >= -1e-12
            if cur_in:
                if not prev_in:
                    out.append(_intersect2(prev, cur, e1, e2))
                out.append(cur)
            elif prev_in:
                out.append(_intersect2(prev, cur, e1, e2))
            prev, prev_in = cur, cur_in
    return np.array(out) if out else np.zeros((0, 2))


def _clip_segment_poly(seg: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Clip a 2-point segment to a convex polygon (or segment)."""
    if len(poly) == 2:
        return np.array(_segment_segment_2d(seg[0], seg[1], poly[0], poly[1]))
    t0, t1 = 0.0, 1.0
    d = seg[1] - seg[0]
    m = len(poly)
    for i in range(m):
        e1, e2 = poly[i], poly[(i + 1) % m]
        edge = e2 - e1
        denom = _cross2(edge, d)
        num = _cross2(edge, e1 - seg[0])
        if abs(denom) < 1e-12:
            if _cross2(edge, seg[0] - e1) < -1e-9:
                return np.zeros((0, 2))
            continue
        t = num / denom
        if denom < 0:
            t1 = min(t1, t)
        else:
            t0 = max(t0, t)
    if t0 > t1:
        return np.zeros((0, 2))
    return np.array([seg[0] + d * t0, seg[0] + d * t1])


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _intersect2(p1, p2, q1, q2):
    d1 = p2 - p1
    d2 = q2 - q1
    denom = _cross2(d1, d2)
    t = _cross2(q1 - p1, d2) / denom
    return p1 + d1 * t


def _reduce_points(pts2: np.ndarray) -> np.ndarray:
    """Keep at most 4 well-spread manifold points."""
    # dedupe
    if len(pts2) > 1:
        _, idx = np.unique(np.round(pts2, 7), axis=0, return_index=True)
        pts2 = pts2[np.sort(idx)]
    if len(pts2) <= 4:
        return pts2
    keep = [0]
    d = np.linalg.norm(pts2 - pts2[0], axis=1)
    keep.append(int(np.argmax(d)))
    p0, p1 = pts2[keep[0]], pts2[keep[1]]
    area = np.abs((pts2[:, 0] - p0[0]) * (p1[1] - p0[1]) - (pts2[:, 1] - p0[1]) * (p1[0] - p0[0]))
    keep.append(int(np.argmax(area)))
    p2 = pts2[keep[2]]
    # fourth: maximize added area on the far side
    tri = [p0, p1, p2]
    best, best_val = 0, -1.0
    for i in range(len(pts2)):
        if i in keep:
            continue
        val = sum(
            np.abs(_cross2(tri[(j + 1) % 3] - tri[j], pts2[i] - tri[j])) for j in range(3)
        )
        if val > best_val:
            best, best_val = i, val
    keep.append(best)
    return pts2[sorted(set(keep))]
