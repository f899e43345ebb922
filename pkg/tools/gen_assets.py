#!/usr/bin/env python3
"""Regenerate the bundled model library (OBJ meshes + library.json).

All meshes are closed convex or compound-convex solids authored procedurally
so the shipped assets are reproducible from this script alone.  Run from the
repository root:

    python3 tools/gen_assets.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

ASSETS = Path(__file__).resolve().parent.parent / "src" / "deskworld" / "assets"
MESHES = ASSETS / "meshes"


def write_obj(name: str, verts: list[tuple], faces: list[tuple]) -> str:
    """faces are 0-based tuples (any arity, convex); written 1-based."""
    lines = [f"# {name}"]
    lines += [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in verts]
    lines += ["f " + " ".join(str(i + 1) for i in f) for f in faces]
    (MESHES / f"{name}.obj").write_text("\n".join(lines) + "\n")
    return f"meshes/{name}.obj"


def box(sx: float, sy: float, sz: float, center=(0.0, 0.0, 0.0)):
    cx, cy, cz = center
    hx, hy, hz = sx / 2, sy / 2, sz / 2
    verts = [
        (cx + dx * hx, cy + dy * hy, cz + dz * hz)
        for dx in (-1, 1) for dy in (-1, 1) for dz in (-1, 1)
    ]
    faces = [
        (0, 1, 3, 2), (4, 6, 7, 5),        # -x, +x
        (0, 4, 5, 1), (2, 3, 7, 6),        # -y, +y
        (0, 2, 6, 4), (1, 5, 7, 3),        # -z, +z
    ]
    return verts, faces


def prism(n_sides: int, radius: float, height: float, y0: float = 0.0):
    """Regular n-gon prism, base at y0."""
    verts = []
    for y in (y0, y0 + height):
        for k in range(n_sides):
            th = 2 * math.pi * k / n_sides
            verts.append((radius * math.cos(th), y, radius * math.sin(th)))
    faces = [tuple(range(n_sides - 1, -1, -1)),
             tuple(range(n_sides, 2 * n_sides))]
    for k in range(n_sides):
        k2 = (k + 1) % n_sides
        faces.append((k, k2, n_sides + k2, n_sides + k))
    return verts, faces


def icosphere(radius: float, subdivisions: int = 2):
    phi = (1 + math.sqrt(5)) / 2
    raw = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [tuple(c / math.sqrt(1 + phi * phi) * radius for c in v) for v in raw]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    cache: dict[tuple[int, int], int] = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key in cache:
            return cache[key]
        a, b = verts[i], verts[j]
        m = tuple((a[k] + b[k]) / 2 for k in range(3))
        norm = math.sqrt(sum(c * c for c in m))
        verts.append(tuple(c / norm * radius for c in m))
        cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = new_faces
    return verts, faces


def wedge(sx: float, sy: float, sz: float):
    """Right-triangular ramp: full height at -x tapering to 0 at +x, base at y=0."""
    hx, hz = sx / 2, sz / 2
    verts = [
        (-hx, 0.0, -hz), (-hx, 0.0, hz), (hx, 0.0, hz), (hx, 0.0, -hz),
        (-hx, sy, -hz), (-hx, sy, hz),
    ]
    faces = [(0, 3, 2, 1), (0, 1, 5, 4), (0, 4, 3), (1, 2, 5), (3, 4, 5, 2)]
    return verts, faces


def octahedron(radius: float):
    verts = [(radius, 0, 0), (-radius, 0, 0), (0, radius, 0),
             (0, -radius, 0), (0, 0, radius), (0, 0, -radius)]
    faces = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
             (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    return verts, faces


def merge(parts):
    verts, faces = [], []
    for v, f in parts:
        off = len(verts)
        verts += v
        faces += [tuple(i + off for i in face) for face in f]
    return verts, faces


def main() -> None:
    MESHES.mkdir(parents=True, exist_ok=True)
    records = []

    def rec(name, mesh_uri, **kw):
        records.append({"name": name, "mesh_uri": mesh_uri, **kw})

    # -- simple hulls ------------------------------------------------------
    rec("unit_cube", write_obj("unit_cube", *box(1.0, 1.0, 1.0, (0, 0.5, 0))),
        wcategory="primitive", density=400.0, audio_material="wood")
    rec("wood_block", write_obj("wood_block", *box(0.1, 0.1, 0.1, (0, 0.05, 0))),
        wcategory="block", density=600.0, audio_material="wood")
    rec("iron_box", write_obj("iron_box", *box(0.2, 0.2, 0.2, (0, 0.1, 0))),
        wcategory="box", density=7800.0, audio_material="metal",
        default_bounciness=0.1)
    rec("cardboard_box", write_obj("cardboard_box", *box(0.3, 0.3, 0.3, (0, 0.15, 0))),
        wcategory="box", density=120.0, audio_material="cardboard",
        default_bounciness=0.05)
    rec("brick", write_obj("brick", *box(0.2, 0.06, 0.095, (0, 0.03, 0))),
        wcategory="block", density=1900.0, audio_material="ceramic")
    rec("domino", write_obj("domino", *box(0.024, 0.048, 0.008, (0, 0.024, 0))),
        wcategory="toy", density=1400.0, audio_material="plastic")
    rec("ramp", write_obj("ramp", *wedge(0.8, 0.35, 0.5)),
        wcategory="ramp", density=500.0, audio_material="wood",
        default_dynamic_friction=0.3, default_static_friction=0.35)
    rec("octahedron", write_obj("octahedron", *octahedron(0.12)),
        wcategory="primitive", density=900.0, audio_material="plastic")
    rec("pentagon_prism", write_obj("pentagon_prism", *prism(5, 0.1, 0.15)),
        wcategory="primitive", density=700.0, audio_material="wood")
    rec("cylinder", write_obj("cylinder", *prism(24, 0.06, 0.2)),
        wcategory="primitive", density=950.0, audio_material="plastic",
        default_dynamic_friction=0.25, default_static_friction=0.3)
    rec("puck", write_obj("puck", *prism(24, 0.08, 0.03)),
        wcategory="toy", density=1200.0, audio_material="plastic",
        default_dynamic_friction=0.08, default_static_friction=0.1)

    # -- spheres: rendered mesh is an icosphere, collider is analytic ------
    for name, radius, density, mat, bounce in [
        ("rubber_ball", 0.1, 1100.0, "plastic", 0.85),
        ("steel_ball", 0.05, 7800.0, "metal", 0.6),
        ("glass_marble", 0.02, 2500.0, "glass", 0.7),
    ]:
        v, f = icosphere(radius)
        v = [(x, y + radius, z) for x, y, z in v]
        rec(name, write_obj(name, v, f),
            wcategory="ball", density=density, audio_material=mat,
            default_bounciness=bounce,
            collider={"type": "sphere", "radius": radius, "center_y": radius})

    # -- compound: table (top slab + 4 legs) -------------------------------
    top = box(0.6, 0.05, 0.6, (0, 0.475, 0))
    legs = [box(0.05, 0.45, 0.05, (sx * 0.25, 0.225, sz * 0.25))
            for sx in (-1, 1) for sz in (-1, 1)]
    table_parts = []
    table_parts.append(write_obj("table_top", *top))
    for k, leg in enumerate(legs):
        table_parts.append(write_obj(f"table_leg_{k}", *leg))
    rec("small_table_green_marble",
        write_obj("small_table_green_marble", *merge([top, *legs])),
        wcategory="table", density=800.0, audio_material="ceramic",
        collider={"type": "compound", "parts": table_parts})

    # -- compound: bowl (octagonal wall ring + base disk) ------------------
    n, r_in, wall_h, base_h, thick = 8, 0.12, 0.07, 0.015, 0.012
    bowl_parts = [write_obj("bowl_base", *prism(n, r_in + thick, base_h))]
    seg_len = 2 * (r_in + thick / 2) * math.tan(math.pi / n) * 1.05
    segs = []
    for k in range(n):
        th = 2 * math.pi * (k + 0.5) / n
        cx = (r_in + thick / 2) * math.cos(th)
        cz = (r_in + thick / 2) * math.sin(th)
        v, f = box(thick, wall_h, seg_len, (0, base_h + wall_h / 2, 0))
        c, s = math.cos(-th), math.sin(-th)
        v = [(cx + x * c - z * s, y, cz + x * s + z * c) for x, y, z in v]
        segs.append((v, f))
        bowl_parts.append(write_obj(f"bowl_wall_{k}", v, f))
    rec("bowl", write_obj("bowl", *merge([prism(n, r_in + thick, base_h), *segs])),
        wcategory="bowl", density=1400.0, audio_material="ceramic",
        collider={"type": "compound", "parts": bowl_parts})

    (ASSETS / "library.json").write_text(json.dumps(records, indent=2) + "\n")
    print(f"wrote {len(records)} records, meshes in {MESHES}")


if __name__ == "__main__":
    main()
