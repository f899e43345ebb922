"""Fixed-timestep impulse-based rigid-body stepping.

Semi-implicit Euler integration, AABB broadphase, SAT narrowphase, then a
sequential-impulse velocity solve (restitution + Coulomb friction) followed
by a pseudo-impulse positional correction pass.  Everything iterates in
ascending body-id order so a given seed and transcript reproduces
bit-identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import SimulationDiverged, StaticBody
from ..mathutil import (
    Quat, Vec3, IDENTITY_QUAT, q_integrate, q_to_matrix,
    v_add, v_cross, v_dot, v_scale, v_sub,
)
from .hull import Collider, ConvexHull, SphereCollider
from .narrowphase import detect_contacts


@dataclass
class SolverConfig:
    dt: float = 0.01
    velocity_iterations: int = 10
    position_iterations: int = 3
    baumgarte: float = 0.2
    slop: float = 1e-3
    restitution_threshold: float = 0.25   # m/s below which contacts do not bounce
                                          # (> a few steps of gravity so stacks settle)
    warm_start_match_dist: float = 2e-3

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        cfg = cls()
        for k, v in d.items():
            if not hasattr(cfg, k):
                raise KeyError(f"unknown solver config key: {k}")
            setattr(cfg, k, type(getattr(cfg, k))(v))
        return cfg


@dataclass
class RigidBody:
    """Dynamic state of one simulated body (objects, embodied avatars, statics)."""

    id: int
    colliders: list[Collider]
    mass: float                      # ignored when static
    com_local: Vec3                  # center of mass in body frame
    inertia_body: np.ndarray         # 3x3 about com, body frame
    static: bool = False
    position: Vec3 = (0.0, 0.0, 0.0)     # body-frame origin, world space
    orientation: Quat = IDENTITY_QUAT
    linear_velocity: Vec3 = (0.0, 0.0, 0.0)
    angular_velocity: Vec3 = (0.0, 0.0, 0.0)
    static_friction: float = 0.6
    dynamic_friction: float = 0.5
    bounciness: float = 0.2

    def __post_init__(self) -> None:
        self.inv_mass = 0.0 if self.static else 1.0 / self.mass
        if self.static:
            self.inv_inertia_body = np.zeros((3, 3))
        else:
            self.inv_inertia_body = np.linalg.inv(self.inertia_body)
        self._rot_key = None
        self._rot = None
        self._aabb_key = None
        self._aabb = None

    def rot_matrix(self) -> np.ndarray:
        if self._rot_key != self.orientation:
            self._rot_key = self.orientation
            self._rot = q_to_matrix(self.orientation)
        return self._rot

    @property
    def com(self) -> Vec3:
        c = self.rot_matrix() @ np.asarray(self.com_local)
        return (self.position[0] + c[0], self.position[1] + c[1], self.position[2] + c[2])

    def set_com(self, com: Vec3) -> None:
        c = self.rot_matrix() @ np.asarray(self.com_local)
        self.position = (com[0] - c[0], com[1] - c[1], com[2] - c[2])

    def inv_inertia_world(self) -> np.ndarray:
        r = self.rot_matrix()
        return r @ self.inv_inertia_body @ r.T

    def world_aabb(self) -> tuple[np.ndarray, np.ndarray]:
        key = (self.position, self.orientation)
        if self._aabb_key == key:
            return self._aabb
        r = self.rot_matrix()
        p = np.asarray(self.position)
        lo = np.full(3, np.inf)
        hi = np.full(3, -np.inf)
        for c in self.colliders:
            clo, chi = c.aabb()
            center = (clo + chi) / 2.0
            half = (chi - clo) / 2.0
            wc = p + r @ center
            wh = np.abs(r) @ half
            lo = np.minimum(lo, wc - wh)
            hi = np.maximum(hi, wc + wh)
        self._aabb_key = key
        self._aabb = (lo, hi)
        return lo, hi


def apply_impulse(body: RigidBody, impulse: Vec3, point: Vec3 | None = None) -> None:
    """Instantaneous impulse (N*s), optionally at a world-space point."""
    if body.static:
        raise StaticBody(f"cannot apply impulse to static body {body.id}")
    body.linear_velocity = v_add(body.linear_velocity, v_scale(impulse, body.inv_mass))
    if point is not None:
        arm = v_sub(point, body.com)
        torque = v_cross(arm, impulse)
        dw = body.inv_inertia_world() @ np.asarray(torque)
        body.angular_velocity = v_add(body.angular_velocity, (dw[0], dw[1], dw[2]))


@dataclass
class CollisionEvent:
    ids: tuple[int, int]
    point: Vec3
    normal: Vec3                 # unit, from ids[0] to ids[1]
    relative_normal_speed: float  # approach speed at first contact, >= 0
    impulse: float               # total normal impulse applied, N*s
    frame: int
    state: str                   # "enter" | "stay" | "exit"


class _Contact:
    __slots__ = (
        "a", "b", "point", "n", "t1", "t2", "ra", "rb",
        "mass_n", "mass_t1", "mass_t2", "bias", "depth", "vn0",
        "pn", "pt1", "pt2", "mu_s", "mu_d", "inv_ia", "inv_ib",
    )


class PhysicsEngine:
    """Owns solver configuration and per-pair warm-start state."""

    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        self._warm: dict[tuple[int, int], list[tuple[Vec3, float, float, float, Vec3, Vec3]]] = {}
        self._prev_pairs: dict[tuple[int, int], bool] = {}

    def clear_cache(self) -> None:
        self._warm.clear()
        self._prev_pairs.clear()

    def step(self, bodies: list[RigidBody], gravity: Vec3, dt: float | None = None,
             frame: int = 0) -> list[CollisionEvent]:
        cfg = self.config
        dt = cfg.dt if dt is None else dt
        bodies = sorted(bodies, key=lambda b: b.id)

        for b in bodies:
            if not b.static:
                b.linear_velocity = v_add(b.linear_velocity, v_scale(gravity, dt))

        pairs = self._broadphase(bodies)
        contacts: list[_Contact] = []
        manifolds: dict[tuple[int, int], tuple] = {}
        by_id = {b.id: b for b in bodies}
        for ba, bb in pairs:
            best = None
            for ca in ba.colliders:
                for cb in bb.colliders:
                    m = detect_contacts(ca, ba.position, ba.orientation,
                                        cb, bb.position, bb.orientation,
                                        mat_a=ba.rot_matrix(), mat_b=bb.rot_matrix())
                    if m is None:
                        continue
                    if best is None or m.depth > best.depth:
                        best = m
                    contacts.extend(self._make_contacts(ba, bb, m))
            if best is not None:
                manifolds[(ba.id, bb.id)] = best

        self._warm_start(contacts)
        for _ in range(cfg.velocity_iterations):
            for c in contacts:
                self._solve_contact(c)

        for b in bodies:
            if b.static:
                continue
            com = v_add(b.com, v_scale(b.linear_velocity, dt))
            b.orientation = q_integrate(b.orientation, b.angular_velocity, dt)
            b.set_com(com)

        self._solve_positions(contacts)

        for b in bodies:
            if not b.static and not all(
                math.isfinite(x) for x in (*b.position, *b.linear_velocity, *b.angular_velocity)
            ):
                raise SimulationDiverged(f"non-finite state on body {b.id}")

        self._store_warm(contacts)
        return self._emit_events(manifolds, contacts, by_id, frame)

    # -- pipeline stages ---------------------------------------------------

    def _broadphase(self, bodies: list[RigidBody]) -> list[tuple[RigidBody, RigidBody]]:
        boxes = [(b, *b.world_aabb()) for b in bodies]
        out = []
        n = len(boxes)
        margin = 1e-3
        for i in range(n):
            bi, lo_i, hi_i = boxes[i]
            for j in range(i + 1, n):
                bj, lo_j, hi_j = boxes[j]
                if bi.static and bj.static:
                    continue
                if (lo_i[0] - margin <= hi_j[0] and lo_j[0] - margin <= hi_i[0]
                        and lo_i[1] - margin <= hi_j[1] and lo_j[1] - margin <= hi_i[1]
                        and lo_i[2] - margin <= hi_j[2] and lo_j[2] - margin <= hi_i[2]):
                    out.append((bi, bj))
        return out

    def _make_contacts(self, ba: RigidBody, bb: RigidBody, manifold) -> list[_Contact]:
        n = (float(manifold.normal[0]), float(manifold.normal[1]), float(manifold.normal[2]))
        t1, t2 = _tangent_basis(n)
        inv_ia = tuple(map(tuple, ba.inv_inertia_world()))
        inv_ib = tuple(map(tuple, bb.inv_inertia_world()))
        com_a = ba.com
        com_b = bb.com
        mu_s = math.sqrt(ba.static_friction * bb.static_friction)
        mu_d = math.sqrt(ba.dynamic_friction * bb.dynamic_friction)
        rest = max(ba.bounciness, bb.bounciness)
        out = []
        for p in manifold.points:
            c = _Contact()
            c.a, c.b = ba, bb
            c.point = (float(p[0]), float(p[1]), float(p[2]))
            c.n, c.t1, c.t2 = n, t1, t2
            c.ra = v_sub(c.point, com_a)
            c.rb = v_sub(c.point, com_b)
            c.inv_ia, c.inv_ib = inv_ia, inv_ib
            c.mass_n = _effective_mass(ba, bb, inv_ia, inv_ib, c.ra, c.rb, n)
            c.mass_t1 = _effective_mass(ba, bb, inv_ia, inv_ib, c.ra, c.rb, t1)
            c.mass_t2 = _effective_mass(ba, bb, inv_ia, inv_ib, c.ra, c.rb, t2)
            vn0 = _rel_normal_vel(c)
            c.vn0 = vn0
            c.bias = -rest * vn0 if vn0 < -self.config.restitution_threshold else 0.0
            c.depth = manifold.depth
            c.pn = c.pt1 = c.pt2 = 0.0
            c.mu_s, c.mu_d = mu_s, mu_d
            out.append(c)
        return out

    def _warm_start(self, contacts: list[_Contact]) -> None:
        match2 = self.config.warm_start_match_dist ** 2
        for c in contacts:
            key = (c.a.id, c.b.id)
            cached = self._warm.get(key)
            if not cached:
                continue
            for pt, pn, pt1, pt2, t1_old, t2_old in cached:
                d = v_sub(pt, c.point)
                if v_dot(d, d) < match2:
                    c.pn = pn
                    # re-express old tangent impulses in the new basis
                    old = v_add(v_scale(t1_old, pt1), v_scale(t2_old, pt2))
                    c.pt1 = v_dot(old, c.t1)
                    c.pt2 = v_dot(old, c.t2)
                    imp = v_add(v_scale(c.n, c.pn),
                                v_add(v_scale(c.t1, c.pt1), v_scale(c.t2, c.pt2)))
                    _apply_pair(c, imp)
                    break

    def _solve_contact(self, c: _Contact) -> None:
        # normal
        vn = _rel_normal_vel(c)
        dpn = -(vn - c.bias) * c.mass_n
        pn0 = c.pn
        c.pn = max(pn0 + dpn, 0.0)
        dpn = c.pn - pn0
        if dpn != 0.0:
            _apply_pair(c, v_scale(c.n, dpn))
        # friction
        max_t = c.mu_d * c.pn
        vt1 = _rel_vel_along(c, c.t1)
        dp1 = -vt1 * c.mass_t1
        p1_0 = c.pt1
        c.pt1 = min(max(p1_0 + dp1, -max_t), max_t)
        dp1 = c.pt1 - p1_0
        vt2 = _rel_vel_along(c, c.t2)
        dp2 = -vt2 * c.mass_t2
        p2_0 = c.pt2
        c.pt2 = min(max(p2_0 + dp2, -max_t), max_t)
        dp2 = c.pt2 - p2_0
        if dp1 != 0.0 or dp2 != 0.0:
            _apply_pair(c, v_add(v_scale(c.t1, dp1), v_scale(c.t2, dp2)))

    def _solve_positions(self, contacts: list[_Contact]) -> None:
        cfg = self.config
        if not contacts:
            return
        dx: dict[int, list] = {}
        dth: dict[int, list] = {}
        bodies: dict[int, RigidBody] = {}
        for c in contacts:
            for b in (c.a, c.b):
                if b.id not in dx:
                    dx[b.id] = [0.0, 0.0, 0.0]
                    dth[b.id] = [0.0, 0.0, 0.0]
                    bodies[b.id] = b
        for _ in range(cfg.position_iterations):
            for c in contacts:
                da, dta = dx[c.a.id], dth[c.a.id]
                db, dtb = dx[c.b.id], dth[c.b.id]
                move_a = v_add(tuple(da), v_cross(tuple(dta), c.ra))
                move_b = v_add(tuple(db), v_cross(tuple(dtb), c.rb))
                sep = -c.depth + v_dot(v_sub(move_b, move_a), c.n)
                if sep >= -cfg.slop:
                    continue
                lam = -cfg.baumgarte * (sep + cfg.slop) * c.mass_n
                imp = v_scale(c.n, lam)
                if not c.a.static:
                    im = c.a.inv_mass
                    da[0] -= imp[0] * im
                    da[1] -= imp[1] * im
                    da[2] -= imp[2] * im
                    dw = _mat3_vec(c.inv_ia, v_cross(c.ra, imp))
                    dta[0] -= dw[0]
                    dta[1] -= dw[1]
                    dta[2] -= dw[2]
                if not c.b.static:
                    im = c.b.inv_mass
                    db[0] += imp[0] * im
                    db[1] += imp[1] * im
                    db[2] += imp[2] * im
                    dw = _mat3_vec(c.inv_ib, v_cross(c.rb, imp))
                    dtb[0] += dw[0]
                    dtb[1] += dw[1]
                    dtb[2] += dw[2]
        for bid, b in bodies.items():
            if b.static:
                continue
            d = dx[bid]
            th = dth[bid]
            if d[0] or d[1] or d[2] or th[0] or th[1] or th[2]:
                com = v_add(b.com, tuple(d))
                ang = math.sqrt(th[0] ** 2 + th[1] ** 2 + th[2] ** 2)
                if ang > 1e-12:
                    b.orientation = q_integrate(b.orientation, tuple(th), 1.0)
                b.set_com(com)

    def _store_warm(self, contacts: list[_Contact]) -> None:
        warm: dict[tuple[int, int], list] = {}
        for c in contacts:
            warm.setdefault((c.a.id, c.b.id), []).append(
                (c.point, c.pn, c.pt1, c.pt2, c.t1, c.t2)
            )
        self._warm = warm

    def _emit_events(self, manifolds, contacts, by_id, frame) -> list[CollisionEvent]:
        per_pair: dict[tuple[int, int], list[_Contact]] = {}
        for c in contacts:
            per_pair.setdefault((c.a.id, c.b.id), []).append(c)
        events = []
        for key in sorted(manifolds):
            m = manifolds[key]
            group = per_pair.get(key, [])
            total_pn = sum(c.pn for c in group)
            speed = 0.0
            point = (float(m.points[0][0]), float(m.points[0][1]), float(m.points[0][2]))
            if group:
                deepest = min(group, key=lambda c: c.vn0)
                speed = max(0.0, -deepest.vn0)
                point = deepest.point
            state = "stay" if key in self._prev_pairs else "enter"
            events.append(CollisionEvent(
                ids=key,
                point=point,
                normal=(float(m.normal[0]), float(m.normal[1]), float(m.normal[2])),
                relative_normal_speed=speed,
                impulse=total_pn,
                frame=frame,
                state=state,
            ))
        for key in sorted(self._prev_pairs):
            if key not in manifolds:
                events.append(CollisionEvent(
                    ids=key, point=(0.0, 0.0, 0.0), normal=(0.0, 1.0, 0.0),
                    relative_normal_speed=0.0, impulse=0.0, frame=frame, state="exit",
                ))
        self._prev_pairs = {k: True for k in manifolds}
        return events


def _tangent_basis(n: Vec3) -> tuple[Vec3, Vec3]:
    if abs(n[0]) < 0.9:
        ref = (1.0, 0.0, 0.0)
    else:
        ref = (0.0, 1.0, 0.0)
    t1 = v_cross(n, ref)
    inv = 1.0 / v_norm_f(t1)
    t1 = (t1[0] * inv, t1[1] * inv, t1[2] * inv)
    return t1, v_cross(n, t1)


def v_norm_f(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def _mat3_vec(m, v: Vec3) -> Vec3:
    return (
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    )


def _effective_mass(ba, bb, inv_ia, inv_ib, ra, rb, axis) -> float:
    k = ba.inv_mass + bb.inv_mass
    ran = v_cross(ra, axis)
    rbn = v_cross(rb, axis)
    k += v_dot(ran, _mat3_vec(inv_ia, ran))
    k += v_dot(rbn, _mat3_vec(inv_ib, rbn))
    return 1.0 / k if k > 0.0 else 0.0


def _rel_normal_vel(c: _Contact) -> float:
    return _rel_vel_along(c, c.n)


def _rel_vel_along(c: _Contact, axis: Vec3) -> float:
    av = c.a.linear_velocity
    aw = c.a.angular_velocity
    ra = c.ra
    bv = c.b.linear_velocity
    bw = c.b.angular_velocity
    rb = c.rb
    dx = bv[0] + bw[1] * rb[2] - bw[2] * rb[1] - av[0] - aw[1] * ra[2] + aw[2] * ra[1]
    dy = bv[1] + bw[2] * rb[0] - bw[0] * rb[2] - av[1] - aw[2] * ra[0] + aw[0] * ra[2]
    dz = bv[2] + bw[0] * rb[1] - bw[1] * rb[0] - av[2] - aw[0] * ra[1] + aw[1] * ra[0]
    return dx * axis[0] + dy * axis[1] + dz * axis[2]


def _apply_pair(c: _Contact, impulse: Vec3) -> None:
    """Apply +impulse to b and -impulse to a at the contact point."""
    a, b = c.a, c.b
    if not a.static:
        a.linear_velocity = v_sub(a.linear_velocity, v_scale(impulse, a.inv_mass))
        dw = _mat3_vec(c.inv_ia, v_cross(c.ra, impulse))
        a.angular_velocity = v_sub(a.angular_velocity, dw)
    if not b.static:
        b.linear_velocity = v_add(b.linear_velocity, v_scale(impulse, b.inv_mass))
        dw = _mat3_vec(c.inv_ib, v_cross(c.rb, impulse))
        b.angular_velocity = v_add(b.angular_velocity, dw)
