"""Small 3D math helpers.

Vectors are plain ``(x, y, z)`` float tuples and quaternions are
``(w, x, y, z)`` tuples; the physics inner loops are much faster on plain
floats than on tiny numpy arrays.  Conversion helpers to numpy are provided
for the vectorized subsystems (hull computation, raycasting).

Coordinate system: right-handed, Y-up, meters.
"""

from __future__ import annotations

import math

import numpy as np

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)
ZERO3: Vec3 = (0.0, 0.0, 0.0)


def v_add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def v_sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def v_scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def v_dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def v_cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def v_norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def v_normalize(a: Vec3) -> Vec3:
    n = v_norm(a)
    if n == 0.0:
        raise ZeroDivisionError("cannot normalize zero vector")
    inv = 1.0 / n
    return (a[0] * inv, a[1] * inv, a[2] * inv)


def q_normalize(q: Quat) -> Quat:
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    inv = 1.0 / n
    return (q[0] * inv, q[1] * inv, q[2] * inv, q[3] * inv)


def q_mul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def q_conj(q: Quat) -> Quat:
    return (q[0], -q[1], -q[2], -q[3])


def q_rotate(q: Quat, v: Vec3) -> Vec3:
    # v' = v + 2*cross(q.xyz, cross(q.xyz, v) + w*v)
    w, x, y, z = q
    tx = 2.0 * (y * v[2] - z * v[1])
    ty = 2.0 * (z * v[0] - x * v[2])
    tz = 2.0 * (x * v[1] - y * v[0])
    return (
        v[0] + w * tx + (y * tz - z * ty),
        v[1] + w * ty + (z * tx - x * tz),
        v[2] + w * tz + (x * ty - y * tx),
    )


def q_from_axis_angle(axis: Vec3, angle_rad: float) -> Quat:
    axis = v_normalize(axis)
    h = 0.5 * angle_rad
    s = math.sin(h)
    return (math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s)


def q_from_euler_deg(x_deg: float, y_deg: float, z_deg: float) -> Quat:
    """Intrinsic Y (yaw), then X (pitch), then Z (roll), degrees."""
    qy = q_from_axis_angle((0.0, 1.0, 0.0), math.radians(y_deg)) if y_deg else IDENTITY_QUAT
    qx = q_from_axis_angle((1.0, 0.0, 0.0), math.radians(x_deg)) if x_deg else IDENTITY_QUAT
    qz = q_from_axis_angle((0.0, 0.0, 1.0), math.radians(z_deg)) if z_deg else IDENTITY_QUAT
    return q_normalize(q_mul(q_mul(qy, qx), qz))


def q_to_matrix(q: Quat) -> np.ndarray:
    """3x3 rotation matrix (float64) for batch vertex transforms."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def q_integrate(q: Quat, omega: Vec3, dt: float) -> Quat:
    """Advance orientation by angular velocity omega (rad/s) over dt."""
    wq = (0.0, omega[0], omega[1], omega[2])
    dq = q_mul(wq, q)
    return q_normalize(
        (
            q[0] + 0.5 * dt * dq[0],
            q[1] + 0.5 * dt * dq[1],
            q[2] + 0.5 * dt * dq[2],
            q[3] + 0.5 * dt * dq[3],
        )
    )


def look_rotation(forward: Vec3, up: Vec3 = (0.0, 1.0, 0.0)) -> Quat:
    """Quaternion whose +z axis points along forward with zero roll.

    Up stays as close to world up as the forward direction allows; looking
    straight up/down falls back to the world z axis as the up reference.
    """
    f = v_normalize(forward)
    r = v_cross(up, f)
    if v_norm(r) < 1e-9:
        r = v_cross((0.0, 0.0, 1.0), f)
    r = v_normalize(r)
    u = v_cross(f, r)
    # columns are the rotated basis vectors
    m00, m01, m02 = r[0], u[0], f[0]
    m10, m11, m12 = r[1], u[1], f[1]
    m20, m21, m22 = r[2], u[2], f[2]
    tr = m00 + m11 + m22
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = ((0.25 * s), (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
    elif m00 > m11 and m00 > m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2.0
        q = ((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
    elif m11 > m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2.0
        q = ((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
    else:
        s = math.sqrt(1.0 + m22 - m00 - m11) * 2.0
        q = ((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
    return q_normalize(q)
