"""Vector, quaternion and pose primitives.

Convention: right-handed coordinate system, y-up, distances in meters.
"Forward" for controllers and views is the local -z axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_UNIT_TOL = 1e-6


class GeometryError(ValueError):
    pass


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise GeometryError(f"non-finite component: {v!r}")


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        _check_finite(self.x, self.y, self.z)
        # normalize ints to floats so canonical JSON is representation-stable
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "z", float(self.z))

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n < 1e-12:
            raise GeometryError("cannot normalize near-zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def distance_to(self, other: "Vec3") -> float:
        return (self - other).norm()

    def as_tuple(self) -> tuple:
        return (self.x, self.y, self.z)

    @staticmethod
    def zero() -> "Vec3":
        return Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Quat:
    """Unit quaternion (x, y, z, w). Constructors renormalize so chained
    compositions stay within 1e-6 of unit norm."""

    x: float
    y: float
    z: float
    w: float

    def __post_init__(self):
        _check_finite(self.x, self.y, self.z, self.w)
        for name in ("x", "y", "z", "w"):
            object.__setattr__(self, name, float(getattr(self, name)))
        n = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w)
        if n < 1e-9:
            raise GeometryError("zero-norm quaternion")
        if abs(n - 1.0) > 1e-12:
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)
            object.__setattr__(self, "w", self.w / n)

    @staticmethod
    def identity() -> "Quat":
        return Quat(0.0, 0.0, 0.0, 1.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle_rad: float) -> "Quat":
        a = axis.normalized()
        h = angle_rad / 2.0
        s = math.sin(h)
        return Quat(a.x * s, a.y * s, a.z * s, math.cos(h))

    def __mul__(self, other: "Quat") -> "Quat":
        ax, ay, az, aw = self.x, self.y, self.z, self.w
        bx, by, bz, bw = other.x, other.y, other.z, other.w
        return Quat(
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        )

    def conjugate(self) -> "Quat":
        return Quat(-self.x, -self.y, -self.z, self.w)

    inverse = conjugate  # unit quaternion

    def rotate(self, v: Vec3) -> Vec3:
        # q * (v, 0) * q^-1, expanded
        qv = Vec3(self.x, self.y, self.z)
        uv = qv.cross(v)
        uuv = qv.cross(uv)
        return v + (uv * (2.0 * self.w)) + (uuv * 2.0)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w)


@dataclass(frozen=True)
class Pose:
    position: Vec3
    orientation: Quat

    @staticmethod
    def identity() -> "Pose":
        return Pose(Vec3.zero(), Quat.identity())

    def transform_point(self, local: Vec3) -> Vec3:
        """Rotation then translation."""
        return self.orientation.rotate(local) + self.position

    def transform_direction(self, local: Vec3) -> Vec3:
        return self.orientation.rotate(local)

    def forward(self) -> Vec3:
        return self.orientation.rotate(Vec3(0.0, 0.0, -1.0))

    def compose(self, local: "Pose") -> "Pose":
        """World pose of `local` expressed relative to self."""
        return Pose(self.transform_point(local.position), self.orientation * local.orientation)

    def inverse(self) -> "Pose":
        inv_q = self.orientation.conjugate()
        return Pose(inv_q.rotate(-self.position), inv_q)


def transform_point(pose: Pose, local: Vec3) -> Vec3:
    return pose.transform_point(local)
