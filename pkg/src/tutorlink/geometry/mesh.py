"""Triangle meshes, rays and capsules. Mesh data is stored as numpy arrays."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .vec import GeometryError, Vec3

DEGENERATE_AREA = 1e-12  # m^2; triangles below this are rejected at load


@dataclass(frozen=True)
class Ray:
    origin: Vec3
    direction: Vec3  # unit

    def __post_init__(self):
        n = self.direction.norm()
        if abs(n - 1.0) > 1e-6:
            raise GeometryError(f"ray direction not unit length (|d|={n})")


@dataclass(frozen=True)
class RayHit:
    distance: float
    point: Vec3
    normal: Vec3  # unit, facing the ray origin
    structure_id: str
    triangle_index: int


@dataclass(frozen=True)
class Capsule:
    """Vertical capsule: axis from base+radius*y to base+(height-radius)*y."""

    base: Vec3
    height: float
    radius: float

    def __post_init__(self):
        if self.height <= 0 or self.radius <= 0:
            raise GeometryError("capsule height and radius must be positive")

    def axis_segment(self) -> tuple:
        a = Vec3(self.base.x, self.base.y + min(self.radius, self.height / 2), self.base.z)
        b = Vec3(self.base.x, self.base.y + max(self.height - self.radius, self.height / 2), self.base.z)
        return a, b

    def at(self, base: Vec3) -> "Capsule":
        return Capsule(base, self.height, self.radius)


@dataclass
class TriangleMesh:
    structure_id: str
    vertices: np.ndarray = field(repr=False)  # (V, 3) float64
    triangles: np.ndarray = field(repr=False)  # (T, 3) int64

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(self.vertices)):
            raise GeometryError(f"mesh {self.structure_id}: non-finite vertex")
        if self.triangles.size:
            if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
                raise GeometryError(f"mesh {self.structure_id}: triangle index out of range")
            areas = self.triangle_areas()
            bad = np.nonzero(areas < DEGENERATE_AREA)[0]
            if bad.size:
                raise GeometryError(
                    f"mesh {self.structure_id}: degenerate triangle(s) {bad[:5].tolist()}"
                )

    def triangle_corners(self):
        """Returns (a, b, c) arrays of shape (T, 3)."""
        v = self.vertices
        t = self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def triangle_areas(self) -> np.ndarray:
        a, b, c = self.triangle_corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)


def mesh_from_lists(structure_id: str, vertices, triangles) -> TriangleMesh:
    verts = np.array([v.as_tuple() if isinstance(v, Vec3) else tuple(v) for v in vertices])
    return TriangleMesh(structure_id, verts, np.array(triangles))


def _cross_rows(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise cross product; same math as np.cross without its dispatch cost."""
    out = np.empty(np.broadcast_shapes(u.shape, v.shape))
    out[..., 0] = u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1]
    out[..., 1] = u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2]
    out[..., 2] = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    return out


def _dot_rows(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...j,...j->...", u, v)


def ray_triangles_intersect(
    origin: np.ndarray, direction: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> np.ndarray:
    """Vectorized Moller-Trumbore over triangle arrays (T, 3).

    Returns distances (T,); +inf where there is no intersection.
    Both triangle faces are hit (no backface culling).
    """
    eps = 1e-12
    e1 = b - a
    e2 = c - a
    h = _cross_rows(np.broadcast_to(direction, e2.shape), e2)
    det = _dot_rows(e1, h)
    parallel = np.abs(det) < eps
    det_safe = np.where(parallel, 1.0, det)
    inv_det = 1.0 / det_safe
    s = origin - a
    u = _dot_rows(s, h) * inv_det
    q = _cross_rows(s, e1)
    v = _dot_rows(np.broadcast_to(direction, q.shape), q) * inv_det
    t = _dot_rows(e2, q) * inv_det
    tol = 1e-9
    miss = parallel | (u < -tol) | (v < -tol) | (u + v > 1.0 + tol) | (t < 0.0)
    return np.where(miss, np.inf, t)


def segment_triangles_distance(
    p0: np.ndarray, p1: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> np.ndarray:
    """Vectorized exact minimum distance from segment [p0, p1] to each triangle.

    Candidates: segment endpoints vs triangle faces, segment vs the three
    triangle edges, and zero if the segment crosses the triangle. The
    closest-feature pair always lies among these. p0/p1 may be single
    points (3,) or per-triangle rows (T, 3) for batched queries.
    """
    d = np.minimum(
        _point_triangles_distance(p0, a, b, c),
        _point_triangles_distance(p1, a, b, c),
    )
    for ea, eb in ((a, b), (b, c), (c, a)):
        d = np.minimum(d, _segment_segments_distance(p0, p1, ea, eb))
    seg = p1 - p0
    seg_len = np.sqrt(_dot_rows(seg, seg))
    len_safe = np.where(seg_len > 1e-12, seg_len, 1.0)
    t = ray_triangles_intersect(p0, seg / len_safe[..., None], a, b, c)
    return np.where((seg_len > 1e-12) & (t <= seg_len), 0.0, d)


def _point_triangles_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Distance from point p to each triangle face where its projection lands
    inside the face; +inf elsewhere. Edge and vertex cases are covered by the
    segment-segment candidates in segment_triangles_distance."""
    n = _cross_rows(b - a, c - a)
    nn = np.sqrt(_dot_rows(n, n))
    nn = np.where(nn < 1e-18, 1.0, nn)
    n_unit = n / nn[:, None]
    ap = p - a
    dist_plane = _dot_rows(ap, n_unit)
    proj = p - dist_plane[:, None] * n_unit
    inside = _points_in_triangles(proj, a, b, c)
    return np.where(inside, np.abs(dist_plane), np.inf)


def _points_in_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    v0 = c - a
    v1 = b - a
    v2 = p - a
    d00 = _dot_rows(v0, v0)
    d01 = _dot_rows(v0, v1)
    d11 = _dot_rows(v1, v1)
    d20 = _dot_rows(v2, v0)
    d21 = _dot_rows(v2, v1)
    denom = d00 * d11 - d01 * d01
    denom = np.where(np.abs(denom) < 1e-18, 1.0, denom)
    u = (d11 * d20 - d01 * d21) / denom
    v = (d00 * d21 - d01 * d20) / denom
    return (u >= 0) & (v >= 0) & (u + v <= 1)


def _clip01(x: np.ndarray) -> np.ndarray:
    return np.minimum(np.maximum(x, 0.0), 1.0)


def _segment_segments_distance(p0: np.ndarray, p1: np.ndarray, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Min distance between one segment [p0,p1] and many segments [q0,q1].

    Closest-point-of-two-segments (exact, with endpoint clamping)."""
    d1 = p1 - p0  # (3,) or (T, 3)
    d2 = q1 - q0  # (T, 3)
    r = p0 - q0  # (T, 3)
    a = _dot_rows(d1, d1)
    e = _dot_rows(d2, d2)
    f = _dot_rows(d2, r)
    c = _dot_rows(r, d1)
    b = _dot_rows(d2, d1)
    a_safe = np.where(a > 1e-18, a, 1.0)
    e_safe = np.where(e < 1e-18, 1.0, e)
    denom = a * e - b * b
    denom_safe = np.where(np.abs(denom) < 1e-18, 1.0, denom)
    s = np.where(np.abs(denom) < 1e-18, 0.0, _clip01((b * f - c * e) / denom_safe))
    t = (b * s + f) / e_safe
    # clamp t, then recompute and clamp s accordingly
    s = np.where(t < 0.0, _clip01(-c / a_safe), s)
    s = np.where(t > 1.0, _clip01((b - c) / a_safe), s)
    t = _clip01(t)
    diff = (p0 + s[:, None] * d1) - (q0 + t[:, None] * d2)
    return np.sqrt(_dot_rows(diff, diff))
