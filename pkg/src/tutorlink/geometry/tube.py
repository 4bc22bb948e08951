"""Sweep a sketch centerline into a closed tube mesh.

Ring frames are propagated by parallel transport along the centerline, so
straight and nearly-collinear runs (common in hand sketches) never flip
the frame the way Frenet frames would.
"""

from __future__ import annotations

import math
from typing import List, Sequence

import numpy as np

from .mesh import TriangleMesh
from .vec import GeometryError, Vec3

DUPLICATE_EPS = 1e-7


class DegenerateStroke(GeometryError):
    pass


def _dedup(points: Sequence[Vec3]) -> List[Vec3]:
    out: List[Vec3] = []
    for p in points:
        if not out or out[-1].distance_to(p) >= DUPLICATE_EPS:
            out.append(p)
    return out


def _initial_normal(tangent: np.ndarray) -> np.ndarray:
    ref = np.array([0.0, 1.0, 0.0])
    if abs(np.dot(tangent, ref)) > 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    n = np.cross(tangent, ref)
    return n / np.linalg.norm(n)


def _transport(normal: np.ndarray, t_prev: np.ndarray, t_next: np.ndarray) -> np.ndarray:
    axis = np.cross(t_prev, t_next)
    s = np.linalg.norm(axis)
    c = float(np.dot(t_prev, t_next))
    if s < 1e-12:
        return normal  # collinear: frame carries over unchanged
    axis = axis / s
    angle = math.atan2(s, c)
    # Rodrigues rotation of the frame normal
    return (
        normal * math.cos(angle)
        + np.cross(axis, normal) * math.sin(angle)
        + axis * float(np.dot(axis, normal)) * (1.0 - math.cos(angle))
    )


def sweep_tube(centerline: Sequence[Vec3], radius: float, ring_segments: int) -> TriangleMesh:
    if ring_segments < 3:
        raise GeometryError("ring_segments must be >= 3")
    if radius <= 0:
        raise GeometryError("radius must be positive")
    pts = _dedup(centerline)
    if len(pts) < 2:
        raise DegenerateStroke("need at least 2 distinct centerline points")

    p = np.array([q.as_tuple() for q in pts])
    n_pts = len(p)
    segs = p[1:] - p[:-1]
    tangents = segs / np.linalg.norm(segs, axis=1)[:, None]

    # per-point tangent: average of adjacent segment tangents
    point_tangents = np.empty_like(p)
    point_tangents[0] = tangents[0]
    point_tangents[-1] = tangents[-1]
    for i in range(1, n_pts - 1):
        t = tangents[i - 1] + tangents[i]
        nrm = np.linalg.norm(t)
        point_tangents[i] = t / nrm if nrm > 1e-12 else tangents[i - 1]

    normals = np.empty_like(p)
    normals[0] = _initial_normal(point_tangents[0])
    for i in range(1, n_pts):
        n = _transport(normals[i - 1], point_tangents[i - 1], point_tangents[i])
        # re-orthogonalize against accumulated drift
        n = n - point_tangents[i] * float(np.dot(n, point_tangents[i]))
        normals[i] = n / np.linalg.norm(n)

    r = ring_segments
    angles = 2.0 * math.pi * np.arange(r) / r
    vertices = np.empty((n_pts * r + 2, 3))
    for i in range(n_pts):
        binormal = np.cross(point_tangents[i], normals[i])
        ring = (
            p[i]
            + radius * np.cos(angles)[:, None] * normals[i]
            + radius * np.sin(angles)[:, None] * binormal
        )
        vertices[i * r : (i + 1) * r] = ring
    start_cap = n_pts * r
    end_cap = n_pts * r + 1
    vertices[start_cap] = p[0]
    vertices[end_cap] = p[-1]

    tris: List[tuple] = []
    for i in range(n_pts - 1):
        for j in range(r):
            a = i * r + j
            b = i * r + (j + 1) % r
            c = (i + 1) * r + j
            d = (i + 1) * r + (j + 1) % r
            tris.append((a, c, b))
            tris.append((b, c, d))
    for j in range(r):
        tris.append((start_cap, j, (j + 1) % r))
        tris.append((end_cap, (n_pts - 1) * r + (j + 1) % r, (n_pts - 1) * r + j))

    return TriangleMesh("tube", vertices, np.array(tris, dtype=np.int64))
