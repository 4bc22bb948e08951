"""Shared mesh builders for geometry tests."""

import math

import numpy as np

from tutorlink.geometry import TriangleMesh, Vec3


def unit_cube(structure_id="cube", center=(0.0, 0.0, 0.0), size=1.0):
    h = size / 2.0
    cx, cy, cz = center
    verts = np.array(
        [
            (cx + sx * h, cy + sy * h, cz + sz * h)
            for sx in (-1, 1)
            for sy in (-1, 1)
            for sz in (-1, 1)
        ]
    )
    # index bits: x*4 + y*2 + z
    faces = [
        (0, 1, 3), (0, 3, 2),  # -x
        (4, 6, 7), (4, 7, 5),  # +x
        (0, 4, 5), (0, 5, 1),  # -y
        (2, 3, 7), (2, 7, 6),  # +y
        (0, 2, 6), (0, 6, 4),  # -z
        (1, 5, 7), (1, 7, 3),  # +z
    ]
    return TriangleMesh(structure_id, verts, np.array(faces))


def quad_wall_x(x=5.0, half=10.0, structure_id="wall"):
    """Two-triangle quad in the plane x=const spanning [-half, half]^2 in y,z."""
    verts = np.array(
        [(x, -half, -half), (x, half, -half), (x, half, half), (x, -half, half)]
    )
    return TriangleMesh(structure_id, verts, np.array([(0, 1, 2), (0, 2, 3)]))


def icosphere(subdiv=2, radius=1.0, structure_id="sphere"):
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v) / np.linalg.norm(v) for v in verts]
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = verts[i] + verts[j]
            verts.append(m / np.linalg.norm(m))
            cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(subdiv):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return TriangleMesh(structure_id, np.array(verts) * radius, np.array(faces))


def random_unit_vec(rng):
    while True:
        v = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))
        if 1e-3 < v.norm() <= 1.0:
            return v.normalized()
