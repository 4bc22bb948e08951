import math
from collections import Counter

import numpy as np
import pytest

from tutorlink.geometry import DegenerateStroke, Vec3, sweep_tube


def edge_counts(mesh):
    counts = Counter()
    for a, b, c in mesh.triangles:
        for e in ((a, b), (b, c), (c, a)):
            counts[tuple(sorted(e))] += 1
    return counts


def test_two_point_segment_counts():
    mesh = sweep_tube([Vec3(0, 0, 0), Vec3(0, 0, 2)], 0.1, 8)
    assert mesh.num_vertices == 2 * 8 + 2
    # 16 side triangles + 8 per cap
    assert mesh.num_triangles == 16 + 16


def test_collinear_points_no_nan_parallel_frames():
    pts = [Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)]
    mesh = sweep_tube(pts, 0.2, 8)
    assert np.all(np.isfinite(mesh.vertices))
    # rings of a straight line are translates of each other
    r0 = mesh.vertices[0:8] - np.array([0, 0, 0])
    r1 = mesh.vertices[8:16] - np.array([1, 0, 0])
    r2 = mesh.vertices[16:24] - np.array([2, 0, 0])
    assert np.allclose(r0, r1, atol=1e-12)
    assert np.allclose(r1, r2, atol=1e-12)


def test_elbow_no_frame_flip():
    pts = [Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0)]
    mesh = sweep_tube(pts, 0.1, 8)
    # corresponding ring vertices of adjacent rings should stay close in
    # angle; a flipped frame would rotate them by ~180 degrees
    centers = [np.array([0, 0, 0]), np.array([1, 0, 0]), np.array([1, 1, 0])]
    for i in range(2):
        a = mesh.vertices[i * 8 : (i + 1) * 8] - centers[i]
        b = mesh.vertices[(i + 1) * 8 : (i + 2) * 8] - centers[i + 1]
        for j in range(8):
            cosang = np.dot(a[j], b[j]) / (np.linalg.norm(a[j]) * np.linalg.norm(b[j]))
            assert cosang > math.cos(math.radians(95))


def test_degenerate_stroke_rejected():
    with pytest.raises(DegenerateStroke):
        sweep_tube([Vec3(0, 0, 0)], 0.1, 8)
    with pytest.raises(DegenerateStroke):
        sweep_tube([Vec3(0, 0, 0), Vec3(0, 0, 1e-9)], 0.1, 8)


def test_duplicate_points_removed():
    mesh = sweep_tube([Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 1)], 0.1, 8)
    assert mesh.num_vertices == 2 * 8 + 2


@pytest.mark.parametrize("ring", [3, 8, 16])
@pytest.mark.parametrize("n", [2, 5, 17])
def test_vertex_count_and_watertight(n, ring):
    pts = [Vec3(math.sin(i * 0.3), 0.1 * i, math.cos(i * 0.3)) for i in range(n)]
    mesh = sweep_tube(pts, 0.05, ring)
    assert mesh.num_vertices == n * ring + 2
    assert all(c == 2 for c in edge_counts(mesh).values())
