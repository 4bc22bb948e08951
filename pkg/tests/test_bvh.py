import random

import numpy as np
import pytest

from tutorlink.geometry import (
    Capsule,
    GeometryError,
    Ray,
    TriangleMesh,
    Vec3,
    build_bvh,
    capsule_clear,
    ray_cast,
)

from helpers import icosphere, quad_wall_x, random_unit_vec, unit_cube


def test_single_triangle_leaf():
    mesh = TriangleMesh("tri", np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0)]), np.array([(0, 1, 2)]))
    bvh = build_bvh([mesh])
    centroid = Vec3(1 / 3, 1 / 3, 0)
    hit = ray_cast(bvh, Ray(centroid + Vec3(0, 0, 1), Vec3(0, 0, -1)), 10.0)
    assert hit is not None
    assert hit.triangle_index == 0
    assert abs(hit.distance - 1.0) < 1e-12


def test_empty_input_rejected():
    with pytest.raises(GeometryError):
        build_bvh([])
    empty = TriangleMesh("e", np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
    with pytest.raises(GeometryError):
        build_bvh([empty])


def test_cube_matches_brute_force_1000_rays():
    bvh = build_bvh([unit_cube()])
    rng = random.Random(42)
    hits = 0
    for i in range(1000):
        origin = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3))
        if i % 2:
            aim = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
            direction = (aim - origin).normalized()
        else:
            direction = random_unit_vec(rng)
        ray = Ray(origin, direction)
        a = bvh.ray_cast(ray, 50.0)
        b = bvh.ray_cast_brute(ray, 50.0)
        assert (a is None) == (b is None)
        if a is not None:
            hits += 1
            assert a.triangle_index == b.triangle_index
            assert a.structure_id == b.structure_id
            assert abs(a.distance - b.distance) < 1e-9
    assert hits > 50  # sanity: the sweep actually exercises hits


def test_two_disjoint_meshes_structure_ids():
    bvh = build_bvh([unit_cube("left", center=(-3, 0, 0)), unit_cube("right", center=(3, 0, 0))])
    hit_l = ray_cast(bvh, Ray(Vec3(-10, 0, 0), Vec3(1, 0, 0)), 100.0)
    hit_r = ray_cast(bvh, Ray(Vec3(10, 0, 0), Vec3(-1, 0, 0)), 100.0)
    assert hit_l.structure_id == "left"
    assert hit_r.structure_id == "right"


def test_ray_quad_analytic():
    bvh = build_bvh([quad_wall_x(5.0)])
    hit = ray_cast(bvh, Ray(Vec3.zero(), Vec3(1, 0, 0)), 100.0)
    assert abs(hit.distance - 5.0) < 1e-12
    assert hit.point.distance_to(Vec3(5, 0, 0)) < 1e-9
    assert ray_cast(bvh, Ray(Vec3.zero(), Vec3(1, 0, 0)), 4.0) is None


def test_icosphere_matches_brute_force():
    bvh = build_bvh([icosphere(subdiv=2)])
    rng = random.Random(1234)
    for _ in range(300):
        origin = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2))
        ray = Ray(origin, random_unit_vec(rng))
        a = bvh.ray_cast(ray, 20.0)
        b = bvh.ray_cast_brute(ray, 20.0)
        assert (a is None) == (b is None)
        if a is not None:
            assert a.triangle_index == b.triangle_index
            assert abs(a.distance - b.distance) < 1e-9


def test_hit_point_consistency():
    bvh = build_bvh([icosphere(subdiv=1)])
    hit = ray_cast(bvh, Ray(Vec3(0, 0, 5), Vec3(0, 0, -1)), 10.0)
    recon = Vec3(0, 0, 5) + Vec3(0, 0, -1) * hit.distance
    assert hit.point.distance_to(recon) < 1e-6
    assert abs(hit.normal.norm() - 1.0) < 1e-9


def test_capsule_far_from_cube_clear():
    bvh = build_bvh([unit_cube()])
    assert capsule_clear(bvh, Capsule(Vec3(10, 0, 10), 1.8, 0.3))


def test_capsule_through_cube_face_blocked():
    bvh = build_bvh([unit_cube()])
    assert not capsule_clear(bvh, Capsule(Vec3(0, -1, 0), 1.8, 0.3))


def test_capsule_random_matches_brute_force():
    bvh = build_bvh([unit_cube()])
    rng = random.Random(99)
    blocked = 0
    for _ in range(500):
        base = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2))
        cap = Capsule(base, rng.uniform(0.5, 2.5), rng.uniform(0.1, 0.6))
        a = bvh.capsule_clear(cap)
        b = bvh.capsule_clear_brute(cap)
        assert a == b
        blocked += not a
    assert 0 < blocked < 500
