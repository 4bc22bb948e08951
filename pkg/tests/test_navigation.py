import math
import random

import pytest

from tutorlink.geometry import Pose, Quat, Vec3, build_bvh
from tutorlink.navigation import (
    NavConfig,
    adjust_beam,
    clamp_walk,
    decompose_view,
    focus_on_student,
    free_fly_step,
    inspect_copy_pose,
    landmark_arrow,
    rotate_view,
    teleport,
)
from tutorlink.scene import Rect
from tutorlink.state import EventRejected
from tutorlink.state.session import StudentState
from dataclasses import replace

from helpers import quad_wall_x
from test_geometry_vec import random_pose

CFG = NavConfig()


def facing(direction: Vec3) -> Quat:
    """Orientation whose forward (-z) axis points along direction."""
    d = direction.normalized()
    yaw = math.degrees(math.atan2(-d.x, -d.z))
    pitch = math.degrees(math.asin(max(-1, min(1, d.y))))
    qy = Quat.from_axis_angle(Vec3(0, 1, 0), math.radians(yaw))
    qp = Quat.from_axis_angle(Vec3(1, 0, 0), math.radians(pitch))
    return qy * qp


def test_free_fly_straight():
    controller = Pose(Vec3.zero(), facing(Vec3(0, 0, 1)))
    out = free_fly_step(Pose.identity(), controller, 0.1, CFG)
    assert out.position.distance_to(Vec3(0, 0, 0.25)) < 1e-12
    assert out.orientation == Pose.identity().orientation


def test_free_fly_pitched_45():
    controller = Pose(Vec3.zero(), facing(Vec3(0, 1, -1)))
    out = free_fly_step(Pose.identity(), controller, 0.1, CFG)
    assert abs(out.position.y - (-out.position.z)) < 1e-9
    assert abs(out.position.norm() - 0.25) < 1e-9


def test_free_fly_integrator_additivity():
    controller = Pose(Vec3.zero(), facing(Vec3(1, 2, -0.5)))
    p = Pose.identity()
    for _ in range(100):
        p = free_fly_step(p, controller, 0.01, CFG)
    big = Pose.identity()
    for _ in range(10):
        big = free_fly_step(big, controller, 0.1, CFG)
    assert p.position.distance_to(big.position) < 1e-9
    with pytest.raises(ValueError):
        free_fly_step(Pose.identity(), controller, 1.0, CFG)


def test_free_fly_displacement_magnitude():
    rng = random.Random(8)
    for _ in range(50):
        controller = random_pose(rng)
        dt = rng.uniform(0.001, 0.1)
        out = free_fly_step(Pose.identity(), controller, dt, CFG)
        assert abs(out.position.norm() - CFG.fly_speed * dt) < 1e-9


def test_adjust_beam():
    assert adjust_beam(3.0, 1.0, CFG) == 3.5
    assert adjust_beam(CFG.beam_max, 1.0, CFG) == CFG.beam_max
    # order independence inside the clamp-free region
    a = adjust_beam(adjust_beam(5.0, 0.5, CFG), -0.25, CFG)
    b = adjust_beam(adjust_beam(5.0, -0.25, CFG), 0.5, CFG)
    assert abs(a - b) < 1e-12


def test_teleport_clamped_at_wall():
    bvh = build_bvh([quad_wall_x(2.0)])
    student = StudentState(
        mode="navigation",
        right_controller=Pose(Vec3.zero(), facing(Vec3(1, 0, 0))),
        beam_length=5.0,
    )
    commit = teleport(student, bvh, CFG)
    assert abs(commit.target.x - 1.5) < 1e-9


def test_teleport_wrong_mode():
    bvh = build_bvh([quad_wall_x(2.0)])
    student = StudentState(mode="handbook")
    with pytest.raises(EventRejected, match="wrong_mode"):
        teleport(student, bvh, CFG)


def test_teleport_open_space_commits_at_tip():
    bvh = build_bvh([quad_wall_x(50.0)])
    student = StudentState(
        mode="navigation",
        right_controller=Pose(Vec3(0, 1, 0), facing(Vec3(0, 0, -1))),
        beam_length=6.0,
    )
    commit = teleport(student, bvh, CFG)
    assert commit.target.distance_to(Vec3(0, 1, -6)) < 1e-9


def test_clamp_walk():
    barrier = Rect(-2.5, -2.5, 2.5, 2.5)
    assert clamp_walk(Vec3(1, 0.3, -2), barrier) == Vec3(1, 0.3, -2)
    assert clamp_walk(Vec3(3.5, 0.3, 0), barrier) == Vec3(2.5, 0.3, 0)
    assert clamp_walk(Vec3(4, 1, -9), barrier) == Vec3(2.5, 1, -2.5)
    # idempotent
    p = clamp_walk(Vec3(7, 2, 7), barrier)
    assert clamp_walk(p, barrier) == p


def test_landmark_arrow_identity():
    assert landmark_arrow(Pose.identity(), Vec3(0, 0, -1)) == Vec3(0, 0, -1)


def test_landmark_arrow_yawed_controller():
    # controller turned to face +x; landmark straight ahead in world (1,0,0)
    controller = Pose(Vec3.zero(), facing(Vec3(1, 0, 0)))
    local = landmark_arrow(controller, Vec3(1, 0, 0))
    assert local.distance_to(Vec3(0, 0, -1)) < 1e-9


def test_landmark_arrow_unit_and_coincident():
    rng = random.Random(21)
    for _ in range(100):
        controller = random_pose(rng)
        lm = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5))
        arrow = landmark_arrow(controller, lm)
        if arrow is not None:
            assert abs(arrow.norm() - 1.0) < 1e-9
    assert landmark_arrow(Pose.identity(), Vec3.zero()) is None


def test_inspect_copy_follows_platform():
    rng = random.Random(13)
    local = random_pose(rng)
    assert inspect_copy_pose(Pose.identity(), local).position.distance_to(local.position) < 1e-12
    platform = Pose(Vec3(3, 1, -2), Quat.identity())
    moved = inspect_copy_pose(platform, local)
    assert moved.position.distance_to(local.position + Vec3(3, 1, -2)) < 1e-9
    for _ in range(30):
        platform = random_pose(rng)
        world = inspect_copy_pose(platform, local)
        rel = platform.inverse().compose(world)
        assert rel.position.distance_to(local.position) < 1e-9


def test_rotate_view_pitch_clamp():
    v = rotate_view(Pose.identity(), 0, 80, CFG)
    v = rotate_view(v, 0, 20, CFG)
    _, pitch, _ = decompose_view(v.orientation)
    assert abs(pitch - CFG.pitch_clamp) < 1e-9


def test_rotate_view_full_yaw_periodic():
    v = Pose.identity()
    for _ in range(8):
        v = rotate_view(v, 45, 0, CFG)
    f = v.orientation.rotate(Vec3(0, 0, -1))
    assert f.distance_to(Vec3(0, 0, -1)) < 1e-6


def test_rotate_view_never_rolls():
    rng = random.Random(55)
    v = Pose.identity()
    for _ in range(300):
        v = rotate_view(v, rng.uniform(-90, 90), rng.uniform(-40, 40), CFG)
        yaw, pitch, roll = decompose_view(v.orientation)
        assert abs(roll) < 1e-6
        assert abs(pitch) <= CFG.pitch_clamp + 1e-9


def test_focus_on_student_look_at():
    view = Pose(Vec3(0, 5, 5), Quat.identity())
    head = Vec3(0, 1, -2)
    out = focus_on_student(view, head, CFG)
    assert abs(out.position.distance_to(head) - CFG.standoff) < 1e-9
    f = out.orientation.rotate(Vec3(0, 0, -1))
    expect = (head - out.position).normalized()
    assert f.distance_to(expect) < 1e-6
    _, _, roll = decompose_view(out.orientation)
    assert abs(roll) < 1e-6


def test_focus_on_student_degenerate():
    view = Pose(Vec3(1, 1, 1), facing(Vec3(1, 0, 0)))
    out = focus_on_student(view, Vec3(1, 1, 1), CFG)
    assert out.orientation == view.orientation
    assert abs(out.position.distance_to(Vec3(1, 1, 1)) - CFG.standoff) < 1e-9


def test_focus_pitch_always_clamped():
    rng = random.Random(91)
    for _ in range(100):
        view = random_pose(rng)
        head = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5))
        out = focus_on_student(view, head, CFG)
        _, pitch, _ = decompose_view(out.orientation)
        assert abs(pitch) <= CFG.pitch_clamp + 1e-9
