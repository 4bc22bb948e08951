"""Locomotion and guidance math for both roles.

All functions are pure. Angles in NavConfig are degrees; everything else
is meters/seconds in world scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .geometry import (
    Bvh,
    Capsule,
    Pose,
    Quat,
    Ray,
    TeleportAccepted,
    TeleportOutcome,
    Vec3,
    clamp_teleport,
)
from .scene import Rect
from .state import events as ev
from .state.session import BEAM_MAX, BEAM_MIN, EventRejected, StudentState

BEAM_GAIN = 0.5  # meters of beam length per unit swipe


@dataclass(frozen=True)
class NavConfig:
    fly_speed: float = 2.5  # "fast walking speed", world scale
    margin: float = 0.5  # minimum clearance to walls when teleporting
    beam_min: float = BEAM_MIN
    beam_max: float = BEAM_MAX
    pitch_clamp: float = 85.0  # degrees
    walk_barrier: Rect = Rect(-2.5, -2.5, 2.5, 2.5)
    capsule_radius: float = 0.3
    capsule_height: float = 1.8
    standoff: float = 3.0  # focus-on-student camera distance
    send_rate_hz: float = 30.0

    def __post_init__(self):
        if min(self.fly_speed, self.margin, self.beam_min, self.beam_max) <= 0:
            raise ValueError("NavConfig distances and speeds must be positive")
        if not 0 < self.pitch_clamp < 90:
            raise ValueError("pitch_clamp must be in (0, 90) degrees")

    def capsule(self) -> Capsule:
        return Capsule(Vec3.zero(), self.capsule_height, self.capsule_radius)


def free_fly_step(platform: Pose, controller: Pose, dt: float, config: NavConfig) -> Pose:
    """Advance the flying carpet along the controller's pointing direction.
    Usable in every mode; flight is deliberately unobstructed."""
    if not 0 < dt <= 0.1:
        raise ValueError("dt must be in (0, 0.1] seconds")
    displacement = controller.forward().normalized() * (config.fly_speed * dt)
    return replace(platform, position=platform.position + displacement)


def adjust_beam(current: float, swipe_delta: float, config: NavConfig) -> float:
    return min(max(current + swipe_delta * BEAM_GAIN, config.beam_min), config.beam_max)


def teleport(student: StudentState, bvh: Bvh, config: NavConfig) -> ev.TeleportCommit:
    """Build the discrete teleport event from the interaction controller's
    beam. The jump is a single event; no transition poses are emitted."""
    if student.mode != "navigation":
        raise EventRejected("wrong_mode")
    controller = student.right_controller
    ray = Ray(controller.position, controller.forward().normalized())
    outcome: TeleportOutcome = clamp_teleport(bvh, ray, student.beam_length, config.margin, config.capsule())
    if not isinstance(outcome, TeleportAccepted):
        raise EventRejected(outcome.reason)
    return ev.TeleportCommit(target=outcome.target, timestamp_ms=student.last_pose_ts)


def clamp_walk(position: Vec3, barrier: Rect) -> Vec3:
    x, z = barrier.clamp(position.x, position.z)
    return Vec3(x, position.y, z)


def landmark_arrow(controller: Pose, landmark: Vec3) -> Optional[Vec3]:
    """Unit direction to the landmark in the controller's local frame, or
    None when the controller sits on the landmark."""
    delta = landmark - controller.position
    if delta.norm() < 1e-6:
        return None
    world_dir = delta.normalized()
    return controller.orientation.conjugate().rotate(world_dir)


def inspect_copy_pose(platform: Pose, local_offset: Pose) -> Pose:
    """Ghost copies ride along with the platform."""
    return platform.compose(local_offset)


def _yaw_pitch_quat(yaw_deg: float, pitch_deg: float) -> Quat:
    qy = Quat.from_axis_angle(Vec3(0, 1, 0), math.radians(yaw_deg))
    qp = Quat.from_axis_angle(Vec3(1, 0, 0), math.radians(pitch_deg))
    return qy * qp


def decompose_view(orientation: Quat) -> tuple:
    """(yaw_deg, pitch_deg, roll_deg) of a view orientation; pitch positive
    looking up."""
    f = orientation.rotate(Vec3(0, 0, -1))
    pitch = math.degrees(math.asin(max(-1.0, min(1.0, f.y))))
    yaw = math.degrees(math.atan2(-f.x, -f.z))
    up = orientation.rotate(Vec3(0, 1, 0))
    no_roll = _yaw_pitch_quat(yaw, pitch)
    ref_up = no_roll.rotate(Vec3(0, 1, 0))
    right = no_roll.rotate(Vec3(1, 0, 0))
    roll = math.degrees(math.atan2(up.dot(right), up.dot(ref_up)))
    return yaw, pitch, roll


def rotate_view(view: Pose, yaw_delta_deg: float, pitch_delta_deg: float, config: NavConfig) -> Pose:
    yaw, pitch, _ = decompose_view(view.orientation)
    yaw += yaw_delta_deg
    pitch = min(max(pitch + pitch_delta_deg, -config.pitch_clamp), config.pitch_clamp)
    return replace(view, orientation=_yaw_pitch_quat(yaw, pitch))


def look_at(position: Vec3, target: Vec3, config: NavConfig) -> Quat:
    """Roll-free orientation looking from position toward target, pitch
    clamped."""
    delta = target - position
    if delta.norm() < 1e-9:
        return Quat.identity()
    d = delta.normalized()
    pitch = math.degrees(math.asin(max(-1.0, min(1.0, d.y))))
    pitch = min(max(pitch, -config.pitch_clamp), config.pitch_clamp)
    yaw = math.degrees(math.atan2(-d.x, -d.z))
    return _yaw_pitch_quat(yaw, pitch)


def focus_on_student(teacher_view: Pose, student_head: Vec3, config: NavConfig) -> Pose:
    """Pull the view to a standoff distance behind its current backward axis
    and aim it at the student."""
    backward = teacher_view.orientation.rotate(Vec3(0, 0, 1))
    if teacher_view.position.distance_to(student_head) < 1e-9:
        position = student_head + backward * config.standoff
        return Pose(position, teacher_view.orientation)
    position = student_head + backward * config.standoff
    return Pose(position, look_at(position, student_head, config))
