"""Teleport target selection: beam shortening at walls plus capsule recovery.

The beam is shortened so the target keeps a minimum margin to the first
surface it would pierce. If the avatar capsule still collides at the tip,
the target walks back along the beam in margin/2 steps until it fits or
the beam collapses. Mid-air targets are fine: the student flies freely,
so no ground support is required.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .bvh import Bvh
from .mesh import Capsule, Ray
from .vec import GeometryError, Vec3


@dataclass(frozen=True)
class TeleportAccepted:
    target: Vec3
    effective_length: float


@dataclass(frozen=True)
class TeleportRejected:
    reason: str  # "too_close"


TeleportOutcome = Union[TeleportAccepted, TeleportRejected]


def clamp_teleport(
    bvh: Bvh,
    ray: Ray,
    desired_length: float,
    margin: float,
    capsule_template: Capsule,
) -> TeleportOutcome:
    if desired_length <= 0:
        raise GeometryError("desired_length must be positive")
    if margin <= 0:
        raise GeometryError("margin must be positive")

    effective = desired_length
    hit = bvh.ray_cast(ray, desired_length + margin)
    if hit is not None and hit.distance < desired_length + margin:
        effective = hit.distance - margin

    step = margin / 2.0
    while effective > margin:
        target = ray.origin + ray.direction * effective
        if bvh.capsule_clear(capsule_template.at(target)):
            return TeleportAccepted(target, effective)
        effective -= step
    return TeleportRejected("too_close")
