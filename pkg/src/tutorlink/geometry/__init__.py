from .vec import GeometryError, Pose, Quat, Vec3, transform_point
from .mesh import Capsule, Ray, RayHit, TriangleMesh, mesh_from_lists
from .bvh import Bvh, build_bvh, capsule_clear, ray_cast
from .teleport import TeleportAccepted, TeleportOutcome, TeleportRejected, clamp_teleport
from .tube import DegenerateStroke, sweep_tube

__all__ = [
    "GeometryError",
    "Pose",
    "Quat",
    "Vec3",
    "transform_point",
    "Capsule",
    "Ray",
    "RayHit",
    "TriangleMesh",
    "mesh_from_lists",
    "Bvh",
    "build_bvh",
    "capsule_clear",
    "ray_cast",
    "TeleportAccepted",
    "TeleportOutcome",
    "TeleportRejected",
    "clamp_teleport",
    "DegenerateStroke",
    "sweep_tube",
]
