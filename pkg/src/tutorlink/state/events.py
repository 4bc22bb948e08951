"""Session events: the tagged union the reducer consumes, with JSON codecs.

Every variant is a frozen dataclass registered under a string tag. Codecs
are strict enough for wire use and canonical enough for digests.
"""

from __future__ import annotations

from dataclasses import MISSING, dataclass, fields
from typing import ClassVar, Dict, List, Optional, Tuple, Type

from ..geometry import Pose, Quat, Vec3

ROLES = ("student", "teacher")
MODES = ("handbook", "navigation", "inspect")
TAGS = ("red", "blue", "yellow", "none")
BRUSHES = ("small", "large")


class EventCodecError(ValueError):
    pass


def vec_to_json(v: Vec3) -> list:
    return [v.x, v.y, v.z]


def vec_from_json(data) -> Vec3:
    if not isinstance(data, (list, tuple)) or len(data) != 3:
        raise EventCodecError(f"bad vec3: {data!r}")
    return Vec3(float(data[0]), float(data[1]), float(data[2]))


def quat_to_json(q: Quat) -> list:
    return [q.x, q.y, q.z, q.w]


def quat_from_json(data) -> Quat:
    if not isinstance(data, (list, tuple)) or len(data) != 4:
        raise EventCodecError(f"bad quat: {data!r}")
    return Quat(float(data[0]), float(data[1]), float(data[2]), float(data[3]))


def pose_to_json(p: Pose) -> dict:
    return {"position": vec_to_json(p.position), "orientation": quat_to_json(p.orientation)}


def pose_from_json(data) -> Pose:
    if not isinstance(data, dict):
        raise EventCodecError(f"bad pose: {data!r}")
    return Pose(vec_from_json(data["position"]), quat_from_json(data["orientation"]))


_REGISTRY: Dict[str, Type["Event"]] = {}


@dataclass(frozen=True)
class Event:
    tag: ClassVar[str] = ""

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        if cls.tag:
            _REGISTRY[cls.tag] = cls

    def to_json(self) -> dict:
        out = {"type": self.tag}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Vec3):
                v = vec_to_json(v)
            elif isinstance(v, Pose):
                v = pose_to_json(v)
            elif isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, list):
                v = [vec_to_json(p) if isinstance(p, Vec3) else p for p in v]
            out[f.name] = v
        return out


_VEC_FIELDS = {"position", "target", "anchor", "normal", "offset_tip"}
_POSE_FIELDS = {"head", "left", "right", "platform"}


def event_from_json(data: dict) -> "Event":
    if not isinstance(data, dict) or "type" not in data:
        raise EventCodecError(f"event missing type: {data!r}")
    cls = _REGISTRY.get(data["type"])
    if cls is None:
        raise EventCodecError(f"unknown event type: {data['type']!r}")
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            # fields added after a peer was built decode to their defaults
            if f.default is not MISSING or f.default_factory is not MISSING:
                continue
            raise EventCodecError(f"{data['type']}: missing field {f.name}")
        v = data[f.name]
        if f.name in _VEC_FIELDS and v is not None:
            v = vec_from_json(v)
        elif f.name in _POSE_FIELDS and v is not None:
            v = pose_from_json(v)
        elif f.name == "points":
            v = [vec_from_json(p) for p in v]
        elif f.name == "color":
            v = tuple(float(c) for c in v)
        kwargs[f.name] = v
    return cls(**kwargs)


@dataclass(frozen=True)
class PoseUpdate(Event):
    tag: ClassVar[str] = "pose_update"
    role: str = "student"
    timestamp_ms: int = 0
    head: Optional[Pose] = None
    left: Optional[Pose] = None
    right: Optional[Pose] = None
    platform: Optional[Pose] = None


@dataclass(frozen=True)
class ModeChange(Event):
    tag: ClassVar[str] = "mode_change"
    mode: str = "handbook"


@dataclass(frozen=True)
class BeamAdjust(Event):
    tag: ClassVar[str] = "beam_adjust"
    beam_length: float = 1.0


@dataclass(frozen=True)
class TeleportCommit(Event):
    tag: ClassVar[str] = "teleport_commit"
    target: Vec3 = Vec3.zero()
    # pose-clock stamp: lets replicas resolve platform ownership against
    # in-flight PoseUpdates commutatively (newest stamp wins, jumps win ties)
    timestamp_ms: int = 0


@dataclass(frozen=True)
class RepositionCommand(Event):
    tag: ClassVar[str] = "reposition_command"
    target: Vec3 = Vec3.zero()
    timestamp_ms: int = 0


@dataclass(frozen=True)
class LandmarkPlace(Event):
    tag: ClassVar[str] = "landmark_place"
    position: Vec3 = Vec3.zero()


@dataclass(frozen=True)
class LabelCreate(Event):
    tag: ClassVar[str] = "label_create"
    anchor: Vec3 = Vec3.zero()
    normal: Vec3 = Vec3(0, 1, 0)


@dataclass(frozen=True)
class LabelDrag(Event):
    tag: ClassVar[str] = "label_drag"
    label_id: str = ""
    offset_tip: Vec3 = Vec3.zero()


@dataclass(frozen=True)
class LabelEdit(Event):
    tag: ClassVar[str] = "label_edit"
    label_id: str = ""
    headline: str = ""
    description: str = ""
    color_tag: str = "none"


@dataclass(frozen=True)
class SketchBegin(Event):
    tag: ClassVar[str] = "sketch_begin"
    sketch_id: str = ""
    color: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    brush: str = "small"


@dataclass(frozen=True)
class SketchAppend(Event):
    tag: ClassVar[str] = "sketch_append"
    sketch_id: str = ""
    points: List[Vec3] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.points is None:
            object.__setattr__(self, "points", [])


@dataclass(frozen=True)
class SketchEnd(Event):
    tag: ClassVar[str] = "sketch_end"
    sketch_id: str = ""


@dataclass(frozen=True)
class SketchDelete(Event):
    tag: ClassVar[str] = "sketch_delete"
    sketch_id: str = ""


@dataclass(frozen=True)
class VisibilitySet(Event):
    tag: ClassVar[str] = "visibility_set"
    scope: str = "all"  # "all" or an annotation id
    visible: bool = True


@dataclass(frozen=True)
class InspectSelect(Event):
    tag: ClassVar[str] = "inspect_select"
    structure_id: str = ""


@dataclass(frozen=True)
class InspectRelease(Event):
    tag: ClassVar[str] = "inspect_release"


@dataclass(frozen=True)
class HapticCue(Event):
    tag: ClassVar[str] = "haptic_cue"
    role: str = "student"
    pattern: str = "pulse"


EVENT_TYPES = dict(_REGISTRY)
