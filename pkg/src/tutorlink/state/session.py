"""The authoritative session model and its pure reducer.

apply_event never mutates its input; it returns a new state plus derived
effects (signals such as haptic cues that frontends execute). Rejected
events raise EventRejected and leave the caller's state untouched, so
rejection is atomic by construction.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Tuple

from ..geometry import Pose, Vec3
from . import events as ev

BEAM_MIN = 1.0
BEAM_MAX = 30.0
HEADLINE_MAX = 120
SKETCH_DECIMATE = 1e-3  # stylus jitter control
LABEL_TIP_DEFAULT = 0.2  # offset along the anchor normal when never dragged
INSPECT_DEFAULT_OFFSET = Pose(Vec3(0.0, 1.2, -0.8), Pose.identity().orientation)


class EventRejected(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class DerivedEffect:
    kind: str  # e.g. "haptic"
    role: str
    detail: str = ""


@dataclass(frozen=True)
class Landmark:
    landmark_id: str
    position: Vec3
    active: bool = True


@dataclass(frozen=True)
class Label:
    label_id: str
    anchor: Vec3
    offset_tip: Vec3
    headline: str = ""
    description: str = ""
    color_tag: str = "none"
    visible: bool = True


@dataclass(frozen=True)
class Sketch:
    sketch_id: str
    color: Tuple[float, float, float]
    brush: str
    points: Tuple[Vec3, ...] = ()
    closed: bool = False
    visible: bool = True


@dataclass(frozen=True)
class StudentState:
    head: Pose = Pose.identity()
    left_controller: Pose = Pose.identity()
    right_controller: Pose = Pose.identity()
    platform: Pose = Pose.identity()
    mode: str = "handbook"
    inspect_copy: Optional[Tuple[str, Pose]] = None  # (structure_id, platform-local offset)
    beam_length: float = 5.0
    last_pose_ts: int = -1
    # pose-clock stamp of the last platform write; the platform is a
    # last-writer-wins register so that continuous PoseUpdates and discrete
    # jumps (teleport/reposition) commute across channel interleavings
    platform_ts: int = -1


@dataclass(frozen=True)
class TeacherState:
    view: Pose = Pose.identity()
    tool: str = "none"
    annotations_shown: bool = True
    last_pose_ts: int = -1


@dataclass(frozen=True)
class SessionState:
    landmarks: Dict[str, Landmark] = field(default_factory=dict)
    labels: Dict[str, Label] = field(default_factory=dict)
    sketches: Dict[str, Sketch] = field(default_factory=dict)
    retired_sketch_ids: FrozenSet[str] = frozenset()
    student: StudentState = StudentState()
    teacher: TeacherState = TeacherState()
    next_id: int = 1
    applied_seq: Dict[Tuple[str, str], int] = field(default_factory=dict)
    applied_count: int = 0


def initial_state() -> SessionState:
    return SessionState()


def apply_event(
    state: SessionState,
    event: ev.Event,
    origin: Optional[Tuple[str, str, int]] = None,
) -> Tuple[SessionState, List[DerivedEffect]]:
    """Pure reducer. origin = (sender, channel, seq) when the event came
    through the protocol; it feeds the per-channel high-water marks."""
    new_state, effects = _dispatch(state, event)
    seq_map = dict(new_state.applied_seq)
    if origin is not None:
        sender, channel, seq = origin
        key = (sender, channel)
        if seq_map.get(key, -1) >= seq:
            raise EventRejected("stale_seq")
        seq_map[key] = seq
    new_state = replace(new_state, applied_seq=seq_map, applied_count=new_state.applied_count + 1)
    return new_state, effects


def _dispatch(state: SessionState, event: ev.Event) -> Tuple[SessionState, List[DerivedEffect]]:
    handler = _HANDLERS.get(type(event))
    if handler is None:
        raise EventRejected(f"unknown_event:{type(event).__name__}")
    return handler(state, event)


def _on_pose(state: SessionState, e: ev.PoseUpdate):
    if e.role not in ev.ROLES:
        raise EventRejected("bad_role")
    if e.role == "student":
        st = state.student
        if e.timestamp_ms <= st.last_pose_ts:
            raise EventRejected("stale_pose")
        take_platform = e.platform is not None and e.timestamp_ms > st.platform_ts
        st = replace(
            st,
            head=e.head or st.head,
            left_controller=e.left or st.left_controller,
            right_controller=e.right or st.right_controller,
            platform=e.platform if take_platform else st.platform,
            platform_ts=e.timestamp_ms if take_platform else st.platform_ts,
            last_pose_ts=e.timestamp_ms,
        )
        return replace(state, student=st), []
    tc = state.teacher
    if e.timestamp_ms <= tc.last_pose_ts:
        raise EventRejected("stale_pose")
    return replace(state, teacher=replace(tc, view=e.head or tc.view, last_pose_ts=e.timestamp_ms)), []


def _on_mode(state: SessionState, e: ev.ModeChange):
    if e.mode not in ev.MODES:
        raise EventRejected("bad_mode")
    return replace(state, student=replace(state.student, mode=e.mode)), []


def _on_beam(state: SessionState, e: ev.BeamAdjust):
    length = min(max(float(e.beam_length), BEAM_MIN), BEAM_MAX)
    return replace(state, student=replace(state.student, beam_length=length)), []


def _jump_platform(st: StudentState, target: Vec3, timestamp_ms: int) -> StudentState:
    # discrete jumps win ties against the pose stamped with the same clock
    # value (that pose was already known when the jump was issued)
    if timestamp_ms < st.platform_ts:
        return st
    platform = replace(st.platform, position=target)
    return replace(st, platform=platform, platform_ts=timestamp_ms)


def _on_teleport(state: SessionState, e: ev.TeleportCommit):
    return replace(state, student=_jump_platform(state.student, e.target, e.timestamp_ms)), []


def _on_reposition(state: SessionState, e: ev.RepositionCommand):
    st = _jump_platform(state.student, e.target, e.timestamp_ms)
    return replace(state, student=st), [DerivedEffect("haptic", "student", "reposition")]


def _on_landmark(state: SessionState, e: ev.LandmarkPlace):
    marks = {k: replace(v, active=False) for k, v in state.landmarks.items()}
    lid = str(state.next_id)
    marks[lid] = Landmark(lid, e.position, active=True)
    new = replace(state, landmarks=marks, next_id=state.next_id + 1)
    return new, [DerivedEffect("haptic", "student", "landmark")]


def _on_label_create(state: SessionState, e: ev.LabelCreate):
    lid = str(state.next_id)
    tip = e.anchor + e.normal.normalized() * LABEL_TIP_DEFAULT
    labels = dict(state.labels)
    labels[lid] = Label(lid, e.anchor, tip)
    return replace(state, labels=labels, next_id=state.next_id + 1), []


def _on_label_drag(state: SessionState, e: ev.LabelDrag):
    if e.label_id not in state.labels:
        raise EventRejected("not_found")
    labels = dict(state.labels)
    labels[e.label_id] = replace(labels[e.label_id], offset_tip=e.offset_tip)
    return replace(state, labels=labels), []


def _on_label_edit(state: SessionState, e: ev.LabelEdit):
    if e.label_id not in state.labels:
        raise EventRejected("not_found")
    if len(e.headline) > HEADLINE_MAX:
        raise EventRejected("headline_too_long")
    if e.color_tag not in ev.TAGS:
        raise EventRejected("bad_tag")
    labels = dict(state.labels)
    labels[e.label_id] = replace(
        labels[e.label_id], headline=e.headline, description=e.description, color_tag=e.color_tag
    )
    return replace(state, labels=labels), []


def _on_sketch_begin(state: SessionState, e: ev.SketchBegin):
    if not e.sketch_id:
        raise EventRejected("empty_id")
    if e.sketch_id in state.sketches or e.sketch_id in state.retired_sketch_ids:
        raise EventRejected("id_reused")
    if e.brush not in ev.BRUSHES:
        raise EventRejected("bad_brush")
    sketches = dict(state.sketches)
    sketches[e.sketch_id] = Sketch(e.sketch_id, tuple(float(c) for c in e.color), e.brush)
    return replace(state, sketches=sketches), []


def _on_sketch_append(state: SessionState, e: ev.SketchAppend):
    sk = state.sketches.get(e.sketch_id)
    if sk is None:
        raise EventRejected("not_found")
    if sk.closed:
        raise EventRejected("sketch_closed")
    pts = list(sk.points)
    for p in e.points:
        if not pts or pts[-1].distance_to(p) >= SKETCH_DECIMATE:
            pts.append(p)
    sketches = dict(state.sketches)
    sketches[e.sketch_id] = replace(sk, points=tuple(pts))
    return replace(state, sketches=sketches), []


def _on_sketch_end(state: SessionState, e: ev.SketchEnd):
    sk = state.sketches.get(e.sketch_id)
    if sk is None:
        raise EventRejected("not_found")
    if sk.closed:
        raise EventRejected("sketch_closed")
    sketches = dict(state.sketches)
    sketches[e.sketch_id] = replace(sk, closed=True)
    return replace(state, sketches=sketches), []


def _on_sketch_delete(state: SessionState, e: ev.SketchDelete):
    if e.sketch_id not in state.sketches:
        raise EventRejected("not_found")
    sketches = dict(state.sketches)
    del sketches[e.sketch_id]
    retired = state.retired_sketch_ids | {e.sketch_id}
    return replace(state, sketches=sketches, retired_sketch_ids=retired), []


def _on_visibility(state: SessionState, e: ev.VisibilitySet):
    if e.scope == "all":
        return replace(state, teacher=replace(state.teacher, annotations_shown=bool(e.visible))), []
    if e.scope in state.labels:
        labels = dict(state.labels)
        labels[e.scope] = replace(labels[e.scope], visible=bool(e.visible))
        return replace(state, labels=labels), []
    if e.scope in state.sketches:
        sketches = dict(state.sketches)
        sketches[e.scope] = replace(sketches[e.scope], visible=bool(e.visible))
        return replace(state, sketches=sketches), []
    raise EventRejected("not_found")


def _on_inspect_select(state: SessionState, e: ev.InspectSelect):
    if not e.structure_id:
        raise EventRejected("empty_structure")
    st = replace(state.student, inspect_copy=(e.structure_id, INSPECT_DEFAULT_OFFSET))
    return replace(state, student=st), [DerivedEffect("haptic", "student", "inspect")]


def _on_inspect_release(state: SessionState, e: ev.InspectRelease):
    return replace(state, student=replace(state.student, inspect_copy=None)), []


def _on_haptic(state: SessionState, e: ev.HapticCue):
    if e.role not in ev.ROLES:
        raise EventRejected("bad_role")
    return state, [DerivedEffect("haptic", e.role, e.pattern)]


_HANDLERS = {
    ev.PoseUpdate: _on_pose,
    ev.ModeChange: _on_mode,
    ev.BeamAdjust: _on_beam,
    ev.TeleportCommit: _on_teleport,
    ev.RepositionCommand: _on_reposition,
    ev.LandmarkPlace: _on_landmark,
    ev.LabelCreate: _on_label_create,
    ev.LabelDrag: _on_label_drag,
    ev.LabelEdit: _on_label_edit,
    ev.SketchBegin: _on_sketch_begin,
    ev.SketchAppend: _on_sketch_append,
    ev.SketchEnd: _on_sketch_end,
    ev.SketchDelete: _on_sketch_delete,
    ev.VisibilitySet: _on_visibility,
    ev.InspectSelect: _on_inspect_select,
    ev.InspectRelease: _on_inspect_release,
    ev.HapticCue: _on_haptic,
}


# --- snapshot / digest -------------------------------------------------------


def snapshot(state: SessionState) -> dict:
    return {
        "landmarks": {
            k: {"position": ev.vec_to_json(v.position), "active": v.active}
            for k, v in sorted(state.landmarks.items())
        },
        "labels": {
            k: {
                "anchor": ev.vec_to_json(v.anchor),
                "offset_tip": ev.vec_to_json(v.offset_tip),
                "headline": v.headline,
                "description": v.description,
                "color_tag": v.color_tag,
                "visible": v.visible,
            }
            for k, v in sorted(state.labels.items())
        },
        "sketches": {
            k: {
                "color": [float(c) for c in v.color],
                "brush": v.brush,
                "points": [ev.vec_to_json(p) for p in v.points],
                "closed": v.closed,
                "visible": v.visible,
            }
            for k, v in sorted(state.sketches.items())
        },
        "retired_sketch_ids": sorted(state.retired_sketch_ids),
        "student": {
            "head": ev.pose_to_json(state.student.head),
            "left_controller": ev.pose_to_json(state.student.left_controller),
            "right_controller": ev.pose_to_json(state.student.right_controller),
            "platform": ev.pose_to_json(state.student.platform),
            "mode": state.student.mode,
            "inspect_copy": (
                None
                if state.student.inspect_copy is None
                else {
                    "structure_id": state.student.inspect_copy[0],
                    "local_offset": ev.pose_to_json(state.student.inspect_copy[1]),
                }
            ),
            "beam_length": state.student.beam_length,
            "last_pose_ts": state.student.last_pose_ts,
            "platform_ts": state.student.platform_ts,
        },
        "teacher": {
            "view": ev.pose_to_json(state.teacher.view),
            "tool": state.teacher.tool,
            "annotations_shown": state.teacher.annotations_shown,
            "last_pose_ts": state.teacher.last_pose_ts,
        },
        "next_id": state.next_id,
        "applied_seq": {f"{s}/{c}": n for (s, c), n in sorted(state.applied_seq.items())},
        "applied_count": state.applied_count,
    }


def apply_snapshot(data: dict) -> SessionState:
    landmarks = {
        k: Landmark(k, ev.vec_from_json(v["position"]), bool(v["active"]))
        for k, v in data.get("landmarks", {}).items()
    }
    labels = {
        k: Label(
            k,
            ev.vec_from_json(v["anchor"]),
            ev.vec_from_json(v["offset_tip"]),
            v["headline"],
            v["description"],
            v["color_tag"],
            bool(v["visible"]),
        )
        for k, v in data.get("labels", {}).items()
    }
    sketches = {
        k: Sketch(
            k,
            tuple(v["color"]),
            v["brush"],
            tuple(ev.vec_from_json(p) for p in v["points"]),
            bool(v["closed"]),
            bool(v["visible"]),
        )
        for k, v in data.get("sketches", {}).items()
    }
    s = data["student"]
    student = StudentState(
        head=ev.pose_from_json(s["head"]),
        left_controller=ev.pose_from_json(s["left_controller"]),
        right_controller=ev.pose_from_json(s["right_controller"]),
        platform=ev.pose_from_json(s["platform"]),
        mode=s["mode"],
        inspect_copy=(
            None
            if s["inspect_copy"] is None
            else (s["inspect_copy"]["structure_id"], ev.pose_from_json(s["inspect_copy"]["local_offset"]))
        ),
        beam_length=float(s["beam_length"]),
        last_pose_ts=int(s["last_pose_ts"]),
        platform_ts=int(s.get("platform_ts", -1)),
    )
    t = data["teacher"]
    teacher = TeacherState(
        view=ev.pose_from_json(t["view"]),
        tool=t["tool"],
        annotations_shown=bool(t["annotations_shown"]),
        last_pose_ts=int(t["last_pose_ts"]),
    )
    applied_seq = {}
    for key, n in data.get("applied_seq", {}).items():
        sender, channel = key.split("/", 1)
        applied_seq[(sender, channel)] = int(n)
    return SessionState(
        landmarks=landmarks,
        labels=labels,
        sketches=sketches,
        retired_sketch_ids=frozenset(data.get("retired_sketch_ids", [])),
        student=student,
        teacher=teacher,
        next_id=int(data["next_id"]),
        applied_seq=applied_seq,
        applied_count=int(data.get("applied_count", 0)),
    )


def canonical_json(state: SessionState) -> str:
    return json.dumps(snapshot(state), sort_keys=True, separators=(",", ":"))


def state_digest(state: SessionState) -> str:
    """64-hex-char (32-byte) hash over the canonical serialization."""
    return hashlib.sha256(canonical_json(state).encode()).hexdigest()


# --- protocol-facing helpers -------------------------------------------------


def label_create_event(hit) -> ev.LabelCreate:
    """Start the three-step label workflow from a surface pick."""
    return ev.LabelCreate(anchor=hit.point, normal=hit.normal)


def reposition_student(state: SessionState, target: Vec3, bvh, capsule) -> ev.RepositionCommand:
    """Build the discrete reposition event; the target must fit the avatar
    capsule. Only this single event enters the log -- no intermediate poses."""
    if not bvh.capsule_clear(capsule.at(target)):
        raise EventRejected("target_obstructed")
    return ev.RepositionCommand(target=target, timestamp_ms=state.student.last_pose_ts)
