"""Wire protocol between the teacher host and its peers.

Envelopes carry either a session event or a control frame on one of three
channels. The transport contract is per-channel reliable and ordered;
framing on the native transport is a u32 big-endian length prefix followed
by one JSON document. The browser transport sends the same JSON as one
WebSocket text message per envelope.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Tuple, Union

from . import PROTOCOL_VERSION
from .state import events as ev
from .state.session import (
    EventRejected,
    SessionState,
    apply_event,
    initial_state,
    snapshot,
    state_digest,
)

CHANNELS = ("control", "pose", "annotation")
SENDERS = ("teacher_host", "student_client", "console")


class ProtocolError(ValueError):
    pass


class FramingError(ProtocolError):
    pass


# --- control frames ----------------------------------------------------------


@dataclass(frozen=True)
class Hello:
    version: str = PROTOCOL_VERSION
    role: str = "student_client"


@dataclass(frozen=True)
class Welcome:
    version: str
    snapshot: dict
    horizon: int  # global order number the snapshot reflects


@dataclass(frozen=True)
class Ping:
    nonce: int = 0


@dataclass(frozen=True)
class Pong:
    nonce: int = 0


@dataclass(frozen=True)
class Bye:
    reason: str = "bye"


@dataclass(frozen=True)
class RejectedUnknown:
    """Decoded stand-in for payload tags this build does not know."""

    tag: str
    raw: dict


@dataclass(frozen=True)
class Rejection:
    """Host -> sender only: an envelope was refused."""

    channel: str
    seq: int
    reason: str


ControlFrame = Union[Hello, Welcome, Ping, Pong, Bye, Rejection]
Payload = Union[ev.Event, ControlFrame, RejectedUnknown]

_CONTROL_TAGS = {
    "hello": Hello,
    "welcome": Welcome,
    "ping": Ping,
    "pong": Pong,
    "bye": Bye,
    "rejection": Rejection,
}


@dataclass(frozen=True)
class Envelope:
    channel: str
    seq: int
    sender: str
    payload: Payload
    global_order: Optional[int] = None  # host-assigned on broadcast

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ProtocolError(f"unknown channel {self.channel!r}")
        if self.sender not in SENDERS:
            raise ProtocolError(f"unknown sender {self.sender!r}")
        if self.channel == "pose" and not isinstance(self.payload, (ev.PoseUpdate, RejectedUnknown)):
            raise ProtocolError("pose channel carries only PoseUpdate")


def _payload_to_json(payload: Payload) -> dict:
    if isinstance(payload, ev.Event):
        return {"kind": "event", **payload.to_json()}
    if isinstance(payload, RejectedUnknown):
        return dict(payload.raw)
    for tag, cls in _CONTROL_TAGS.items():
        if isinstance(payload, cls):
            body = payload.__dict__.copy()
            return {"kind": "control", "type": tag, **body}
    raise ProtocolError(f"unencodable payload {payload!r}")


def _payload_from_json(data: dict) -> Payload:
    kind = data.get("kind")
    if kind == "event":
        try:
            return ev.event_from_json({k: v for k, v in data.items() if k != "kind"})
        except ev.EventCodecError:
            return RejectedUnknown(data.get("type", "?"), data)
    if kind == "control":
        cls = _CONTROL_TAGS.get(data.get("type"))
        if cls is None:
            return RejectedUnknown(data.get("type", "?"), data)
        kwargs = {k: v for k, v in data.items() if k not in ("kind", "type")}
        try:
            return cls(**kwargs)
        except TypeError:
            return RejectedUnknown(data.get("type", "?"), data)
    return RejectedUnknown(str(data.get("type", "?")), data)


def envelope_to_json(e: Envelope) -> dict:
    out = {
        "channel": e.channel,
        "seq": e.seq,
        "sender": e.sender,
        "payload": _payload_to_json(e.payload),
    }
    if e.global_order is not None:
        out["global_order"] = e.global_order
    return out


def envelope_from_json(data: dict) -> Envelope:
    try:
        return Envelope(
            channel=data["channel"],
            seq=int(data["seq"]),
            sender=data["sender"],
            payload=_payload_from_json(data["payload"]),
            global_order=data.get("global_order"),
        )
    except (KeyError, TypeError) as exc:
        raise ProtocolError(f"malformed envelope: {exc}") from None


def encode(e: Envelope) -> bytes:
    return json.dumps(envelope_to_json(e), sort_keys=True, separators=(",", ":")).encode()


def decode(data: bytes) -> Envelope:
    try:
        doc = json.loads(data.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FramingError(f"undecodable envelope: {exc}") from None
    return envelope_from_json(doc)


def frame(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def deframe(buffer: bytes) -> Tuple[List[bytes], bytes]:
    """Split a byte stream into complete frames + unconsumed remainder."""
    frames = []
    pos = 0
    while len(buffer) - pos >= 4:
        (length,) = struct.unpack_from(">I", buffer, pos)
        if len(buffer) - pos - 4 < length:
            break
        frames.append(buffer[pos + 4 : pos + 4 + length])
        pos += 4 + length
    return frames, buffer[pos:]


def decode_frame(data: bytes) -> Envelope:
    """Decode one length-prefixed frame."""
    if len(data) < 4:
        raise FramingError("truncated frame header")
    (length,) = struct.unpack_from(">I", data, 0)
    if len(data) - 4 < length:
        raise FramingError(f"truncated frame: expected {length} payload bytes, got {len(data) - 4}")
    return decode(data[4 : 4 + length])


# --- authority ---------------------------------------------------------------

# teacher-authoritative: shared content and repositioning. student-authoritative:
# the student's own poses, mode, beam, teleports and inspection.
_TEACHER_EVENTS = (
    ev.LandmarkPlace,
    ev.LabelCreate,
    ev.LabelDrag,
    ev.LabelEdit,
    ev.SketchBegin,
    ev.SketchAppend,
    ev.SketchEnd,
    ev.SketchDelete,
    ev.VisibilitySet,
    ev.RepositionCommand,
    ev.HapticCue,
)
_STUDENT_EVENTS = (
    ev.ModeChange,
    ev.BeamAdjust,
    ev.TeleportCommit,
    ev.InspectSelect,
    ev.InspectRelease,
)


def sender_may_emit(sender: str, event: ev.Event) -> bool:
    if isinstance(event, ev.PoseUpdate):
        role = "student" if sender == "student_client" else "teacher"
        return event.role == role
    if isinstance(event, _TEACHER_EVENTS):
        return sender in ("teacher_host", "console")
    if isinstance(event, _STUDENT_EVENTS):
        return sender == "student_client"
    return False


# --- host loop ---------------------------------------------------------------


@dataclass(frozen=True)
class Broadcast:
    """An accepted envelope, stamped with the host's global order number.
    Delivered to every peer except, for pose events, the originator."""

    envelope: Envelope

    @property
    def global_order(self) -> int:
        return self.envelope.global_order

    @property
    def exclude_originator(self) -> bool:
        return self.envelope.channel == "pose"


@dataclass
class HostState:
    session: SessionState = field(default_factory=initial_state)
    next_global_order: int = 0
    applied_log: List[Envelope] = field(default_factory=list)

    def digest(self) -> str:
        return state_digest(self.session)


def host_ingest(host: HostState, envelope: Envelope) -> Tuple[HostState, List[Broadcast], List[Rejection]]:
    """Validate authority and ordering, apply, and stamp broadcasts.

    Returns (new host state, broadcasts for peers, rejections for the
    sender). Stale sequence numbers are dropped silently so duplicated
    delivery is idempotent.
    """
    if not isinstance(envelope.payload, ev.Event):
        raise ProtocolError("host_ingest handles event envelopes only")
    event = envelope.payload
    key = (envelope.sender, envelope.channel)
    high_water = host.session.applied_seq.get(key, -1)
    if envelope.seq <= high_water:
        return host, [], []  # duplicate or stale: idempotent drop
    if not sender_may_emit(envelope.sender, event):
        return host, [], [Rejection(envelope.channel, envelope.seq, "forbidden")]
    try:
        new_session, _effects = apply_event(
            host.session, event, origin=(envelope.sender, envelope.channel, envelope.seq)
        )
    except EventRejected as exc:
        if exc.reason in ("stale_seq", "stale_pose"):
            return host, [], []
        return host, [], [Rejection(envelope.channel, envelope.seq, exc.reason)]
    stamped = replace(envelope, global_order=host.next_global_order)
    new_host = HostState(
        session=new_session,
        next_global_order=host.next_global_order + 1,
        applied_log=host.applied_log + [stamped],
    )
    return new_host, [Broadcast(stamped)], []


def host_join(host: HostState, hello: Hello) -> Union[Welcome, Bye]:
    if hello.version != PROTOCOL_VERSION:
        return Bye("incompatible")
    return Welcome(PROTOCOL_VERSION, snapshot(host.session), host.next_global_order)


# --- pose throttling ---------------------------------------------------------


class PoseThrottle:
    """Latest-wins downsampling of a pose stream to at most send_rate Hz.

    feed() returns the PoseUpdate to forward now, or None. Out-of-order
    timestamps are dropped; an emitted pose is always the newest seen at
    emission time.
    """

    def __init__(self, send_rate_hz: float):
        if send_rate_hz <= 0:
            raise ValueError("send_rate_hz must be positive")
        self.interval_ms = 1000.0 / send_rate_hz
        self._last_ts = -1
        self._next_emit_ms = 0.0
        self._pending: Optional[ev.PoseUpdate] = None

    def feed(self, update: ev.PoseUpdate) -> Optional[ev.PoseUpdate]:
        if update.timestamp_ms <= self._last_ts:
            return None  # out of order
        self._last_ts = update.timestamp_ms
        self._pending = update
        if update.timestamp_ms >= self._next_emit_ms:
            # advance the deadline on a fixed grid so quantized input
            # timestamps don't erode the output rate; reset after idle gaps
            if update.timestamp_ms - self._next_emit_ms > self.interval_ms:
                self._next_emit_ms = update.timestamp_ms + self.interval_ms
            else:
                self._next_emit_ms += self.interval_ms
            out, self._pending = self._pending, None
            return out
        return None

    def flush(self, now_ms: float) -> Optional[ev.PoseUpdate]:
        """Emit a held pose once the rate window has passed."""
        if self._pending is not None and now_ms >= self._next_emit_ms:
            self._next_emit_ms = now_ms + self.interval_ms
            out, self._pending = self._pending, None
            return out
        return None


def throttle_stream(updates: Iterator[ev.PoseUpdate], send_rate_hz: float) -> List[ev.PoseUpdate]:
    th = PoseThrottle(send_rate_hz)
    out = []
    for u in updates:
        emitted = th.feed(u)
        if emitted is not None:
            out.append(emitted)
    return out


def client_apply(session: SessionState, envelope: Envelope) -> SessionState:
    """Apply a host broadcast (or a locally originated pose) to a replica.
    Duplicates are no-ops thanks to the per-channel high-water marks."""
    if not isinstance(envelope.payload, ev.Event):
        return session
    try:
        new_session, _ = apply_event(
            session, envelope.payload, origin=(envelope.sender, envelope.channel, envelope.seq)
        )
        return new_session
    except EventRejected:
        return session
