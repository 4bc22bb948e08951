"""Deterministic simulated network for protocol testing.

A single-threaded discrete-event loop on a virtual clock. Links are
per-channel FIFO and reliable; the fault model allows duplication and
arbitrary per-channel delay/jitter, never loss, matching the transport
contract. Everything is a pure function of (seed, schedule, bots).
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from .state import events as ev
from .state.session import SessionState, initial_state, state_digest
from .protocol import (
    Broadcast,
    Envelope,
    HostState,
    client_apply,
    envelope_from_json,
    envelope_to_json,
    host_ingest,
)


@dataclass(frozen=True)
class SimSchedule:
    seed: int = 0
    base_latency_ms: Dict[str, float] = field(
        default_factory=lambda: {"control": 5.0, "pose": 5.0, "annotation": 5.0}
    )
    jitter_ms: Dict[str, float] = field(
        default_factory=lambda: {"control": 2.0, "pose": 2.0, "annotation": 2.0}
    )
    duplication_prob: float = 0.0


@dataclass(frozen=True)
class ScriptedBot:
    role: str  # "teacher" or "student"
    timeline: Tuple[Tuple[int, ev.Event], ...]

    def __post_init__(self):
        ts = [t for t, _ in self.timeline]
        if ts != sorted(ts):
            raise ValueError("bot timeline timestamps must be non-decreasing")


def channel_for(event: ev.Event) -> str:
    return "pose" if isinstance(event, ev.PoseUpdate) else "annotation"


class _Link:
    """One direction of a peer connection; preserves per-channel FIFO."""

    def __init__(self, schedule: SimSchedule, rng: random.Random):
        self.schedule = schedule
        self.rng = rng
        self.last_arrival: Dict[str, float] = {}

    def delays(self, channel: str, now: float) -> List[float]:
        base = self.schedule.base_latency_ms.get(channel, 5.0)
        jitter = self.schedule.jitter_ms.get(channel, 0.0)
        arrival = now + base + self.rng.uniform(0.0, jitter)
        arrival = max(arrival, self.last_arrival.get(channel, 0.0))
        arrivals = [arrival]
        if self.rng.random() < self.schedule.duplication_prob:
            dup = max(arrival + self.rng.uniform(0.0, jitter + 1.0), arrival)
            arrivals.append(dup)
        self.last_arrival[channel] = arrivals[-1]
        return arrivals


@dataclass
class SimReport:
    digests: Dict[str, str]
    applied_log: List[dict]
    rejections: List[dict]
    latency: Dict[str, dict]
    events_sent: int

    def to_json(self) -> dict:
        return {
            "digests": dict(sorted(self.digests.items())),
            "applied_log": self.applied_log,
            "rejections": self.rejections,
            "latency": {k: self.latency[k] for k in sorted(self.latency)},
            "events_sent": self.events_sent,
        }


def run_sim(schedule: SimSchedule, bots: List[ScriptedBot], duration_ms: float = 60_000.0) -> SimReport:
    rng = random.Random(schedule.seed)
    host = HostState()
    student: SessionState = initial_state()
    console: SessionState = initial_state()

    up_link = _Link(schedule, rng)  # student -> host
    down_student = _Link(schedule, rng)  # host -> student
    down_console = _Link(schedule, rng)  # host -> console

    heap: List[tuple] = []
    tiebreak = 0
    samples: Dict[str, List[float]] = {"pose": [], "annotation": []}
    rejections: List[dict] = []
    seqs: Dict[Tuple[str, str], int] = {}
    events_sent = 0

    def push(t: float, kind: str, data):
        nonlocal tiebreak
        heapq.heappush(heap, (t, tiebreak, kind, data))
        tiebreak += 1

    def next_seq(sender: str, channel: str) -> int:
        key = (sender, channel)
        seqs[key] = seqs.get(key, -1) + 1
        return seqs[key]

    for bot in bots:
        if bot.role not in ("teacher", "student"):
            raise ValueError(f"unknown bot role {bot.role!r}")
        for t, event in bot.timeline:
            if t > duration_ms:
                continue
            push(float(t), f"{bot.role}_emit", event)

    def deliver_broadcasts(now: float, broadcasts: List[Broadcast]):
        for b in broadcasts:
            env = b.envelope
            for arrival in down_console.delays(env.channel, now):
                push(arrival, "console_recv", (env, now))
            if not (b.exclude_originator and env.sender == "student_client"):
                for arrival in down_student.delays(env.channel, now):
                    push(arrival, "student_recv", (env, now))

    while heap:
        now, _, kind, data = heapq.heappop(heap)
        if kind == "teacher_emit":
            # the teacher process is the host: ingest directly
            env = Envelope(channel_for(data), next_seq("teacher_host", channel_for(data)), "teacher_host", data)
            events_sent += 1
            host, broadcasts, rejs = host_ingest(host, env)
            rejections.extend(
                {"t_ms": now, "sender": env.sender, "reason": r.reason, "seq": r.seq} for r in rejs
            )
            deliver_broadcasts(now, broadcasts)
        elif kind == "student_emit":
            ch = channel_for(data)
            env = Envelope(ch, next_seq("student_client", ch), "student_client", data)
            events_sent += 1
            # student-authoritative events apply locally at origination for
            # pose; everything else renders on echo
            if ch == "pose":
                student = client_apply(student, env)
            for arrival in up_link.delays(ch, now):
                push(arrival, "host_recv", (env, now))
        elif kind == "host_recv":
            env, sent_at = data
            samples.setdefault(env.channel, []).append(now - sent_at)
            host, broadcasts, rejs = host_ingest(host, env)
            rejections.extend(
                {"t_ms": now, "sender": env.sender, "reason": r.reason, "seq": r.seq} for r in rejs
            )
            deliver_broadcasts(now, broadcasts)
        elif kind == "student_recv":
            env, _ = data
            student = client_apply(student, env)
        elif kind == "console_recv":
            env, _ = data
            console = client_apply(console, env)

    latency = {}
    for ch, vals in samples.items():
        if vals:
            latency[ch] = {
                "count": len(vals),
                "mean_ms": round(sum(vals) / len(vals), 3),
                "max_ms": round(max(vals), 3),
            }
    return SimReport(
        digests={
            "host": host.digest(),
            "student": state_digest(student),
            "console": state_digest(console),
        },
        applied_log=[envelope_to_json(e) for e in host.applied_log],
        rejections=rejections,
        latency=latency,
        events_sent=events_sent,
    )


# --- session logs ------------------------------------------------------------


class LogError(ValueError):
    pass


def write_log(path, applied_log: List[dict], digest: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in applied_log:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
        fh.write(json.dumps({"footer": True, "digest": digest}) + "\n")


def read_log(path) -> Tuple[List[Envelope], Optional[str]]:
    envelopes: List[Envelope] = []
    footer_digest: Optional[str] = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogError(f"{path}:{lineno}: corrupt line ({exc.msg})") from None
            if doc.get("footer"):
                footer_digest = doc.get("digest")
                continue
            try:
                envelopes.append(envelope_from_json(doc))
            except Exception as exc:
                raise LogError(f"{path}:{lineno}: corrupt envelope ({exc})") from None
    return envelopes, footer_digest


def replay(path) -> Tuple[str, Optional[str]]:
    """Replay a session log from the initial state.

    Returns (computed digest, footer digest or None)."""
    envelopes, footer = read_log(path)
    state = initial_state()
    for env in envelopes:
        state = client_apply(state, env)
    return state_digest(state), footer


def replay_state(envelopes: List[Envelope]) -> SessionState:
    state = initial_state()
    for env in envelopes:
        state = client_apply(state, env)
    return state


# --- structural log checks ---------------------------------------------------


def reposition_discreteness(envelopes: List[Envelope]) -> dict:
    """Structural check: every reposition is exactly one platform jump and
    its neighboring pose updates never interpolate along the jump segment."""
    current = None  # last known platform position
    violations = []
    repositions = 0
    pending: Optional[Tuple] = None  # (prev_pos, target)
    for i, env in enumerate(envelopes):
        e = env.payload
        if isinstance(e, ev.RepositionCommand):
            repositions += 1
            pending = (current, e.target)
            current = e.target
        elif isinstance(e, ev.TeleportCommit):
            current = e.target
            pending = None
        elif isinstance(e, ev.PoseUpdate) and e.platform is not None:
            pos = e.platform.position
            if pending is not None and pending[0] is not None:
                prev, target = pending
                if _interpolates(prev, target, pos):
                    violations.append({"index": i, "kind": "interpolated_platform_pose"})
                pending = None
            current = pos
    return {"repositions": repositions, "violations": violations}


def _interpolates(a, b, q) -> bool:
    seg = b - a
    length = seg.norm()
    if length < 1e-9:
        return False
    t = (q - a).dot(seg) / (length * length)
    if not 0.01 < t < 0.99:
        return False
    closest = a + seg * t
    return q.distance_to(closest) < 1e-6
