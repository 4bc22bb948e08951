import random

import pytest

from tutorlink.geometry import Capsule, Pose, Ray, RayHit, Vec3, build_bvh
from tutorlink.state import (
    EventRejected,
    apply_event,
    apply_snapshot,
    events as ev,
    initial_state,
    label_create_event,
    reposition_student,
    snapshot,
    state_digest,
)

from helpers import unit_cube


def apply_all(state, events):
    for e in events:
        state, _ = apply_event(state, e)
    return state


def test_landmark_place_haptic_effect():
    s0 = initial_state()
    s1, effects = apply_event(s0, ev.LandmarkPlace(position=Vec3(1, 2, 3)))
    assert len(s1.landmarks) == 1
    (mark,) = s1.landmarks.values()
    assert mark.active and mark.position == Vec3(1, 2, 3)
    assert any(e.kind == "haptic" and e.role == "student" for e in effects)
    # original state untouched
    assert not s0.landmarks


def test_second_landmark_deactivates_first():
    s = apply_all(initial_state(), [ev.LandmarkPlace(position=Vec3(0, 0, 0)), ev.LandmarkPlace(position=Vec3(1, 0, 0))])
    actives = [m for m in s.landmarks.values() if m.active]
    assert len(s.landmarks) == 2
    assert len(actives) == 1
    assert actives[0].position == Vec3(1, 0, 0)


def test_label_three_step_workflow():
    hit = RayHit(1.0, Vec3(2, 0, 0), Vec3(-1, 0, 0), "dome", 7)
    s0 = initial_state()
    s1, _ = apply_event(s0, label_create_event(hit))
    (lid,) = s1.labels
    s2, _ = apply_event(s1, ev.LabelDrag(label_id=lid, offset_tip=Vec3(2.5, 0.5, 0)))
    s3, _ = apply_event(s2, ev.LabelEdit(label_id=lid, headline="Foramen ovale", description="...", color_tag="yellow"))
    label = s3.labels[lid]
    assert label.color_tag == "yellow"
    assert label.headline == "Foramen ovale"
    assert label.offset_tip == Vec3(2.5, 0.5, 0)
    assert label.visible  # drafts are visible immediately


def test_label_default_tip_from_normal():
    hit = RayHit(1.0, Vec3(2, 0, 0), Vec3(-1, 0, 0), "dome", 7)
    s1, _ = apply_event(initial_state(), label_create_event(hit))
    (label,) = s1.labels.values()
    assert label.offset_tip.distance_to(Vec3(1.8, 0, 0)) < 1e-12


def test_label_headline_too_long():
    s1, _ = apply_event(initial_state(), ev.LabelCreate(anchor=Vec3.zero(), normal=Vec3(0, 1, 0)))
    (lid,) = s1.labels
    with pytest.raises(EventRejected, match="headline_too_long"):
        apply_event(s1, ev.LabelEdit(label_id=lid, headline="x" * 300))


def test_label_drag_unknown_id():
    with pytest.raises(EventRejected, match="not_found"):
        apply_event(initial_state(), ev.LabelDrag(label_id="99", offset_tip=Vec3.zero()))


def test_sketch_append_to_closed_rejected_atomically():
    s = apply_all(
        initial_state(),
        [
            ev.SketchBegin(sketch_id="sk1", color=(1, 0, 0), brush="small"),
            ev.SketchAppend(sketch_id="sk1", points=[Vec3(0, 0, 0), Vec3(0.1, 0, 0)]),
            ev.SketchEnd(sketch_id="sk1"),
        ],
    )
    before = state_digest(s)
    with pytest.raises(EventRejected, match="sketch_closed"):
        apply_event(s, ev.SketchAppend(sketch_id="sk1", points=[Vec3(1, 1, 1)]))
    assert state_digest(s) == before


def test_sketch_decimation():
    s = apply_all(
        initial_state(),
        [
            ev.SketchBegin(sketch_id="sk1", color=(1, 0, 0), brush="large"),
            ev.SketchAppend(
                sketch_id="sk1",
                points=[Vec3(0, 0, 0), Vec3(0.0005, 0, 0), Vec3(0.01, 0, 0)],
            ),
        ],
    )
    assert len(s.sketches["sk1"].points) == 2  # jittery middle point dropped


def test_sketch_id_never_reused():
    s = apply_all(
        initial_state(),
        [
            ev.SketchBegin(sketch_id="sk1", color=(1, 0, 0), brush="small"),
            ev.SketchEnd(sketch_id="sk1"),
            ev.SketchDelete(sketch_id="sk1"),
        ],
    )
    with pytest.raises(EventRejected, match="id_reused"):
        apply_event(s, ev.SketchBegin(sketch_id="sk1", color=(0, 1, 0), brush="small"))


def test_visibility_scopes():
    s = apply_all(
        initial_state(),
        [
            ev.LabelCreate(anchor=Vec3.zero(), normal=Vec3(0, 1, 0)),
            ev.VisibilitySet(scope="all", visible=False),
        ],
    )
    assert not s.teacher.annotations_shown
    (lid,) = s.labels
    s2, _ = apply_event(s, ev.VisibilitySet(scope=lid, visible=False))
    assert not s2.labels[lid].visible
    with pytest.raises(EventRejected, match="not_found"):
        apply_event(s, ev.VisibilitySet(scope="nope", visible=False))


def test_reposition_single_discrete_jump():
    bvh = build_bvh([unit_cube(size=2.0)])
    capsule = Capsule(Vec3.zero(), 1.8, 0.3)
    cmd = reposition_student(initial_state(), Vec3(5, 0, 5), bvh, capsule)
    s1, effects = apply_event(initial_state(), cmd)
    assert s1.student.platform.position == Vec3(5, 0, 5)
    assert any(e.kind == "haptic" for e in effects)


def test_reposition_obstructed_target():
    bvh = build_bvh([unit_cube(size=2.0)])
    capsule = Capsule(Vec3.zero(), 1.8, 0.3)
    with pytest.raises(EventRejected, match="target_obstructed"):
        reposition_student(initial_state(), Vec3(0, 0, 0), bvh, capsule)


def test_beam_adjust_clamped():
    s, _ = apply_event(initial_state(), ev.BeamAdjust(beam_length=500.0))
    assert s.student.beam_length == 30.0
    s, _ = apply_event(s, ev.BeamAdjust(beam_length=0.01))
    assert s.student.beam_length == 1.0


def test_pose_update_stale_timestamp_rejected():
    p = Pose.identity()
    s, _ = apply_event(initial_state(), ev.PoseUpdate(role="student", timestamp_ms=100, head=p))
    with pytest.raises(EventRejected, match="stale_pose"):
        apply_event(s, ev.PoseUpdate(role="student", timestamp_ms=50, head=p))


def test_snapshot_round_trip_empty_and_populated():
    s0 = initial_state()
    assert state_digest(apply_snapshot(snapshot(s0))) == state_digest(s0)
    s = apply_all(s0, _scripted_events(50))
    assert state_digest(apply_snapshot(snapshot(s))) == state_digest(s)


def test_digest_changes_per_event_and_replay_is_deterministic():
    events = _scripted_events(60)
    digests_a, digests_b = [], []
    for digests in (digests_a, digests_b):
        s = initial_state()
        for e in events:
            s, _ = apply_event(s, e)
            digests.append(state_digest(s))
    assert digests_a == digests_b
    assert len(set(digests_a)) == len(digests_a)  # every applied event moves the digest


def test_random_logs_replay_identical():
    for seed in range(20):
        events = _random_events(random.Random(seed), 40)
        finals = []
        for _ in range(2):
            s = initial_state()
            for e in events:
                try:
                    s, _ = apply_event(s, e)
                except EventRejected:
                    pass
            finals.append(state_digest(s))
        assert finals[0] == finals[1]


def test_sketch_points_append_only_across_log_extension():
    rng = random.Random(77)
    events = _random_events(rng, 80)
    s = initial_state()
    prefixes = {}
    for e in events:
        try:
            s, _ = apply_event(s, e)
        except EventRejected:
            continue
        for sid, sk in s.sketches.items():
            prev = prefixes.get(sid, ())
            assert sk.points[: len(prev)] == prev
            prefixes[sid] = sk.points


def _scripted_events(n):
    out = []
    for i in range(n):
        k = i % 5
        if k == 0:
            out.append(ev.LandmarkPlace(position=Vec3(i * 0.1, 0, 0)))
        elif k == 1:
            out.append(ev.LabelCreate(anchor=Vec3(0, i * 0.1, 0), normal=Vec3(0, 1, 0)))
        elif k == 2:
            out.append(ev.SketchBegin(sketch_id=f"s{i}", color=(1, 0, 0), brush="small"))
        elif k == 3:
            out.append(ev.SketchAppend(sketch_id=f"s{i - 1}", points=[Vec3(i, 0, 0), Vec3(i, 1, 0)]))
        else:
            out.append(ev.SketchEnd(sketch_id=f"s{i - 2}"))
    return out


def _random_events(rng, n):
    out = []
    open_ids = []
    for i in range(n):
        roll = rng.random()
        if roll < 0.15:
            out.append(ev.LandmarkPlace(position=Vec3(rng.uniform(-3, 3), 0, rng.uniform(-3, 3))))
        elif roll < 0.3:
            out.append(ev.LabelCreate(anchor=Vec3(0, rng.random(), 0), normal=Vec3(0, 1, 0)))
        elif roll < 0.5:
            sid = f"sk{i}"
            open_ids.append(sid)
            out.append(ev.SketchBegin(sketch_id=sid, color=(rng.random(), 0, 0), brush="small"))
        elif roll < 0.8 and open_ids:
            sid = rng.choice(open_ids)
            pts = [Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(3)]
            out.append(ev.SketchAppend(sketch_id=sid, points=pts))
        elif roll < 0.9 and open_ids:
            sid = open_ids.pop(rng.randrange(len(open_ids)))
            out.append(ev.SketchEnd(sketch_id=sid))
        else:
            out.append(ev.ModeChange(mode=rng.choice(["handbook", "navigation", "inspect"])))
    return out
