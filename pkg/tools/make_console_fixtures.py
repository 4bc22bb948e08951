"""Generate the teacher-console test fixtures.

Produces, under frontend/tests/fixtures/:
- picks.json          - a pick camera, 50 screen-space picks and the surface
                        point the server-side ray cast computes for each
- session_envelopes.json - host broadcasts (global order) for a scripted
                        console-driven session
- annotations_export.json - the annotations export of that session's final
                        state, as `export --what annotations` prints it
- skull_dome.obj      - copy of the scene mesh the console would fetch
                        from /scene/mesh.obj

The pick rays use the same pinhole model as the console: forward toward
look_at, ray through the pixel centre.
"""

from __future__ import annotations

import json
import math
import random
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from tutorlink import report  # noqa: E402
from tutorlink.geometry import Ray, Vec3  # noqa: E402
from tutorlink.protocol import Envelope, HostState, envelope_to_json, host_ingest  # noqa: E402
from tutorlink.scene import load_scene  # noqa: E402
from tutorlink.state import events as ev  # noqa: E402

OUT = ROOT / "frontend" / "tests" / "fixtures"

CAMERA = {
    "position": [0.0, 6.0, 8.0],
    "look_at": [0.0, 1.0, 0.0],
    "up": [0.0, 1.0, 0.0],
    "fov_y_deg": 55.0,
    "width": 1280,
    "height": 720,
}


def _ray_from_pixel(cam: dict, px: float, py: float) -> Ray:
    pos = Vec3(*cam["position"])
    forward = (Vec3(*cam["look_at"]) - pos).normalized()
    right = forward.cross(Vec3(*cam["up"])).normalized()
    true_up = right.cross(forward)
    aspect = cam["width"] / cam["height"]
    tan_half = math.tan(math.radians(cam["fov_y_deg"] / 2))
    ndc_x = (px + 0.5) / cam["width"] * 2 - 1
    ndc_y = 1 - (py + 0.5) / cam["height"] * 2
    direction = (forward + right * (ndc_x * tan_half * aspect) + true_up * (ndc_y * tan_half)).normalized()
    return Ray(pos, direction)


def make_picks(bvh) -> dict:
    rng = random.Random(4242)
    picks = []
    while len(picks) < 50:
        px = rng.randrange(0, CAMERA["width"])
        py = rng.randrange(0, CAMERA["height"])
        hit = bvh.ray_cast(_ray_from_pixel(CAMERA, px, py), 100.0)
        if hit is None:
            continue
        picks.append(
            {
                "px": px,
                "py": py,
                "expected_point": [hit.point.x, hit.point.y, hit.point.z],
                "expected_distance": hit.distance,
            }
        )
    return {"camera": CAMERA, "picks": picks}


def make_session() -> tuple:
    """Drive a scripted console session through the host and capture the
    broadcast stream plus the final annotations export."""
    host = HostState()
    seq = {"annotation": 0}

    def send(event):
        nonlocal host
        env = Envelope("annotation", seq["annotation"], "console", event)
        seq["annotation"] += 1
        host2, broadcasts, rejections = host_ingest(host, env)
        assert not rejections, rejections
        host = host2
        return broadcasts

    broadcasts = []
    broadcasts += send(ev.LandmarkPlace(position=Vec3(0.4, 1.1, -0.8)))
    broadcasts += send(ev.LandmarkPlace(position=Vec3(-0.9, 0.7, 0.3)))
    broadcasts += send(ev.LabelCreate(anchor=Vec3(0.2, 1.8, -1.4), normal=Vec3(0.0, 1.0, 0.0)))
    broadcasts += send(ev.LabelDrag(label_id="3", offset_tip=Vec3(0.5, 2.2, -1.4)))
    broadcasts += send(
        ev.LabelEdit(label_id="3", headline="Canalis opticus", description="optic nerve", color_tag="blue")
    )
    broadcasts += send(ev.SketchBegin(sketch_id="console-1", color=(1.0, 0.2, 0.2), brush="small"))
    # includes sub-millimetre jitter the decimation filter must drop
    broadcasts += send(
        ev.SketchAppend(
            sketch_id="console-1",
            points=[
                Vec3(0.0, 1.0, 0.0),
                Vec3(0.0, 1.0, 0.0005),
                Vec3(0.1, 1.0, 0.0),
                Vec3(0.2, 1.05, 0.0),
            ],
        )
    )
    broadcasts += send(ev.SketchAppend(sketch_id="console-1", points=[Vec3(0.3, 1.1, 0.02)]))
    broadcasts += send(ev.SketchEnd(sketch_id="console-1"))
    broadcasts += send(ev.SketchBegin(sketch_id="console-2", color=(0.2, 0.2, 1.0), brush="large"))
    broadcasts += send(ev.SketchAppend(sketch_id="console-2", points=[Vec3(1, 1, 1), Vec3(1, 1.2, 1)]))
    broadcasts += send(ev.SketchEnd(sketch_id="console-2"))
    broadcasts += send(ev.SketchDelete(sketch_id="console-2"))
    broadcasts += send(ev.VisibilitySet(scope="3", visible=False))
    broadcasts += send(ev.LandmarkPlace(position=Vec3(1.4, 0.9, 0.6)))

    envelopes = [envelope_to_json(b.envelope) for b in broadcasts]
    export = report.annotations_export(host.session)
    return envelopes, export


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    scene = load_scene(ROOT / "fixtures" / "skull_dome.obj", ROOT / "fixtures" / "skull_dome.json")
    (OUT / "picks.json").write_text(json.dumps(make_picks(scene.bvh), indent=2) + "\n")
    envelopes, export = make_session()
    (OUT / "session_envelopes.json").write_text(json.dumps(envelopes, indent=2) + "\n")
    (OUT / "annotations_export.json").write_text(json.dumps(export, indent=2, sort_keys=True) + "\n")
    shutil.copy(ROOT / "fixtures" / "skull_dome.obj", OUT / "skull_dome.obj")
    shutil.copy(ROOT / "tests" / "fixtures" / "golden_envelopes.jsonl", OUT / "golden_envelopes.jsonl")
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
