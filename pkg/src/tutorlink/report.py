"""Session log exports: delimited JSON reports plus rendered figures.

The JSON goes to stdout for piping; when an output directory is given the
same data is additionally rendered as matplotlib figures and a CSV so a
session can be reviewed without any tooling.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List, Optional

from .protocol import Envelope
from .state import events as ev
from .state.session import SessionState


def annotations_export(state: SessionState) -> dict:
    return {
        "labels": [
            {
                "id": lb.label_id,
                "anchor": ev.vec_to_json(lb.anchor),
                "offset_tip": ev.vec_to_json(lb.offset_tip),
                "headline": lb.headline,
                "description": lb.description,
                "color_tag": lb.color_tag,
                "visible": lb.visible,
            }
            for _, lb in sorted(state.labels.items())
        ],
        "landmarks": [
            {"id": lm.landmark_id, "position": ev.vec_to_json(lm.position), "active": lm.active}
            for _, lm in sorted(state.landmarks.items())
        ],
        "sketches": [
            {
                "id": sk.sketch_id,
                "color": list(sk.color),
                "brush": sk.brush,
                "points": [ev.vec_to_json(p) for p in sk.points],
                "closed": sk.closed,
                "visible": sk.visible,
            }
            for _, sk in sorted(state.sketches.items())
        ],
    }


def trajectory_export(envelopes: List[Envelope]) -> dict:
    """Student platform positions over the log: one sample per applied
    platform-affecting event, jumps (teleport/reposition) marked."""
    points = []
    for env in envelopes:
        e = env.payload
        if isinstance(e, ev.PoseUpdate) and e.role == "student" and e.platform is not None:
            points.append(
                {
                    "order": env.global_order,
                    "kind": "pose",
                    "t_ms": e.timestamp_ms,
                    "position": ev.vec_to_json(e.platform.position),
                }
            )
        elif isinstance(e, ev.TeleportCommit):
            points.append(
                {
                    "order": env.global_order,
                    "kind": "teleport",
                    "t_ms": e.timestamp_ms,
                    "position": ev.vec_to_json(e.target),
                }
            )
        elif isinstance(e, ev.RepositionCommand):
            points.append(
                {
                    "order": env.global_order,
                    "kind": "reposition",
                    "t_ms": e.timestamp_ms,
                    "position": ev.vec_to_json(e.target),
                }
            )
    return {"points": points}


def write_trajectory_csv(path, trajectory: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["order", "kind", "t_ms", "x", "y", "z"])
        for p in trajectory["points"]:
            w.writerow([p["order"], p["kind"], p["t_ms"], *p["position"]])


def render_figures(out_dir, annotations: Optional[dict], trajectory: Optional[dict]) -> List[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    if trajectory is not None:
        fig, ax = plt.subplots(figsize=(6, 6))
        pts = trajectory["points"]
        xs = [p["position"][0] for p in pts]
        zs = [p["position"][2] for p in pts]
        ax.plot(xs, zs, "-", color="#888888", linewidth=0.8, zorder=1)
        for kind, color in (("pose", "#2244cc"), ("teleport", "#cc2222"), ("reposition", "#22aa55")):
            kx = [p["position"][0] for p in pts if p["kind"] == kind]
            kz = [p["position"][2] for p in pts if p["kind"] == kind]
            if kx:
                ax.scatter(kx, kz, s=14, color=color, label=kind, zorder=2)
        ax.set_xlabel("x [m]")
        ax.set_ylabel("z [m]")
        ax.set_title("student platform trajectory (top view)")
        ax.set_aspect("equal", adjustable="datalim")
        if pts:
            ax.legend(loc="best", fontsize=8)
        path = out_dir / "trajectory.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
        csv_path = out_dir / "trajectory.csv"
        write_trajectory_csv(csv_path, trajectory)
        written.append(csv_path)

    if annotations is not None:
        fig, ax = plt.subplots(figsize=(6, 6))
        for sk in annotations["sketches"]:
            if sk["points"]:
                xs = [p[0] for p in sk["points"]]
                zs = [p[2] for p in sk["points"]]
                ax.plot(xs, zs, "-", color=tuple(sk["color"]), linewidth=1.5)
        for lm in annotations["landmarks"]:
            x, _, z = lm["position"]
            marker = "^" if lm["active"] else "v"
            ax.scatter([x], [z], s=40, marker=marker, color="#22aa55")
        for lb in annotations["labels"]:
            x, _, z = lb["anchor"]
            ax.scatter([x], [z], s=24, marker="s", color="#cc8822")
            if lb["headline"]:
                ax.annotate(lb["headline"], (x, z), fontsize=7, xytext=(3, 3), textcoords="offset points")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("z [m]")
        ax.set_title("annotations (top view)")
        ax.set_aspect("equal", adjustable="datalim")
        path = out_dir / "annotations.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    return written


def export_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)
