#!/usr/bin/env python3
"""Generate the synthetic skull-dome sample scene.

A hollow hemisphere shell (radius 4 m, the "skull base" at 20x scale) with
three through-holes standing in for foramina, each rimmed by a torus ring.
Writes fixtures/skull_dome.obj and fixtures/skull_dome.json.
"""

import json
import math
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
RADIUS = 4.0
N_THETA = 28
N_PHI = 96
RING_MAJOR_SEGS = 24
RING_MINOR_SEGS = 8
RING_MINOR_RADIUS = 0.12

# (id, axis theta deg from +y, axis phi deg, hole angular radius deg)
HOLES = [
    ("canalis_opticus", 0.0, 0.0, 9.0),
    ("foramen_ovale_left", 55.0, 0.0, 7.0),
    ("foramen_spinosum_right", 55.0, 180.0, 5.0),
]


def sph(theta, phi):
    return np.array(
        [
            math.sin(theta) * math.cos(phi),
            math.cos(theta),
            math.sin(theta) * math.sin(phi),
        ]
    )


def hole_axes():
    return [(hid, sph(math.radians(t), math.radians(p)), math.radians(r)) for hid, t, p, r in HOLES]


def build_dome():
    verts = []
    index = {}
    for i in range(1, N_THETA + 1):
        theta = math.pi / 2 * i / N_THETA
        for j in range(N_PHI):
            phi = 2 * math.pi * j / N_PHI
            index[(i, j)] = len(verts)
            verts.append(RADIUS * sph(theta, phi))
    tris = []
    axes = hole_axes()
    for i in range(1, N_THETA):
        for j in range(N_PHI):
            jn = (j + 1) % N_PHI
            quad = [(i, j), (i + 1, j), (i + 1, jn), (i, jn)]
            for tri in (quad[:3], [quad[0], quad[2], quad[3]]):
                pts = [verts[index[k]] for k in tri]
                centroid = np.mean(pts, axis=0)
                d = centroid / np.linalg.norm(centroid)
                if any(math.acos(min(1.0, float(np.dot(d, a)))) < r for _, a, r in axes):
                    continue
                tris.append([index[k] for k in tri])
    return np.array(verts), tris


def build_ring(axis, rim_angle):
    a = axis / np.linalg.norm(axis)
    ref = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
    e1 = np.cross(a, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    center = RADIUS * math.cos(rim_angle) * a
    major = RADIUS * math.sin(rim_angle)
    verts = []
    for u in range(RING_MAJOR_SEGS):
        au = 2 * math.pi * u / RING_MAJOR_SEGS
        radial = e1 * math.cos(au) + e2 * math.sin(au)
        for v in range(RING_MINOR_SEGS):
            av = 2 * math.pi * v / RING_MINOR_SEGS
            p = center + (major + RING_MINOR_RADIUS * math.cos(av)) * radial + RING_MINOR_RADIUS * math.sin(av) * a
            verts.append(p)
    tris = []
    for u in range(RING_MAJOR_SEGS):
        un = (u + 1) % RING_MAJOR_SEGS
        for v in range(RING_MINOR_SEGS):
            vn = (v + 1) % RING_MINOR_SEGS
            aidx = u * RING_MINOR_SEGS + v
            b = un * RING_MINOR_SEGS + v
            c = un * RING_MINOR_SEGS + vn
            d = u * RING_MINOR_SEGS + vn
            tris.append((aidx, b, c))
            tris.append((aidx, c, d))
    return np.array(verts), tris


def main():
    out_dir = ROOT / "fixtures"
    out_dir.mkdir(exist_ok=True)
    lines = ["# synthetic skull-dome sample scene (generated by tools/make_fixture.py)"]
    offset = 0

    def emit(name, verts, tris):
        nonlocal offset
        lines.append(f"o {name}")
        for v in verts:
            lines.append(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}")
        for t in tris:
            lines.append(f"f {t[0] + 1 + offset} {t[1] + 1 + offset} {t[2] + 1 + offset}")
        offset += len(verts)

    dome_verts, dome_tris = build_dome()
    emit("dome", dome_verts, dome_tris)
    total = len(dome_tris)
    for hid, axis, rim in hole_axes():
        verts, tris = build_ring(axis, rim)
        emit(hid, verts, tris)
        total += len(tris)

    (out_dir / "skull_dome.obj").write_text("\n".join(lines) + "\n")

    meta = {
        "dome": {
            "name": "Skull base dome",
            "description": "Hollow shell standing in for the base of the skull.",
            "illustration": None,
            "category": "bone",
        },
        "canalis_opticus": {
            "name": "Canalis opticus",
            "description": "Top opening; passage of the optic nerve.",
            "illustration": "illustrations/canalis_opticus.png",
            "category": "nerve",
        },
        "foramen_ovale_left": {
            "name": "Left Foramen Ovale",
            "description": "Lateral opening; passage of the mandibular nerve.",
            "illustration": None,
            "category": "nerve",
        },
        "foramen_spinosum_right": {
            "name": "Right Foramen Spinosum",
            "description": "Small lateral opening; passage of the middle meningeal artery.",
            "illustration": None,
            "category": "artery",
        },
    }
    (out_dir / "skull_dome.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"wrote {total} triangles across {1 + len(HOLES)} structures")


if __name__ == "__main__":
    main()
