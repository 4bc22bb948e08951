"""Anatomy scene loading and queries.

Scene format: a Wavefront-style OBJ subset (`o <name>`, `v`, `f`, triangles
only) plus a JSON metadata document keyed by object name. Structures with
no metadata entry load with category "other" and an empty description.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .geometry import Bvh, Ray, RayHit, TriangleMesh, build_bvh

CATEGORIES = ("bone", "artery", "vein", "nerve", "other")

# canonical display colors: anatomy-atlas convention
CATEGORY_COLORS = {
    "bone": "#e8e0d0",
    "artery": "#cc2222",
    "vein": "#2244cc",
    "nerve": "#ddcc22",
    "other": "#999999",
}

DEFAULT_WORLD_SCALE = 20.0
DEFAULT_WALK_BARRIER = (-2.5, -2.5, 2.5, 2.5)  # 5 m x 5 m tracked area


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle on the platform (x, z) plane."""

    min_x: float
    min_z: float
    max_x: float
    max_z: float

    def clamp(self, x: float, z: float) -> Tuple[float, float]:
        return (min(max(x, self.min_x), self.max_x), min(max(z, self.min_z), self.max_z))


@dataclass(frozen=True)
class StructureInfo:
    structure_id: str
    name: str
    description: str = ""
    illustration: Optional[str] = None
    category: str = "other"

    def __post_init__(self):
        if not self.name:
            raise SceneError(f"structure {self.structure_id}: empty name")
        if self.category not in CATEGORIES:
            raise SceneError(f"structure {self.structure_id}: bad category {self.category!r}")

    @property
    def color(self) -> str:
        return CATEGORY_COLORS[self.category]


@dataclass
class AnatomyScene:
    structures: Dict[str, Tuple[TriangleMesh, StructureInfo]]
    bvh: Bvh = field(repr=False)
    world_scale: float = DEFAULT_WORLD_SCALE
    walk_barrier: Rect = Rect(*DEFAULT_WALK_BARRIER)

    def __post_init__(self):
        if self.world_scale <= 1:
            raise SceneError("world_scale must exceed 1")

    def handbook_lookup(self, structure_id: str) -> StructureInfo:
        try:
            return self.structures[structure_id][1]
        except KeyError:
            raise SceneError(f"not_found: unknown structure {structure_id!r}") from None

    def pick_structure(self, ray: Ray, max_distance: float = 1e6) -> Optional[Tuple[RayHit, StructureInfo]]:
        hit = self.bvh.ray_cast(ray, max_distance)
        if hit is None:
            return None
        return hit, self.structures[hit.structure_id][1]

    def metadata_dict(self) -> dict:
        out = {}
        for sid, (_, info) in sorted(self.structures.items()):
            out[sid] = {
                "name": info.name,
                "description": info.description,
                "illustration": info.illustration,
                "category": info.category,
            }
        return out


def parse_obj(path) -> Dict[str, TriangleMesh]:
    """Parse the OBJ subset: o/v/f lines, triangular faces, global 1-based
    vertex indices. Raises SceneError with the offending line number."""
    vertices = []
    objects: Dict[str, list] = {}
    current: Optional[str] = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "o":
                if len(parts) < 2:
                    raise SceneError(f"{path}:{lineno}: object without a name")
                current = parts[1]
                objects.setdefault(current, [])
            elif tag == "v":
                if len(parts) != 4:
                    raise SceneError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append(tuple(float(x) for x in parts[1:4]))
                except ValueError:
                    raise SceneError(f"{path}:{lineno}: bad vertex coordinate") from None
            elif tag == "f":
                if current is None:
                    raise SceneError(f"{path}:{lineno}: face before any object")
                if len(parts) != 4:
                    raise SceneError(f"{path}:{lineno}: only triangular faces are supported")
                try:
                    idx = tuple(int(p.split("/")[0]) - 1 for p in parts[1:4])
                except ValueError:
                    raise SceneError(f"{path}:{lineno}: bad face index") from None
                if any(i < 0 or i >= len(vertices) for i in idx):
                    raise SceneError(f"{path}:{lineno}: face index out of range")
                objects[current].append(idx)
            # other OBJ tags (vn, vt, s, usemtl...) are ignored
    meshes: Dict[str, TriangleMesh] = {}
    all_verts = np.array(vertices) if vertices else np.zeros((0, 3))
    for name, faces in objects.items():
        if not faces:
            continue
        used = sorted({i for f in faces for i in f})
        remap = {g: l for l, g in enumerate(used)}
        local_faces = np.array([[remap[i] for i in f] for f in faces], dtype=np.int64)
        meshes[name] = TriangleMesh(name, all_verts[used], local_faces)
    if not meshes:
        raise SceneError(f"{path}: no_geometry")
    return meshes


def load_metadata(path) -> Dict[str, StructureInfo]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise SceneError(f"{path}:{e.lineno}:{e.colno}: invalid JSON ({e.msg})") from None
    if not isinstance(doc, dict):
        raise SceneError(f"{path}: metadata root must be an object")
    infos = {}
    for sid, rec in doc.items():
        infos[sid] = StructureInfo(
            structure_id=sid,
            name=rec.get("name", ""),
            description=rec.get("description", ""),
            illustration=rec.get("illustration"),
            category=rec.get("category", "other"),
        )
    return infos


def load_scene(
    mesh_file,
    metadata_file,
    world_scale: float = DEFAULT_WORLD_SCALE,
    walk_barrier: Rect = Rect(*DEFAULT_WALK_BARRIER),
) -> AnatomyScene:
    meshes = parse_obj(mesh_file)
    infos = load_metadata(metadata_file) if metadata_file else {}
    dangling = sorted(set(infos) - set(meshes))
    if dangling:
        raise SceneError(f"{metadata_file}: metadata references absent structure(s): {', '.join(dangling)}")
    structures = {}
    for sid, mesh in meshes.items():
        info = infos.get(sid) or StructureInfo(structure_id=sid, name=sid, category="other")
        structures[sid] = (mesh, info)
    bvh = build_bvh([m for m, _ in structures.values()])
    return AnatomyScene(structures, bvh, world_scale, walk_barrier)


def scene_digest(scene: AnatomyScene) -> str:
    """Stable content hash over geometry and metadata, for round-trip tests."""
    import hashlib

    h = hashlib.sha256()
    for sid in sorted(scene.structures):
        mesh, info = scene.structures[sid]
        h.update(sid.encode())
        h.update(np.ascontiguousarray(mesh.vertices).tobytes())
        h.update(np.ascontiguousarray(mesh.triangles).tobytes())
        h.update(json.dumps(scene.metadata_dict()[sid], sort_keys=True).encode())
    return h.hexdigest()
