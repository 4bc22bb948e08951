"""Bounding volume hierarchy over one or more triangle meshes.

Median-split BVH with a flat node array. Leaves reference contiguous runs
of a reordered triangle list, but hits always report the triangle's index
within its source mesh. Equal-distance hits resolve to the triangle that
comes first in the concatenated input order, which keeps golden tests
stable.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .mesh import (
    Capsule,
    Ray,
    RayHit,
    TriangleMesh,
    _clip01,
    _cross_rows,
    _dot_rows,
    ray_triangles_intersect,
    segment_triangles_distance,
)
from .vec import GeometryError, Vec3

_LEAF_SIZE = 16


@dataclass
class _Node:
    lo: tuple  # (x, y, z) floats; plain tuples keep the traversal loops cheap
    hi: tuple
    left: int  # child index, or start of leaf range
    right: int  # child index, or end of leaf range
    is_leaf: bool


class Bvh:
    """Immutable after construction; safe to share across threads."""

    def __init__(self, meshes: Sequence[TriangleMesh]):
        meshes = [m for m in meshes if m.num_triangles > 0]
        if not meshes:
            raise GeometryError("build_bvh requires at least one non-empty mesh")
        a_parts, b_parts, c_parts, sid_parts, tri_parts = [], [], [], [], []
        for m in meshes:
            a, b, c = m.triangle_corners()
            a_parts.append(a)
            b_parts.append(b)
            c_parts.append(c)
            sid_parts.extend([m.structure_id] * m.num_triangles)
            tri_parts.append(np.arange(m.num_triangles, dtype=np.int64))
        self._a = np.concatenate(a_parts)
        self._b = np.concatenate(b_parts)
        self._c = np.concatenate(c_parts)
        self._sid = np.array(sid_parts, dtype=object)
        self._tri = np.concatenate(tri_parts)
        self._order = np.arange(len(self._a), dtype=np.int64)  # global input order, for tie-breaks

        centroids = (self._a + self._b + self._c) / 3.0
        lo = np.minimum(np.minimum(self._a, self._b), self._c)
        hi = np.maximum(np.maximum(self._a, self._b), self._c)

        self.nodes: List[_Node] = []
        perm = np.arange(len(self._a), dtype=np.int64)
        self._build(perm, centroids, lo, hi)
        # reorder primitive arrays so leaves are contiguous
        order = np.concatenate(self._leaf_runs) if self._leaf_runs else perm
        self._a = self._a[order]
        self._b = self._b[order]
        self._c = self._c[order]
        self._sid = self._sid[order]
        self._tri = self._tri[order]
        self._order = self._order[order]

        # per-triangle precomputation for the capsule clearance kernel
        self._e1 = self._b - self._a
        self._e2 = self._c - self._a
        n = _cross_rows(self._e1, self._e2)
        self._n_unit = n / np.sqrt(_dot_rows(n, n))[:, None]
        d00 = _dot_rows(self._e2, self._e2)
        d01 = _dot_rows(self._e2, self._e1)
        d11 = _dot_rows(self._e1, self._e1)
        self._d00, self._d01, self._d11 = d00, d01, d11
        # meshes reject degenerate triangles at load, so the denominator is positive
        self._inv_denom = 1.0 / (d00 * d11 - d01 * d01)
        # edge tables laid out [ab rows | bc rows | ca rows]
        self._eq0 = np.concatenate([self._a, self._b, self._c])
        self._ed = np.concatenate([self._b - self._a, self._c - self._b, self._a - self._c])
        self._ee = _dot_rows(self._ed, self._ed)

    def _build(self, perm, centroids, lo, hi):
        self._leaf_runs: List[np.ndarray] = []
        self._next_start = 0

        def recurse(idx: np.ndarray) -> int:
            node_lo = tuple(float(v) for v in lo[idx].min(axis=0))
            node_hi = tuple(float(v) for v in hi[idx].max(axis=0))
            node_id = len(self.nodes)
            if len(idx) <= _LEAF_SIZE:
                start = self._next_start
                self._next_start += len(idx)
                self._leaf_runs.append(idx)
                self.nodes.append(_Node(node_lo, node_hi, start, self._next_start, True))
                return node_id
            axis = max(range(3), key=lambda k: node_hi[k] - node_lo[k])
            keys = centroids[idx][:, axis]
            half = len(idx) // 2
            part = np.argpartition(keys, half)
            self.nodes.append(_Node(node_lo, node_hi, -1, -1, False))
            left = recurse(idx[part[:half]])
            right = recurse(idx[part[half:]])
            self.nodes[node_id].left = left
            self.nodes[node_id].right = right
            return node_id

        recurse(perm)

    @property
    def num_triangles(self) -> int:
        return len(self._a)

    @staticmethod
    def _slab_test(node: _Node, origin: tuple, inv_dir: tuple) -> float:
        """Scalar slab test on plain floats; this sits in the innermost loop."""
        t_near = 0.0
        t_far = np.inf
        for k in range(3):
            t0 = (node.lo[k] - origin[k]) * inv_dir[k]
            t1 = (node.hi[k] - origin[k]) * inv_dir[k]
            # 0 * inf produces NaN when the origin sits on a slab plane of a
            # zero direction component; treat that axis as unbounded
            if t0 != t0:
                t0 = -np.inf
            if t1 != t1:
                t1 = np.inf
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > t_near:
                t_near = t0
            if t1 < t_far:
                t_far = t1
        if t_far < t_near:
            return np.inf
        return t_near

    def ray_cast(self, ray: Ray, max_distance: float) -> Optional[RayHit]:
        if max_distance <= 0:
            raise GeometryError("max_distance must be positive")
        origin_t = ray.origin.as_tuple()
        direction_t = ray.direction.as_tuple()
        origin = np.array(origin_t)
        direction = np.array(direction_t)
        inv_dir = tuple(np.inf if d == 0 else 1.0 / d for d in direction_t)
        best_t = np.inf
        best_prim = -1
        heap = [(self._slab_test(self.nodes[0], origin_t, inv_dir), 0)]
        while heap:
            t_enter, node_id = heapq.heappop(heap)
            if t_enter > best_t or t_enter > max_distance:
                continue
            node = self.nodes[node_id]
            if node.is_leaf:
                s, e = node.left, node.right
                ts = ray_triangles_intersect(origin, direction, self._a[s:e], self._b[s:e], self._c[s:e])
                for k in np.nonzero(ts <= max_distance)[0]:
                    t = ts[k]
                    prim = s + int(k)
                    if t < best_t or (t == best_t and self._order[prim] < self._order[best_prim]):
                        best_t = t
                        best_prim = prim
            else:
                for child in (node.left, node.right):
                    te = self._slab_test(self.nodes[child], origin_t, inv_dir)
                    if te <= min(best_t, max_distance):
                        heapq.heappush(heap, (te, child))
        if best_prim < 0:
            return None
        return self._make_hit(best_prim, float(best_t), ray)

    def _make_hit(self, prim: int, t: float, ray: Ray) -> RayHit:
        point = ray.origin + ray.direction * t
        n = np.cross(self._b[prim] - self._a[prim], self._c[prim] - self._a[prim])
        n = n / np.linalg.norm(n)
        normal = Vec3(*n)
        if normal.dot(ray.direction) > 0:
            normal = -normal
        return RayHit(t, point, normal, str(self._sid[prim]), int(self._tri[prim]))

    def ray_cast_brute(self, ray: Ray, max_distance: float) -> Optional[RayHit]:
        """Exhaustive iteration over every triangle; the oracle for ray_cast."""
        origin = np.array(ray.origin.as_tuple())
        direction = np.array(ray.direction.as_tuple())
        ts = ray_triangles_intersect(origin, direction, self._a, self._b, self._c)
        ts = np.where(ts <= max_distance, ts, np.inf)
        if not np.isfinite(ts).any():
            return None
        best_t = ts.min()
        cands = np.nonzero(ts == best_t)[0]
        prim = cands[np.argmin(self._order[cands])]
        return self._make_hit(int(prim), float(best_t), ray)

    def capsule_clear(self, capsule: Capsule) -> bool:
        """True iff no triangle lies within the capsule radius of its axis."""
        p0v, p1v = capsule.axis_segment()
        p0 = np.array(p0v.as_tuple())
        p1 = np.array(p1v.as_tuple())
        r = capsule.radius
        lo = tuple(min(a, b) - r for a, b in zip(p0v.as_tuple(), p1v.as_tuple()))
        hi = tuple(max(a, b) + r for a, b in zip(p0v.as_tuple(), p1v.as_tuple()))
        ranges = []
        stack = [0]
        while stack:
            node = self.nodes[stack.pop()]
            nlo, nhi = node.lo, node.hi
            if (
                nlo[0] > hi[0] or nlo[1] > hi[1] or nlo[2] > hi[2]
                or nhi[0] < lo[0] or nhi[1] < lo[1] or nhi[2] < lo[2]
            ):
                continue
            if node.is_leaf:
                ranges.append((node.left, node.right))
            else:
                stack.append(node.left)
                stack.append(node.right)
        if not ranges:
            return True
        idx = np.concatenate([np.arange(s, e) for s, e in ranges])
        return not self._capsule_hit(p0, p1, r, idx)

    def _capsule_hit(self, p0: np.ndarray, p1: np.ndarray, r: float, idx: np.ndarray) -> bool:
        """True iff any triangle in idx lies within r of the vertical axis
        segment p0->p1 (capsule axes are vertical: p1 = p0 + (0, dy, 0)).

        Candidate features match segment_triangles_distance: segment endpoints
        against faces, the axis crossing a face, and axis-vs-edge distance.
        Verified against capsule_clear_brute by the dual-route tests."""
        dy = float(p1[1] - p0[1])
        a = self._a[idx]
        nu = self._n_unit[idx]
        ap0 = p0 - a
        h0 = _dot_rows(ap0, nu)
        h1 = h0 + dy * nu[:, 1]

        def inside(v2: np.ndarray) -> np.ndarray:
            d20 = _dot_rows(v2, self._e2[idx])
            d21 = _dot_rows(v2, self._e1[idx])
            invd = self._inv_denom[idx]
            u = (self._d11[idx] * d20 - self._d01[idx] * d21) * invd
            v = (self._d00[idx] * d21 - self._d01[idx] * d20) * invd
            return (u >= 0) & (v >= 0) & (u + v <= 1)

        m0 = np.abs(h0) < r
        if m0.any() and (m0 & inside(ap0 - h0[:, None] * nu)).any():
            return True
        m1 = np.abs(h1) < r
        if m1.any():
            v2 = ap0 - h1[:, None] * nu
            v2[:, 1] += dy
            if (m1 & inside(v2)).any():
                return True
        mc = h0 * h1 < 0
        if mc.any():
            # axis pierces the face plane between the endpoints
            t = h0 / np.where(mc, h0 - h1, 1.0)
            v2 = ap0.copy()
            v2[:, 1] += t * dy
            if (mc & inside(v2)).any():
                return True

        # axis segment against all three triangle edges; the p-segment
        # direction is (0, dy, 0), which collapses its dot products
        t_count = len(self._a)
        eidx = np.concatenate([idx, idx + t_count, idx + 2 * t_count])
        q0 = self._eq0[eidx]
        d2 = self._ed[eidx]
        ee = self._ee[eidx]
        rv = p0 - q0
        f = _dot_rows(d2, rv)
        aa = dy * dy
        cc = rv[:, 1] * dy
        bb = d2[:, 1] * dy
        aa_safe = aa if aa > 1e-18 else 1.0
        denom = aa * ee - bb * bb
        degen = np.abs(denom) < 1e-18
        s = np.where(
            degen, 0.0, _clip01((bb * f - cc * ee) / np.where(degen, 1.0, denom))
        )
        t = (bb * s + f) / ee
        s = np.where(t < 0.0, _clip01(-cc / aa_safe), s)
        s = np.where(t > 1.0, _clip01((bb - cc) / aa_safe), s)
        t = _clip01(t)
        diff = rv - t[:, None] * d2
        diff[:, 1] += s * dy
        return bool((_dot_rows(diff, diff) < r * r).any())

    def capsule_clear_brute(self, capsule: Capsule) -> bool:
        """Exhaustive per-triangle minimum-distance check; the oracle."""
        p0v, p1v = capsule.axis_segment()
        p0 = np.array(p0v.as_tuple())
        p1 = np.array(p1v.as_tuple())
        d = segment_triangles_distance(p0, p1, self._a, self._b, self._c)
        return bool((d >= capsule.radius).all())


def build_bvh(meshes: Sequence[TriangleMesh]) -> Bvh:
    return Bvh(meshes)


def ray_cast(bvh: Bvh, ray: Ray, max_distance: float) -> Optional[RayHit]:
    return bvh.ray_cast(ray, max_distance)


def capsule_clear(bvh: Bvh, capsule: Capsule) -> bool:
    return bvh.capsule_clear(capsule)
