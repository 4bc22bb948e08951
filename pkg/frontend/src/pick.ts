/** Screen-space picking against the scene mesh.
 *
 * The console fetches the mesh from /scene/mesh.obj and intersects pick
 * rays locally. The ray construction (pinhole camera through the pixel
 * centre) and the Moller-Trumbore tolerances mirror the server's ray cast
 * so a picked surface point matches what the host would compute. */

import { add, cross, dot, normalize, scale, sub, type Vec3 } from "./math.js";

export interface PickMesh {
  vertices: Vec3[];
  /** Triangles as vertex index triples, in file order. */
  triangles: Array<[number, number, number]>;
}

/** Parse the subset of Wavefront OBJ the scene assets use: v and f lines,
 * triangular faces, 1-based absolute indices. */
export function parseObj(text: string): PickMesh {
  const vertices: Vec3[] = [];
  const triangles: Array<[number, number, number]> = [];
  for (const rawLine of text.split("\n")) {
    const line = rawLine.trim();
    if (line.startsWith("v ")) {
      const parts = line.split(/\s+/);
      vertices.push([Number(parts[1]), Number(parts[2]), Number(parts[3])]);
    } else if (line.startsWith("f ")) {
      const idx = line
        .split(/\s+/)
        .slice(1)
        .map((tok) => Number(tok.split("/")[0]) - 1);
      // fan-triangulate just in case a polygon slips in
      for (let i = 1; i + 1 < idx.length; i++) {
        triangles.push([idx[0], idx[i], idx[i + 1]]);
      }
    }
  }
  return { vertices, triangles };
}

export interface PickCamera {
  position: Vec3;
  look_at: Vec3;
  up: Vec3;
  fov_y_deg: number;
  width: number;
  height: number;
}

export interface PickRay {
  origin: Vec3;
  direction: Vec3;
}

/** Ray through the centre of pixel (px, py); py runs downward from the top. */
export function rayFromPixel(cam: PickCamera, px: number, py: number): PickRay {
  const forward = normalize(sub(cam.look_at, cam.position));
  const right = normalize(cross(forward, cam.up));
  const trueUp = cross(right, forward);
  const aspect = cam.width / cam.height;
  const tanHalf = Math.tan(((cam.fov_y_deg / 2) * Math.PI) / 180);
  const ndcX = ((px + 0.5) / cam.width) * 2 - 1;
  const ndcY = 1 - ((py + 0.5) / cam.height) * 2;
  const direction = normalize(
    add(forward, add(scale(right, ndcX * tanHalf * aspect), scale(trueUp, ndcY * tanHalf))),
  );
  return { origin: cam.position, direction };
}

export interface PickHit {
  point: Vec3;
  distance: number;
  triangleIndex: number;
  normal: Vec3; // unit, facing the ray origin
}

const EPS = 1e-12;
const TOL = 1e-9;

function rayTriangle(ray: PickRay, a: Vec3, b: Vec3, c: Vec3): number {
  const e1 = sub(b, a);
  const e2 = sub(c, a);
  const h = cross(ray.direction, e2);
  const det = dot(e1, h);
  if (Math.abs(det) < EPS) return Infinity;
  const invDet = 1 / det;
  const s = sub(ray.origin, a);
  const u = dot(s, h) * invDet;
  const q = cross(s, e1);
  const v = dot(ray.direction, q) * invDet;
  const t = dot(e2, q) * invDet;
  if (u < -TOL || v < -TOL || u + v > 1 + TOL || t < 0) return Infinity;
  return t;
}

/** Closest surface hit along the ray, or null. Exhaustive scan: the scene
 * meshes are small enough that interactive picking needs no acceleration
 * structure on the console side. */
export function pickSurface(mesh: PickMesh, ray: PickRay, maxDistance = Infinity): PickHit | null {
  let bestT = maxDistance;
  let bestIndex = -1;
  for (let i = 0; i < mesh.triangles.length; i++) {
    const [ia, ib, ic] = mesh.triangles[i];
    const t = rayTriangle(ray, mesh.vertices[ia], mesh.vertices[ib], mesh.vertices[ic]);
    if (t < bestT) {
      bestT = t;
      bestIndex = i;
    }
  }
  if (bestIndex < 0) return null;
  const [ia, ib, ic] = mesh.triangles[bestIndex];
  const a = mesh.vertices[ia];
  let normal = normalize(cross(sub(mesh.vertices[ib], a), sub(mesh.vertices[ic], a)));
  if (dot(normal, ray.direction) > 0) normal = scale(normal, -1);
  return {
    point: add(ray.origin, scale(ray.direction, bestT)),
    distance: bestT,
    triangleIndex: bestIndex,
    normal,
  };
}

/** Mid-air fallback: with a mouse there is no stylus depth, so a miss
 * resolves to a fixed depth along the pick ray (flagged interpretation). */
export const MIDAIR_DEPTH = 2.0;

export function pickPoint(mesh: PickMesh, ray: PickRay): { point: Vec3; onSurface: boolean; normal: Vec3 } {
  const hit = pickSurface(mesh, ray);
  if (hit !== null) return { point: hit.point, onSurface: true, normal: hit.normal };
  return {
    point: add(ray.origin, scale(ray.direction, MIDAIR_DEPTH)),
    onSurface: false,
    normal: scale(ray.direction, -1),
  };
}
