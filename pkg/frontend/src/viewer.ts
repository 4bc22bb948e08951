/** Three.js rendering of the shared scene: flat-shaded structures, a
 * distinct-colour student avatar, annotation meshes, and the student-view
 * window rendered from the student's synchronized head pose (no video
 * stream — the scene is re-rendered locally). */

import * as THREE from "three";
import type { Vec3 } from "./math.js";
import type { PickCamera } from "./pick.js";
import type { ConsoleViewState, LabelView, LandmarkView, SketchView } from "./viewstate.js";

/** Mirrors the server NavConfig default so the console camera cannot look
 * further up/down than the student can. */
export const PITCH_CLAMP_DEG = 85;

const SCENE_COLOR = 0xcfc6b8;
const AVATAR_COLOR = 0x2266ee; // distinct flat colour against the bone tones
const LANDMARK_COLOR = 0x22aa55;
const LANDMARK_BOB_HZ = 1.2;

export class OrbitCamera {
  target = new THREE.Vector3(0, 1, 0);
  distance = 8;
  yaw = 0;
  pitch = 0.4;

  apply(camera: THREE.PerspectiveCamera): void {
    const clamp = (PITCH_CLAMP_DEG * Math.PI) / 180;
    this.pitch = Math.min(Math.max(this.pitch, -clamp), clamp);
    const cp = Math.cos(this.pitch);
    camera.position.set(
      this.target.x + this.distance * cp * Math.sin(this.yaw),
      this.target.y + this.distance * Math.sin(this.pitch),
      this.target.z + this.distance * cp * Math.cos(this.yaw),
    );
    camera.lookAt(this.target);
  }
}

export class ConsoleViewer {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  readonly studentCamera: THREE.PerspectiveCamera;
  readonly orbit = new OrbitCamera();

  private renderer: THREE.WebGLRenderer;
  private studentRenderer: THREE.WebGLRenderer | null;
  private avatar: THREE.Mesh;
  private annotationGroup = new THREE.Group();
  private landmarkMeshes = new Map<string, THREE.Mesh>();
  private sketchLines = new Map<string, THREE.Line>();
  private labelGroups = new Map<string, THREE.Group>();

  constructor(canvas: HTMLCanvasElement, studentCanvas: HTMLCanvasElement | null) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.studentRenderer = studentCanvas
      ? new THREE.WebGLRenderer({ canvas: studentCanvas, antialias: true })
      : null;
    this.camera = new THREE.PerspectiveCamera(55, canvas.width / canvas.height, 0.05, 200);
    this.studentCamera = new THREE.PerspectiveCamera(
      80,
      studentCanvas ? studentCanvas.width / studentCanvas.height : 1,
      0.05,
      200,
    );
    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.45));
    const sun = new THREE.DirectionalLight(0xffffff, 1.1);
    sun.position.set(4, 10, 6);
    this.scene.add(sun);
    this.scene.add(this.annotationGroup);

    const avatarGeom = new THREE.CapsuleGeometry(0.3, 1.2, 4, 12);
    const avatarMat = new THREE.MeshPhongMaterial({ color: AVATAR_COLOR, flatShading: true });
    this.avatar = new THREE.Mesh(avatarGeom, avatarMat);
    this.scene.add(this.avatar);
  }

  setSceneMesh(vertices: Vec3[], triangles: Array<[number, number, number]>): void {
    const geom = new THREE.BufferGeometry();
    const pos = new Float32Array(vertices.length * 3);
    vertices.forEach((v, i) => pos.set(v, i * 3));
    geom.setAttribute("position", new THREE.BufferAttribute(pos, 3));
    geom.setIndex(triangles.flat());
    geom.computeVertexNormals();
    const mat = new THREE.MeshPhongMaterial({
      color: SCENE_COLOR,
      flatShading: true,
      side: THREE.DoubleSide,
    });
    this.scene.add(new THREE.Mesh(geom, mat));
  }

  /** Convert the current overview camera into the shared pick-camera model. */
  pickCamera(width: number, height: number): PickCamera {
    return {
      position: this.camera.position.toArray() as Vec3,
      look_at: this.orbit.target.toArray() as Vec3,
      up: [0, 1, 0],
      fov_y_deg: this.camera.fov,
      width,
      height,
    };
  }

  focusOnStudent(view: ConsoleViewState): void {
    const p = view.studentPlatform.position;
    this.orbit.target.set(p[0], p[1] + 1, p[2]);
  }

  /** Re-sync scene objects from the view state and draw both viewports. */
  render(view: ConsoleViewState, nowMs: number): void {
    // avatar from the interpolated head pose, platform as fallback
    const head = view.studentHead.sample(nowMs);
    const platform = view.studentPlatform.position;
    this.avatar.position.set(platform[0], platform[1] + 0.9, platform[2]);
    if (head) {
      this.studentCamera.position.set(head.position[0], head.position[1], head.position[2]);
      this.studentCamera.quaternion.set(...head.orientation);
    }

    this.annotationGroup.visible = view.annotationsShown;
    this.syncLandmarks(view.landmarks, nowMs);
    this.syncSketches(view.sketches);
    this.syncLabels(view.labels);

    this.orbit.apply(this.camera);
    this.renderer.render(this.scene, this.camera);
    if (this.studentRenderer) {
      this.studentRenderer.render(this.scene, this.studentCamera);
    }
  }

  private syncLandmarks(landmarks: Map<string, LandmarkView>, nowMs: number): void {
    for (const [id, mesh] of this.landmarkMeshes) {
      if (!landmarks.has(id)) {
        this.annotationGroup.remove(mesh);
        this.landmarkMeshes.delete(id);
      }
    }
    for (const lm of landmarks.values()) {
      let mesh = this.landmarkMeshes.get(lm.id);
      if (!mesh) {
        mesh = new THREE.Mesh(
          new THREE.ConeGeometry(0.06, 0.18, 10),
          new THREE.MeshPhongMaterial({ color: LANDMARK_COLOR, flatShading: true }),
        );
        mesh.rotation.x = Math.PI; // point the cone tip at the surface
        this.annotationGroup.add(mesh);
        this.landmarkMeshes.set(lm.id, mesh);
      }
      // the active landmark bobs up and down to draw the student's eye
      const bob = lm.active ? 0.05 * (1 + Math.sin((nowMs / 1000) * LANDMARK_BOB_HZ * 2 * Math.PI)) : 0;
      mesh.position.set(lm.position[0], lm.position[1] + 0.12 + bob, lm.position[2]);
      (mesh.material as THREE.MeshPhongMaterial).opacity = lm.active ? 1 : 0.5;
      (mesh.material as THREE.MeshPhongMaterial).transparent = !lm.active;
    }
  }

  private syncSketches(sketches: Map<string, SketchView>): void {
    for (const [id, line] of this.sketchLines) {
      if (!sketches.has(id)) {
        this.annotationGroup.remove(line);
        this.sketchLines.delete(id);
      }
    }
    for (const sk of sketches.values()) {
      const old = this.sketchLines.get(sk.id);
      if (old) this.annotationGroup.remove(old);
      const geom = new THREE.BufferGeometry().setFromPoints(
        sk.points.map((p) => new THREE.Vector3(p[0], p[1], p[2])),
      );
      const line = new THREE.Line(
        geom,
        new THREE.LineBasicMaterial({
          color: new THREE.Color(sk.color[0], sk.color[1], sk.color[2]),
          linewidth: sk.brush === "large" ? 3 : 1,
        }),
      );
      line.visible = sk.visible;
      this.annotationGroup.add(line);
      this.sketchLines.set(sk.id, line);
    }
  }

  private syncLabels(labels: Map<string, LabelView>): void {
    for (const [id, group] of this.labelGroups) {
      if (!labels.has(id)) {
        this.annotationGroup.remove(group);
        this.labelGroups.delete(id);
      }
    }
    for (const lb of labels.values()) {
      const old = this.labelGroups.get(lb.id);
      if (old) this.annotationGroup.remove(old);
      const group = new THREE.Group();
      // leader line from the anchor to the text tip
      const leader = new THREE.Line(
        new THREE.BufferGeometry().setFromPoints([
          new THREE.Vector3(...lb.anchor),
          new THREE.Vector3(...lb.offset_tip),
        ]),
        new THREE.LineBasicMaterial({ color: 0xffffff }),
      );
      group.add(leader);
      const plate = new THREE.Sprite(
        new THREE.SpriteMaterial({ color: labelTagColor(lb.color_tag) }),
      );
      plate.position.set(...lb.offset_tip);
      plate.scale.set(0.35, 0.12, 1);
      group.add(plate);
      group.visible = lb.visible;
      this.annotationGroup.add(group);
      this.labelGroups.set(lb.id, group);
    }
  }
}

function labelTagColor(tag: string): number {
  switch (tag) {
    case "red":
      return 0xcc3333;
    case "blue":
      return 0x3366cc;
    case "yellow":
      return 0xccaa22;
    default:
      return 0x888888;
  }
}
