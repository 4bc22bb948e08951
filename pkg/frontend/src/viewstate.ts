/** Console view state: a render-on-echo replica of the shared session.
 *
 * Only host broadcasts mutate this state (the console never applies its
 * own gestures optimistically), so after quiescence it matches the host's
 * annotation content exactly. The reducer mirrors the host's annotation
 * semantics field for field, including id assignment and stroke
 * decimation, which is what the export-consistency check relies on. */

import { distance, IDENTITY_POSE, lerp, type PoseJson, type Vec3 } from "./math.js";
import type { Envelope, SessionEvent, SessionSnapshot } from "./protocol.js";

export const SKETCH_DECIMATE = 1e-3; // metres; mirrors the host's stylus jitter control
export const LABEL_TIP_DEFAULT = 0.2; // metres along the anchor normal

export interface LandmarkView {
  id: string;
  position: Vec3;
  active: boolean;
}

export interface LabelView {
  id: string;
  anchor: Vec3;
  offset_tip: Vec3;
  headline: string;
  description: string;
  color_tag: string;
  visible: boolean;
}

export interface SketchView {
  id: string;
  color: [number, number, number];
  brush: string;
  points: Vec3[];
  closed: boolean;
  visible: boolean;
}

interface TimedPose {
  pose: PoseJson;
  timestampMs: number;
}

/** Interpolates the student avatar between its last two received poses.
 * Sampling beyond the newest pose extrapolates at most MAX_EXTRAPOLATE_FRAMES
 * frame intervals, then holds — the avatar never runs away on packet loss. */
export class AvatarInterpolator {
  static readonly MAX_EXTRAPOLATE_FRAMES = 2;

  private previous: TimedPose | null = null;
  private latest: TimedPose | null = null;

  push(pose: PoseJson, timestampMs: number): void {
    if (this.latest !== null && timestampMs <= this.latest.timestampMs) return;
    this.previous = this.latest;
    this.latest = { pose, timestampMs };
  }

  get lastTimestampMs(): number {
    return this.latest === null ? -1 : this.latest.timestampMs;
  }

  sample(nowMs: number): PoseJson | null {
    if (this.latest === null) return null;
    if (this.previous === null) return this.latest.pose;
    const a = this.previous;
    const b = this.latest;
    const span = b.timestampMs - a.timestampMs;
    let t = (nowMs - a.timestampMs) / span;
    // clamp extrapolation to two frame intervals past the newest pose
    const tMax = 1 + AvatarInterpolator.MAX_EXTRAPOLATE_FRAMES;
    if (t > tMax) t = tMax;
    if (t < 0) t = 0;
    return {
      position: lerp(a.pose.position, b.pose.position, t),
      orientation: b.pose.orientation,
    };
  }
}

export interface Toast {
  reason: string;
  channel: string;
  seq: number;
}

export class ConsoleViewState {
  landmarks = new Map<string, LandmarkView>();
  labels = new Map<string, LabelView>();
  sketches = new Map<string, SketchView>();
  retiredSketchIds = new Set<string>();
  annotationsShown = true;
  nextId = 1;

  studentHead = new AvatarInterpolator();
  studentPlatform: PoseJson = IDENTITY_POSE;
  studentMode = "handbook";
  beamLength = 5.0;
  teacherView: PoseJson = IDENTITY_POSE;

  /** Highest applied global order; duplicate broadcasts are no-ops. */
  horizon = -1;

  applySnapshot(snapshot: SessionSnapshot, horizon: number): void {
    this.landmarks.clear();
    this.labels.clear();
    this.sketches.clear();
    this.retiredSketchIds.clear();
    for (const [id, lm] of Object.entries(snapshot.landmarks)) {
      this.landmarks.set(id, { id, position: lm.position, active: lm.active });
    }
    for (const [id, lb] of Object.entries(snapshot.labels)) {
      this.labels.set(id, { id, ...lb });
    }
    for (const [id, sk] of Object.entries(snapshot.sketches)) {
      this.sketches.set(id, {
        id,
        color: sk.color,
        brush: sk.brush,
        points: sk.points.slice(),
        closed: sk.closed,
        visible: sk.visible,
      });
    }
    for (const id of snapshot.retired_sketch_ids) this.retiredSketchIds.add(id);
    this.annotationsShown = snapshot.teacher.annotations_shown;
    this.nextId = snapshot.next_id;
    this.studentPlatform = snapshot.student.platform;
    this.studentMode = snapshot.student.mode;
    this.beamLength = snapshot.student.beam_length;
    this.teacherView = snapshot.teacher.view;
    this.studentHead.push(snapshot.student.head, snapshot.student.last_pose_ts);
    this.horizon = horizon - 1;
  }

  /** Apply one host broadcast in arrival (= global) order. */
  applyEnvelope(env: Envelope): void {
    if (env.payload.kind !== "event") return;
    if (env.global_order !== undefined) {
      if (env.global_order <= this.horizon) return;
      this.horizon = env.global_order;
    }
    this.applyEvent(env.payload as SessionEvent);
  }

  private applyEvent(e: SessionEvent): void {
    switch (e.type) {
      case "pose_update":
        if (e.role === "student") {
          if (e.head) this.studentHead.push(e.head, e.timestamp_ms);
          if (e.platform) this.studentPlatform = e.platform;
        } else if (e.head) {
          this.teacherView = e.head;
        }
        break;
      case "mode_change":
        this.studentMode = e.mode;
        break;
      case "beam_adjust":
        this.beamLength = Math.min(Math.max(e.beam_length, 1.0), 30.0);
        break;
      case "teleport_commit":
      case "reposition_command":
        this.studentPlatform = { ...this.studentPlatform, position: e.target };
        break;
      case "landmark_place": {
        for (const lm of this.landmarks.values()) lm.active = false;
        const id = String(this.nextId++);
        this.landmarks.set(id, { id, position: e.position, active: true });
        break;
      }
      case "label_create": {
        const id = String(this.nextId++);
        const n = e.normal;
        const len = Math.sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        const tip: Vec3 = [
          e.anchor[0] + (n[0] / len) * LABEL_TIP_DEFAULT,
          e.anchor[1] + (n[1] / len) * LABEL_TIP_DEFAULT,
          e.anchor[2] + (n[2] / len) * LABEL_TIP_DEFAULT,
        ];
        this.labels.set(id, {
          id,
          anchor: e.anchor,
          offset_tip: tip,
          headline: "",
          description: "",
          color_tag: "none",
          visible: true,
        });
        break;
      }
      case "label_drag": {
        const lb = this.labels.get(e.label_id);
        if (lb) lb.offset_tip = e.offset_tip;
        break;
      }
      case "label_edit": {
        const lb = this.labels.get(e.label_id);
        if (lb) {
          lb.headline = e.headline;
          lb.description = e.description;
          lb.color_tag = e.color_tag;
        }
        break;
      }
      case "sketch_begin":
        if (!this.sketches.has(e.sketch_id) && !this.retiredSketchIds.has(e.sketch_id)) {
          this.sketches.set(e.sketch_id, {
            id: e.sketch_id,
            color: e.color,
            brush: e.brush,
            points: [],
            closed: false,
            visible: true,
          });
        }
        break;
      case "sketch_append": {
        const sk = this.sketches.get(e.sketch_id);
        if (sk && !sk.closed) {
          for (const p of e.points) {
            const last = sk.points[sk.points.length - 1];
            if (last === undefined || distance(last, p) >= SKETCH_DECIMATE) {
              sk.points.push(p);
            }
          }
        }
        break;
      }
      case "sketch_end": {
        const sk = this.sketches.get(e.sketch_id);
        if (sk) sk.closed = true;
        break;
      }
      case "sketch_delete":
        if (this.sketches.delete(e.sketch_id)) this.retiredSketchIds.add(e.sketch_id);
        break;
      case "visibility_set":
        if (e.scope === "all") {
          this.annotationsShown = e.visible;
        } else {
          const lb = this.labels.get(e.scope);
          if (lb) lb.visible = e.visible;
          const sk = this.sketches.get(e.scope);
          if (sk) sk.visible = e.visible;
        }
        break;
      // inspect + haptics have no console-side rendering beyond the avatar
      case "inspect_select":
      case "inspect_release":
      case "haptic_cue":
        break;
    }
  }

  /** The rendered annotation list in the exact shape of the host's
   * annotations export, for the consistency check. */
  annotationsExport(): {
    labels: object[];
    landmarks: object[];
    sketches: object[];
  } {
    const byId = <T extends { id: string }>(m: Map<string, T>) =>
      [...m.values()].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
    return {
      labels: byId(this.labels).map((lb) => ({
        id: lb.id,
        anchor: lb.anchor,
        offset_tip: lb.offset_tip,
        headline: lb.headline,
        description: lb.description,
        color_tag: lb.color_tag,
        visible: lb.visible,
      })),
      landmarks: byId(this.landmarks).map((lm) => ({
        id: lm.id,
        position: lm.position,
        active: lm.active,
      })),
      sketches: byId(this.sketches).map((sk) => ({
        id: sk.id,
        color: sk.color,
        brush: sk.brush,
        points: sk.points,
        closed: sk.closed,
        visible: sk.visible,
      })),
    };
  }
}
