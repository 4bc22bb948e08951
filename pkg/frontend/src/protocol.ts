/** Wire protocol mirror: envelopes and payloads as they travel over the
 * WebSocket transport (one JSON document per text message).
 *
 * Payload objects keep the exact wire field names so encoding is the
 * identity plus a "kind" discriminator. */

import type { PoseJson, Vec3 } from "./math.js";

export const PROTOCOL_VERSION = "tutorlink/1";

export type Channel = "control" | "pose" | "annotation";
export type Sender = "teacher_host" | "student_client" | "console";

// --- session events ----------------------------------------------------------

export interface PoseUpdate {
  type: "pose_update";
  role: "student" | "teacher";
  timestamp_ms: number;
  head: PoseJson | null;
  left: PoseJson | null;
  right: PoseJson | null;
  platform: PoseJson | null;
}

export interface ModeChange {
  type: "mode_change";
  mode: "handbook" | "navigation" | "inspect";
}

export interface BeamAdjust {
  type: "beam_adjust";
  beam_length: number;
}

export interface TeleportCommit {
  type: "teleport_commit";
  target: Vec3;
  timestamp_ms: number;
}

export interface RepositionCommand {
  type: "reposition_command";
  target: Vec3;
  timestamp_ms: number;
}

export interface LandmarkPlace {
  type: "landmark_place";
  position: Vec3;
}

export interface LabelCreate {
  type: "label_create";
  anchor: Vec3;
  normal: Vec3;
}

export interface LabelDrag {
  type: "label_drag";
  label_id: string;
  offset_tip: Vec3;
}

export interface LabelEdit {
  type: "label_edit";
  label_id: string;
  headline: string;
  description: string;
  color_tag: "red" | "blue" | "yellow" | "none";
}

export interface SketchBegin {
  type: "sketch_begin";
  sketch_id: string;
  color: [number, number, number];
  brush: "small" | "large";
}

export interface SketchAppend {
  type: "sketch_append";
  sketch_id: string;
  points: Vec3[];
}

export interface SketchEnd {
  type: "sketch_end";
  sketch_id: string;
}

export interface SketchDelete {
  type: "sketch_delete";
  sketch_id: string;
}

export interface VisibilitySet {
  type: "visibility_set";
  scope: string; // "all" or an annotation id
  visible: boolean;
}

export interface InspectSelect {
  type: "inspect_select";
  structure_id: string;
}

export interface InspectRelease {
  type: "inspect_release";
}

export interface HapticCue {
  type: "haptic_cue";
  role: "student" | "teacher";
  pattern: string;
}

export type SessionEvent =
  | PoseUpdate
  | ModeChange
  | BeamAdjust
  | TeleportCommit
  | RepositionCommand
  | LandmarkPlace
  | LabelCreate
  | LabelDrag
  | LabelEdit
  | SketchBegin
  | SketchAppend
  | SketchEnd
  | SketchDelete
  | VisibilitySet
  | InspectSelect
  | InspectRelease
  | HapticCue;

export const EVENT_TYPES: ReadonlySet<string> = new Set([
  "pose_update",
  "mode_change",
  "beam_adjust",
  "teleport_commit",
  "reposition_command",
  "landmark_place",
  "label_create",
  "label_drag",
  "label_edit",
  "sketch_begin",
  "sketch_append",
  "sketch_end",
  "sketch_delete",
  "visibility_set",
  "inspect_select",
  "inspect_release",
  "haptic_cue",
]);

// --- control frames ----------------------------------------------------------

export interface Hello {
  type: "hello";
  version: string;
  role: Sender;
}

export interface Welcome {
  type: "welcome";
  version: string;
  snapshot: SessionSnapshot;
  horizon: number;
}

export interface Ping {
  type: "ping";
  nonce: number;
}

export interface Pong {
  type: "pong";
  nonce: number;
}

export interface Bye {
  type: "bye";
  reason: string;
}

export interface Rejection {
  type: "rejection";
  channel: Channel;
  seq: number;
  reason: string;
}

export type ControlFrame = Hello | Welcome | Ping | Pong | Bye | Rejection;

export type Payload =
  | ({ kind: "event" } & SessionEvent)
  | ({ kind: "control" } & ControlFrame)
  | { kind: "unknown"; raw: Record<string, unknown> };

export interface Envelope {
  channel: Channel;
  seq: number;
  sender: Sender;
  payload: Payload;
  global_order?: number;
}

/** Shape of Welcome.snapshot (the host's canonical session serialization). */
export interface SessionSnapshot {
  landmarks: Record<string, { position: Vec3; active: boolean }>;
  labels: Record<
    string,
    {
      anchor: Vec3;
      offset_tip: Vec3;
      headline: string;
      description: string;
      color_tag: string;
      visible: boolean;
    }
  >;
  sketches: Record<
    string,
    {
      color: [number, number, number];
      brush: string;
      points: Vec3[];
      closed: boolean;
      visible: boolean;
    }
  >;
  retired_sketch_ids: string[];
  student: {
    head: PoseJson;
    left_controller: PoseJson;
    right_controller: PoseJson;
    platform: PoseJson;
    mode: string;
    inspect_copy: { structure_id: string; local_offset: PoseJson } | null;
    beam_length: number;
    last_pose_ts: number;
    platform_ts: number;
  };
  teacher: {
    view: PoseJson;
    tool: string;
    annotations_shown: boolean;
    last_pose_ts: number;
  };
  next_id: number;
  applied_seq: Record<string, number>;
  applied_count: number;
}

// --- codec -------------------------------------------------------------------

export class ProtocolError extends Error {}

const CHANNELS = new Set(["control", "pose", "annotation"]);
const SENDERS = new Set(["teacher_host", "student_client", "console"]);
const CONTROL_TYPES = new Set(["hello", "welcome", "ping", "pong", "bye", "rejection"]);

export function envelopeToJson(e: Envelope): Record<string, unknown> {
  const { kind, ...rest } = e.payload as { kind: string } & Record<string, unknown>;
  let payload: Record<string, unknown>;
  if (kind === "unknown") {
    payload = (e.payload as { kind: "unknown"; raw: Record<string, unknown> }).raw;
  } else {
    payload = { kind, ...rest };
  }
  const out: Record<string, unknown> = {
    channel: e.channel,
    seq: e.seq,
    sender: e.sender,
    payload,
  };
  if (e.global_order !== undefined) out.global_order = e.global_order;
  return out;
}

function payloadFromJson(data: Record<string, unknown>): Payload {
  const kind = data.kind;
  const type = data.type as string | undefined;
  if (kind === "event" && type !== undefined && EVENT_TYPES.has(type)) {
    return data as unknown as Payload;
  }
  if (kind === "control" && type !== undefined && CONTROL_TYPES.has(type)) {
    return data as unknown as Payload;
  }
  return { kind: "unknown", raw: data };
}

export function envelopeFromJson(data: Record<string, unknown>): Envelope {
  const channel = data.channel as string;
  const sender = data.sender as string;
  if (!CHANNELS.has(channel)) throw new ProtocolError(`unknown channel ${channel}`);
  if (!SENDERS.has(sender)) throw new ProtocolError(`unknown sender ${sender}`);
  if (typeof data.seq !== "number") throw new ProtocolError("missing seq");
  if (typeof data.payload !== "object" || data.payload === null) {
    throw new ProtocolError("missing payload");
  }
  const e: Envelope = {
    channel: channel as Channel,
    seq: data.seq,
    sender: sender as Sender,
    payload: payloadFromJson(data.payload as Record<string, unknown>),
  };
  if (typeof data.global_order === "number") e.global_order = data.global_order;
  return e;
}

export function encode(e: Envelope): string {
  return JSON.stringify(envelopeToJson(e));
}

export function decode(text: string): Envelope {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new ProtocolError(`undecodable envelope: ${err}`);
  }
  if (typeof doc !== "object" || doc === null) throw new ProtocolError("envelope is not an object");
  return envelopeFromJson(doc as Record<string, unknown>);
}
