/** Tool interactions: every console gesture maps to a documented event
 * sequence. Tools only *emit* envelopes — rendering happens when the host
 * echoes the event back (render-on-echo), so a rejected gesture changes
 * nothing locally. */

import type { Vec3 } from "./math.js";
import type { Channel, Envelope, SessionEvent } from "./protocol.js";

export type Tool = "none" | "landmark" | "sketch" | "label" | "reposition";

export const SKETCH_BATCH = 8; // drag samples per SketchAppend

export class ToolController {
  activeTool: Tool = "none";

  private seqs: Record<Channel, number> = { control: 0, pose: 0, annotation: 0 };
  private sketchCounter = 0;
  private currentSketchId: string | null = null;
  private sketchBuffer: Vec3[] = [];
  private emit: (env: Envelope) => void;

  constructor(emit: (env: Envelope) => void) {
    this.emit = emit;
  }

  setTool(tool: Tool): void {
    if (this.currentSketchId !== null) this.sketchUp(); // never leave a stroke open
    this.activeTool = tool;
  }

  private send(event: SessionEvent, channel: Channel = "annotation"): void {
    this.emit({
      channel,
      seq: this.seqs[channel]++,
      sender: "console",
      payload: { kind: "event", ...event },
    });
  }

  /** Landmark tool: one click on the surface places one landmark. */
  landmarkClick(surfacePoint: Vec3): void {
    this.send({ type: "landmark_place", position: surfacePoint });
  }

  /** Sketch tool: a drag is one stroke — begin, batched appends, end. */
  sketchDown(color: [number, number, number], brush: "small" | "large"): string {
    if (this.currentSketchId !== null) this.sketchUp();
    this.currentSketchId = `console-${++this.sketchCounter}-${Date.now().toString(36)}`;
    this.sketchBuffer = [];
    this.send({ type: "sketch_begin", sketch_id: this.currentSketchId, color, brush });
    return this.currentSketchId;
  }

  sketchMove(point: Vec3): void {
    if (this.currentSketchId === null) return;
    this.sketchBuffer.push(point);
    if (this.sketchBuffer.length >= SKETCH_BATCH) this.flushSketch();
  }

  sketchUp(): void {
    if (this.currentSketchId === null) return;
    this.flushSketch();
    this.send({ type: "sketch_end", sketch_id: this.currentSketchId });
    this.currentSketchId = null;
  }

  private flushSketch(): void {
    if (this.currentSketchId !== null && this.sketchBuffer.length > 0) {
      this.send({ type: "sketch_append", sketch_id: this.currentSketchId, points: this.sketchBuffer });
      this.sketchBuffer = [];
    }
  }

  /** Label tool, step 1: click the anchor point on the surface. */
  labelAnchor(surfacePoint: Vec3, surfaceNormal: Vec3): void {
    this.send({ type: "label_create", anchor: surfacePoint, normal: surfaceNormal });
  }

  /** Label tool, step 2: drag the leader-line tip of an existing label. */
  labelDragTip(labelId: string, tip: Vec3): void {
    this.send({ type: "label_drag", label_id: labelId, offset_tip: tip });
  }

  /** Label tool, step 3: submit the text form. */
  labelSubmit(
    labelId: string,
    headline: string,
    description: string,
    colorTag: "red" | "blue" | "yellow" | "none",
  ): void {
    this.send({
      type: "label_edit",
      label_id: labelId,
      headline,
      description,
      color_tag: colorTag,
    });
  }

  deleteSketch(sketchId: string): void {
    this.send({ type: "sketch_delete", sketch_id: sketchId });
  }

  /** Reposition: drag the avatar, drop at the target. Only the drop emits
   * an event — intermediate drag positions never reach the wire, matching
   * the discrete-jump contract. timestampMs is the student's latest pose
   * clock so the jump wins against in-flight poses. */
  repositionDrop(target: Vec3, timestampMs: number): void {
    this.send({ type: "reposition_command", target, timestamp_ms: timestampMs });
  }

  visibilityToggle(scope: string, visible: boolean): void {
    this.send({ type: "visibility_set", scope, visible });
  }
}
