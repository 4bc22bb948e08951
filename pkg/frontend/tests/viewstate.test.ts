import { describe, expect, it } from "vitest";
import type { Envelope, SessionEvent } from "../src/protocol.js";
import { AvatarInterpolator, ConsoleViewState } from "../src/viewstate.js";

let order = 0;
function env(event: SessionEvent, sender: "console" | "teacher_host" | "student_client" = "console"): Envelope {
  return {
    channel: event.type === "pose_update" ? "pose" : "annotation",
    seq: order,
    sender,
    payload: { kind: "event", ...event },
    global_order: order++,
  };
}

describe("ConsoleViewState", () => {
  it("tracks landmarks with single-active semantics and host id assignment", () => {
    const view = new ConsoleViewState();
    view.applyEnvelope(env({ type: "landmark_place", position: [1, 2, 3] }));
    view.applyEnvelope(env({ type: "landmark_place", position: [4, 5, 6] }));
    expect([...view.landmarks.keys()]).toEqual(["1", "2"]);
    expect(view.landmarks.get("1")!.active).toBe(false);
    expect(view.landmarks.get("2")!.active).toBe(true);
  });

  it("decimates sketch jitter exactly like the host", () => {
    const view = new ConsoleViewState();
    view.applyEnvelope(env({ type: "sketch_begin", sketch_id: "s", color: [1, 0, 0], brush: "small" }));
    view.applyEnvelope(
      env({
        type: "sketch_append",
        sketch_id: "s",
        points: [
          [0, 0, 0],
          [0, 0, 0.0005], // below the 1 mm decimation threshold
          [0, 0, 0.002],
        ],
      }),
    );
    expect(view.sketches.get("s")!.points).toEqual([
      [0, 0, 0],
      [0, 0, 0.002],
    ]);
  });

  it("retires deleted sketch ids and keeps labels editable", () => {
    const view = new ConsoleViewState();
    view.applyEnvelope(env({ type: "sketch_begin", sketch_id: "s", color: [1, 0, 0], brush: "small" }));
    view.applyEnvelope(env({ type: "sketch_delete", sketch_id: "s" }));
    expect(view.sketches.size).toBe(0);
    view.applyEnvelope(env({ type: "sketch_begin", sketch_id: "s", color: [1, 0, 0], brush: "small" }));
    expect(view.sketches.size).toBe(0); // id reuse refused, mirroring the host

    view.applyEnvelope(env({ type: "label_create", anchor: [0, 0, 0], normal: [0, 2, 0] }));
    const label = [...view.labels.values()][0];
    expect(label.offset_tip[1]).toBeCloseTo(0.2, 12); // default tip along the unit normal
    view.applyEnvelope(
      env({ type: "label_edit", label_id: label.id, headline: "h", description: "d", color_tag: "red" }),
    );
    expect(view.labels.get(label.id)!.headline).toBe("h");
  });

  it("ignores duplicate global orders (idempotent echo application)", () => {
    const view = new ConsoleViewState();
    const place = env({ type: "landmark_place", position: [1, 1, 1] });
    view.applyEnvelope(place);
    view.applyEnvelope(place);
    expect(view.landmarks.size).toBe(1);
  });

  it("applies discrete platform jumps without interpolation", () => {
    const view = new ConsoleViewState();
    view.applyEnvelope(env({ type: "teleport_commit", target: [2, 0, -3], timestamp_ms: 10 }, "student_client"));
    expect(view.studentPlatform.position).toEqual([2, 0, -3]);
    view.applyEnvelope(env({ type: "reposition_command", target: [5, 0, 5], timestamp_ms: 20 }));
    expect(view.studentPlatform.position).toEqual([5, 0, 5]);
  });
});

describe("AvatarInterpolator", () => {
  const pose = (x: number) => ({ position: [x, 0, 0] as [number, number, number], orientation: [0, 0, 0, 1] as [number, number, number, number] });

  it("interpolates between the last two poses", () => {
    const itp = new AvatarInterpolator();
    itp.push(pose(0), 100);
    itp.push(pose(1), 200);
    expect(itp.sample(150)!.position[0]).toBeCloseTo(0.5, 12);
  });

  it("never extrapolates beyond two frame intervals", () => {
    const itp = new AvatarInterpolator();
    itp.push(pose(0), 100);
    itp.push(pose(1), 200); // frame interval 100 ms
    // one frame past the newest pose: linear extrapolation continues
    expect(itp.sample(300)!.position[0]).toBeCloseTo(2.0, 12);
    // far in the future: clamped at two frames past the newest pose
    expect(itp.sample(100_000)!.position[0]).toBeCloseTo(3.0, 12);
  });

  it("drops out-of-order poses", () => {
    const itp = new AvatarInterpolator();
    itp.push(pose(5), 200);
    itp.push(pose(9), 100);
    expect(itp.sample(200)!.position[0]).toBe(5);
  });
});
