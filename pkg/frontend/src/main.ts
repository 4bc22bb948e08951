/** Browser entry point: wires the connection, viewer, tools and panels. */

import { connect, type ConsoleConnection } from "./connection.js";
import type { Vec3 } from "./math.js";
import { parseObj, pickPoint, rayFromPixel, type PickMesh } from "./pick.js";
import { ToolController, type Tool } from "./tools.js";
import { ConsoleViewer } from "./viewer.js";

const SERVER = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/`;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function fetchScene(): Promise<PickMesh> {
  const resp = await fetch("/scene/mesh.obj");
  if (!resp.ok) throw new Error(`scene mesh unavailable (${resp.status})`);
  return parseObj(await resp.text());
}

function showToast(text: string): void {
  const box = el<HTMLDivElement>("toasts");
  const toast = document.createElement("div");
  toast.className = "toast";
  toast.textContent = text;
  box.appendChild(toast);
  setTimeout(() => toast.remove(), 4000);
}

async function start(): Promise<void> {
  const canvas = el<HTMLCanvasElement>("view");
  const studentCanvas = el<HTMLCanvasElement>("student-view");
  const banner = el<HTMLDivElement>("banner");
  const viewer = new ConsoleViewer(canvas, studentCanvas);

  let mesh: PickMesh | null = null;
  try {
    mesh = await fetchScene();
    viewer.setSceneMesh(mesh.vertices, mesh.triangles);
  } catch (err) {
    showToast(`scene assets missing: ${err}`);
  }

  const conn: ConsoleConnection = connect(SERVER, {
    onStatus: (status, detail) => {
      banner.hidden = status !== "error";
      banner.textContent = detail;
      el<HTMLSpanElement>("status").textContent = status;
    },
    onToast: (toast) => showToast(`rejected: ${toast.reason} (${toast.channel}#${toast.seq})`),
  });
  const tools = new ToolController((env) => conn.send(env));

  // toolbar
  for (const tool of ["none", "landmark", "sketch", "label", "reposition"] as Tool[]) {
    el<HTMLButtonElement>(`tool-${tool}`).addEventListener("click", () => {
      tools.setTool(tool);
      el<HTMLSpanElement>("active-tool").textContent = tool;
    });
  }
  el<HTMLButtonElement>("toggle-annotations").addEventListener("click", () => {
    tools.visibilityToggle("all", !conn.view.annotationsShown);
  });
  el<HTMLButtonElement>("focus-student").addEventListener("click", () => {
    viewer.focusOnStudent(conn.view);
  });

  // label form panel (the third step of the label workflow)
  const labelForm = el<HTMLFormElement>("label-form");
  labelForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const id = el<HTMLInputElement>("label-id").value;
    tools.labelSubmit(
      id,
      el<HTMLInputElement>("label-headline").value,
      el<HTMLTextAreaElement>("label-description").value,
      el<HTMLSelectElement>("label-color").value as "red" | "blue" | "yellow" | "none",
    );
    labelForm.hidden = true;
  });

  // pointer interaction on the 3D view
  let dragging = false;
  let repositionTarget: Vec3 | null = null;
  canvas.addEventListener("pointerdown", (ev) => {
    if (!mesh) return;
    const cam = viewer.pickCamera(canvas.clientWidth, canvas.clientHeight);
    const pick = pickPoint(mesh, rayFromPixel(cam, ev.offsetX, ev.offsetY));
    switch (tools.activeTool) {
      case "landmark":
        if (pick.onSurface) tools.landmarkClick(pick.point);
        break;
      case "sketch":
        tools.sketchDown([1, 0, 0], "small");
        tools.sketchMove(pick.point);
        dragging = true;
        break;
      case "label":
        if (pick.onSurface) {
          tools.labelAnchor(pick.point, pick.normal);
          labelForm.hidden = false;
        }
        break;
      case "reposition":
        dragging = true;
        break;
      default: {
        // orbit drag
        dragging = true;
      }
    }
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!dragging || !mesh) return;
    const cam = viewer.pickCamera(canvas.clientWidth, canvas.clientHeight);
    const pick = pickPoint(mesh, rayFromPixel(cam, ev.offsetX, ev.offsetY));
    if (tools.activeTool === "sketch") {
      tools.sketchMove(pick.point);
    } else if (tools.activeTool === "reposition") {
      repositionTarget = pick.onSurface ? pick.point : null;
    } else {
      viewer.orbit.yaw -= ev.movementX * 0.005;
      viewer.orbit.pitch += ev.movementY * 0.005;
    }
  });
  canvas.addEventListener("pointerup", () => {
    if (tools.activeTool === "sketch") tools.sketchUp();
    if (tools.activeTool === "reposition" && repositionTarget) {
      tools.repositionDrop(repositionTarget, conn.view.studentHead.lastTimestampMs);
      repositionTarget = null;
    }
    dragging = false;
  });
  canvas.addEventListener("wheel", (ev) => {
    viewer.orbit.distance = Math.min(Math.max(viewer.orbit.distance + ev.deltaY * 0.01, 1), 50);
  });

  const loop = (): void => {
    viewer.render(conn.view, performance.now());
    requestAnimationFrame(loop);
  };
  loop();
}

start().catch((err) => showToast(String(err)));
