// Entry point: wires the store, the two canvases, the input mapper and
// the hub connections together.

import { HubConnection } from "./connection.js";
import { DashboardView } from "./dashboard.js";
import { PoseEmitter } from "./input.js";
import { TabletopView } from "./tabletop.js";
import { UiStore } from "./store.js";

const params = new URLSearchParams(location.search);
const hubUrl = params.get("hub") ?? `ws://${location.hostname}:8765`;

const store = new UiStore();
const emitter = new PoseEmitter("ui");

const tabletopCanvas = document.getElementById("tabletop") as HTMLCanvasElement;
const dashboardCanvas = document.getElementById("dashboard") as HTMLCanvasElement;
const statusLine = document.getElementById("status") as HTMLElement;
const liftSlider = document.getElementById("lift") as HTMLInputElement;

const tabletopView = new TabletopView(tabletopCanvas);
const dashboardView = new DashboardView(dashboardCanvas);

let snapshotRequestedAt = 0;

const dashboardConn = new HubConnection(
  hubUrl,
  "dashboard",
  "ui-dash",
  (env) => store.apply(env, performance.now()),
  () => {
    // Reconnect path: resynchronize from scratch.
    store.snapshotStale = true;
    statusLine.textContent = "connected";
  },
);
const tabletopConn = new HubConnection(
  hubUrl,
  "tabletop",
  "ui-table",
  (env) => {
    if (env.kind === "pose_update") store.apply(env, performance.now());
  },
);
const trackerConn = new HubConnection(hubUrl, "tracker", "ui-hand", () => {});

// -- input ----------------------------------------------------------------

let activeProxy: string | null = null;
let dragging = false;

tabletopCanvas.addEventListener("pointerdown", (e) => {
  const rect = tabletopCanvas.getBoundingClientRect();
  const px = ((e.clientX - rect.left) / rect.width) * tabletopCanvas.width;
  const py = ((e.clientY - rect.top) / rect.height) * tabletopCanvas.height;
  const proxy = tabletopView.pick(store, emitter, px, py);
  if (!proxy || !store.scenario) return;
  activeProxy = proxy;
  dragging = true;
  const pose = store.robots[proxy];
  const input = emitter.proxy(proxy, pose
    ? { x: pose[0], y: pose[1], yaw: pose[2] }
    : {});
  if (!input.held() && pose) {
    input.moveTo(pose[0], pose[1]);
    input.pose.yaw = pose[2];
  }
  input.touched = true;
  tabletopCanvas.setPointerCapture(e.pointerId);
  statusLine.textContent = `holding ${proxy} - Space lifts, Q/E rotate, F pitches`;
});

tabletopCanvas.addEventListener("pointermove", (e) => {
  if (!dragging || !activeProxy || !store.scenario) return;
  const rect = tabletopCanvas.getBoundingClientRect();
  const px = ((e.clientX - rect.left) / rect.width) * tabletopCanvas.width;
  const py = ((e.clientY - rect.top) / rect.height) * tabletopCanvas.height;
  const [tx, ty] = tabletopView.fromPixels(store.scenario, px, py);
  emitter.proxy(activeProxy).moveTo(tx, ty);
});

tabletopCanvas.addEventListener("pointerup", () => {
  dragging = false;
});

window.addEventListener("keydown", (e) => {
  if (!activeProxy) return;
  const input = emitter.proxy(activeProxy);
  if (e.code === "Space") {
    input.setLifting(true);
    e.preventDefault();
  } else if (e.code === "KeyF") {
    input.setPitching(true);
  } else if (e.code === "KeyQ") {
    input.adjustYaw(+0.12); // counterclockwise
  } else if (e.code === "KeyE") {
    input.adjustYaw(-0.12); // clockwise
  }
});

window.addEventListener("keyup", (e) => {
  if (!activeProxy) return;
  const input = emitter.proxy(activeProxy);
  if (e.code === "Space") input.setLifting(false);
  if (e.code === "KeyF") input.setPitching(false);
});

liftSlider.addEventListener("input", () => {
  if (!activeProxy) return;
  emitter.proxy(activeProxy).setLiftFraction(Number(liftSlider.value) / 100);
});

// Map pan / zoom emit viewport changes; the controller replans carriers.
function sendViewport(dlat: number, dlon: number, zoomFactor: number): void {
  const scenario = store.scenario;
  if (!scenario) return;
  const vp = scenario.viewport;
  const next = {
    center: [vp.center[0] + dlat, vp.center[1] + dlon] as [number, number],
    zoom_level: vp.zoom_level * zoomFactor,
    rotation: vp.rotation,
  };
  scenario.viewport = next; // optimistic; snapshot refresh follows
  tabletopConn.send("viewport_change", {
    center: next.center,
    zoom_level: next.zoom_level,
    rotation: next.rotation,
  });
  store.snapshotStale = true;
}

const PAN_DEG = 20 / 111_000;
(document.getElementById("pan-n") as HTMLElement).onclick = () =>
  sendViewport(+PAN_DEG, 0, 1);
(document.getElementById("pan-s") as HTMLElement).onclick = () =>
  sendViewport(-PAN_DEG, 0, 1);
(document.getElementById("pan-w") as HTMLElement).onclick = () =>
  sendViewport(0, -PAN_DEG, 1);
(document.getElementById("pan-e") as HTMLElement).onclick = () =>
  sendViewport(0, +PAN_DEG, 1);
(document.getElementById("zoom-in") as HTMLElement).onclick = () =>
  sendViewport(0, 0, 1 / 1.15);
(document.getElementById("zoom-out") as HTMLElement).onclick = () =>
  sendViewport(0, 0, 1.15);

// -- the loop ----------------------------------------------------------------

function frame(now: number): void {
  for (const env of emitter.tick(now)) trackerConn.sendEnvelope(env);
  if (store.snapshotStale && now - snapshotRequestedAt > 300) {
    snapshotRequestedAt = now;
    dashboardConn.send("snapshot_request", {});
  }
  const active = activeProxy ? emitter.proxy(activeProxy) : null;
  if (active) liftSlider.value = String((active.pose.z / 0.12) * 100);
  tabletopView.draw(store, emitter, now);
  dashboardView.draw(store, now);
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
