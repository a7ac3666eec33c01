// Canvas renderer for the tabletop panel: the projected map, park
// targets, carriers (interpolated between hub pose updates) and the
// held proxies under the pointer.

import type { ScenarioDoc } from "./store.js";
import type { UiStore } from "./store.js";
import type { PoseEmitter } from "./input.js";

const EARTH_RADIUS_M = 6_371_000.0;

export function geoToTable(
  scenario: ScenarioDoc,
  lat: number,
  lon: number,
): [number, number] {
  const vp = scenario.viewport;
  const lat0 = (vp.center[0] * Math.PI) / 180;
  const east =
    EARTH_RADIUS_M * Math.cos(lat0) * (((lon - vp.center[1]) * Math.PI) / 180);
  const north = EARTH_RADIUS_M * (((lat - vp.center[0]) * Math.PI) / 180);
  const ex = east / vp.zoom_level;
  const ny = north / vp.zoom_level;
  const c = Math.cos(vp.rotation);
  const s = Math.sin(vp.rotation);
  return [
    scenario.workspace.width / 2 + c * ex - s * ny,
    scenario.workspace.height / 2 + s * ex + c * ny,
  ];
}

export class TabletopView {
  constructor(readonly canvas: HTMLCanvasElement) {}

  /** Table meters -> canvas pixels (y flipped: north up on screen). */
  toPixels(scenario: ScenarioDoc, x: number, y: number): [number, number] {
    const kx = this.canvas.width / scenario.workspace.width;
    const ky = this.canvas.height / scenario.workspace.height;
    return [x * kx, this.canvas.height - y * ky];
  }

  fromPixels(scenario: ScenarioDoc, px: number, py: number): [number, number] {
    const kx = this.canvas.width / scenario.workspace.width;
    const ky = this.canvas.height / scenario.workspace.height;
    return [px / kx, (this.canvas.height - py) / ky];
  }

  draw(store: UiStore, emitter: PoseEmitter, now = 0): void {
    const ctx = this.canvas.getContext("2d");
    const scenario = store.scenario;
    if (!ctx || !scenario) return;
    const W = this.canvas.width;
    const H = this.canvas.height;
    ctx.clearRect(0, 0, W, H);
    ctx.fillStyle = "#10241a";
    ctx.fillRect(0, 0, W, H);

    // Safety margin band.
    const m = scenario.workspace.safety_margin;
    const [mx, my] = this.toPixels(scenario, m, scenario.workspace.height - m);
    const [mx2, my2] = this.toPixels(scenario, scenario.workspace.width - m, m);
    ctx.strokeStyle = "#3c5a46";
    ctx.setLineDash([6, 4]);
    ctx.strokeRect(mx, my, mx2 - mx, my2 - my);
    ctx.setLineDash([]);

    // Building anchors: footprint silhouettes at their projected spots.
    for (const building of scenario.buildings) {
      const [bx, by] = geoToTable(scenario, ...building.geo_anchor);
      const [px, py] = this.toPixels(scenario, bx, by);
      ctx.fillStyle = building.color + "55";
      ctx.strokeStyle = building.color;
      const span = Math.max(
        ...building.footprint.map((p) => Math.abs(p[0])),
        ...building.footprint.map((p) => Math.abs(p[1])),
        1,
      );
      const k = 18 / span;
      ctx.beginPath();
      building.footprint.forEach(([fx, fy], i) => {
        const qx = px + fx * k - 9;
        const qy = py - fy * k + 9;
        if (i === 0) ctx.moveTo(qx, qy);
        else ctx.lineTo(qx, qy);
      });
      ctx.closePath();
      ctx.fill();
      ctx.stroke();
      ctx.fillStyle = "#cfe3d6";
      ctx.font = "10px sans-serif";
      ctx.fillText(building.name, px - 20, py + 26);
    }

    // Carriers at hub-reported poses; held proxies under the pointer.
    const radiusPx =
      (0.05 * W) / scenario.workspace.width; // carrier radius 5 cm
    for (const [proxy, building] of Object.entries(scenario.bindings)) {
      const input = emitter.proxies.get(proxy);
      const heldByUser = input?.held() ?? false;
      const pose = heldByUser
        ? [input!.pose.x, input!.pose.y, input!.pose.yaw]
        : store.robotPoseAt(proxy, now);
      if (!pose) continue;
      const [px, py] = this.toPixels(scenario, pose[0], pose[1]);
      const color =
        scenario.buildings.find((b) => b.id === building)?.color ?? "#888888";
      ctx.globalAlpha = heldByUser ? 0.65 : 1.0;
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.arc(px, py, heldByUser ? radiusPx * 1.25 : radiusPx, 0, Math.PI * 2);
      ctx.fill();
      ctx.strokeStyle = "#0c0e14";
      ctx.stroke();
      // Heading tick.
      ctx.beginPath();
      ctx.moveTo(px, py);
      ctx.lineTo(
        px + radiusPx * Math.cos(-pose[2]),
        py + radiusPx * Math.sin(-pose[2]),
      );
      ctx.stroke();
      ctx.globalAlpha = 1;
      ctx.fillStyle = "#e8eef5";
      ctx.font = "bold 10px sans-serif";
      ctx.fillText(proxy, px - 7, py + 3);
    }
  }

  /** Proxy under a canvas point, for drag starts. */
  pick(store: UiStore, emitter: PoseEmitter, px: number, py: number):
      string | null {
    const scenario = store.scenario;
    if (!scenario) return null;
    const [tx, ty] = this.fromPixels(scenario, px, py);
    let best: string | null = null;
    let bestDist = 0.06; // grab radius in table meters
    for (const proxy of Object.keys(scenario.bindings)) {
      const input = emitter.proxies.get(proxy);
      const pose = input?.held()
        ? [input.pose.x, input.pose.y]
        : store.robots[proxy];
      if (!pose) continue;
      const d = Math.hypot(pose[0] - tx, pose[1] - ty);
      if (d < bestDist) {
        best = proxy;
        bestDist = d;
      }
    }
    return best;
  }
}
