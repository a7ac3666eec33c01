// Canvas renderer for the dashboard panel: chart grid, legend, shoebox
// strip, proxy shadows with magnifier and lock icon, and the effect
// animations (flip highlight, fly-to-shoebox, corner badges).

import {
  CHARTS_V_MAX,
  LEGEND_V_MAX,
  SHOEBOX_V_MIN,
  cellOf,
  cellRect,
  gridCells,
  chartKey,
} from "./layout.js";
import type { ChartDoc } from "./protocol.js";
import type { UiStore } from "./store.js";

function colorOf(store: UiStore, building: string): string {
  const entry = store.render?.legend.find((e) => e.building === building);
  return entry?.color ?? "#777777";
}

function drawSeriesChart(
  ctx: CanvasRenderingContext2D,
  cd: ChartDoc,
  x: number,
  y: number,
  w: number,
  h: number,
  store: UiStore,
  dimmed: Set<string>,
): void {
  let top = -Infinity;
  for (const s of cd.series)
    for (const [, v] of s.buckets) top = Math.max(top, v);
  if (top <= 0) top = 1;
  for (const s of cd.series) {
    const n = s.buckets.length;
    if (n === 0) continue;
    ctx.strokeStyle = colorOf(store, s.building);
    ctx.globalAlpha = dimmed.has(s.building) ? 0.15 : 1.0;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.buckets.forEach(([, v], i) => {
      const px = x + (n === 1 ? 0.5 : i / (n - 1)) * w;
      const py = y + h - (v / top) * h;
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
    ctx.globalAlpha = 1.0;
  }
}

function drawHistogram(
  ctx: CanvasRenderingContext2D,
  cd: ChartDoc,
  x: number,
  y: number,
  w: number,
  h: number,
): void {
  const bins = cd.histogram ?? [];
  const top = Math.max(1, ...bins.map((b) => b[2]));
  const bw = w / Math.max(bins.length, 1);
  ctx.fillStyle = "#8899aa";
  bins.forEach(([, , count], i) => {
    const bh = (count / top) * h;
    ctx.fillRect(x + i * bw + 1, y + h - bh, bw - 2, bh);
  });
}

export class DashboardView {
  constructor(readonly canvas: HTMLCanvasElement) {}

  draw(store: UiStore, now: number): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const W = this.canvas.width;
    const H = this.canvas.height;
    ctx.clearRect(0, 0, W, H);
    ctx.fillStyle = "#141821";
    ctx.fillRect(0, 0, W, H);

    const dimmed = store.dimmedBuildings();
    const effects = store.activeEffects(now);
    const charts = store.chartsForGrid();
    const secondary = store.state.secondary;

    const byKey = new Map<string, ChartDoc>();
    for (const cd of charts) byKey.set(cd.period ?? cd.chart, cd);

    ctx.font = "11px sans-serif";
    if (secondary === null) {
      for (const cell of gridCells()) {
        const key = chartKey(cell.row, cell.col);
        const cd = charts.find((c) => c.chart === key && c.period === null);
        this.drawCell(ctx, store, cd, key, cell.row, cell.col, W, H, dimmed,
          effects, now);
      }
    } else {
      // Drill-down: sub-charts tile the chart region chronologically.
      const n = Math.max(charts.length, 1);
      const cols = Math.min(n, 4);
      const rows = Math.max(Math.ceil(n / cols), 1);
      charts.forEach((cd, i) => {
        const col = i % cols;
        const row = Math.floor(i / cols);
        const x = (col / cols) * W;
        const y = ((row / rows) * CHARTS_V_MAX) * H;
        const w = W / cols;
        const h = (CHARTS_V_MAX / rows) * H;
        ctx.strokeStyle = "#2a3242";
        ctx.strokeRect(x, y, w, h);
        ctx.fillStyle = "#c8d0dd";
        ctx.fillText(`${cd.chart} ${cd.period ?? ""}`, x + 6, y + 14);
        drawSeriesChart(ctx, cd, x + 8, y + 20, w - 16, h - 28, store, dimmed);
      });
    }

    this.drawLegend(ctx, store, W, H);
    this.drawShoebox(ctx, store, W, H);
    this.drawShadows(ctx, store, W, H);
    this.drawEffects(ctx, store, effects, now, W, H);
    this.drawLockIcon(ctx, store, W, H);
  }

  private drawCell(
    ctx: CanvasRenderingContext2D,
    store: UiStore,
    cd: ChartDoc | undefined,
    key: string,
    row: number,
    col: number,
    W: number,
    H: number,
    dimmed: Set<string>,
    effects: { effect: string; chart?: string; startedAt: number; duration: number }[],
    now: number,
  ): void {
    const r = cellRect({ row, col });
    const x = r.u * W;
    const y = r.v * H;
    const w = r.w * W;
    const h = r.h * H;
    ctx.strokeStyle = store.state.highlight === key ? "#ffd166" : "#2a3242";
    ctx.lineWidth = store.state.highlight === key ? 2 : 1;
    ctx.strokeRect(x + 2, y + 2, w - 4, h - 4);
    ctx.fillStyle = "#c8d0dd";
    ctx.fillText(key, x + 8, y + 16);

    // Flip-highlight animation: a vertical squeeze suggesting the flip
    // gesture that files the chart into the shoebox.
    const flip = effects.find(
      (e) => e.effect === "highlight_chart" && e.chart === key,
    );
    if (flip) {
      const phase = (now - flip.startedAt) / flip.duration;
      const squeeze = Math.abs(Math.cos(phase * Math.PI * 2));
      ctx.save();
      ctx.translate(0, y + h / 2);
      ctx.scale(1, Math.max(squeeze, 0.05));
      ctx.translate(0, -(y + h / 2));
      ctx.strokeStyle = "#ffd166";
      ctx.lineWidth = 3;
      ctx.strokeRect(x + 4, y + 4, w - 8, h - 8);
      ctx.restore();
    }

    if (cd) {
      if (cd.histogram !== null) drawHistogram(ctx, cd, x + 8, y + 24, w - 16, h - 34);
      else drawSeriesChart(ctx, cd, x + 8, y + 24, w - 16, h - 34, store, dimmed);
    }

    // Corner badges: one small building-colored square per bookmarking
    // building, in the top-right corner.
    const badge = store.badges().get(key) ?? [];
    badge.forEach((building, i) => {
      ctx.fillStyle = colorOf(store, building);
      ctx.fillRect(x + w - 16 - i * 12, y + 6, 9, 9);
      ctx.strokeStyle = "#0c0e14";
      ctx.strokeRect(x + w - 16 - i * 12, y + 6, 9, 9);
    });
  }

  private drawLegend(
    ctx: CanvasRenderingContext2D,
    store: UiStore,
    W: number,
    H: number,
  ): void {
    const y = CHARTS_V_MAX * H;
    const h = (LEGEND_V_MAX - CHARTS_V_MAX) * H;
    ctx.fillStyle = "#10131b";
    ctx.fillRect(0, y, W, h);
    const legend = store.render?.legend ?? [];
    const showFor = store
      .activeEffects(performance?.now?.() ?? 0)
      .find((e) => e.effect === "show_shoebox_for");
    legend.forEach((entry, i) => {
      const x = 12 + i * (W / Math.max(legend.length, 1));
      const hot = entry.highlighted || showFor?.building === entry.building;
      ctx.globalAlpha = store.dimmedBuildings().has(entry.building) ? 0.3 : 1;
      ctx.fillStyle = entry.color;
      ctx.fillRect(x, y + h / 2 - 6, 12, 12);
      ctx.fillStyle = hot ? "#ffffff" : "#9aa4b2";
      ctx.font = hot ? "bold 12px sans-serif" : "12px sans-serif";
      ctx.fillText(`${entry.building} ${entry.name}`, x + 18, y + h / 2 + 4);
      ctx.globalAlpha = 1;
    });
    ctx.font = "11px sans-serif";
  }

  private drawShoebox(
    ctx: CanvasRenderingContext2D,
    store: UiStore,
    W: number,
    H: number,
  ): void {
    const y = SHOEBOX_V_MIN * H;
    const h = (1 - SHOEBOX_V_MIN) * H;
    ctx.fillStyle = "#1a1f2b";
    ctx.fillRect(0, y, W, h);
    ctx.fillStyle = "#9aa4b2";
    ctx.fillText("shoebox", 8, y + 14);
    let x = 80;
    for (const group of store.shoeboxGroups()) {
      ctx.fillStyle = colorOf(store, group.building);
      ctx.fillText(`${group.building} (${group.charts.length})`, x, y + 14);
      group.charts.forEach((chart, i) => {
        ctx.fillStyle = colorOf(store, group.building);
        ctx.fillRect(x + i * 18, y + 20, 14, Math.max(h - 28, 8));
        ctx.fillStyle = "#0c0e14";
        ctx.font = "8px sans-serif";
        ctx.fillText(chart.split(":")[1].slice(0, 3), x + i * 18 + 1, y + 30);
        ctx.font = "11px sans-serif";
      });
      x += Math.max(group.charts.length * 18 + 30, 70);
    }
  }

  private drawShadows(
    ctx: CanvasRenderingContext2D,
    store: UiStore,
    W: number,
    H: number,
  ): void {
    for (const shadow of store.render?.shadows ?? []) {
      if (!shadow.screen_point) continue;
      const [u, v] = shadow.screen_point;
      const x = u * W;
      const y = v * H;
      const scale = shadow.magnifier_scale ?? 1;
      ctx.globalAlpha = 0.5;
      if (shadow.footprint.length >= 3) {
        // Building silhouette, normalized to a ~40 px box.
        const xs = shadow.footprint.map((p) => p[0]);
        const ys = shadow.footprint.map((p) => p[1]);
        const span = Math.max(
          Math.max(...xs) - Math.min(...xs),
          Math.max(...ys) - Math.min(...ys),
          1e-6,
        );
        const k = 40 / span;
        ctx.fillStyle = "#d9e2ef";
        ctx.beginPath();
        shadow.footprint.forEach(([fx, fy], i) => {
          const px = x + (fx - xs[0]) * k - 20;
          const py = y + (fy - ys[0]) * k - 20;
          if (i === 0) ctx.moveTo(px, py);
          else ctx.lineTo(px, py);
        });
        ctx.closePath();
        ctx.fill();
      }
      // Magnifier icon, radius driven by proximity.
      ctx.globalAlpha = 0.9;
      ctx.strokeStyle = "#d9e2ef";
      ctx.lineWidth = 2;
      const r = 7 * scale;
      ctx.beginPath();
      ctx.arc(x, y, r, 0, Math.PI * 2);
      ctx.stroke();
      ctx.beginPath();
      ctx.moveTo(x + r * 0.7, y + r * 0.7);
      ctx.lineTo(x + r * 1.4, y + r * 1.4);
      ctx.stroke();
      ctx.globalAlpha = 1;
    }
  }

  private drawEffects(
    ctx: CanvasRenderingContext2D,
    store: UiStore,
    effects: { effect: string; chart?: string; startedAt: number; duration: number }[],
    now: number,
    W: number,
    H: number,
  ): void {
    for (const e of effects) {
      if (e.effect !== "shoebox_fly" || !e.chart) continue;
      const cell = cellOf(e.chart);
      if (!cell) continue;
      const r = cellRect(cell);
      const phase = Math.min((now - e.startedAt) / e.duration, 1);
      const x0 = (r.u + r.w / 2) * W;
      const y0 = (r.v + r.h / 2) * H;
      const x1 = W / 2;
      const y1 = (SHOEBOX_V_MIN + 0.07) * H;
      const x = x0 + (x1 - x0) * phase;
      const y = y0 + (y1 - y0) * phase;
      const k = 1 - phase * 0.8;
      ctx.strokeStyle = "#ffd166";
      ctx.lineWidth = 2;
      ctx.strokeRect(x - (r.w * W * k) / 2, y - (r.h * H * k) / 2,
        r.w * W * k, r.h * H * k);
    }
  }

  private drawLockIcon(
    ctx: CanvasRenderingContext2D,
    store: UiStore,
    W: number,
    H: number,
  ): void {
    const locked = store.state.locked;
    const x = W - 34;
    const y = 10;
    ctx.strokeStyle = locked ? "#ffd166" : "#5b6576";
    ctx.lineWidth = 2;
    ctx.strokeRect(x, y + 8, 20, 14);
    ctx.beginPath();
    ctx.arc(x + 10, y + 8, 7, Math.PI, locked ? 2 * Math.PI : 1.6 * Math.PI);
    ctx.stroke();
    // Directional arrow hinting the lock/unlock rotation.
    ctx.beginPath();
    const cx = x - 16;
    const cy = y + 15;
    ctx.arc(cx, cy, 8, 0.3, Math.PI * (locked ? 1.4 : -0.6), !locked);
    ctx.stroke();
    ctx.beginPath();
    const tip = locked ? Math.PI * 1.4 : Math.PI * -0.6;
    ctx.moveTo(cx + 8 * Math.cos(tip), cy + 8 * Math.sin(tip));
    ctx.lineTo(cx + 8 * Math.cos(tip) + 4, cy + 8 * Math.sin(tip) + 2);
    ctx.stroke();
  }
}
