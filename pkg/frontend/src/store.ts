// Client-side session state. The store renders only what the hub
// delivered: snapshots carry the authoritative render model, state
// deltas update the dashboard state between snapshots, and effects are
// queued as short-lived animations. Unknown effect kinds are logged and
// skipped, never fatal.

import type {
  ChartDoc,
  EffectPayload,
  Envelope,
  RenderModelDoc,
  SnapshotPayload,
  StateDoc,
} from "./protocol.js";

export interface ScenarioDoc {
  id: string;
  workspace: {
    width: number;
    height: number;
    safety_margin: number;
    backdrop_edge: string;
  };
  viewport: { center: [number, number]; zoom_level: number; rotation: number };
  buildings: {
    id: string;
    name: string;
    color: string;
    geo_anchor: [number, number];
    footprint: [number, number][];
    home_yaw: number;
  }[];
  bindings: Record<string, string>;
}

export interface ActiveEffect {
  effect: string;
  chart?: string;
  building?: string;
  startedAt: number;
  duration: number;
}

const EFFECT_DURATION_MS: Record<string, number> = {
  highlight_chart: 900,
  shoebox_fly: 800,
  shoebox_badge: 400,
  dim_non_selected: 400,
  refresh_charts: 300,
  legend_highlight: 400,
  lock_icon: 700,
  show_shoebox_for: 2500,
};

export class UiStore {
  state: StateDoc = {
    filter: [],
    highlight: null,
    locked: false,
    near: [],
    secondary: null,
    shadows: [],
    shoebox: {},
  };
  render: RenderModelDoc | null = null;
  scenario: ScenarioDoc | null = null;
  robots: Record<string, [number, number, number]> = {};
  private robotPrev: Record<
    string,
    { from: [number, number, number]; to: [number, number, number]; at: number }
  > = {};
  effects: ActiveEffect[] = [];
  unknownEffects = 0;
  snapshotStale = true;
  connected = false;
  private warn: (msg: string) => void;

  constructor(warn: (msg: string) => void = (m) => console.warn(m)) {
    this.warn = warn;
  }

  apply(env: Envelope, now: number): void {
    switch (env.kind) {
      case "snapshot":
        this.applySnapshot(env.payload as unknown as SnapshotPayload);
        break;
      case "state_delta": {
        const doc = env.payload["state"] as StateDoc | undefined;
        if (doc) this.applyState(doc);
        break;
      }
      case "effects": {
        const list = (env.payload["effects"] as EffectPayload[]) ?? [];
        for (const effect of list) this.pushEffect(effect, now);
        break;
      }
      case "pose_update": {
        const p = env.payload as {
          proxy?: string;
          x?: number;
          y?: number;
          yaw?: number;
        };
        if (typeof p.proxy === "string") {
          const next: [number, number, number] = [p.x ?? 0, p.y ?? 0, p.yaw ?? 0];
          this.robotPrev[p.proxy] = {
            from: this.robots[p.proxy] ?? next,
            to: next,
            at: now,
          };
          this.robots[p.proxy] = next;
        }
        break;
      }
      default:
        break; // other kinds are not for us
    }
  }

  applySnapshot(snap: SnapshotPayload & { scenario?: ScenarioDoc }): void {
    this.state = snap.state;
    this.render = snap.render;
    this.robots = { ...snap.robots };
    if (snap.scenario) this.scenario = snap.scenario;
    this.snapshotStale = false;
  }

  applyState(doc: StateDoc): void {
    const layerChanged =
      doc.secondary !== this.state.secondary ||
      JSON.stringify(doc.filter) !== JSON.stringify(this.state.filter);
    this.state = doc;
    // Chart contents are computed hub-side; a layer or filter change
    // means the cached render model's charts are stale.
    if (layerChanged) this.snapshotStale = true;
  }

  pushEffect(effect: EffectPayload, now: number): void {
    const duration = EFFECT_DURATION_MS[effect.effect];
    if (duration === undefined) {
      this.unknownEffects += 1;
      this.warn(`unknown effect kind: ${effect.effect}`);
      return;
    }
    this.effects.push({
      effect: effect.effect,
      chart: effect.chart,
      building: effect.building,
      startedAt: now,
      duration,
    });
    if (effect.effect === "refresh_charts") this.snapshotStale = true;
  }

  activeEffects(now: number): ActiveEffect[] {
    this.effects = this.effects.filter((e) => now - e.startedAt < e.duration);
    return this.effects;
  }

  /** Carrier pose smoothed between hub updates (~50 ms apart). */
  robotPoseAt(proxy: string, now: number): [number, number, number] | null {
    const latest = this.robots[proxy];
    if (!latest) return null;
    const span = this.robotPrev[proxy];
    if (!span) return latest;
    const f = Math.min(Math.max((now - span.at) / 50, 0), 1);
    return [
      span.from[0] + (span.to[0] - span.from[0]) * f,
      span.from[1] + (span.to[1] - span.from[1]) * f,
      span.to[2],
    ];
  }

  /** Buildings drawn dimmed: everyone outside a non-empty filter. */
  dimmedBuildings(): Set<string> {
    if (this.state.filter.length === 0 || this.render === null)
      return new Set();
    const filtered = new Set(this.state.filter);
    return new Set(
      this.render.legend
        .map((e) => e.building)
        .filter((b) => !filtered.has(b)),
    );
  }

  /** Corner badges: chart key -> buildings that shoeboxed it. */
  badges(): Map<string, string[]> {
    const out = new Map<string, string[]>();
    for (const [building, charts] of Object.entries(this.state.shoebox)) {
      for (const chart of charts) {
        const list = out.get(chart) ?? [];
        list.push(building);
        out.set(chart, list);
      }
    }
    return out;
  }

  chartsForGrid(): ChartDoc[] {
    return this.render?.charts ?? [];
  }

  shoeboxGroups(): { building: string; charts: string[] }[] {
    return Object.entries(this.state.shoebox).map(([building, charts]) => ({
      building,
      charts: [...charts],
    }));
  }
}
