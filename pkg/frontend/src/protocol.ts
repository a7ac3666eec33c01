// Wire types for the hub protocol (v1, one JSON envelope per frame).

export const PROTOCOL_VERSION = 1;

export type Role =
  | "tracker"
  | "robot"
  | "dashboard"
  | "tabletop"
  | "recorder"
  | "controller";

export type Kind =
  | "hello"
  | "pose_update"
  | "interaction_event"
  | "wheel_command"
  | "viewport_change"
  | "state_delta"
  | "effects"
  | "snapshot_request"
  | "snapshot";

export interface Envelope {
  v: number;
  sid: string;
  t_ms: number;
  seq: number;
  role: Role;
  sender: string;
  kind: Kind;
  payload: Record<string, unknown>;
}

export interface PosePayload {
  proxy: string;
  x: number;
  y: number;
  z: number;
  yaw: number;
  pitch: number;
  roll: number;
}

export interface EffectPayload {
  effect: string;
  chart?: string;
  building?: string;
  buildings?: string[];
  flag?: boolean;
}

export interface StateDoc {
  filter: string[];
  highlight: string | null;
  locked: boolean;
  near: string[];
  secondary: string | null;
  shadows: string[];
  shoebox: Record<string, string[]>;
}

export interface ChartDoc {
  chart: string;
  period: string | null;
  series: { building: string; buckets: [string, number][] }[];
  histogram: [number, number, number][] | null;
}

export interface RenderModelDoc {
  charts: ChartDoc[];
  legend: { building: string; name: string; color: string; highlighted: boolean }[];
  shoebox: { building: string; charts: string[] }[];
  shadows: {
    proxy: string;
    screen_point: [number, number] | null;
    magnifier_scale: number | null;
    footprint: [number, number][];
  }[];
  locked: boolean;
  secondary: string | null;
  highlight: string | null;
}

export interface SnapshotPayload {
  state: StateDoc;
  render: RenderModelDoc;
  robots: Record<string, [number, number, number]>;
}

/** Per-(role, sender) sequence numbering for outgoing envelopes. */
export class EnvelopeFactory {
  private seq = 0;
  constructor(
    readonly role: Role,
    readonly sender: string,
  ) {}

  make(kind: Kind, payload: Record<string, unknown>, t_ms: number): Envelope {
    this.seq += 1;
    return {
      v: PROTOCOL_VERSION,
      sid: "",
      t_ms,
      seq: this.seq,
      role: this.role,
      sender: this.sender,
      kind,
      payload,
    };
  }
}

export function encode(env: Envelope): string {
  return JSON.stringify(env);
}

export function decode(text: string): Envelope | null {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const d = doc as Record<string, unknown>;
  if (typeof d.kind !== "string" || typeof d.seq !== "number") return null;
  return {
    v: (d.v as number) ?? PROTOCOL_VERSION,
    sid: (d.sid as string) ?? "",
    t_ms: (d.t_ms as number) ?? 0,
    seq: d.seq as number,
    role: d.role as Role,
    sender: (d.sender as string) ?? "",
    kind: d.kind as Kind,
    payload: (d.payload as Record<string, unknown>) ?? {},
  };
}
