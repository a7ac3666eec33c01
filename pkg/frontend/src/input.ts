// Maps pointer and keyboard input onto 6-DoF proxy poses and emits them
// as tracker pose updates at a fixed cadence (>= 20 Hz). A mouse gives
// only two axes, so z rides a key/slider (hold to lift past the pickup
// threshold), yaw rides Q/E or the wheel, and pitch rides a key.

import { EnvelopeFactory, type Envelope, type PosePayload } from "./protocol.js";

export const PICKUP_Z = 0.03; // matches the recognizer defaults
export const LIFT_Z = 0.12;
export const PITCH_TARGET = (50 * Math.PI) / 180;
export const EMIT_INTERVAL_MS = 40; // 25 Hz

export interface ProxyPose {
  x: number;
  y: number;
  z: number;
  yaw: number;
  pitch: number;
  roll: number;
}

export class ProxyInput {
  pose: ProxyPose;
  lifting = false;
  pitching = false;
  touched = false;

  constructor(
    readonly proxy: string,
    start: Partial<ProxyPose> = {},
  ) {
    this.pose = {
      x: 0,
      y: 0,
      z: 0,
      yaw: 0,
      pitch: 0,
      roll: 0,
      ...start,
    };
  }

  /** Pointer drag: move in table meters. */
  moveTo(x: number, y: number): void {
    this.pose.x = x;
    this.pose.y = y;
    this.touched = true;
  }

  adjustYaw(delta: number): void {
    this.pose.yaw += delta;
    this.touched = true;
  }

  setLifting(on: boolean): void {
    this.lifting = on;
    this.touched = true;
  }

  setLiftFraction(f: number): void {
    this.pose.z = Math.max(0, Math.min(1, f)) * LIFT_Z;
    this.touched = true;
  }

  setPitching(on: boolean): void {
    this.pitching = on;
    this.touched = true;
  }

  /** Advance the lift/pitch ramps by dt milliseconds. */
  step(dtMs: number): void {
    const zRate = LIFT_Z / 300; // full lift in ~300 ms
    if (this.lifting) {
      this.pose.z = Math.min(this.pose.z + zRate * dtMs, LIFT_Z);
    } else {
      this.pose.z = Math.max(this.pose.z - zRate * dtMs, 0);
    }
    const pitchRate = PITCH_TARGET / 250;
    if (this.pitching) {
      this.pose.pitch = Math.min(
        this.pose.pitch + pitchRate * dtMs,
        PITCH_TARGET,
      );
    } else {
      this.pose.pitch = Math.max(this.pose.pitch - pitchRate * dtMs, 0);
    }
  }

  held(): boolean {
    return this.pose.z >= PICKUP_Z;
  }

  payload(): PosePayload {
    return { proxy: this.proxy, ...this.pose };
  }
}

/**
 * Drives every touched proxy's ramps and emits one pose update per proxy
 * per cadence interval. The emitter owns the tracker envelope factory so
 * sequence numbers stay strictly increasing.
 */
export class PoseEmitter {
  readonly proxies = new Map<string, ProxyInput>();
  private lastEmit = -Infinity;
  private factory: EnvelopeFactory;

  constructor(sender = "ui") {
    this.factory = new EnvelopeFactory("tracker", sender);
  }

  proxy(name: string, start: Partial<ProxyPose> = {}): ProxyInput {
    let p = this.proxies.get(name);
    if (!p) {
      p = new ProxyInput(name, start);
      this.proxies.set(name, p);
    }
    return p;
  }

  /** Called from the animation loop; returns envelopes due for sending. */
  tick(nowMs: number): Envelope[] {
    const out: Envelope[] = [];
    if (nowMs - this.lastEmit < EMIT_INTERVAL_MS) return out;
    const dt = Math.min(
      nowMs - (this.lastEmit === -Infinity ? nowMs : this.lastEmit),
      100,
    );
    this.lastEmit = nowMs;
    for (const input of this.proxies.values()) {
      if (!input.touched) continue;
      input.step(dt);
      out.push(
        this.factory.make(
          "pose_update",
          input.payload() as unknown as Record<string, unknown>,
          Math.round(nowMs),
        ),
      );
    }
    return out;
  }
}
