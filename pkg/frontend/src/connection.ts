// Hub connections. The UI speaks three roles: dashboard and tabletop
// (receive state, effects, snapshots, robot poses) and tracker (sends
// the pose stream for proxies the user manipulates). Reconnects request
// a fresh snapshot, so no client-side state survives a drop.

import { EnvelopeFactory, decode, encode, type Envelope, type Role } from "./protocol.js";

export type OnEnvelope = (env: Envelope) => void;

export class HubConnection {
  socket: WebSocket | null = null;
  readonly factory: EnvelopeFactory;
  private url: string;
  private onEnvelope: OnEnvelope;
  private onOpen: () => void;
  private closed = false;

  constructor(
    url: string,
    role: Role,
    sender: string,
    onEnvelope: OnEnvelope,
    onOpen: () => void = () => {},
  ) {
    this.url = url;
    this.factory = new EnvelopeFactory(role, sender);
    this.onEnvelope = onEnvelope;
    this.onOpen = onOpen;
    this.connect();
  }

  private connect(): void {
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(encode(this.factory.make("hello", {}, Date.now())));
    };
    socket.onmessage = (event: MessageEvent) => {
      const text = typeof event.data === "string" ? event.data : "";
      const doc = JSON.parse(text || "{}") as { kind?: string };
      if (doc.kind === "welcome") {
        this.onOpen();
        return;
      }
      if (doc.kind === "nack" || doc.kind === "refused") {
        console.warn("hub:", text);
        return;
      }
      const env = decode(text);
      if (env) this.onEnvelope(env);
    };
    socket.onclose = () => {
      if (!this.closed) setTimeout(() => this.connect(), 800);
    };
    socket.onerror = () => socket.close();
  }

  send(kind: Envelope["kind"], payload: Record<string, unknown>): void {
    if (this.socket?.readyState === WebSocket.OPEN) {
      this.socket.send(encode(this.factory.make(kind, payload, Date.now())));
    }
  }

  sendEnvelope(env: Envelope): void {
    if (this.socket?.readyState === WebSocket.OPEN) {
      this.socket.send(encode(env));
    }
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
