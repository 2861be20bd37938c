/** Connection to the frame service: /info handshake, WebSocket, reconnect. */

import { DecodedFrame, ServiceInfo, decodeFrame, encodePoseMessage } from "./protocol.js";

export interface SessionEvents {
  onInfo?(info: ServiceInfo): void;
  onFrame?(frame: DecodedFrame): void;
  onMalformedFrame?(): void;
  onServerError?(message: string): void;
  onStatus?(status: "connecting" | "open" | "retrying" | "closed"): void;
  /** Called on each (re)open so the UI can resume from current sliders. */
  onOpen?(): void;
}

export interface WebSocketLike {
  binaryType: string;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;
export type FetchLike = (url: string) => Promise<{ ok: boolean; json(): Promise<unknown> }>;

const BACKOFF_BASE_MS = 500;
const BACKOFF_CAP_MS = 8000;

export class AvatarSession {
  private ws: WebSocketLike | null = null;
  private closed = false;
  private attempts = 0;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  info: ServiceInfo | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly events: SessionEvents,
    private readonly wsFactory: WebSocketFactory,
    private readonly fetchImpl: FetchLike,
    private readonly scheduleRetry: (fn: () => void, ms: number) => ReturnType<typeof setTimeout> = setTimeout,
  ) {}

  get connected(): boolean {
    return this.ws !== null;
  }

  wsUrl(): string {
    return this.baseUrl.replace(/^http/, "ws").replace(/\/$/, "") + "/ws";
  }

  async connect(): Promise<void> {
    this.events.onStatus?.("connecting");
    const response = await this.fetchImpl(this.baseUrl.replace(/\/$/, "") + "/info");
    if (!response.ok) {
      throw new Error("service /info unreachable");
    }
    this.info = (await response.json()) as ServiceInfo;
    this.events.onInfo?.(this.info);
    this.openSocket();
  }

  private openSocket(): void {
    const ws = this.wsFactory(this.wsUrl());
    ws.binaryType = "arraybuffer";
    ws.onopen = () => {
      this.attempts = 0;
      this.events.onStatus?.("open");
      this.events.onOpen?.();
    };
    ws.onmessage = (ev) => this.handleMessage(ev.data);
    ws.onclose = () => {
      this.ws = null;
      if (!this.closed) {
        this.scheduleReconnect();
      }
    };
    ws.onerror = () => {
      // close handler drives the retry
    };
    this.ws = ws;
  }

  private scheduleReconnect(): void {
    const delay = Math.min(BACKOFF_BASE_MS * 2 ** this.attempts, BACKOFF_CAP_MS);
    this.attempts += 1;
    this.events.onStatus?.("retrying");
    this.retryTimer = this.scheduleRetry(() => {
      if (!this.closed) {
        this.openSocket();
      }
    }, delay);
  }

  private handleMessage(data: unknown): void {
    if (typeof data === "string") {
      try {
        const msg = JSON.parse(data) as { type?: string; message?: string };
        if (msg.type === "error" && msg.message) {
          this.events.onServerError?.(msg.message);
        }
      } catch {
        this.events.onMalformedFrame?.();
      }
      return;
    }
    if (data instanceof ArrayBuffer) {
      const frame = decodeFrame(data);
      if (frame === null) {
        this.events.onMalformedFrame?.();
        return;
      }
      this.events.onFrame?.(frame);
      return;
    }
    this.events.onMalformedFrame?.();
  }

  /** Fire-and-forget; silently dropped while disconnected. */
  sendPose(id: number, values: ArrayLike<number>): void {
    this.ws?.send(encodePoseMessage(id, values));
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
    }
    this.ws?.close();
    this.ws = null;
    this.events.onStatus?.("closed");
  }
}
