/**
 * WebSocket transport with automatic reconnection.
 *
 * The server hosts one session per connection, so after a drop the old
 * session cannot be resumed; the wrapper keeps the last session id so the
 * reconnect screen can preserve and display it, and starts a fresh session
 * only when the user asks for one.
 */

import { decodeFrame, encodeFrame, Frame, FrameError } from "./protocol.js";

export type FrameHandler = (frame: Frame) => void;
export type StatusHandler = (connected: boolean) => void;

const INITIAL_RETRY_MS = 1000;
const MAX_RETRY_MS = 15000;

type WebSocketLike = Pick<WebSocket, "send" | "close"> & {
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
};

export type SocketFactory = (url: string) => WebSocketLike;

export class Connection {
  private socket: WebSocketLike | null = null;
  private retryMs = INITIAL_RETRY_MS;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private shouldRetry = false;
  lastSessionId: string | null = null;

  constructor(
    private readonly url: string,
    private readonly onFrame: FrameHandler,
    private readonly onStatus: StatusHandler,
    private readonly factory: SocketFactory = (u) => new WebSocket(u) as unknown as WebSocketLike,
  ) {}

  open(): void {
    this.shouldRetry = true;
    this.connect();
  }

  private connect(): void {
    if (this.socket) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.retryMs = INITIAL_RETRY_MS;
      this.onStatus(true);
    };
    socket.onmessage = (event) => {
      try {
        const frame = decodeFrame(String(event.data));
        if (frame.session_id) this.lastSessionId = frame.session_id;
        this.onFrame(frame);
      } catch (err) {
        if (!(err instanceof FrameError)) throw err;
        console.error("dropped malformed frame:", err.message);
      }
    };
    socket.onerror = () => {
      /* onclose follows */
    };
    socket.onclose = () => {
      this.socket = null;
      this.onStatus(false);
      if (this.shouldRetry) this.scheduleRetry();
    };
  }

  private scheduleRetry(): void {
    if (this.retryTimer) return;
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.retryMs = Math.min(this.retryMs * 2, MAX_RETRY_MS);
      this.connect();
    }, this.retryMs);
  }

  send(frame: Frame): void {
    if (!this.socket) throw new Error("not connected");
    this.socket.send(encodeFrame(frame));
  }

  close(): void {
    this.shouldRetry = false;
    if (this.retryTimer) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.socket?.close();
    this.socket = null;
  }
}
