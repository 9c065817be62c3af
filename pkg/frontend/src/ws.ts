/**
 * Live-update channel: subscribes to the service WebSocket and surfaces
 * per-call commit notifications, with exponential-backoff reconnection.
 * The socket constructor is injectable for testing.
 */

export interface CommitMessage {
  session: number;
  ordinal: number;
}

export interface SocketLike {
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface LiveChannelOptions {
  /** Initial reconnect delay in ms; doubles per attempt up to maxDelay. */
  baseDelay?: number;
  maxDelay?: number;
  schedule?: (fn: () => void, delay: number) => void;
}

export class LiveChannel {
  private socket: SocketLike | null = null;
  private listeners = new Set<(msg: CommitMessage) => void>();
  private closed = false;
  private attempts = 0;
  private readonly baseDelay: number;
  private readonly maxDelay: number;
  private readonly schedule: (fn: () => void, delay: number) => void;

  constructor(
    private url: string,
    private factory: SocketFactory,
    options: LiveChannelOptions = {},
  ) {
    this.baseDelay = options.baseDelay ?? 250;
    this.maxDelay = options.maxDelay ?? 8000;
    this.schedule =
      options.schedule ?? ((fn, delay) => setTimeout(fn, delay));
  }

  connect(): void {
    if (this.closed) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
    };
    socket.onmessage = (event) => {
      let parsed: unknown;
      try {
        parsed = JSON.parse(event.data);
      } catch {
        return; // ignore malformed frames
      }
      const msg = parsed as Partial<CommitMessage>;
      if (typeof msg.session === "number" && typeof msg.ordinal === "number") {
        for (const listener of this.listeners) {
          listener({ session: msg.session, ordinal: msg.ordinal });
        }
      }
    };
    socket.onclose = () => {
      if (this.closed) return;
      const delay = Math.min(
        this.baseDelay * 2 ** this.attempts,
        this.maxDelay,
      );
      this.attempts += 1;
      this.schedule(() => this.connect(), delay);
    };
  }

  onCommit(listener: (msg: CommitMessage) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
