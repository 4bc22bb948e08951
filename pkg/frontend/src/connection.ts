/** WebSocket session binding: Hello/Welcome handshake, then an ordered
 * queue of host broadcasts into the view state. */

import { decode, encode, PROTOCOL_VERSION, type Envelope } from "./protocol.js";
import { ConsoleViewState, type Toast } from "./viewstate.js";

/** The slice of the WebSocket API the connection needs; injectable in tests. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
}

export type ConnectionStatus = "connecting" | "live" | "error" | "closed";

export interface ConnectionCallbacks {
  onStatus?(status: ConnectionStatus, detail: string): void;
  onToast?(toast: Toast): void;
  onApplied?(env: Envelope): void;
}

export class ConsoleConnection {
  readonly view = new ConsoleViewState();
  status: ConnectionStatus = "connecting";
  errorBanner: string | null = null;

  private socket: SocketLike;
  private callbacks: ConnectionCallbacks;

  constructor(socket: SocketLike, callbacks: ConnectionCallbacks = {}) {
    this.socket = socket;
    this.callbacks = callbacks;
    socket.onmessage = (ev) => this.handleMessage(ev.data);
    socket.onclose = () => this.setStatus("closed", "connection closed");
    socket.onerror = () => this.setStatus("error", "connection error");
    this.socket.send(
      encode({
        channel: "control",
        seq: 0,
        sender: "console",
        payload: { kind: "control", type: "hello", version: PROTOCOL_VERSION, role: "console" },
      }),
    );
  }

  send(env: Envelope): void {
    this.socket.send(encode(env));
  }

  close(): void {
    this.socket.close();
  }

  private setStatus(status: ConnectionStatus, detail: string): void {
    this.status = status;
    this.callbacks.onStatus?.(status, detail);
  }

  private handleMessage(data: string): void {
    let env: Envelope;
    try {
      env = decode(data);
    } catch {
      return; // tolerate garbage; the host never sends any
    }
    const p = env.payload;
    if (p.kind === "control") {
      switch (p.type) {
        case "welcome":
          this.view.applySnapshot(p.snapshot, p.horizon);
          this.setStatus("live", "session joined");
          break;
        case "bye":
          this.errorBanner =
            p.reason === "incompatible"
              ? `protocol version mismatch (server refused ${PROTOCOL_VERSION})`
              : `server closed the session: ${p.reason}`;
          this.setStatus("error", this.errorBanner);
          break;
        case "rejection":
          this.callbacks.onToast?.({ reason: p.reason, channel: p.channel, seq: p.seq });
          break;
        default:
          break;
      }
      return;
    }
    if (p.kind === "event") {
      this.view.applyEnvelope(env);
      this.callbacks.onApplied?.(env);
    }
  }
}

/** Browser entry point: open a real WebSocket and wrap it, buffering
 * outgoing frames (the Hello included) until the socket opens. */
export function connect(wsUrl: string, callbacks: ConnectionCallbacks = {}): ConsoleConnection {
  const raw = new WebSocket(wsUrl);
  const pending: string[] = [];
  const adapter: SocketLike = {
    send: (data) => {
      if (raw.readyState === WebSocket.OPEN) raw.send(data);
      else pending.push(data);
    },
    close: () => raw.close(),
    onmessage: null,
    onclose: null,
    onerror: null,
  };
  raw.onopen = () => {
    for (const data of pending.splice(0)) raw.send(data);
  };
  raw.onmessage = (ev) => adapter.onmessage?.({ data: String(ev.data) });
  raw.onclose = (ev) => adapter.onclose?.(ev);
  raw.onerror = (ev) => adapter.onerror?.(ev);
  return new ConsoleConnection(adapter, callbacks);
}
