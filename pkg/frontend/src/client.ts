// Thin HTTP/WS client for the pit-wall service.

import {
  OptimizeResult,
  Recommendation,
  SessionSummary,
  StreamEvent,
} from "./types";

export class ServiceClient {
  constructor(private base: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.base + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!resp.ok) {
      const detail = await resp.text();
      throw new Error(`${resp.status} ${path}: ${detail}`);
    }
    return (await resp.json()) as T;
  }

  createSession(spec: Record<string, unknown> = {}, mode = "manual"): Promise<SessionSummary> {
    return this.json("/sessions", { method: "POST", body: JSON.stringify({ spec, mode }) });
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.json(`/sessions/${id}`);
  }

  step(id: string, body: Record<string, unknown>): Promise<unknown> {
    return this.json(`/sessions/${id}/step`, { method: "POST", body: JSON.stringify(body) });
  }

  inject(id: string, twDelta: number): Promise<unknown> {
    return this.json(`/sessions/${id}/disturbance`, {
      method: "POST",
      body: JSON.stringify({ tw_delta: twDelta }),
    });
  }

  async recommendation(id: string): Promise<Recommendation> {
    return Recommendation.parse(await this.json(`/sessions/${id}/recommendation`));
  }

  async submitOptimize(body: Record<string, unknown>): Promise<string> {
    const r = await this.json<{ id: string }>("/optimize", {
      method: "POST",
      body: JSON.stringify(body),
    });
    return r.id;
  }

  async pollOptimize(jobId: string, intervalMs = 500, timeoutMs = 300_000): Promise<OptimizeResult> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.json<{ status: string; result: unknown; error?: string }>(
        `/optimize/${jobId}`,
      );
      if (status.status === "done") {
        return OptimizeResult.parse(status.result);
      }
      if (status.status === "failed") {
        throw new Error(`optimizer job failed: ${status.error}`);
      }
      if (Date.now() > deadline) {
        throw new Error("optimizer job timed out");
      }
      await new Promise((r) => setTimeout(r, intervalMs));
    }
  }

  // WebSocket subscription with resume-on-drop: on reconnect the server
  // replays the full history inside the hello event, so the reducer can
  // rebuild from scratch.
  stream(id: string, onEvent: (e: unknown) => void, onDrop?: () => void): () => void {
    const proto = location.protocol === "https:" ? "wss:" : "ws:";
    let closed = false;
    let ws: WebSocket;
    const connect = () => {
      ws = new WebSocket(`${proto}//${location.host}${this.base}/sessions/${id}/stream`);
      ws.onmessage = (msg) => onEvent(JSON.parse(msg.data));
      ws.onclose = () => {
        if (!closed) {
          onDrop?.();
          setTimeout(connect, 1000);
        }
      };
    };
    connect();
    return () => {
      closed = true;
      ws.close();
    };
  }
}

export function parseEvent(raw: unknown) {
  return StreamEvent.parse(raw);
}
