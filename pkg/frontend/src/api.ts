// Typed client for the session service. All belief numbers come from the
// server; nothing in here computes probabilities.

export type Cell = [number, number];

export interface BeliefSummary {
  goals: Cell[];
  goal_marginal: number[];
  edges: [number, number][];
  edge_posterior: number[];
  entropy: number;
}

export interface PolytopeInfo {
  vertex: number;
  loops: [number, number][][];
  center: [number, number];
}

export interface EdgeInfo {
  u: number;
  w: number;
  midpoint: [number, number];
}

export interface MapInfo {
  id: string;
  width: number;
  height: number;
  blocked: Cell[];
  polytopes: PolytopeInfo[];
  edges: EdgeInfo[];
  start: Cell;
  goal_candidates: Cell[];
  true_goal_index: number;
  t_max: number;
  gamma_h: number;
}

export interface Snapshot {
  id: string;
  map: string;
  method: string;
  seed: number;
  status: "running" | "succeeded" | "failed";
  step: number;
  t_max: number;
  location: Cell;
  trajectory: Cell[];
  violations: number;
  belief: BeliefSummary | null;
  last_solve_ms: number | null;
  last_update_ms: number | null;
}

export interface StepEvent {
  type: "step";
  t: number;
  action: Cell | null;
  location: Cell;
  edge: [number, number] | "invalid" | null;
  violation: boolean;
  support: [number, number][] | null;
  status: Snapshot["status"];
  belief: BeliefSummary | null;
}

export interface HeadingEvent {
  type: "heading";
  t: number;
  angle: number;
  heading: string;
  belief: BeliefSummary | null;
}

export type SessionEvent = StepEvent | HeadingEvent;

export interface CreateResponse {
  session: Snapshot;
  map: MapInfo;
}

export interface HeadingResponse {
  heading: string;
  intended_cell: Cell;
  belief: BeliefSummary | null;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function parse<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      detail = (await resp.json()).detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  if (resp.status === 204) return undefined as T;
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(public base: string) {}

  listMaps(): Promise<{ maps: MapInfo[] }> {
    return fetch(`${this.base}/api/maps`).then((r) => parse(r));
  }

  createSession(
    mapId: string,
    method: string,
    overrides: Record<string, number> = {},
  ): Promise<CreateResponse> {
    return fetch(`${this.base}/api/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ map_id: mapId, method, overrides }),
    }).then((r) => parse(r));
  }

  getSession(sid: string): Promise<Snapshot> {
    return fetch(`${this.base}/api/sessions/${sid}`).then((r) => parse(r));
  }

  deleteSession(sid: string): Promise<void> {
    return fetch(`${this.base}/api/sessions/${sid}`, { method: "DELETE" }).then(
      (r) => parse(r),
    );
  }

  postHeading(sid: string, angle: number): Promise<HeadingResponse> {
    return fetch(`${this.base}/api/sessions/${sid}/heading`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ angle }),
    }).then((r) => parse(r));
  }

  step(sid: string): Promise<StepEvent> {
    return fetch(`${this.base}/api/sessions/${sid}/step`, {
      method: "POST",
    }).then((r) => parse(r));
  }

  // SSE over fetch so the same reader works in the browser and in node.
  // Calls onEvent(seq, event) per frame; returns a function that stops the
  // stream. onDown fires when the stream ends or errors.
  streamEvents(
    sid: string,
    onEvent: (seq: number, ev: SessionEvent) => void,
    onDown?: () => void,
  ): () => void {
    const ctl = new AbortController();
    (async () => {
      try {
        const resp = await fetch(`${this.base}/api/sessions/${sid}/events`, {
          signal: ctl.signal,
        });
        if (!resp.ok || !resp.body) throw new ApiError(resp.status, "no stream");
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buf = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buf += decoder.decode(value, { stream: true });
          let cut;
          while ((cut = buf.indexOf("\n\n")) >= 0) {
            const frame = buf.slice(0, cut);
            buf = buf.slice(cut + 2);
            let seq = -1;
            let data = "";
            for (const line of frame.split("\n")) {
              if (line.startsWith("id:")) seq = Number(line.slice(3).trim());
              else if (line.startsWith("data:")) data = line.slice(5).trim();
            }
            if (seq >= 0 && data) onEvent(seq, JSON.parse(data));
          }
        }
      } catch {
        // aborted or connection lost; fall through to onDown
      }
      onDown?.();
    })();
    return () => ctl.abort();
  }
}
