// Pure view state: no DOM, no network. The renderer draws whatever is in
// here; the controls mutate it through the functions below.

import type { Cell, MapInfo, SessionEvent, Snapshot } from "./api.js";

export const CELL_PX = 48;
export const DEAD_ZONE_PX = 12;

export type Playback = "manual" | "auto";

export interface ViewState {
  map: MapInfo;
  method: string;
  snapshot: Snapshot;
  // events are applied strictly in seq order; later arrivals wait in hold
  nextSeq: number;
  hold: Map<number, SessionEvent>;
  applied: SessionEvent[];
  playback: Playback;
  stale: boolean;
  banner: string | null;
  rejection: string | null;
}

export function createView(map: MapInfo, snapshot: Snapshot, method: string): ViewState {
  return {
    map,
    method,
    snapshot,
    nextSeq: 0,
    hold: new Map(),
    applied: [],
    playback: "manual",
    stale: false,
    banner: null,
    rejection: null,
  };
}

function validSnapshot(s: unknown): s is Snapshot {
  const c = s as Snapshot;
  return (
    !!c &&
    Array.isArray(c.location) &&
    Array.isArray(c.trajectory) &&
    typeof c.step === "number" &&
    (c.belief === null || Array.isArray(c.belief?.goal_marginal))
  );
}

// Returns false (and raises the banner) on malformed input; the previous
// snapshot stays on screen.
export function applySnapshot(view: ViewState, snapshot: unknown): boolean {
  if (!validSnapshot(snapshot)) {
    view.banner = "malformed snapshot from server";
    return false;
  }
  view.snapshot = snapshot;
  view.banner = null;
  return true;
}

function foldEvent(view: ViewState, ev: SessionEvent) {
  view.applied.push(ev);
  const s = view.snapshot;
  if (ev.belief) s.belief = ev.belief;
  if (ev.type === "step") {
    s.step = ev.t;
    s.location = ev.location;
    s.trajectory = [...s.trajectory, ev.location];
    s.status = ev.status;
    if (ev.violation) s.violations += 1;
  }
}

// Buffer-and-sort: events may arrive out of order; they fold into the
// snapshot only in monotone seq order.
export function ingestEvent(view: ViewState, seq: number, ev: SessionEvent) {
  if (seq < view.nextSeq) return; // replayed backlog
  view.hold.set(seq, ev);
  while (view.hold.has(view.nextSeq)) {
    const next = view.hold.get(view.nextSeq)!;
    view.hold.delete(view.nextSeq);
    view.nextSeq += 1;
    foldEvent(view, next);
  }
}

// Drag vector in screen pixels -> world-frame angle, or null inside the
// dead zone. Screen y grows downward, world y grows upward.
export function dragAngle(dx: number, dy: number): number | null {
  if (Math.hypot(dx, dy) < DEAD_ZONE_PX) return null;
  return Math.atan2(-dy || 0, dx); // -0 would flip atan2 to the -pi branch
}

export function cellCenterPx(map: MapInfo, cell: Cell): [number, number] {
  return [(cell[0] + 0.5) * CELL_PX, (map.height - cell[1] - 0.5) * CELL_PX];
}

export function worldToPx(map: MapInfo, p: [number, number]): [number, number] {
  return [p[0] * CELL_PX, (map.height - p[1]) * CELL_PX];
}

// Exit arrows live on the facet midpoints of the current polytope; the
// belief summary names those exits as [u, w] pairs matching map.edges.
export function exitArrows(
  view: ViewState,
): { midpoint: [number, number]; u: number; w: number; p: number }[] {
  const belief = view.snapshot.belief;
  if (!belief || !belief.edges.length) return [];
  const mid = new Map(
    view.map.edges.map((e) => [`${e.u}-${e.w}`, e.midpoint] as const),
  );
  const out = [];
  for (let i = 0; i < belief.edges.length; i++) {
    const [u, w] = belief.edges[i];
    const m = mid.get(`${Math.min(u, w)}-${Math.max(u, w)}`);
    if (m) out.push({ midpoint: m, u, w, p: belief.edge_posterior[i] });
  }
  return out;
}
