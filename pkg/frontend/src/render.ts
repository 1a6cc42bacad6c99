// SVG renderer. Rebuilds the scene from the view state on every call; the
// last good frame stays up when the state is marked bad (banner set).

import type { Cell } from "./api.js";
import { CELL_PX, ViewState, cellCenterPx, exitArrows, worldToPx } from "./scene.js";

const SVG = "http://www.w3.org/2000/svg";

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  return node;
}

function div(cls: string, parent: HTMLElement): HTMLDivElement {
  const d = document.createElement("div");
  d.className = cls;
  parent.appendChild(d);
  return d;
}

export interface Mount {
  root: HTMLElement;
  svg: SVGSVGElement;
  banner: HTMLDivElement;
  rejection: HTMLDivElement;
  bars: HTMLDivElement;
  status: HTMLDivElement;
}

export function createMount(root: HTMLElement, width: number, height: number): Mount {
  root.textContent = "";
  const banner = div("banner", root);
  const status = div("status", root);
  const svg = document.createElementNS(SVG, "svg");
  svg.setAttribute("width", String(width * CELL_PX));
  svg.setAttribute("height", String(height * CELL_PX));
  svg.setAttribute("class", "world");
  root.appendChild(svg);
  const rejection = div("rejection", root);
  const bars = div("bars", root);
  return { root, svg, banner, rejection, bars, status };
}

function drawGrid(svg: SVGSVGElement, view: ViewState) {
  const { width, height } = view.map;
  svg.appendChild(
    el("rect", { x: 0, y: 0, width: width * CELL_PX, height: height * CELL_PX, fill: "#fafafa" }),
  );
  for (let x = 0; x <= width; x++) {
    svg.appendChild(el("line", {
      x1: x * CELL_PX, y1: 0, x2: x * CELL_PX, y2: height * CELL_PX,
      stroke: "#e6e6e6", "stroke-width": 1,
    }));
  }
  for (let y = 0; y <= height; y++) {
    svg.appendChild(el("line", {
      x1: 0, y1: y * CELL_PX, x2: width * CELL_PX, y2: y * CELL_PX,
      stroke: "#e6e6e6", "stroke-width": 1,
    }));
  }
  for (const [bx, by] of view.map.blocked) {
    svg.appendChild(el("rect", {
      x: bx * CELL_PX, y: (view.map.height - by - 1) * CELL_PX,
      width: CELL_PX, height: CELL_PX, fill: "#444", class: "obstacle",
      "data-cell": `${bx},${by}`,
    }));
  }
}

function drawLoops(svg: SVGSVGElement, view: ViewState) {
  for (const poly of view.map.polytopes) {
    for (const loop of poly.loops) {
      const pts = loop
        .map((p) => worldToPx(view.map, p))
        .map(([x, y]) => `${x},${y}`)
        .join(" ");
      svg.appendChild(el("polygon", {
        points: pts, fill: "none", stroke: "#9aa7c7",
        "stroke-width": 2, class: "polytope", "data-vertex": poly.vertex,
      }));
    }
  }
}

function drawTrail(svg: SVGSVGElement, view: ViewState) {
  const n = view.snapshot.trajectory.length;
  view.snapshot.trajectory.forEach((cell, i) => {
    const [cx, cy] = cellCenterPx(view.map, cell);
    svg.appendChild(el("circle", {
      cx, cy, r: CELL_PX * 0.18, fill: "#2b6cb0",
      opacity: ((i + 1) / n).toFixed(3), class: "trail",
    }));
  });
  const [rx, ry] = cellCenterPx(view.map, view.snapshot.location);
  svg.appendChild(el("circle", {
    cx: rx, cy: ry, r: CELL_PX * 0.3, fill: "#1a365d", class: "robot",
  }));
}

function drawGoals(svg: SVGSVGElement, view: ViewState) {
  const belief = view.snapshot.belief;
  view.map.goal_candidates.forEach((g: Cell, i: number) => {
    const [cx, cy] = cellCenterPx(view.map, g);
    const p = belief ? belief.goal_marginal[i] : 1 / view.map.goal_candidates.length;
    const r = CELL_PX * (0.2 + 0.6 * p);
    svg.appendChild(el("circle", {
      cx, cy, r: r.toFixed(2), fill: "#e53e3e", opacity: (0.25 + 0.55 * p).toFixed(3),
      class: "goal-halo", "data-goal": `${g[0]},${g[1]}`, "data-p": p.toFixed(6),
    }));
    svg.appendChild(el("circle", { cx, cy, r: 4, fill: "#e53e3e", class: "goal-dot" }));
  });
}

function drawArrows(svg: SVGSVGElement, view: ViewState) {
  const [rx, ry] = cellCenterPx(view.map, view.snapshot.location);
  for (const a of exitArrows(view)) {
    const [mx, my] = worldToPx(view.map, a.midpoint);
    const dx = mx - rx;
    const dy = my - ry;
    const len = Math.hypot(dx, dy) || 1;
    const tip = 0.5 * CELL_PX;
    svg.appendChild(el("line", {
      x1: mx - (dx / len) * tip, y1: my - (dy / len) * tip, x2: mx, y2: my,
      stroke: "#d53f8c", "stroke-width": (1 + 7 * a.p).toFixed(2),
      opacity: (0.3 + 0.7 * a.p).toFixed(3), class: "exit-arrow",
      "data-edge": `${a.u}-${a.w}`, "data-p": a.p.toFixed(6),
      "marker-end": "url(#tip)",
    }));
  }
}

function drawBars(mount: Mount, view: ViewState) {
  mount.bars.textContent = "";
  const belief = view.snapshot.belief;
  if (!belief) {
    mount.bars.textContent = "no belief for this method";
    return;
  }
  belief.goal_marginal.forEach((p, i) => {
    const g = belief.goals[i];
    const row = document.createElement("div");
    row.className = "bar-row";
    const label = document.createElement("span");
    label.textContent = `(${g[0]}, ${g[1]})`;
    const bar = document.createElement("div");
    bar.className = "goal-bar";
    bar.dataset.goal = `${g[0]},${g[1]}`;
    bar.dataset.p = p.toFixed(6);
    bar.style.width = `${Math.round(240 * p)}px`;
    const val = document.createElement("span");
    val.textContent = p.toFixed(3);
    row.append(label, bar, val);
    mount.bars.appendChild(row);
  });
  const ent = document.createElement("div");
  ent.className = "entropy";
  ent.textContent = `entropy ${belief.entropy.toFixed(3)} nats`;
  mount.bars.appendChild(ent);
}

export function render(mount: Mount, view: ViewState) {
  mount.banner.textContent = view.banner ?? "";
  mount.banner.style.display = view.banner ? "block" : "none";
  mount.rejection.textContent = view.rejection ?? "";
  if (view.banner) return; // keep the last good frame
  const s = view.snapshot;
  mount.status.textContent =
    `${view.map.id} / ${view.method}  step ${s.step}/${s.t_max}  ` +
    `violations ${s.violations}  ${s.status}${view.stale ? "  (stale)" : ""}`;
  mount.status.dataset.status = s.status;
  mount.svg.textContent = "";
  const defs = el("defs", {});
  const marker = el("marker", {
    id: "tip", markerWidth: 8, markerHeight: 8, refX: 6, refY: 3, orient: "auto",
  });
  marker.appendChild(el("path", { d: "M0,0 L6,3 L0,6 z", fill: "#d53f8c" }));
  defs.appendChild(marker);
  mount.svg.appendChild(defs);
  drawGrid(mount.svg, view);
  drawLoops(mount.svg, view);
  drawGoals(mount.svg, view);
  drawArrows(mount.svg, view);
  drawTrail(mount.svg, view);
  drawBars(mount, view);
}
