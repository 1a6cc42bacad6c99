// Session lifecycle and input wiring. Drags become heading posts, buttons
// become steps; every belief number shown is whatever the server answered.

import { ApiClient, ApiError, MapInfo } from "./api.js";
import { Mount, createMount, render } from "./render.js";
import { ViewState, createView, dragAngle, ingestEvent } from "./scene.js";

export interface AppOptions {
  mapId: string;
  method: string;
  overrides?: Record<string, number>;
  autoMs?: number;
}

export class App {
  view!: ViewState;
  mount!: Mount;
  sid = "";
  // last in-flight request, so tests (and the banner logic) can await it
  lastRequest: Promise<unknown> = Promise.resolve();
  private stopStream: (() => void) | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private drag: [number, number] | null = null;

  constructor(
    public client: ApiClient,
    public root: HTMLElement,
    public opts: AppOptions,
  ) {}

  async start(): Promise<void> {
    const made = await this.client.createSession(
      this.opts.mapId,
      this.opts.method,
      this.opts.overrides ?? {},
    );
    this.sid = made.session.id;
    this.view = createView(made.map, made.session, this.opts.method);
    this.mount = createMount(this.root, made.map.width, made.map.height);
    this.wireDrag();
    this.wireButtons();
    this.subscribe();
    render(this.mount, this.view);
  }

  private subscribe() {
    this.stopStream?.();
    this.view.stale = false;
    this.stopStream = this.client.streamEvents(
      this.sid,
      (seq, ev) => {
        ingestEvent(this.view, seq, ev);
        render(this.mount, this.view);
        this.syncButtons();
      },
      () => {
        this.view.stale = true;
        if (this.view.snapshot.status === "running") render(this.mount, this.view);
      },
    );
  }

  private wireDrag() {
    const svg = this.mount.svg;
    svg.addEventListener("mousedown", (e) => {
      this.drag = [e.clientX, e.clientY];
    });
    svg.addEventListener("mouseup", (e) => {
      if (!this.drag) return;
      const [x0, y0] = this.drag;
      this.drag = null;
      const angle = dragAngle(e.clientX - x0, e.clientY - y0);
      if (angle === null) return; // dead zone: no request at all
      this.sendHeading(angle);
    });
  }

  sendHeading(angle: number): Promise<unknown> {
    this.view.rejection = null;
    const req = this.client
      .postHeading(this.sid, angle)
      .then((resp) => {
        if (resp.belief) this.view.snapshot.belief = resp.belief;
      })
      .catch((err) => {
        if (err instanceof ApiError) {
          this.view.rejection = err.detail; // belief untouched on rejection
        } else {
          this.view.banner = "network failure; retry the drag";
        }
      })
      .then(() => render(this.mount, this.view));
    this.lastRequest = req;
    return req;
  }

  step(): Promise<unknown> {
    const req = this.client
      .step(this.sid)
      .then(() => undefined)
      .catch((err) => {
        if (!(err instanceof ApiError && err.status === 409)) {
          this.view.banner = "network failure on step";
          render(this.mount, this.view);
        }
      });
    this.lastRequest = req;
    return req;
  }

  setPlayback(mode: "manual" | "auto", intervalMs = 500) {
    this.view.playback = mode;
    if (this.timer) {
      clearInterval(this.timer);
      this.timer = null;
    }
    if (mode === "auto") {
      this.timer = setInterval(() => {
        if (this.view.snapshot.status !== "running") {
          this.setPlayback("manual");
          return;
        }
        this.step();
      }, intervalMs);
    }
    this.syncButtons();
  }

  async reset(): Promise<void> {
    this.setPlayback("manual");
    this.stopStream?.();
    const old = this.sid;
    await this.client.deleteSession(old).catch(() => undefined);
    await this.start();
  }

  private wireButtons() {
    const bar = document.createElement("div");
    bar.className = "controls";
    const stepBtn = document.createElement("button");
    stepBtn.textContent = "step";
    stepBtn.className = "step-btn";
    stepBtn.addEventListener("click", () => this.step());
    const autoBtn = document.createElement("button");
    autoBtn.textContent = "auto";
    autoBtn.className = "auto-btn";
    autoBtn.addEventListener("click", () =>
      this.setPlayback(this.view.playback === "auto" ? "manual" : "auto",
                       this.opts.autoMs ?? 500),
    );
    const resetBtn = document.createElement("button");
    resetBtn.textContent = "reset";
    resetBtn.className = "reset-btn";
    resetBtn.addEventListener("click", () => void this.reset());
    bar.append(stepBtn, autoBtn, resetBtn);
    this.root.appendChild(bar);
    this.syncButtons();
  }

  private syncButtons() {
    const terminal = this.view.snapshot.status !== "running";
    const q = (cls: string) =>
      this.root.querySelector<HTMLButtonElement>(`.${cls}`);
    const stepBtn = q("step-btn");
    const autoBtn = q("auto-btn");
    if (stepBtn) stepBtn.disabled = terminal;
    if (autoBtn) {
      autoBtn.disabled = terminal;
      autoBtn.textContent = this.view.playback === "auto" ? "pause" : "auto";
    }
  }

  destroy() {
    this.setPlayback("manual");
    this.stopStream?.();
    this.stopStream = null;
  }
}

export async function buildApp(
  client: ApiClient,
  root: HTMLElement,
  opts: AppOptions,
): Promise<App> {
  const app = new App(client, root, opts);
  await app.start();
  return app;
}

// picker shown above the world: map + method, fresh session per change
export function methodSwitcher(
  root: HTMLElement,
  maps: MapInfo[],
  onPick: (mapId: string, method: string) => void,
  current: { mapId: string; method: string },
) {
  const bar = document.createElement("div");
  bar.className = "picker";
  const mapSel = document.createElement("select");
  mapSel.className = "map-select";
  for (const m of maps) {
    const o = document.createElement("option");
    o.value = m.id;
    o.textContent = m.id;
    o.selected = m.id === current.mapId;
    mapSel.appendChild(o);
  }
  const methodSel = document.createElement("select");
  methodSel.className = "method-select";
  for (const m of ["path_pref", "goal_only", "compliant", "blended"]) {
    const o = document.createElement("option");
    o.value = m;
    o.textContent = m;
    o.selected = m === current.method;
    methodSel.appendChild(o);
  }
  const pick = () => onPick(mapSel.value, methodSel.value);
  mapSel.addEventListener("change", pick);
  methodSel.addEventListener("change", pick);
  bar.append(mapSel, methodSel);
  root.appendChild(bar);
}
