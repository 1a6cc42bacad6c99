// S2: a drag into an obstacle is refused with a visible reason and the
// belief bars do not move.

import { afterAll, beforeAll, expect, it } from "vitest";

import { ApiClient, Cell } from "../src/api.js";
import { App, buildApp } from "../src/controls.js";
import { Service, dragTowardCell, spawnService, waitFor } from "./live.js";

let service: Service;
let app: App;

beforeAll(async () => {
  service = await spawnService();
});

afterAll(() => {
  app?.destroy();
  service?.kill();
});

function blockedNeighbor(app: App): Cell | null {
  const blocked = new Set(app.view.map.blocked.map(([x, y]) => `${x},${y}`));
  const [x, y] = app.view.snapshot.location;
  for (const [dx, dy] of [[1, 0], [0, 1], [-1, 0], [0, -1]] as const) {
    if (blocked.has(`${x + dx},${y + dy}`)) return [x + dx, y + dy];
  }
  return null;
}

function barReadings(root: HTMLElement): [string, string][] {
  return [...root.querySelectorAll<HTMLDivElement>(".goal-bar")].map((b) => [
    b.dataset.goal!,
    b.dataset.p!,
  ]);
}

it("rejects a drag into the pillar and leaves belief alone", async () => {
  const root = document.createElement("div");
  document.body.appendChild(root);
  app = await buildApp(new ApiClient(service.base), root, {
    mapId: "corridor",
    method: "path_pref",
    overrides: { seed: 1, iterations: 300 },
  });
  const trueGoal = app.view.map.goal_candidates[app.view.map.true_goal_index];
  const stepBtn = root.querySelector<HTMLButtonElement>(".step-btn")!;

  // one cue toward the goal sends the planner down the corridor; any
  // eastward route passes a cell cardinally adjacent to the pillar
  dragTowardCell(app, trueGoal);
  await app.lastRequest;
  let target: Cell | null = null;
  for (let t = 0; t < 12 && !(target = blockedNeighbor(app)); t++) {
    stepBtn.click();
    await app.lastRequest;
    await waitFor(() => app.view.snapshot.step >= t + 1, 10_000, `step ${t + 1}`);
  }
  expect(target).not.toBeNull();

  const before = barReadings(root);
  expect(before.length).toBeGreaterThan(0);
  const stepBefore = app.view.snapshot.step;

  dragTowardCell(app, target!);
  await app.lastRequest;

  const reason = root.querySelector<HTMLDivElement>(".rejection")!.textContent!;
  expect(reason).toMatch(/inadmissible/);
  expect(reason).toMatch(/heading/);
  expect(barReadings(root)).toEqual(before);
  expect(app.view.snapshot.step).toBe(stepBefore);
  expect(app.view.snapshot.status).toBe("running");

  // a clean drag afterwards is accepted and clears the reason
  dragTowardCell(app, trueGoal);
  await app.lastRequest;
  expect(root.querySelector<HTMLDivElement>(".rejection")!.textContent).toBe("");
  expect(app.view.snapshot.status).toBe("running");
});
