// Entry point: query-string config, map/method pickers, one app instance.

import { ApiClient } from "./api.js";
import { App, buildApp, methodSwitcher } from "./controls.js";

async function boot() {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "http://127.0.0.1:8000";
  const client = new ApiClient(base);
  const shell = document.getElementById("app");
  if (!shell) throw new Error("missing #app element");

  const { maps } = await client.listMaps();
  let mapId = params.get("map") ?? "map1";
  let method = params.get("method") ?? "path_pref";
  const pickerHost = document.createElement("div");
  const appHost = document.createElement("div");
  shell.append(pickerHost, appHost);

  let app: App | null = null;
  const fresh = async () => {
    app?.destroy();
    app = await buildApp(client, appHost, { mapId, method });
  };
  methodSwitcher(pickerHost, maps, (m, meth) => {
    mapId = m;
    method = meth;
    void fresh();
  }, { mapId, method });
  await fresh();
}

boot().catch((err) => {
  const shell = document.getElementById("app");
  if (shell) shell.textContent = `failed to reach the service: ${err}`;
});
