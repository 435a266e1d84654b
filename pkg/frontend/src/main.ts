import { Api } from "./api.js";
import { App } from "./app.js";

function baseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery) {
    return fromQuery.replace(/\/$/, "");
  }
  const injected = (window as { GEOPREFER_API?: string }).GEOPREFER_API;
  if (injected) {
    return injected.replace(/\/$/, "");
  }
  return "";
}

export function mount(root: HTMLElement, api?: Api): App {
  const app = new App(api ?? new Api(baseUrl()), root);
  app.render();
  return app;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount(document.getElementById("app")!);
}
