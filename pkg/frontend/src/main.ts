import { ApiClient } from "./client.js";
import { mountConsole, ViewName } from "./ui.js";

function param(name: string, fallback: string): string {
  const params = new URLSearchParams(window.location.search);
  return params.get(name) ?? window.localStorage.getItem(`annoloop.${name}`) ?? fallback;
}

function currentView(): ViewName {
  const hash = window.location.hash.replace("#", "");
  return hash === "queue" || hash === "dashboard" ? hash : "annotate";
}

const baseUrl = param("api", "http://127.0.0.1:8400");
const token = param("token", "");
const batchId = param("batch", "");

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

if (!token || !batchId) {
  root.textContent = "Provide ?token=...&batch=... (and optionally &api=...) in the URL.";
} else {
  window.localStorage.setItem("annoloop.token", token);
  window.localStorage.setItem("annoloop.batch", batchId);
  const client = new ApiClient(baseUrl, token);
  const app = mountConsole(root, client, batchId, currentView());
  window.addEventListener("hashchange", () => {
    void app.start(currentView());
  });
}
