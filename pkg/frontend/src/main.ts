import { App } from "./app.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const app = new App({
  mapContainer: byId("map"),
  fileInput: byId<HTMLInputElement>("photo-input"),
  cameraButton: byId<HTMLButtonElement>("camera-button"),
  statusBanner: byId("status"),
  infoPanel: byId("info"),
  retryButton: byId<HTMLButtonElement>("retry-button"),
});

void app.start();
