import { ApiError, fetchMap, localizePhoto } from "./api.js";
import { MapView, renderMap } from "./map.js";
import { ViewState, UiEvent, canSubmit, initialState, reduce } from "./state.js";
import { Region } from "./types.js";

export interface AppElements {
  mapContainer: HTMLElement;
  fileInput: HTMLInputElement;
  cameraButton: HTMLButtonElement;
  statusBanner: HTMLElement;
  infoPanel: HTMLElement;
  retryButton: HTMLButtonElement;
}

/** Wires state, API, and DOM together. All decision content shown comes
 *  verbatim from the server response. */
export class App {
  state: ViewState = initialState();
  private mapView: MapView | null = null;

  constructor(
    private readonly els: AppElements,
    private readonly baseUrl = "",
  ) {}

  dispatch(event: UiEvent): void {
    this.state = reduce(this.state, event);
    this.render();
  }

  async start(): Promise<void> {
    this.els.fileInput.addEventListener("change", () => {
      const file = this.els.fileInput.files?.[0];
      if (file) void this.submitPhoto(file);
      this.els.fileInput.value = "";
    });
    this.els.cameraButton.addEventListener("click", () => void this.captureFromCamera());
    this.els.retryButton.addEventListener("click", () => this.dispatch({ type: "DISMISSED" }));
    try {
      const map = await fetchMap(this.baseUrl);
      this.dispatch({ type: "MAP_LOADED", map });
      this.mapView = renderMap(this.els.mapContainer, map, (r) => this.showRegionInfo(r));
    } catch (err) {
      this.dispatch({ type: "REQUEST_FAILED", message: describeError(err) });
    }
  }

  async submitPhoto(photo: Blob): Promise<void> {
    if (!canSubmit(this.state)) return;
    this.dispatch({ type: "PHOTO_SUBMITTED" });
    try {
      const decision = await localizePhoto(photo, this.state.lastRegion, this.baseUrl);
      this.dispatch({ type: "DECISION_RECEIVED", decision });
    } catch (err) {
      this.dispatch({ type: "REQUEST_FAILED", message: describeError(err) });
    }
  }

  /** Camera capture via the browser media API; the file input stays as
   *  the fallback when no camera is available or permission is denied. */
  async captureFromCamera(): Promise<void> {
    if (!canSubmit(this.state)) return;
    if (!navigator.mediaDevices?.getUserMedia) {
      this.els.fileInput.click();
      return;
    }
    this.dispatch({ type: "CAPTURE_STARTED" });
    let stream: MediaStream | null = null;
    try {
      stream = await navigator.mediaDevices.getUserMedia({
        video: { facingMode: "environment" },
      });
      const blob = await grabFrame(stream);
      await this.submitPhoto(blob);
    } catch {
      this.dispatch({ type: "CAPTURE_CANCELLED" });
      this.els.fileInput.click();
    } finally {
      stream?.getTracks().forEach((t) => t.stop());
    }
  }

  private showRegionInfo(region: Region): void {
    this.els.infoPanel.innerHTML = "";
    const name = document.createElement("h2");
    name.textContent = region.display_name;
    const trivia = document.createElement("p");
    trivia.className = "trivia";
    trivia.textContent = region.trivia;
    this.els.infoPanel.append(name, trivia);
  }

  render(): void {
    const { phase, decision, errorMessage } = this.state;
    const banner = this.els.statusBanner;
    banner.dataset.phase = phase;
    this.els.retryButton.hidden = phase !== "error";

    switch (phase) {
      case "idle":
        banner.textContent = "Point your camera at a tank and take a photo.";
        break;
      case "capturing":
        banner.textContent = "Capturing…";
        break;
      case "awaiting_response":
        banner.textContent = "Looking around…";
        break;
      case "localized": {
        const pct = ((decision?.confidence ?? 0) * 100).toFixed(1);
        banner.textContent = `You are at: ${decision?.display_name} (${pct}%)`;
        this.mapView?.highlight(decision?.region_id ?? null);
        this.els.infoPanel.innerHTML = "";
        const name = document.createElement("h2");
        name.textContent = decision?.display_name ?? "";
        const trivia = document.createElement("p");
        trivia.className = "trivia";
        trivia.textContent = decision?.trivia ?? "";
        this.els.infoPanel.append(name, trivia);
        break;
      }
      case "rejected":
        // Map and lastRegion stay exactly as they were.
        banner.textContent =
          decision?.guidance ?? "Tank not recognized. Step closer or retry.";
        break;
      case "error":
        banner.textContent = errorMessage ?? "Something went wrong.";
        break;
    }
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof Error) return `network failure: ${err.message}`;
  return "network failure";
}

async function grabFrame(stream: MediaStream): Promise<Blob> {
  const video = document.createElement("video");
  video.srcObject = stream;
  await video.play();
  const canvas = document.createElement("canvas");
  canvas.width = video.videoWidth;
  canvas.height = video.videoHeight;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d canvas context");
  ctx.drawImage(video, 0, 0);
  return new Promise((resolve, reject) =>
    canvas.toBlob(
      (b) => (b ? resolve(b) : reject(new Error("capture failed"))),
      "image/jpeg",
      0.9,
    ),
  );
}
