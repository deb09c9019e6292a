/** DOM wiring for the threshold-review page.
 *
 * Single session per tab. Slider input is debounced (one preview request per
 * quiet window); superseded in-flight previews are cancelled; the boundary
 * gallery refreshes on slider release. Commit asks for confirmation with the
 * exact service-reported numbers, then locks the session read-only.
 */

import { ApiError, ReviewApi } from "./api.ts";
import type { BoundaryGallery, MapPayload } from "./api.ts";
import { debounce, LatestWins, SLIDER_DEBOUNCE_MS } from "./debounce.ts";
import { commitConfirmation, formatCount, formatPercent, formatThreshold } from "./format.ts";
import { drawHeatmap, type OverlayMode } from "./heatmap.ts";
import {
  ackPreview,
  applyCommitSuccess,
  canCommit,
  clearError,
  initialState,
  isStale,
  moveSlider,
  selectMap,
  setError,
  startSession,
  type ViewState,
} from "./state.ts";

const api = new ReviewApi("");
const previewRace = new LatestWins();

let state: ViewState = initialState();
let mapPayload: MapPayload | null = null;
let gallery: BoundaryGallery | null = null;
let overlayMode: OverlayMode = "binary";
let overlayOpacity = 0.8;

const el = {
  maps: document.getElementById("map-list") as HTMLSelectElement,
  canvas: document.getElementById("heatmap") as HTMLCanvasElement,
  slider: document.getElementById("threshold") as HTMLInputElement,
  sliderValue: document.getElementById("threshold-value") as HTMLSpanElement,
  stats: document.getElementById("stats") as HTMLDivElement,
  banner: document.getElementById("error-banner") as HTMLDivElement,
  gallery: document.getElementById("gallery") as HTMLDivElement,
  commit: document.getElementById("commit") as HTMLButtonElement,
  samples: document.getElementById("n-samples") as HTMLInputElement,
  allCells: document.getElementById("all-cells") as HTMLInputElement,
  manifest: document.getElementById("manifest-path") as HTMLDivElement,
  mode: document.getElementById("overlay-mode") as HTMLSelectElement,
  opacity: document.getElementById("overlay-opacity") as HTMLInputElement,
};

function render(): void {
  el.banner.textContent = state.error ?? "";
  el.banner.style.display = state.error ? "block" : "none";

  el.sliderValue.textContent = formatThreshold(state.sliderThreshold);
  const locked = state.sessionStatus === "COMMITTED";
  el.slider.disabled = locked || state.mapId === null;
  el.commit.disabled = !canCommit(state);

  if (state.stats && !isStale(state)) {
    el.stats.textContent =
      `${formatCount(state.stats.positiveCount)} of ` +
      `${formatCount(state.stats.nCells)} cells positive ` +
      `(${formatPercent(state.stats.positiveFraction)}) ` +
      `at threshold ${formatThreshold(state.stats.threshold)}`;
  } else if (state.mapId) {
    el.stats.textContent = "updating…";
  } else {
    el.stats.textContent = "select a map";
  }

  el.manifest.textContent = state.committedManifest
    ? `committed → ${state.committedManifest}`
    : "";

  if (mapPayload) {
    drawHeatmap(el.canvas, mapPayload.preview, state.sliderThreshold, overlayMode, overlayOpacity);
  }
  renderGallery();
}

function renderGallery(): void {
  el.gallery.replaceChildren();
  if (!gallery) return;
  const column = (title: string, items: BoundaryGallery["positives"]) => {
    const div = document.createElement("div");
    div.className = "gallery-column";
    const h = document.createElement("h3");
    h.textContent = title;
    div.appendChild(h);
    for (const item of items) {
      const fig = document.createElement("figure");
      const img = document.createElement("img");
      img.src = `data:image/png;base64,${item.thumbnail_png_base64}`;
      img.alt = `patch (${item.grid_x}, ${item.grid_y})`;
      const cap = document.createElement("figcaption");
      cap.textContent = `p=${item.prob.toFixed(3)} @ (${item.grid_x}, ${item.grid_y})`;
      fig.append(img, cap);
      div.appendChild(fig);
    }
    return div;
  };
  el.gallery.append(
    column("just above threshold", gallery.positives),
    column("just below threshold", gallery.negatives),
  );
}

async function refreshPreview(): Promise<void> {
  if (!state.mapId) return;
  const mapId = state.mapId;
  const t = state.sliderThreshold;
  try {
    const preview = await previewRace.run((signal) =>
      api.previewThreshold(mapId, t, signal),
    );
    if (preview) {
      state = ackPreview(state, preview);
      render();
    }
  } catch (err) {
    state = setError(state, describe(err));
    render();
  }
}

const debouncedPreview = debounce(refreshPreview, SLIDER_DEBOUNCE_MS);

async function refreshGallery(): Promise<void> {
  if (!state.mapId || !mapPayload?.has_pixels) {
    gallery = null;
    render();
    return;
  }
  try {
    gallery = await api.samplePatches(state.mapId, state.sliderThreshold, 6);
  } catch (err) {
    gallery = null;
    if (!(err instanceof ApiError && err.status === 409)) {
      state = setError(state, describe(err));
    }
  }
  render();
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.detail;
  return "service unreachable — check the review server and reload";
}

async function loadMaps(): Promise<void> {
  try {
    const maps = await api.listMaps();
    el.maps.replaceChildren(new Option("— select a map —", ""));
    for (const m of maps) {
      const label = `${m.slide_id} (${m.cancer_type ?? "?"}, ${formatCount(m.n_cells)} cells, ${m.status})`;
      el.maps.appendChild(new Option(label, m.map_id));
    }
  } catch (err) {
    state = setError(state, describe(err));
    render();
  }
}

async function openMap(mapId: string): Promise<void> {
  state = selectMap(state, mapId);
  gallery = null;
  mapPayload = null;
  render();
  try {
    mapPayload = await api.getMap(mapId);
    const session = await api.createSession(mapId);
    state = startSession(state, session);
    state = clearError(state);
    render();
    await refreshPreview();
    await refreshGallery();
  } catch (err) {
    state = setError(state, describe(err));
    render();
  }
}

async function commitFlow(): Promise<void> {
  if (!canCommit(state) || !state.sessionId || !state.stats) return;
  const nSamples: number | "ALL" = el.allCells.checked
    ? "ALL"
    : Math.max(1, Number(el.samples.value) || 1);
  if (!window.confirm(commitConfirmation(state.stats, nSamples))) {
    return; // cancel: no request, session unchanged
  }
  try {
    const result = await api.commit(state.sessionId, state.stats.threshold, nSamples, 0);
    state = applyCommitSuccess(state, result);
  } catch (err) {
    // conflict detail verbatim; network failure leaves the session visibly OPEN
    state = setError(state, describe(err));
  }
  render();
}

function wire(): void {
  el.maps.addEventListener("change", () => {
    if (el.maps.value) void openMap(el.maps.value);
  });
  el.slider.addEventListener("input", () => {
    state = moveSlider(state, Number(el.slider.value));
    render();
    debouncedPreview();
  });
  el.slider.addEventListener("change", () => {
    void refreshGallery();
  });
  el.commit.addEventListener("click", () => void commitFlow());
  el.mode.addEventListener("change", () => {
    overlayMode = el.mode.value === "probability" ? "probability" : "binary";
    render();
  });
  el.opacity.addEventListener("input", () => {
    overlayOpacity = Number(el.opacity.value);
    render();
  });
  render();
  void loadMaps();
}

wire();
