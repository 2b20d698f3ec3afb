/**
 * Slice-viewer application: wires the DOM to the service client.
 *
 * Workflow mirrors the intended human loop: upload a volume (and optionally
 * a reference mask), scroll slices and window the grayscale, click a seed
 * (graph method) or draw an outline polygon (balloon method), tune
 * parameters, run, and composite the returned overlays over the slice to
 * judge the result; re-seed and re-run as needed.  All metrics shown come
 * from service responses.
 */

import { Client, ServiceError } from "./api.js";
import type { Axis } from "./coords.js";
import {
  canvasSize,
  canvasToMm,
  clickInBounds,
  mmToCanvas,
  mmToInPlane,
  mmToSliceIndex,
  sliceSize,
} from "./coords.js";
import { formatDsc, formatRuntime, formatVolumeCm3, formatVoxels } from "./format.js";
import { outlineProblem } from "./geometry.js";
import { decodeOverlay, maskToRgba, type OverlayPayload } from "./rle.js";
import { REFERENCE_COLOR, ViewerState, type Method, type ResultEntry } from "./state.js";
import { expectedByteLength, maskSlice, type Sidecar } from "./volume.js";

const client = new Client("");
const state = new ViewerState();

// reference mask payload kept client-side to render the green overlay
let referenceDims: [number, number, number] | null = null;
let referenceBytes: Uint8Array | null = null;

const overlayCache = new Map<string, OverlayPayload>();

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const canvas = $("viewport") as unknown as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = $("status");
const sliceImage = new Image();
let sliceLoaded = false;

function setStatus(text: string, isError = false): void {
  statusEl.textContent = text;
  statusEl.className = isError ? "status error" : "status";
}

function geometry() {
  const info = state.session!;
  return {
    axis: state.axis,
    dims: info.dims,
    spacingMm: info.spacing_mm,
    zoom: state.zoom,
  };
}

// --------------------------------------------------------------------------
// uploads
// --------------------------------------------------------------------------

async function readCanonicalPair(files: FileList): Promise<{ sidecar: Sidecar; raw: Uint8Array }> {
  let sidecar: Sidecar | null = null;
  let raw: Uint8Array | null = null;
  for (const file of Array.from(files)) {
    if (file.name.endsWith(".json")) {
      sidecar = JSON.parse(await file.text());
    } else {
      raw = new Uint8Array(await file.arrayBuffer());
    }
  }
  if (!sidecar || !raw) throw new Error("select the .vol.json sidecar together with its .raw file");
  if (raw.length !== expectedByteLength(sidecar)) {
    throw new Error(`raw payload has ${raw.length} bytes, sidecar implies ${expectedByteLength(sidecar)}`);
  }
  return { sidecar, raw };
}

async function uploadVolume(files: FileList): Promise<void> {
  let info;
  if (files.length === 1 && files[0].name.endsWith(".nii")) {
    info = await client.createSessionNifti(await files[0].arrayBuffer());
  } else {
    const { sidecar, raw } = await readCanonicalPair(files);
    info = await client.createSessionCanonical(sidecar, raw);
  }
  state.attachSession(info);
  referenceDims = null;
  referenceBytes = null;
  overlayCache.clear();
  $("session-meta").textContent =
    `${info.dims.join("×")} voxels, ${info.spacing_mm.join("×")} mm, ` +
    `intensity ${info.intensity_range[0].toFixed(0)}..${info.intensity_range[1].toFixed(0)}`;
  syncControls();
  renderResultsPanel();
  await repaint();
  setStatus(`session ${info.session_id.slice(0, 8)} ready`);
}

async function uploadReference(files: FileList): Promise<void> {
  if (!state.session) throw new Error("upload a volume first");
  const { sidecar, raw } = await readCanonicalPair(files);
  await client.attachReference(state.session.session_id, sidecar, raw);
  referenceDims = sidecar.dims;
  referenceBytes = raw;
  state.session.has_reference = true;
  await repaint();
  setStatus("reference mask attached (shown in green)");
}

// --------------------------------------------------------------------------
// painting
// --------------------------------------------------------------------------

function loadSlice(): Promise<void> {
  const info = state.session!;
  sliceLoaded = false;
  return new Promise((resolve, reject) => {
    sliceImage.onload = () => {
      sliceLoaded = true;
      resolve();
    };
    sliceImage.onerror = () => reject(new Error("slice fetch failed"));
    sliceImage.src = client.sliceUrl(
      info.session_id, state.axis, state.index, state.windowCenter, state.windowWidth,
    );
  });
}

function drawBitmask(
  bits: Uint8Array, width: number, height: number,
  color: { r: number; g: number; b: number },
): void {
  const alpha = Math.round(state.overlayOpacity * 255);
  const rgba = maskToRgba(bits, { ...color, a: alpha });
  const off = document.createElement("canvas");
  off.width = width;
  off.height = height;
  off.getContext("2d")!.putImageData(new ImageData(rgba, width, height), 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, width * state.zoom, height * state.zoom);
}

async function overlayFor(entry: ResultEntry): Promise<OverlayPayload> {
  const key = `${entry.id}:${state.axis}:${state.index}`;
  let payload = overlayCache.get(key);
  if (!payload) {
    payload = await client.getOverlay(
      state.session!.session_id, entry.id, state.axis, state.index,
    );
    overlayCache.set(key, payload);
  }
  return payload;
}

function drawMarkers(): void {
  const g = geometry();
  if (state.seed) {
    const pos = mmToCanvas(g, state.seed.mm);
    if (Math.round(pos.sliceIndex) === state.index) {
      ctx.strokeStyle = "#ffea00";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(pos.x - 7, pos.y);
      ctx.lineTo(pos.x + 7, pos.y);
      ctx.moveTo(pos.x, pos.y - 7);
      ctx.lineTo(pos.x, pos.y + 7);
      ctx.stroke();
    }
  }
  const outline = state.outline;
  if (outline && outline.axis === state.axis && outline.index === state.index) {
    ctx.strokeStyle = "#ffea00";
    ctx.fillStyle = "#ffea00";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    outline.pointsMm.forEach((pt, i) => {
      const mm: [number, number, number] = [0, 0, 0];
      const axes = { x: [1, 2], y: [0, 2], z: [0, 1] }[outline.axis];
      mm[axes[0]] = pt[0];
      mm[axes[1]] = pt[1];
      mm[{ x: 0, y: 1, z: 2 }[outline.axis]] =
        outline.index * state.session!.spacing_mm[{ x: 0, y: 1, z: 2 }[outline.axis]];
      const pos = mmToCanvas(geometry(), mm);
      if (i === 0) ctx.moveTo(pos.x, pos.y);
      else ctx.lineTo(pos.x, pos.y);
      ctx.fillRect(pos.x - 2, pos.y - 2, 4, 4);
    });
    if (outline.closed) ctx.closePath();
    ctx.stroke();
  }
}

async function repaint(): Promise<void> {
  if (!state.session) return;
  const size = canvasSize(geometry());
  canvas.width = size.width;
  canvas.height = size.height;
  await loadSlice();
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(sliceImage, 0, 0, size.width, size.height);

  const { width, height } = sliceSize(geometry());
  if (state.referenceVisible && referenceBytes && referenceDims) {
    const slice = maskSlice(referenceDims, referenceBytes, state.axis, state.index);
    drawBitmask(slice.bits, slice.width, slice.height, REFERENCE_COLOR);
  }
  for (const entry of state.results) {
    if (!entry.visible) continue;
    const payload = await overlayFor(entry);
    if (payload.width !== width || payload.height !== height) {
      throw new Error("overlay size does not match the slice raster");
    }
    drawBitmask(decodeOverlay(payload), payload.width, payload.height, entry.color);
  }
  drawMarkers();
}

// --------------------------------------------------------------------------
// interactions
// --------------------------------------------------------------------------

function canvasPoint(event: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return { x: event.clientX - rect.left, y: event.clientY - rect.top };
}

canvasClickHandler();
function canvasClickHandler(): void {
  canvas.addEventListener("click", (event) => {
    if (!state.session) return;
    const { x, y } = canvasPoint(event);
    if (!clickInBounds(geometry(), x, y)) return; // clicks outside the image are ignored
    const mm = canvasToMm(geometry(), state.index, x, y);
    if (state.method === "graph") {
      state.placeSeed(mm);
      setStatus(`seed at (${mm.map((c) => c.toFixed(1)).join(", ")}) mm`);
    } else {
      state.startOrExtendOutline(mmToInPlane(state.axis, mm));
      setStatus(`outline: ${state.outline!.pointsMm.length} points (double-click to close)`);
    }
    void repaint();
  });
  canvas.addEventListener("dblclick", (event) => {
    event.preventDefault();
    closeOutline();
  });
}

function closeOutline(): void {
  const outline = state.outline;
  if (state.method !== "balloon" || !outline || outline.closed) return;
  const problem = outlineProblem(outline.pointsMm);
  if (problem) {
    setStatus(problem, true);
    if (problem.includes("self-intersecting")) state.outline = null;
    void repaint();
    return;
  }
  outline.closed = true;
  setStatus(`outline closed with ${outline.pointsMm.length} points`);
  void repaint();
}

function collectParams(prefix: Method): Record<string, unknown> {
  const params: Record<string, unknown> = {};
  document.querySelectorAll<HTMLInputElement>(`input[data-param-${prefix}]`).forEach((input) => {
    if (input.value.trim() === "") return;
    params[input.dataset[`param${prefix[0].toUpperCase()}${prefix.slice(1)}`]!] =
      Number(input.value);
  });
  return params;
}

async function run(): Promise<void> {
  if (!state.session || state.running) return;
  let request: object;
  if (state.method === "graph") {
    if (!state.seed) {
      setStatus("place a seed point first (click the slice)", true);
      return;
    }
    request = { method: "graph", seed_mm: state.seed.mm, params: collectParams("graph") };
  } else {
    const outline = state.outline;
    if (!outline || !outline.closed) {
      setStatus("draw and close an outline first", true);
      return;
    }
    request = {
      method: "balloon",
      outline: { axis: outline.axis, index: outline.index, polygon_mm: outline.pointsMm },
      params: collectParams("balloon"),
    };
  }
  state.running = true;
  const runButton = $("run") as HTMLButtonElement;
  runButton.disabled = true;
  setStatus(`running ${state.method} segmentation ...`);
  try {
    const response = await client.segment(state.session.session_id, request);
    state.addResult(response);
    renderResultsPanel();
    await repaint();
    setStatus(`${state.method} done in ${formatRuntime(response.runtime_ms)}`);
  } catch (error) {
    if (error instanceof ServiceError) {
      setStatus(`${error.stage} error: ${error.detail}`, true);
    } else {
      setStatus(String(error), true);
    }
  } finally {
    state.running = false;
    runButton.disabled = false;
  }
}

// --------------------------------------------------------------------------
// panels
// --------------------------------------------------------------------------

function metricRows(entry: ResultEntry): string {
  const r = entry.response;
  const dsc = r.dsc !== undefined ? `<span class="dsc">DSC ${formatDsc(r.dsc)}</span>` : "";
  return `
    <span class="swatch" style="background: rgb(${entry.color.r},${entry.color.g},${entry.color.b})"></span>
    <strong>${entry.method}</strong>
    ${formatVolumeCm3(r.volume_cm3)} · ${formatVoxels(r.voxel_count)} ·
    ${formatRuntime(r.runtime_ms)} ${dsc}`;
}

function renderResultsPanel(): void {
  const panel = $("results");
  panel.innerHTML = "";
  if (referenceBytes) {
    const row = document.createElement("label");
    row.className = "result-row";
    row.innerHTML = `<input type="checkbox" ${state.referenceVisible ? "checked" : ""}>
      <span class="swatch" style="background: rgb(0,200,83)"></span> reference mask`;
    row.querySelector("input")!.addEventListener("change", (e) => {
      state.referenceVisible = (e.target as HTMLInputElement).checked;
      void repaint();
    });
    panel.appendChild(row);
  }
  for (const entry of state.results) {
    const row = document.createElement("label");
    row.className = "result-row";
    row.innerHTML = `<input type="checkbox" ${entry.visible ? "checked" : ""}> ${metricRows(entry)}`;
    row.querySelector("input")!.addEventListener("change", (e) => {
      entry.visible = (e.target as HTMLInputElement).checked;
      void repaint();
    });
    panel.appendChild(row);
  }
}

function syncControls(): void {
  const indexInput = $("slice-index") as HTMLInputElement;
  indexInput.max = String(state.maxIndex());
  indexInput.value = String(state.index);
  ($("wc") as HTMLInputElement).value = String(state.windowCenter);
  ($("ww") as HTMLInputElement).value = String(state.windowWidth);
  ($("axis") as HTMLSelectElement).value = state.axis;
  ($("zoom") as HTMLSelectElement).value = String(state.zoom);
  ($("method") as HTMLSelectElement).value = state.method;
  $("index-label").textContent = `${state.index}/${state.maxIndex()}`;
}

async function prefillDefaults(): Promise<void> {
  try {
    const defaults = await client.getDefaults();
    document.querySelectorAll<HTMLInputElement>("input[data-param-graph]").forEach((input) => {
      const value = defaults.graph[input.dataset.paramGraph!];
      if (value !== null && value !== undefined) input.value = String(value);
    });
    document.querySelectorAll<HTMLInputElement>("input[data-param-balloon]").forEach((input) => {
      const value = defaults.balloon[input.dataset.paramBalloon!];
      if (value !== null && value !== undefined) input.value = String(value);
    });
  } catch {
    // service not reachable yet; placeholders stay empty and the server
    // applies its own defaults
  }
}

function wireControls(): void {
  ($("volume-file") as HTMLInputElement).addEventListener("change", (e) => {
    const files = (e.target as HTMLInputElement).files;
    if (files?.length) {
      uploadVolume(files).catch((err) => setStatus(String(err.message ?? err), true));
    }
  });
  ($("reference-file") as HTMLInputElement).addEventListener("change", (e) => {
    const files = (e.target as HTMLInputElement).files;
    if (files?.length) {
      uploadReference(files).catch((err) => setStatus(String(err.message ?? err), true));
    }
  });
  ($("axis") as HTMLSelectElement).addEventListener("change", (e) => {
    state.axis = (e.target as HTMLSelectElement).value as Axis;
    state.index = Math.min(state.index, state.maxIndex());
    syncControls();
    void repaint();
  });
  ($("slice-index") as HTMLInputElement).addEventListener("input", (e) => {
    state.index = Number((e.target as HTMLInputElement).value);
    $("index-label").textContent = `${state.index}/${state.maxIndex()}`;
    void repaint();
  });
  for (const id of ["wc", "ww"] as const) {
    ($(id) as HTMLInputElement).addEventListener("change", (e) => {
      const value = Number((e.target as HTMLInputElement).value);
      if (id === "wc") state.windowCenter = value;
      else state.windowWidth = Math.max(value, 1e-9);
      void repaint();
    });
  }
  ($("zoom") as HTMLSelectElement).addEventListener("change", (e) => {
    state.zoom = Number((e.target as HTMLSelectElement).value);
    void repaint();
  });
  ($("method") as HTMLSelectElement).addEventListener("change", (e) => {
    state.method = (e.target as HTMLSelectElement).value as Method;
    document.body.dataset.method = state.method;
  });
  ($("close-outline") as HTMLButtonElement).addEventListener("click", closeOutline);
  ($("clear-init") as HTMLButtonElement).addEventListener("click", () => {
    state.seed = null;
    state.outline = null;
    setStatus("initialization cleared");
    void repaint();
  });
  ($("opacity") as HTMLInputElement).addEventListener("input", (e) => {
    state.overlayOpacity = Number((e.target as HTMLInputElement).value) / 100;
    void repaint();
  });
  ($("run") as HTMLButtonElement).addEventListener("click", () => void run());
  document.body.dataset.method = state.method;
}

wireControls();
void prefillDefaults();
setStatus("upload a volume (.vol.json + .raw, or .nii) to begin");
