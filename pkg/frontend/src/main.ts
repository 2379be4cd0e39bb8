/**
 * DOM wiring: canvas stack (base pixels + geometry overlay), tool buttons,
 * parameter panel, and the AppCore presenter.
 *
 * The base canvas is only ever painted from service PNG bytes (decoded with
 * createImageBitmap); regions, strokes and the source/target boundary
 * toggle render on the transparent overlay, so toggling them never touches
 * the image pixels.
 */

import { QbrushApi } from "./api.js";
import { AppCore, Presenter, Tool } from "./app.js";
import { Region } from "./schema.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const canvas = byId<HTMLCanvasElement>("canvas");
const overlay = byId<HTMLCanvasElement>("overlay");
const statusLine = byId<HTMLDivElement>("status");
const warnLine = byId<HTMLDivElement>("warning");
const progressBar = byId<HTMLProgressElement>("progress");
const usedDistance = byId<HTMLSpanElement>("used-distance");
const tSlider = byId<HTMLInputElement>("t-slider");
const tValue = byId<HTMLSpanElement>("t-value");

const ctx = canvas.getContext("2d")!;
const overlayCtx = overlay.getContext("2d")!;

function apiBase(): string {
  const fromQuery = new URLSearchParams(location.search).get("api");
  return fromQuery ?? byId<HTMLInputElement>("api-base").value ?? location.origin;
}

const TOOL_COLORS: Record<string, string> = {
  source: "#2e9df0",
  target: "#f0662e",
  paste: "#2ef07e",
  stroke: "#d32ef0",
};

let lastPng: Uint8Array | null = null;

async function paint(png: Uint8Array): Promise<void> {
  lastPng = png;
  const buffer = png.buffer.slice(png.byteOffset, png.byteOffset + png.byteLength) as ArrayBuffer;
  const bitmap = await createImageBitmap(new Blob([buffer], { type: "image/png" }));
  canvas.width = overlay.width = bitmap.width;
  canvas.height = overlay.height = bitmap.height;
  ctx.drawImage(bitmap, 0, 0);
  drawOverlay();
}

const presenter: Presenter = {
  present: (png) => void paint(png),
  status: (text) => {
    statusLine.textContent = text;
    warnLine.textContent = "";
  },
  progress: (fraction) => {
    progressBar.hidden = fraction === null;
    if (fraction !== null) progressBar.value = fraction;
  },
  usedDistance: (d) => {
    usedDistance.textContent = d === null ? "-" : `${d.toFixed(6)} A`;
  },
  warn: (text) => {
    warnLine.textContent = text;
  },
  geometryChanged: () => drawOverlay(),
};

const app = new AppCore(new QbrushApi(apiBase()), presenter);

// ---------------------------------------------------------------------------
// overlay rendering
// ---------------------------------------------------------------------------

function tracePolygon(c: CanvasRenderingContext2D, vertices: [number, number][]): void {
  c.beginPath();
  c.moveTo(vertices[0][0], vertices[0][1]);
  for (const [x, y] of vertices.slice(1)) c.lineTo(x, y);
  c.closePath();
}

function drawRegion(region: Region | null, color: string, width = 1.5): void {
  if (!region) return;
  overlayCtx.strokeStyle = color;
  overlayCtx.lineWidth = width;
  if (region.kind === "lasso-polygon") {
    tracePolygon(overlayCtx, region.vertices);
    overlayCtx.stroke();
  } else if (region.kind === "circle") {
    overlayCtx.beginPath();
    overlayCtx.arc(region.center[0], region.center[1], region.radius, 0, 2 * Math.PI);
    overlayCtx.stroke();
  } else {
    overlayCtx.beginPath();
    overlayCtx.arc(region.point[0], region.point[1], 3, 0, 2 * Math.PI);
    overlayCtx.fillStyle = color;
    overlayCtx.fill();
  }
}

function drawOverlay(): void {
  overlayCtx.clearRect(0, 0, overlay.width, overlay.height);
  const showBoundaries = byId<HTMLInputElement>("show-boundaries").checked;
  if (showBoundaries) {
    const color = byId<HTMLInputElement>("boundary-color").value;
    const width = Number(byId<HTMLInputElement>("boundary-thickness").value) || 1;
    drawRegion(app.source, color, width);
    drawRegion(app.target, color, width);
  } else {
    drawRegion(app.source, TOOL_COLORS.source);
    drawRegion(app.target, TOOL_COLORS.target);
  }
  drawRegion(app.paste, TOOL_COLORS.paste);
  if (app.stroke) {
    overlayCtx.strokeStyle = TOOL_COLORS.stroke;
    overlayCtx.lineWidth = app.stroke.radius * 2;
    overlayCtx.lineCap = "round";
    overlayCtx.globalAlpha = 0.35;
    overlayCtx.beginPath();
    overlayCtx.moveTo(app.stroke.points[0][0], app.stroke.points[0][1]);
    for (const [x, y] of app.stroke.points.slice(1)) overlayCtx.lineTo(x, y);
    overlayCtx.stroke();
    overlayCtx.globalAlpha = 1.0;
  }
  if (app.inProgress.length > 1) {
    overlayCtx.strokeStyle = "#ffffff";
    overlayCtx.lineWidth = 1;
    overlayCtx.setLineDash([4, 3]);
    overlayCtx.beginPath();
    overlayCtx.moveTo(app.inProgress[0][0], app.inProgress[0][1]);
    for (const [x, y] of app.inProgress.slice(1)) overlayCtx.lineTo(x, y);
    overlayCtx.stroke();
    overlayCtx.setLineDash([]);
  }
}

// ---------------------------------------------------------------------------
// pointer events
// ---------------------------------------------------------------------------

function canvasPoint(event: PointerEvent): [number, number] {
  const rect = overlay.getBoundingClientRect();
  return [
    ((event.clientX - rect.left) / rect.width) * overlay.width,
    ((event.clientY - rect.top) / rect.height) * overlay.height,
  ];
}

let drawing = false;
overlay.addEventListener("pointerdown", (event) => {
  drawing = true;
  overlay.setPointerCapture(event.pointerId);
  const [x, y] = canvasPoint(event);
  app.pointerDown(x, y);
});
overlay.addEventListener("pointermove", (event) => {
  if (!drawing) return;
  const [x, y] = canvasPoint(event);
  app.pointerMove(x, y);
  drawOverlay();
});
overlay.addEventListener("pointerup", () => {
  drawing = false;
  app.pointerUp(Number(byId<HTMLInputElement>("chem-radius").value) || 3);
  drawOverlay();
});

// ---------------------------------------------------------------------------
// controls
// ---------------------------------------------------------------------------

for (const tool of ["lasso-source", "lasso-target", "lasso-paste", "paste-point", "stroke"]) {
  byId<HTMLInputElement>(`tool-${tool}`).addEventListener("change", () => {
    app.setTool(tool as Tool);
  });
}

byId<HTMLInputElement>("file").addEventListener("change", async (event) => {
  const input = event.target as HTMLInputElement;
  const file = input.files?.[0];
  if (!file) return;
  try {
    await app.openImage(file);
  } catch (err) {
    presenter.warn(`upload failed: ${err instanceof Error ? err.message : err}`);
  }
});

byId<HTMLButtonElement>("run-steerable").addEventListener("click", async () => {
  try {
    const job = await app.runSteerable({
      t: Number(byId<HTMLInputElement>("param-t").value),
      timestep: Number(byId<HTMLInputElement>("param-timestep").value),
      controls: Number(byId<HTMLSelectElement>("param-controls").value),
      seed: Number(byId<HTMLInputElement>("param-seed").value),
      max_iters: Number(byId<HTMLInputElement>("param-iters").value),
      source_equals_paste: byId<HTMLInputElement>("source-equals-paste").checked,
      show_source_target: byId<HTMLInputElement>("show-boundaries").checked,
    });
    if (job.status === "done") {
      tSlider.disabled = false;
      tSlider.value = byId<HTMLInputElement>("param-t").value;
      tValue.textContent = tSlider.value;
    }
  } catch (err) {
    presenter.warn(err instanceof Error ? err.message : String(err));
  }
});

tSlider.addEventListener("input", () => {
  tValue.textContent = tSlider.value;
  app.slideT(Number(tSlider.value));
});

byId<HTMLButtonElement>("run-chemical").addEventListener("click", async () => {
  try {
    await app.runChemical({
      bond_distance: Number(byId<HTMLInputElement>("param-distance").value),
      repetitions: Number(byId<HTMLInputElement>("param-reps").value),
      radius: Number(byId<HTMLInputElement>("chem-radius").value),
    });
  } catch (err) {
    presenter.warn(err instanceof Error ? err.message : String(err));
  }
});

byId<HTMLButtonElement>("undo").addEventListener("click", async () => {
  try {
    await app.undo();
  } catch (err) {
    presenter.warn(err instanceof Error ? err.message : String(err));
  }
});

byId<HTMLInputElement>("show-boundaries").addEventListener("change", drawOverlay);
byId<HTMLInputElement>("boundary-color").addEventListener("input", drawOverlay);
byId<HTMLInputElement>("boundary-thickness").addEventListener("input", drawOverlay);

// re-point the API client when the base URL field changes
byId<HTMLInputElement>("api-base").addEventListener("change", () => {
  location.search = `?api=${encodeURIComponent(byId<HTMLInputElement>("api-base").value)}`;
});

export { app, lastPng };
