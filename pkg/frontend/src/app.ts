/** Studio app: draw a route, set endpoints, generate, inspect, iterate. */

import { Client, GenerateRequest, SceneJson, TrajectoryPayload } from "./api.js";
import { Point, resamplePolyline, toMeters } from "./coords.js";
import { emptyOverlays, framesToXZ, Overlays, render, snapshotToXZ, viewportFor } from "./mapview.js";
import { metricRows } from "./metrics.js";

type Tool = "start" | "goal" | "draw";

interface RunEntry {
  runId: string;
  seed: number;
  scale: number;
  style: string;
  payload: TrajectoryPayload | null;
  metrics: Record<string, number> | null;
}

class Session {
  client = new Client("");
  sceneId: string | null = null;
  scene: SceneJson | null = null;
  tool: Tool = "draw";
  drawnPx: Point[] = [];
  start: Point | null = null;
  goal: Point | null = null;
  history: RunEntry[] = [];
  busy = false;
  snapshotIndex = -1; // -1 shows the final trajectory

  get viewport() {
    if (!this.scene) throw new Error("no scene loaded");
    return viewportFor(this.scene);
  }

  drawnMeters(): Point[] {
    const v = this.viewport;
    return this.drawnPx.map((p) => toMeters(v, p));
  }
}

const session = new Session();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function canvas(): HTMLCanvasElement {
  return el<HTMLCanvasElement>("map");
}

function status(text: string, isError = false): void {
  const bar = el<HTMLDivElement>("status");
  bar.textContent = text;
  bar.className = isError ? "status error" : "status";
}

function currentOverlays(): Overlays {
  const o = emptyOverlays();
  if (session.drawnPx.length > 1 && session.scene) o.drawn = session.drawnMeters();
  o.start = session.start;
  o.goal = session.goal;
  const run = session.history[0];
  if (run?.payload) {
    if (session.snapshotIndex >= 0 && run.payload.snapshots[session.snapshotIndex]) {
      o.snapshot = snapshotToXZ(run.payload.snapshots[session.snapshotIndex]);
    }
    o.trajectory = framesToXZ(run.payload.frames);
  }
  return o;
}

function redraw(): void {
  if (!session.scene) return;
  const ctx = canvas().getContext("2d");
  if (!ctx) return;
  render(ctx, session.scene, session.viewport, currentOverlays());
}

async function loadScene(id: string): Promise<void> {
  session.scene = await session.client.getScene(id);
  session.sceneId = id;
  session.drawnPx = [];
  session.start = null;
  session.goal = null;
  const [w, h] = [session.scene.floor.width, session.scene.floor.height];
  const v = session.viewport;
  canvas().width = w * v.scale;
  canvas().height = h * v.scale;
  status(`scene ${id} (${w}x${h} cells)`);
  redraw();
}

async function newScene(): Promise<void> {
  const seed = Number(el<HTMLInputElement>("scene-seed").value) || 0;
  const { scene_id } = await session.client.postScene({ seed, difficulty: 0.6, with_chair: true });
  await loadScene(scene_id);
}

function renderMetrics(run: RunEntry): void {
  const table = el<HTMLTableElement>("metrics");
  table.innerHTML = "";
  if (!run.metrics) return;
  for (const row of metricRows(run.metrics)) {
    const tr = table.insertRow();
    tr.insertCell().textContent = row.label;
    const td = tr.insertCell();
    td.textContent = row.text;
    td.title = String(row.value); // exact payload value on hover
  }
}

function renderHistory(): void {
  const list = el<HTMLUListElement>("history");
  list.innerHTML = "";
  for (const run of session.history) {
    const li = document.createElement("li");
    const pos = run.metrics ? ` pos ${run.metrics.goal_pos_err?.toFixed(3)} m` : "";
    li.textContent = `run ${run.runId.slice(0, 8)} seed ${run.seed} s=${run.scale}${pos}`;
    list.appendChild(li);
  }
}

function setupScrub(run: RunEntry): void {
  const scrub = el<HTMLInputElement>("scrub");
  const count = run.payload?.snapshots.length ?? 0;
  scrub.max = String(count - 1);
  scrub.value = String(count - 1);
  session.snapshotIndex = count - 1;
}

async function generate(): Promise<void> {
  if (!session.sceneId || session.busy) return;
  if (!session.start || !session.goal) {
    status("set a start and a goal first", true);
    return;
  }
  session.busy = true;
  el<HTMLButtonElement>("generate").disabled = true;
  try {
    const scale = Number(el<HTMLInputElement>("blend-scale").value);
    const seed = Number(el<HTMLInputElement>("seed").value) || 0;
    const style = el<HTMLSelectElement>("style").value;
    const horizon = 100;
    const req: GenerateRequest = {
      scene: session.sceneId,
      kind: "navigate",
      start: { x: session.start[0], z: session.start[1] },
      goal: { x: session.goal[0], z: session.goal[1] },
      style,
      seed,
      horizon,
      guidance: {
        goal: el<HTMLInputElement>("guide-goal").checked ? 30 : 0,
        collision: el<HTMLInputElement>("guide-collision").checked ? 1000 : 0,
      },
    };
    const drawn = session.drawnMeters();
    if (drawn.length > 1) {
      // the drawn route is resampled client-side to the model horizon
      req.blend = { path: resamplePolyline(drawn, horizon), scale };
    }
    status("generating...");
    const { run_id } = await session.client.generate(req);
    await session.client.waitForRun(run_id);
    const payload = await session.client.trajectory(run_id);
    const metrics = await session.client.metrics(run_id);
    const entry: RunEntry = { runId: run_id, seed, scale, style, payload, metrics };
    session.history.unshift(entry);
    renderMetrics(entry);
    renderHistory();
    setupScrub(entry);
    status(`run ${run_id.slice(0, 8)} done`);
  } catch (err) {
    status(String(err), true);
  } finally {
    session.busy = false;
    el<HTMLButtonElement>("generate").disabled = false;
    redraw();
  }
}

function canvasPoint(ev: MouseEvent): Point {
  const rect = canvas().getBoundingClientRect();
  return [ev.clientX - rect.left, ev.clientY - rect.top];
}

function wirePointerEvents(): void {
  let drawing = false;
  const node = canvas();
  node.addEventListener("mousedown", (ev) => {
    if (!session.scene) return;
    const px = canvasPoint(ev);
    if (session.tool === "start") {
      session.start = toMeters(session.viewport, px);
    } else if (session.tool === "goal") {
      session.goal = toMeters(session.viewport, px);
    } else {
      drawing = true;
      session.drawnPx = [px];
    }
    redraw();
  });
  node.addEventListener("mousemove", (ev) => {
    if (!drawing) return;
    session.drawnPx.push(canvasPoint(ev));
    redraw();
  });
  const stop = () => {
    drawing = false;
    redraw();
  };
  node.addEventListener("mouseup", stop);
  node.addEventListener("mouseleave", stop);
}

function wireControls(): void {
  el<HTMLButtonElement>("new-scene").addEventListener("click", () => void newScene());
  el<HTMLButtonElement>("generate").addEventListener("click", () => void generate());
  el<HTMLButtonElement>("clear-path").addEventListener("click", () => {
    session.drawnPx = [];
    redraw();
  });
  for (const tool of ["start", "goal", "draw"] as Tool[]) {
    el<HTMLInputElement>(`tool-${tool}`).addEventListener("change", () => {
      session.tool = tool;
    });
  }
  el<HTMLInputElement>("blend-scale").addEventListener("input", () => {
    el<HTMLSpanElement>("blend-scale-value").textContent =
      el<HTMLInputElement>("blend-scale").value;
  });
  el<HTMLInputElement>("scrub").addEventListener("input", () => {
    session.snapshotIndex = Number(el<HTMLInputElement>("scrub").value);
    redraw();
  });
}

export async function start(): Promise<void> {
  wirePointerEvents();
  wireControls();
  try {
    const { scenes } = await session.client.listScenes();
    if (scenes.length > 0) {
      await loadScene(scenes[0]);
    } else {
      await newScene();
    }
  } catch (err) {
    status(`service unavailable: ${String(err)}`, true);
  }
}

if (typeof document !== "undefined" && document.getElementById("map")) {
  void start();
}
