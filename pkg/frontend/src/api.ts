/** Typed client for the /v1 service API with run polling. */

export interface PoseJson {
  x: number;
  y?: number;
  z: number;
  cos_h?: number;
  sin_h?: number;
}

export interface SceneJson {
  version: number;
  floor: {
    origin: [number, number];
    cell: number;
    width: number;
    height: number;
    walkable: number[]; // run lengths, first run counts blocked cells
  };
  objects: Array<{
    id: string;
    kind: string;
    pose: { position: [number, number, number]; yaw: number };
    half_extents?: [number, number, number];
    category?: string;
  }>;
}

export interface GenerateRequest {
  scene: string;
  kind?: "navigate" | "interact";
  start: PoseJson;
  goal?: PoseJson;
  target_object?: string;
  style?: string;
  seed?: number;
  horizon?: number;
  guidance?: { goal?: number; collision?: number; sdf?: number };
  blend?: { path: Array<[number, number]>; scale: number };
}

export interface RunStatus {
  run_id: string;
  status: "queued" | "running" | "done" | "failed";
  error: string | null;
}

export interface Snapshot {
  step: number;
  frames: Array<[number, number]>; // (x, z) per frame
}

export interface TrajectoryPayload {
  kind: string;
  frame_rate: number;
  frames: number[][];
  raw_frames?: number[][];
  goal: PoseJson;
  snapshots: Snapshot[];
}

export interface MetricsPayload {
  [key: string]: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, init);
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && body.detail) detail = String(body.detail);
    } catch {
      /* not json */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class Client {
  constructor(public base: string = "") {}

  postScene(spec: object): Promise<{ scene_id: string }> {
    return request(this.base, "/v1/scenes", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(spec),
    });
  }

  getScene(id: string): Promise<SceneJson> {
    return request(this.base, `/v1/scenes/${id}`);
  }

  listScenes(): Promise<{ scenes: string[] }> {
    return request(this.base, "/v1/scenes");
  }

  floormapUrl(id: string): string {
    return `${this.base}/v1/scenes/${id}/floormap.png`;
  }

  generate(req: GenerateRequest): Promise<{ run_id: string }> {
    return request(this.base, "/v1/generate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  runStatus(runId: string): Promise<RunStatus> {
    return request(this.base, `/v1/runs/${runId}`);
  }

  trajectory(runId: string): Promise<TrajectoryPayload> {
    return request(this.base, `/v1/runs/${runId}/trajectory.json`);
  }

  metrics(runId: string): Promise<MetricsPayload> {
    return request(this.base, `/v1/runs/${runId}/metrics`);
  }

  /** Poll a run until it reaches a terminal state; throws on failure. */
  async waitForRun(runId: string, intervalMs = 250, timeoutMs = 120_000): Promise<RunStatus> {
    const t0 = Date.now();
    for (;;) {
      const status = await this.runStatus(runId);
      if (status.status === "done") return status;
      if (status.status === "failed") {
        throw new ApiError(500, status.error ?? "run failed");
      }
      if (Date.now() - t0 > timeoutMs) throw new ApiError(408, `run ${runId} timed out`);
      await new Promise((r) => setTimeout(r, intervalMs));
    }
  }
}

/** Expand the run-length encoded walkable bits into a flat boolean array. */
export function decodeWalkable(runs: number[], width: number, height: number): Uint8Array {
  const out = new Uint8Array(width * height);
  let pos = 0;
  let value = 0;
  for (const run of runs) {
    out.fill(value, pos, pos + run);
    pos += run;
    value = value ? 0 : 1;
  }
  if (pos !== out.length) throw new Error("walkable RLE does not match grid size");
  return out;
}
