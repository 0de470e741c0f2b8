// Wire types for the monitor service. Field names mirror the JSON/CSV
// payloads exactly; parsing stays dumb so a server change shows up as a
// type error here rather than NaNs in a chart.

export type Lifecycle = "idle" | "learning" | "paused" | "evaluating" | "finished";

export const LIFECYCLES: readonly Lifecycle[] = [
  "idle",
  "learning",
  "paused",
  "evaluating",
  "finished",
];

export function isLifecycle(value: unknown): value is Lifecycle {
  return typeof value === "string" && (LIFECYCLES as readonly string[]).includes(value);
}

/** One NDJSON telemetry line: a single control period of the rig. */
export interface TelemetrySample {
  t: number;
  episode: number;
  step: number;
  x_true: number;
  x_est: number;
  v_est: number;
  action: "left" | "right";
  reward: number;
  ret: number;
  state: string;
}

/** One row of GET /api/status "runs". */
export interface RunRow {
  id: string;
  state: Lifecycle;
  agent: string;
  seed: number;
  episodes_done: number;
  episodes_total: number;
  evals: number;
  started_at: number;
}

export interface StatusDoc {
  runs: RunRow[];
  busy: boolean;
  time: number;
}

/** One line of the learning curve CSV (episode,steps,return,reason). */
export interface CurvePoint {
  episode: number;
  steps: number;
  ret: number;
  reason: string;
}

/** Greedy evaluation summary returned by POST .../evaluate. */
export interface EvalRecord {
  episode: number;
  steps: number;
  return: number;
  reason: string;
  wall_time: number;
}

/** Track geometry used only for drawing the replay backdrop. */
export interface TrackShape {
  halfLength: number;
  amplitude: number;
  goalX: number;
}

export const DEFAULT_TRACK: TrackShape = { halfLength: 120, amplitude: 40, goalX: -80 };

/** Height profile of the valley at position x, for the replay backdrop. */
export function trackHeight(track: TrackShape, x: number): number {
  return track.amplitude * (1 - Math.cos((Math.PI * x) / track.halfLength));
}
