// Thin HTTP client for the monitor service. One method per endpoint, no
// caching, no retries except inside streamTelemetry where a dropped
// connection is expected during long runs.

import { ndjsonLines, parseCurveCsv, parseTelemetryLine } from "./ndjson.js";
import { reconnectDelay } from "./viewmodel.js";
import type { CurvePoint, EvalRecord, Lifecycle, StatusDoc, TelemetrySample } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
    detail: string,
  ) {
    super(`${kind}: ${detail}`);
    this.name = "ApiError";
  }
}

async function raiseFor(res: Response): Promise<never> {
  let kind = "HttpError";
  let detail = `${res.status} ${res.statusText}`;
  try {
    const doc = (await res.json()) as { error?: string; detail?: string };
    if (typeof doc.error === "string") kind = doc.error;
    if (typeof doc.detail === "string") detail = doc.detail;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(res.status, kind, detail);
}

export type RunCommand = "pause" | "resume" | "evaluate" | "stop";

export interface EvaluateResult {
  record: EvalRecord;
  index: number;
  state: Lifecycle;
}

export interface StreamHandle {
  /** Resolves when the stream ends for good (stop() called or run finished). */
  done: Promise<void>;
  stop: () => void;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async status(): Promise<StatusDoc> {
    const res = await fetch(this.url("/api/status"));
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as StatusDoc;
  }

  async startRun(config: Record<string, unknown>): Promise<{ id: string; state: Lifecycle }> {
    const res = await fetch(this.url("/api/runs"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as { id: string; state: Lifecycle };
  }

  /** Starts a run from flat "key = value" lines, the service's text form. */
  async startRunFlat(text: string): Promise<{ id: string; state: Lifecycle }> {
    const res = await fetch(this.url("/api/runs"), {
      method: "POST",
      headers: { "content-type": "text/plain; charset=utf-8" },
      body: text,
    });
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as { id: string; state: Lifecycle };
  }

  async command(runId: string, cmd: Exclude<RunCommand, "evaluate">): Promise<Lifecycle> {
    const res = await fetch(this.url(`/api/runs/${runId}/${cmd}`), { method: "POST" });
    if (!res.ok) await raiseFor(res);
    const doc = (await res.json()) as { state: Lifecycle };
    return doc.state;
  }

  async evaluate(runId: string): Promise<EvaluateResult> {
    const res = await fetch(this.url(`/api/runs/${runId}/evaluate`), { method: "POST" });
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as EvaluateResult;
  }

  async curve(runId: string): Promise<CurvePoint[]> {
    const res = await fetch(this.url(`/api/runs/${runId}/curve`));
    if (!res.ok) await raiseFor(res);
    return parseCurveCsv(await res.text());
  }

  async evalTrace(runId: string, index: number): Promise<TelemetrySample[]> {
    const res = await fetch(this.url(`/api/runs/${runId}/evals/${index}`));
    if (!res.ok) await raiseFor(res);
    const out: TelemetrySample[] = [];
    const text = await res.text();
    for (const line of text.split("\n")) {
      if (line.trim().length > 0) out.push(parseTelemetryLine(line));
    }
    return out;
  }

  /**
   * Streams live telemetry, reconnecting with exponential backoff when the
   * connection drops mid-run. If the run finishes while disconnected the
   * next attempt gets a full-file replay; the (episode, step) cursor drops
   * the prefix we already rendered.
   */
  streamTelemetry(
    runId: string,
    onSample: (sample: TelemetrySample) => void,
    onState?: (state: "connected" | "retrying" | "closed") => void,
  ): StreamHandle {
    let stopped = false;
    const controller = { abort: new AbortController() };

    const done = (async () => {
      let attempt = 0;
      let lastKey = -1;
      while (!stopped) {
        try {
          const res = await fetch(this.url(`/api/runs/${runId}/telemetry`), {
            signal: controller.abort.signal,
          });
          if (!res.ok) await raiseFor(res);
          if (res.body === null) throw new Error("telemetry response has no body");
          onState?.("connected");
          attempt = 0;
          for await (const line of ndjsonLines(res.body)) {
            if (stopped) break;
            const sample = parseTelemetryLine(line);
            if (sample.state === "evaluating") {
              // Eval overlay samples are live-only and restart their step
              // counter, so they bypass the replay dedup below.
              onSample(sample);
              continue;
            }
            const key = sample.episode * 2 ** 20 + sample.step;
            if (key <= lastKey) continue;
            lastKey = key;
            onSample(sample);
          }
          // Server closed the stream: the run finished. Done.
          break;
        } catch (err) {
          if (stopped) break;
          if (err instanceof ApiError && (err.status === 404 || err.status === 400)) throw err;
          onState?.("retrying");
          await sleep(reconnectDelay(attempt));
          attempt += 1;
        }
      }
      onState?.("closed");
    })();

    return {
      done,
      stop: () => {
        stopped = true;
        controller.abort.abort();
      },
    };
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
