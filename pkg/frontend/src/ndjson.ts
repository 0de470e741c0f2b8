// Incremental NDJSON / CSV decoding. The splitter is a plain state machine
// over already-decoded text so it can be unit tested without streams; the
// async generator glues it to a fetch body.

import type { CurvePoint, TelemetrySample } from "./types.js";

/**
 * Accumulates text chunks and yields complete lines. Chunk boundaries may
 * fall anywhere, including between \r and \n. Blank lines are dropped.
 */
export class LineSplitter {
  private tail = "";

  push(chunk: string): string[] {
    this.tail += chunk;
    const out: string[] = [];
    for (;;) {
      const nl = this.tail.indexOf("\n");
      if (nl < 0) break;
      let line = this.tail.slice(0, nl);
      this.tail = this.tail.slice(nl + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);
      if (line.length > 0) out.push(line);
    }
    return out;
  }

  /** Returns any unterminated final line, or null if the buffer is clean. */
  flush(): string | null {
    const rest = this.tail.endsWith("\r") ? this.tail.slice(0, -1) : this.tail;
    this.tail = "";
    return rest.length > 0 ? rest : null;
  }
}

export function parseTelemetryLine(line: string): TelemetrySample {
  const doc = JSON.parse(line) as Record<string, unknown>;
  for (const key of ["t", "episode", "step", "x_true", "x_est", "v_est", "reward", "ret"]) {
    if (typeof doc[key] !== "number") {
      throw new Error(`telemetry line missing numeric "${key}": ${line.slice(0, 120)}`);
    }
  }
  if (doc.action !== "left" && doc.action !== "right") {
    throw new Error(`telemetry line has bad action: ${String(doc.action)}`);
  }
  return doc as unknown as TelemetrySample;
}

/**
 * Parses the learning-curve CSV (header "episode,steps,return,reason").
 * Tolerates a trailing newline; rejects rows with the wrong arity so a
 * truncated download fails loudly instead of plotting garbage.
 */
export function parseCurveCsv(text: string): CurvePoint[] {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) return [];
  const header = lines[0];
  if (header !== "episode,steps,return,reason") {
    throw new Error(`unexpected curve header: ${header}`);
  }
  const points: CurvePoint[] = [];
  for (const row of lines.slice(1)) {
    const cols = row.split(",");
    if (cols.length !== 4) throw new Error(`bad curve row: ${row}`);
    const episode = Number(cols[0]);
    const steps = Number(cols[1]);
    const ret = Number(cols[2]);
    if (!Number.isFinite(episode) || !Number.isFinite(steps) || !Number.isFinite(ret)) {
      throw new Error(`non-numeric curve row: ${row}`);
    }
    points.push({ episode, steps, ret, reason: cols[3] ?? "" });
  }
  return points;
}

/**
 * Reads an NDJSON body as an async stream of parsed lines. Decoding is
 * streaming-safe for multi-byte UTF-8 via TextDecoder's stream mode.
 */
export async function* ndjsonLines(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<string, void, void> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  const splitter = new LineSplitter();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const line of splitter.push(decoder.decode(value, { stream: true }))) {
        yield line;
      }
    }
    const last = splitter.flush();
    if (last !== null) yield last;
  } finally {
    reader.releaseLock();
  }
}
