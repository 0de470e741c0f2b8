// UI state rules. Everything here derives from the most recent service
// responses; nothing is predicted locally, so a control that would be
// rejected by the rig is disabled rather than optimistically allowed.

import type { Lifecycle, RunRow } from "./types.js";

export interface Controls {
  start: boolean;
  pause: boolean;
  resume: boolean;
  evaluate: boolean;
  stop: boolean;
}

const NONE: Controls = { start: false, pause: false, resume: false, evaluate: false, stop: false };

/**
 * Which buttons are live for the selected run. `busy` is the service-wide
 * flag: some run (possibly this one) is learning or evaluating, which the
 * single rig serializes.
 */
export function controlsFor(run: RunRow | null, busy: boolean): Controls {
  if (run === null) return { ...NONE, start: !busy };
  switch (run.state) {
    case "learning":
      return { ...NONE, pause: true, evaluate: true, stop: true };
    case "paused":
      // Resuming or evaluating claims the rig, so both need it free.
      return { ...NONE, resume: !busy, evaluate: !busy, stop: true };
    case "evaluating":
      return { ...NONE, stop: true };
    case "finished":
      return { ...NONE, start: !busy };
    case "idle":
      return NONE;
  }
}

export function describeState(state: Lifecycle | null, connected: boolean): string {
  if (!connected) return "disconnected";
  return state ?? "no run";
}

/**
 * Fixed-capacity sample window. Old samples fall off the front so a long
 * run cannot grow the tab's memory without bound.
 */
export class RollingWindow<T> {
  private items: T[] = [];

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("window capacity must be positive");
  }

  push(item: T): void {
    this.items.push(item);
    if (this.items.length > this.capacity) {
      this.items.splice(0, this.items.length - this.capacity);
    }
  }

  pushAll(batch: readonly T[]): void {
    for (const item of batch) this.push(item);
  }

  get length(): number {
    return this.items.length;
  }

  toArray(): readonly T[] {
    return this.items;
  }

  clear(): void {
    this.items = [];
  }
}

/** Delay before reconnect attempt n (0-based): 0.5s doubling, capped at 8s. */
export function reconnectDelay(attempt: number): number {
  const base = 500 * 2 ** Math.max(0, attempt);
  return Math.min(8000, base);
}
