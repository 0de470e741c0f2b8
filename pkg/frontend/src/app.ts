// Dashboard entry point. Wires the API client to the DOM: a 1 Hz status
// poll drives run state and controls, an NDJSON stream feeds the live
// charts, and evaluation traces replay on the track view. All state shown
// comes from service responses; the page never simulates the rig itself.

import { ApiClient, ApiError, type StreamHandle } from "./api.js";
import { ActionStrip, StripChart, TrackView } from "./charts.js";
import { DEFAULT_TRACK, type RunRow, type StatusDoc, type TelemetrySample } from "./types.js";
import { controlsFor, describeState, RollingWindow } from "./viewmodel.js";

const WINDOW_SAMPLES = 3000;
const POLL_MS = 1000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

class Dashboard {
  private readonly api = new ApiClient("");
  private readonly window = new RollingWindow<TelemetrySample>(WINDOW_SAMPLES);
  private readonly positionChart: StripChart;
  private readonly curveChart: StripChart;
  private readonly actionStrip: ActionStrip;
  private readonly trackView: TrackView;

  private status: StatusDoc | null = null;
  private selectedId: string | null = null;
  private stream: StreamHandle | null = null;
  private streamRunId: string | null = null;
  private curve: { episode: number; ret: number }[] = [];
  private curveEpisodes = -1;
  private connected = false;
  private banner = "";
  private lastError = "";
  private dirty = true;

  private liveEval: TelemetrySample[] = [];
  private replay: { frames: TelemetrySample[]; start: number; label: string } | null = null;

  constructor() {
    this.positionChart = new StripChart(el<HTMLCanvasElement>("position-chart"), {
      yLabel: "x px",
      goalY: DEFAULT_TRACK.goalX,
    });
    this.curveChart = new StripChart(el<HTMLCanvasElement>("curve-chart"), {
      yLabel: "return",
    });
    this.actionStrip = new ActionStrip(el<HTMLCanvasElement>("action-strip"));
    this.trackView = new TrackView(el<HTMLCanvasElement>("track-view"), DEFAULT_TRACK);

    el<HTMLButtonElement>("btn-start").addEventListener("click", () => void this.onStart());
    for (const cmd of ["pause", "resume", "stop"] as const) {
      el<HTMLButtonElement>(`btn-${cmd}`).addEventListener("click", () => void this.onCommand(cmd));
    }
    el<HTMLButtonElement>("btn-evaluate").addEventListener("click", () => void this.onEvaluate());

    setInterval(() => void this.poll(), POLL_MS);
    void this.poll();
    const frame = () => {
      this.render();
      requestAnimationFrame(frame);
    };
    requestAnimationFrame(frame);
  }

  private selectedRun(): RunRow | null {
    if (this.status === null) return null;
    const rows = this.status.runs;
    if (this.selectedId !== null) {
      const hit = rows.find((r) => r.id === this.selectedId);
      if (hit !== undefined) return hit;
    }
    return rows.length > 0 ? rows[rows.length - 1]! : null;
  }

  private async poll(): Promise<void> {
    try {
      this.status = await this.api.status();
      this.connected = true;
      this.banner = "";
    } catch {
      this.connected = false;
      this.banner = "service unreachable, retrying";
      this.dirty = true;
      return;
    }
    const run = this.selectedRun();
    if (run !== null && this.streamRunId !== run.id) this.attachStream(run.id);
    if (run !== null && run.episodes_done !== this.curveEpisodes) {
      this.curveEpisodes = run.episodes_done;
      try {
        const pts = await this.api.curve(run.id);
        this.curve = pts.map((p) => ({ episode: p.episode, ret: p.ret }));
      } catch {
        // curve file may not exist yet for a brand-new run
      }
    }
    this.dirty = true;
  }

  private attachStream(runId: string): void {
    this.stream?.stop();
    this.window.clear();
    this.liveEval = [];
    this.streamRunId = runId;
    this.stream = this.api.streamTelemetry(
      runId,
      (sample) => {
        if (sample.state === "evaluating") {
          if (this.liveEval.length > 0 && sample.step <= this.liveEval[this.liveEval.length - 1]!.step) {
            this.liveEval = [];
          }
          this.liveEval.push(sample);
        } else {
          this.window.push(sample);
        }
        this.dirty = true;
      },
      (state) => {
        this.banner = state === "retrying" ? "telemetry stream lost, reconnecting" : "";
        this.dirty = true;
      },
    );
  }

  private async onStart(): Promise<void> {
    const text = el<HTMLTextAreaElement>("config-text").value;
    await this.guard(async () => {
      const created = await this.api.startRunFlat(text);
      this.selectedId = created.id;
      this.curveEpisodes = -1;
      this.curve = [];
    });
  }

  private async onCommand(cmd: "pause" | "resume" | "stop"): Promise<void> {
    const run = this.selectedRun();
    if (run === null) return;
    await this.guard(() => this.api.command(run.id, cmd));
  }

  private async onEvaluate(): Promise<void> {
    const run = this.selectedRun();
    if (run === null) return;
    await this.guard(async () => {
      const result = await this.api.evaluate(run.id);
      const r = result.record;
      this.lastError = `eval #${result.index}: ${r.steps} steps, return ${r.return} (${r.reason})`;
    });
  }

  private async guard(op: () => Promise<unknown>): Promise<void> {
    try {
      this.lastError = "";
      await op();
    } catch (err) {
      this.lastError = err instanceof ApiError ? err.message : String(err);
    }
    await this.poll();
  }

  private startReplay(index: number): void {
    const run = this.selectedRun();
    if (run === null) return;
    void this.guard(async () => {
      const frames = await this.api.evalTrace(run.id, index);
      if (frames.length === 0) return;
      this.replay = { frames, start: performance.now(), label: `replay eval #${index}` };
    });
  }

  private render(): void {
    if (this.replay !== null) this.dirty = true;
    if (!this.dirty) return;
    this.dirty = false;

    const run = this.selectedRun();
    const chip = el<HTMLSpanElement>("state-chip");
    chip.textContent = describeState(run?.state ?? null, this.connected);
    chip.dataset.state = run?.state ?? "none";

    const bannerEl = el<HTMLDivElement>("banner");
    bannerEl.textContent = this.banner;
    bannerEl.style.display = this.banner.length > 0 ? "block" : "none";
    el<HTMLDivElement>("message").textContent = this.lastError;

    const controls = controlsFor(run, this.status?.busy ?? false);
    el<HTMLButtonElement>("btn-start").disabled = !controls.start || !this.connected;
    el<HTMLButtonElement>("btn-pause").disabled = !controls.pause || !this.connected;
    el<HTMLButtonElement>("btn-resume").disabled = !controls.resume || !this.connected;
    el<HTMLButtonElement>("btn-evaluate").disabled = !controls.evaluate || !this.connected;
    el<HTMLButtonElement>("btn-stop").disabled = !controls.stop || !this.connected;

    this.renderRuns(run);
    this.renderCharts();
  }

  private renderRuns(selected: RunRow | null): void {
    const tbody = el<HTMLTableSectionElement>("runs-body");
    tbody.textContent = "";
    for (const row of this.status?.runs ?? []) {
      const tr = document.createElement("tr");
      if (row.id === selected?.id) tr.classList.add("selected");
      const evalLinks = document.createElement("td");
      for (let i = 0; i < row.evals; i++) {
        const a = document.createElement("a");
        a.textContent = `#${i}`;
        a.href = "#";
        a.addEventListener("click", (ev) => {
          ev.preventDefault();
          this.selectedId = row.id;
          this.startReplay(i);
        });
        evalLinks.append(a, " ");
      }
      for (const cell of [
        row.id,
        row.state,
        row.agent,
        String(row.seed),
        `${row.episodes_done}/${row.episodes_total}`,
      ]) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.append(td);
      }
      tr.append(evalLinks);
      tr.addEventListener("click", () => {
        this.selectedId = row.id;
        this.dirty = true;
      });
      tbody.append(tr);
    }
  }

  private renderCharts(): void {
    const samples = this.window.toArray();
    const truth = samples.map((s) => ({ x: s.t, y: s.x_true }));
    const est = samples.map((s) => ({ x: s.t, y: s.x_est }));
    this.positionChart.draw([
      { points: truth, color: "#5fd08a", label: "x true" },
      { points: est, color: "#9a7fe8", label: "x est", dashed: true },
    ]);
    this.actionStrip.draw(samples.slice(-600).map((s) => s.action));
    this.curveChart.draw([
      {
        points: this.curve.map((p) => ({ x: p.episode, y: p.ret })),
        color: "#4f8edc",
        label: "episode return",
      },
    ]);

    if (this.replay !== null) {
      const { frames, start, label } = this.replay;
      const idx = Math.floor((performance.now() - start) / 10);
      if (idx >= frames.length) {
        const last = frames[frames.length - 1]!;
        this.trackView.draw(last.x_true, `${label} done: ${frames.length} steps`);
        this.replay = null;
      } else {
        const f = frames[idx]!;
        this.trackView.draw(f.x_true, `${label} step ${f.step}`);
      }
    } else if (this.liveEval.length > 0) {
      const f = this.liveEval[this.liveEval.length - 1]!;
      this.trackView.draw(f.x_true, `evaluating, step ${f.step}`);
    } else if (samples.length > 0) {
      const f = samples[samples.length - 1]!;
      this.trackView.draw(f.x_true, `episode ${f.episode}, step ${f.step}`);
    } else {
      this.trackView.draw(null, "no telemetry yet");
    }
  }
}

new Dashboard();
