// Hand-rolled canvas strip charts. No chart library: the views are few and
// specific (position trace with a goal line, learning curve, action strip,
// track replay), and owning the draw loop keeps the decimation contract
// explicit.

import { minMaxDecimate, type XY } from "./decimate.js";
import { trackHeight, type TrackShape } from "./types.js";

/** Samples per frame above which a series gets min-max decimated. */
export const DECIMATE_THRESHOLD = 10;

export interface Series {
  points: readonly XY[];
  color: string;
  label: string;
  dashed?: boolean;
}

interface Bounds {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

const PAD = { left: 44, right: 10, top: 8, bottom: 18 };

function fitBounds(series: readonly Series[], extraY: readonly number[]): Bounds {
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const s of series) {
    for (const p of s.points) {
      if (p.x < xMin) xMin = p.x;
      if (p.x > xMax) xMax = p.x;
      if (p.y < yMin) yMin = p.y;
      if (p.y > yMax) yMax = p.y;
    }
  }
  for (const y of extraY) {
    if (y < yMin) yMin = y;
    if (y > yMax) yMax = y;
  }
  if (!Number.isFinite(xMin)) {
    return { xMin: 0, xMax: 1, yMin: -1, yMax: 1 };
  }
  if (xMax === xMin) xMax = xMin + 1;
  if (yMax === yMin) {
    yMax += 1;
    yMin -= 1;
  }
  const yPad = (yMax - yMin) * 0.06;
  return { xMin, xMax, yMin: yMin - yPad, yMax: yMax + yPad };
}

export class StripChart {
  private readonly ctx: CanvasRenderingContext2D;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly opts: { yLabel: string; goalY?: number } = { yLabel: "" },
  ) {
    const ctx = canvas.getContext("2d");
    if (ctx === null) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  draw(series: readonly Series[]): void {
    const { ctx, canvas } = this;
    const w = canvas.width;
    const h = canvas.height;
    ctx.clearRect(0, 0, w, h);
    const plotW = w - PAD.left - PAD.right;
    const plotH = h - PAD.top - PAD.bottom;
    const extra = this.opts.goalY !== undefined ? [this.opts.goalY] : [];
    const b = fitBounds(series, extra);
    const px = (x: number) => PAD.left + ((x - b.xMin) / (b.xMax - b.xMin)) * plotW;
    const py = (y: number) => PAD.top + (1 - (y - b.yMin) / (b.yMax - b.yMin)) * plotH;

    ctx.strokeStyle = "#3a3f4a";
    ctx.lineWidth = 1;
    ctx.strokeRect(PAD.left, PAD.top, plotW, plotH);

    ctx.fillStyle = "#8a90a0";
    ctx.font = "10px system-ui, sans-serif";
    ctx.textAlign = "right";
    ctx.fillText(b.yMax.toFixed(1), PAD.left - 4, PAD.top + 9);
    ctx.fillText(b.yMin.toFixed(1), PAD.left - 4, PAD.top + plotH);
    ctx.textAlign = "left";
    ctx.fillText(this.opts.yLabel, 2, PAD.top + plotH / 2);

    if (this.opts.goalY !== undefined) {
      ctx.strokeStyle = "#e0b341";
      ctx.setLineDash([5, 4]);
      ctx.beginPath();
      ctx.moveTo(PAD.left, py(this.opts.goalY));
      ctx.lineTo(PAD.left + plotW, py(this.opts.goalY));
      ctx.stroke();
      ctx.setLineDash([]);
      ctx.fillStyle = "#e0b341";
      ctx.fillText("goal", PAD.left + plotW - 28, py(this.opts.goalY) - 3);
    }

    let legendX = PAD.left + 6;
    for (const s of series) {
      const pts =
        s.points.length > DECIMATE_THRESHOLD
          ? minMaxDecimate(s.points, Math.max(4, plotW * 2))
          : s.points;
      ctx.strokeStyle = s.color;
      ctx.setLineDash(s.dashed ? [3, 3] : []);
      ctx.lineWidth = 1.25;
      ctx.beginPath();
      pts.forEach((p, i) => {
        if (i === 0) ctx.moveTo(px(p.x), py(p.y));
        else ctx.lineTo(px(p.x), py(p.y));
      });
      ctx.stroke();
      ctx.setLineDash([]);
      ctx.fillStyle = s.color;
      ctx.fillText(s.label, legendX, PAD.top + 10);
      legendX += ctx.measureText(s.label).width + 14;
    }
  }
}

/** Left/right command timeline: one colored band per control period. */
export class ActionStrip {
  private readonly ctx: CanvasRenderingContext2D;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (ctx === null) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  draw(actions: readonly ("left" | "right")[]): void {
    const { ctx, canvas } = this;
    const w = canvas.width;
    const h = canvas.height;
    ctx.clearRect(0, 0, w, h);
    if (actions.length === 0) return;
    const band = w / actions.length;
    for (let i = 0; i < actions.length; i++) {
      ctx.fillStyle = actions[i] === "left" ? "#4f8edc" : "#d66a4f";
      ctx.fillRect(i * band, 0, Math.ceil(band), h);
    }
    ctx.fillStyle = "#c8cdd8";
    ctx.font = "10px system-ui, sans-serif";
    ctx.fillText("left", 4, h - 4);
    ctx.textAlign = "right";
    ctx.fillText("right", w - 4, h - 4);
    ctx.textAlign = "left";
  }
}

/** Side view of the valley with the car riding the height profile. */
export class TrackView {
  private readonly ctx: CanvasRenderingContext2D;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly track: TrackShape,
  ) {
    const ctx = canvas.getContext("2d");
    if (ctx === null) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  draw(carX: number | null, caption: string): void {
    const { ctx, canvas, track } = this;
    const w = canvas.width;
    const h = canvas.height;
    ctx.clearRect(0, 0, w, h);
    const margin = 14;
    const hMax = trackHeight(track, track.halfLength);
    const px = (x: number) => margin + ((x + track.halfLength) / (2 * track.halfLength)) * (w - 2 * margin);
    const py = (y: number) => h - margin - (y / hMax) * (h - 2.5 * margin);

    ctx.strokeStyle = "#6f7685";
    ctx.lineWidth = 2;
    ctx.beginPath();
    for (let i = 0; i <= 120; i++) {
      const x = -track.halfLength + (i / 120) * 2 * track.halfLength;
      const y = trackHeight(track, x);
      if (i === 0) ctx.moveTo(px(x), py(y));
      else ctx.lineTo(px(x), py(y));
    }
    ctx.stroke();

    const gx = px(track.goalX);
    const gy = py(trackHeight(track, track.goalX));
    ctx.strokeStyle = "#e0b341";
    ctx.beginPath();
    ctx.moveTo(gx, gy);
    ctx.lineTo(gx, gy - 22);
    ctx.stroke();
    ctx.fillStyle = "#e0b341";
    ctx.beginPath();
    ctx.moveTo(gx, gy - 22);
    ctx.lineTo(gx + 10, gy - 18);
    ctx.lineTo(gx, gy - 14);
    ctx.closePath();
    ctx.fill();

    if (carX !== null) {
      const cx = px(carX);
      const cy = py(trackHeight(track, carX));
      ctx.fillStyle = "#5fd08a";
      ctx.beginPath();
      ctx.arc(cx, cy - 5, 6, 0, 2 * Math.PI);
      ctx.fill();
    }

    ctx.fillStyle = "#c8cdd8";
    ctx.font = "11px system-ui, sans-serif";
    ctx.fillText(caption, margin, 14);
  }
}
