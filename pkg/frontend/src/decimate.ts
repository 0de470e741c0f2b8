// Min-max decimation for strip charts. Plotting every control period at
// 100 Hz would redraw thousands of segments per frame; keeping the per-bucket
// extremes preserves the visual envelope (spikes survive) at bounded cost.

export interface XY {
  x: number;
  y: number;
}

/**
 * Reduces `points` (assumed ordered by x) to at most `budget` points by
 * keeping the min and max of each bucket, in their original order. The
 * first and last samples always survive. Below the budget the input is
 * returned as-is.
 */
export function minMaxDecimate(points: readonly XY[], budget: number): XY[] {
  if (budget < 4) throw new Error("decimation budget must be at least 4");
  if (points.length <= budget) return points.slice();

  const buckets = Math.floor(budget / 2) - 1;
  const first = points[0]!;
  const last = points[points.length - 1]!;
  const inner = points.slice(1, points.length - 1);
  const out: XY[] = [first];
  const per = inner.length / buckets;

  for (let b = 0; b < buckets; b++) {
    const lo = Math.floor(b * per);
    const hi = Math.min(inner.length, Math.floor((b + 1) * per));
    if (lo >= hi) continue;
    let minI = lo;
    let maxI = lo;
    for (let i = lo + 1; i < hi; i++) {
      const y = inner[i]!.y;
      if (y < inner[minI]!.y) minI = i;
      if (y > inner[maxI]!.y) maxI = i;
    }
    if (minI === maxI) {
      out.push(inner[minI]!);
    } else if (minI < maxI) {
      out.push(inner[minI]!, inner[maxI]!);
    } else {
      out.push(inner[maxI]!, inner[minI]!);
    }
  }
  out.push(last);
  return out;
}
