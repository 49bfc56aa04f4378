// Waveform display from the service's min/max envelope, with onset times
// drawn as vertical grid lines. Layout is pure so tests can check geometry
// without a canvas.

import type { OnsetsPayload, WaveformResult } from "./api.js";

export interface Column {
  x: number;
  yTop: number;
  yBottom: number;
}

/** One vertical bar per envelope pair, centered in its bucket, scaled to
    the largest absolute value so quiet streams stay visible. */
export function envelopeColumns(
  points: [number, number][],
  width: number,
  height: number,
): Column[] {
  if (points.length === 0) return [];
  let peak = 0;
  for (const [lo, hi] of points) {
    peak = Math.max(peak, Math.abs(lo), Math.abs(hi));
  }
  if (peak === 0) peak = 1;
  const mid = height / 2;
  const scale = mid / peak;
  return points.map(([lo, hi], i) => ({
    x: ((i + 0.5) / points.length) * width,
    yTop: mid - hi * scale,
    yBottom: mid - lo * scale,
  }));
}

export function gridLineXs(
  times: number[],
  durationS: number,
  width: number,
): number[] {
  if (durationS <= 0) return [];
  return times
    .filter((t) => t >= 0 && t <= durationS)
    .map((t) => (t / durationS) * width);
}

export function paintWaveform(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  wave: WaveformResult | null,
  onsets: OnsetsPayload | null,
  durationS: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, width, height);
  if (!wave) return;

  ctx.strokeStyle = "#2c5f8a";
  ctx.lineWidth = 1;
  ctx.beginPath();
  for (const col of envelopeColumns(wave.points, width, height)) {
    ctx.moveTo(col.x, col.yTop);
    // a flat pair still needs a visible dot
    ctx.lineTo(col.x, Math.max(col.yBottom, col.yTop + 0.5));
  }
  ctx.stroke();

  if (onsets) {
    ctx.strokeStyle = "#d9534f";
    ctx.beginPath();
    for (const x of gridLineXs(onsets.times, durationS, width)) {
      ctx.moveTo(x, 0);
      ctx.lineTo(x, height);
    }
    ctx.stroke();
  }
}
