// Pulse trajectory as a step chart: one horizontal segment per analysis
// frame, a gap wherever the service had nothing to estimate.

import type { TrajectoryPayload } from "./api.js";

export interface Step {
  x0: number;
  x1: number;
  y: number;
  pulseS: number;
}

/** Each frame's estimate becomes a step spanning that frame's time range.
    Null estimates produce no step, which reads as a gap in the chart. */
export function stepSegments(
  traj: TrajectoryPayload,
  width: number,
  height: number,
): Step[] {
  const { frame_times, pulse_s } = traj;
  if (frame_times.length === 0) return [];
  const frameS =
    frame_times.length > 1
      ? frame_times[1] - frame_times[0]
      : frame_times[0];
  const totalS = frame_times[frame_times.length - 1];
  if (totalS <= 0) return [];

  let top = 0;
  for (const p of pulse_s) {
    if (p !== null) top = Math.max(top, p);
  }
  if (top === 0) return [];
  // headroom so the largest step does not sit on the chart edge
  const yOf = (p: number) => height - (p / (1.25 * top)) * height;

  const steps: Step[] = [];
  for (let i = 0; i < frame_times.length; i++) {
    const p = pulse_s[i];
    if (p === null || p === undefined) continue;
    const t1 = frame_times[i];
    const t0 = t1 - frameS;
    steps.push({
      x0: (Math.max(t0, 0) / totalS) * width,
      x1: (t1 / totalS) * width,
      y: yOf(p),
      pulseS: p,
    });
  }
  return steps;
}

export function paintTrajectory(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  traj: TrajectoryPayload | null,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, width, height);
  if (!traj) return;

  const steps = stepSegments(traj, width, height);
  ctx.strokeStyle = "#2c8a5f";
  ctx.lineWidth = 2;
  for (const step of steps) {
    ctx.beginPath();
    ctx.moveTo(step.x0, step.y);
    ctx.lineTo(step.x1, step.y);
    ctx.stroke();
  }

  // riser lines between consecutive frames make level changes legible
  ctx.strokeStyle = "#9ad0b8";
  ctx.lineWidth = 1;
  for (let i = 1; i < steps.length; i++) {
    if (steps[i].x0 === steps[i - 1].x1 && steps[i].y !== steps[i - 1].y) {
      ctx.beginPath();
      ctx.moveTo(steps[i].x0, steps[i - 1].y);
      ctx.lineTo(steps[i].x0, steps[i].y);
      ctx.stroke();
    }
  }
}
