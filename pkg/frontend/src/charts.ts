// Rolling strip charts and the unrolled pipe profile, as pure layout
// functions plus thin canvas painters.

import { ProfileSegment } from "./protocol.js";
import { Sample } from "./store.js";

export interface Point {
  x: number;
  y: number;
}

/** Map samples onto a fixed time window ending at the newest sample. */
export function stripLayout(
  samples: Sample[],
  windowS: number,
  width: number,
  height: number,
  yMin?: number,
  yMax?: number,
): Point[] {
  if (samples.length === 0) return [];
  const tEnd = samples[samples.length - 1]!.t;
  const tStart = tEnd - windowS;
  let lo = yMin ?? Infinity;
  let hi = yMax ?? -Infinity;
  if (yMin === undefined || yMax === undefined) {
    for (const s of samples) {
      if (yMin === undefined) lo = Math.min(lo, s.value);
      if (yMax === undefined) hi = Math.max(hi, s.value);
    }
  }
  if (hi - lo < 1e-9) {
    hi = lo + 1;
  }
  const points: Point[] = [];
  for (const s of samples) {
    if (s.t < tStart) continue;
    const x = windowS <= 0 ? width : ((s.t - tStart) / windowS) * width;
    const y = height - ((s.value - lo) / (hi - lo)) * height;
    points.push({ x, y });
  }
  return points;
}

/** Upper/lower wall polylines of the unrolled pipe (diameter vs arclength). */
export function profileWalls(
  profile: ProfileSegment[],
  totalLength: number,
  width: number,
  height: number,
  maxDiameter = 0.15,
): { upper: Point[]; lower: Point[]; bendSpans: Array<[number, number]> } {
  const upper: Point[] = [];
  const lower: Point[] = [];
  const bendSpans: Array<[number, number]> = [];
  if (totalLength <= 0) return { upper, lower, bendSpans };
  const xOf = (s: number) => (s / totalLength) * width;
  const half = (d: number) => ((d / maxDiameter) * height) / 2;
  const mid = height / 2;
  for (const seg of profile) {
    for (const [s, d] of [
      [seg.s0_m, seg.d_in_m],
      [seg.s1_m, seg.d_out_m],
    ] as const) {
      upper.push({ x: xOf(s), y: mid - half(d) });
      lower.push({ x: xOf(s), y: mid + half(d) });
    }
    if (seg.kind === "bend") {
      bendSpans.push([xOf(seg.s0_m), xOf(seg.s1_m)]);
    }
  }
  return { upper, lower, bendSpans };
}

function drawPolyline(ctx: CanvasRenderingContext2D, points: Point[], color: string): void {
  if (points.length < 2) return;
  ctx.strokeStyle = color;
  ctx.beginPath();
  ctx.moveTo(points[0]!.x, points[0]!.y);
  for (const p of points.slice(1)) ctx.lineTo(p.x, p.y);
  ctx.stroke();
}

export function paintStrip(
  canvas: HTMLCanvasElement,
  samples: Sample[],
  windowS: number,
  color: string,
  label: string,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#222";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  drawPolyline(ctx, stripLayout(samples, windowS, canvas.width, canvas.height - 14), color);
  ctx.fillStyle = "#ccc";
  ctx.font = "11px monospace";
  const last = samples[samples.length - 1];
  ctx.fillText(
    last ? `${label}: ${last.value.toFixed(2)}` : `${label}: --`,
    4,
    canvas.height - 3,
  );
}

export function paintProfile(
  canvas: HTMLCanvasElement,
  profile: ProfileSegment[],
  totalLength: number,
  positionFraction: number | null,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#222";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const { upper, lower, bendSpans } = profileWalls(
    profile,
    totalLength,
    canvas.width,
    canvas.height,
  );
  ctx.fillStyle = "rgba(255, 200, 60, 0.25)";
  for (const [x0, x1] of bendSpans) {
    ctx.fillRect(x0, 0, Math.max(2, x1 - x0), canvas.height);
  }
  drawPolyline(ctx, upper, "#8fd");
  drawPolyline(ctx, lower, "#8fd");
  if (positionFraction !== null) {
    const x = positionFraction * canvas.width;
    ctx.strokeStyle = "#f55";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, canvas.height);
    ctx.stroke();
    ctx.lineWidth = 1;
  }
}

export function paintGauge(canvas: HTMLCanvasElement, thetaDeg: number | null): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#222";
  ctx.fillRect(0, 0, w, h);
  const cx = w / 2;
  const cy = h - 10;
  const r = Math.min(w / 2, h) - 14;
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.arc(cx, cy, r, Math.PI, 2 * Math.PI);
  ctx.stroke();
  if (thetaDeg !== null) {
    // gauge spans 0..150 deg of joint deflection
    const frac = Math.min(1, Math.max(0, thetaDeg / 150));
    const ang = Math.PI + frac * Math.PI;
    ctx.strokeStyle = "#fd5";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + r * Math.cos(ang), cy + r * Math.sin(ang));
    ctx.stroke();
    ctx.lineWidth = 1;
    ctx.fillStyle = "#eee";
    ctx.font = "13px monospace";
    ctx.fillText(`theta ${thetaDeg.toFixed(1)} deg`, cx - 40, h - 2);
  }
}
