/**
 * Display transforms and canvas rendering for the live plots.
 *
 * Everything physical shown here was computed server-side; the only
 * client-side math is presentation: downsampling long traces, scaling
 * to pixels, and the parabola overlay summarizing the operator's own
 * contrast scatter.
 */

import type { ConsoleViewState, ScanPoint, WaterfallRow } from "./types.js";

export const MAX_TRACE_POINTS = 2000;

export interface XY {
  x: number;
  y: number;
}

/** Min-max decimation: keeps peaks/dips that plain striding would drop. */
export function downsampleTrace(xs: number[], ys: number[], maxPoints = MAX_TRACE_POINTS): XY[] {
  const n = Math.min(xs.length, ys.length);
  if (n <= maxPoints) {
    return Array.from({ length: n }, (_, i) => ({ x: xs[i], y: ys[i] }));
  }
  const buckets = Math.floor(maxPoints / 2);
  const out: XY[] = [];
  const per = n / buckets;
  for (let b = 0; b < buckets; b++) {
    const lo = Math.floor(b * per);
    const hi = Math.min(Math.floor((b + 1) * per), n);
    let iMin = lo;
    let iMax = lo;
    for (let i = lo; i < hi; i++) {
      if (ys[i] < ys[iMin]) iMin = i;
      if (ys[i] > ys[iMax]) iMax = i;
    }
    const first = Math.min(iMin, iMax);
    const second = Math.max(iMin, iMax);
    out.push({ x: xs[first], y: ys[first] });
    if (second !== first) out.push({ x: xs[second], y: ys[second] });
  }
  return out;
}

export function spectrumTracePoints(state: ConsoleViewState): XY[] {
  const spectrum = state.latestSpectrum;
  if (!spectrum) return [];
  const xs = Array.from(
    { length: spectrum.axis.n },
    (_, i) => spectrum.axis.start_nm + i * spectrum.axis.step_nm,
  );
  return downsampleTrace(xs, spectrum.reflectivity);
}

export interface ParabolaFit {
  center: number;
  peak: number;
  valid: boolean;
}

/**
 * Least-squares parabola through the scan scatter; display overlay for
 * the contrast-vs-offset chart, drawn only once >= 5 points exist.
 */
export function fitScanParabola(points: ScanPoint[]): ParabolaFit {
  if (points.length < 5) return { center: 0, peak: 0, valid: false };
  const best = points.reduce((a, b) =>
    b.fundamental_contrast > a.fundamental_contrast ? b : a,
  );
  const used = points.filter(
    (p) => p.fundamental_contrast >= 0.35 * best.fundamental_contrast,
  );
  const pts = used.length >= 5 ? used : points;
  let s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
  for (const p of pts) {
    const x = p.position_um;
    const y = p.fundamental_contrast;
    const x2 = x * x;
    s0 += 1; s1 += x; s2 += x2; s3 += x2 * x; s4 += x2 * x2;
    t0 += y; t1 += x * y; t2 += x2 * y;
  }
  // solve the 3x3 normal equations for y = a x^2 + b x + c
  const m = [
    [s4, s3, s2, t2],
    [s3, s2, s1, t1],
    [s2, s1, s0, t0],
  ];
  for (let col = 0; col < 3; col++) {
    let pivot = col;
    for (let row = col + 1; row < 3; row++) {
      if (Math.abs(m[row][col]) > Math.abs(m[pivot][col])) pivot = row;
    }
    [m[col], m[pivot]] = [m[pivot], m[col]];
    if (Math.abs(m[col][col]) < 1e-12) return { center: 0, peak: 0, valid: false };
    for (let row = 0; row < 3; row++) {
      if (row === col) continue;
      const f = m[row][col] / m[col][col];
      for (let k = col; k < 4; k++) m[row][k] -= f * m[col][k];
    }
  }
  const a = m[0][3] / m[0][0];
  const b = m[1][3] / m[1][1];
  const c = m[2][3] / m[2][2];
  if (a >= 0) return { center: 0, peak: 0, valid: false };
  const center = -b / (2 * a);
  return { center, peak: c - (b * b) / (4 * a), valid: true };
}

export interface WaterfallCell {
  row: number;
  temperature_k: number;
  wavelength_nm: number | null;
}

export function waterfallCells(rows: WaterfallRow[]): WaterfallCell[] {
  return rows.map((r, i) => ({
    row: i,
    temperature_k: r.temperature_k,
    wavelength_nm: r.fundamental_nm,
  }));
}

export interface Scale {
  min: number;
  max: number;
  toPixel(value: number, pixels: number): number;
}

export function makeScale(values: number[], pad = 0.05): Scale {
  const finite = values.filter((v) => Number.isFinite(v));
  let min = finite.length ? Math.min(...finite) : 0;
  let max = finite.length ? Math.max(...finite) : 1;
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const span = max - min;
  min -= pad * span;
  max += pad * span;
  return {
    min,
    max,
    toPixel(value: number, pixels: number): number {
      return ((value - min) / (max - min)) * pixels;
    },
  };
}

type Ctx2D = CanvasRenderingContext2D;

export function drawSpectrum(ctx: Ctx2D, state: ConsoleViewState, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  const pts = spectrumTracePoints(state);
  if (pts.length === 0) {
    drawPlaceholder(ctx, "no spectrum yet", w, h);
    return;
  }
  const sx = makeScale(pts.map((p) => p.x));
  const sy = makeScale(pts.map((p) => p.y));
  ctx.strokeStyle = "#58a6ff";
  ctx.lineWidth = 1;
  ctx.beginPath();
  pts.forEach((p, i) => {
    const px = sx.toPixel(p.x, w);
    const py = h - sy.toPixel(p.y, h);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}

export function drawScanScatter(ctx: Ctx2D, state: ConsoleViewState, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  const pts = state.scanPoints;
  if (pts.length === 0) {
    drawPlaceholder(ctx, "jog and acquire to build a scan", w, h);
    return;
  }
  const sx = makeScale(pts.map((p) => p.position_um));
  const contrasts = pts.flatMap((p) => [p.fundamental_contrast, p.second_mode_contrast]);
  const sy = makeScale([0, ...contrasts]);
  for (const p of pts) {
    const px = sx.toPixel(p.position_um, w);
    ctx.fillStyle = "#3fb950";
    ctx.fillRect(px - 2, h - sy.toPixel(p.fundamental_contrast, h) - 2, 4, 4);
    ctx.fillStyle = "#d29922";
    ctx.fillRect(px - 2, h - sy.toPixel(p.second_mode_contrast, h) - 2, 4, 4);
  }
  const fit = fitScanParabola(pts);
  if (fit.valid) {
    const px = sx.toPixel(fit.center, w);
    ctx.strokeStyle = "#f85149";
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(px, 0);
    ctx.lineTo(px, h);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

export function drawWaterfall(ctx: Ctx2D, rows: WaterfallRow[], w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  if (rows.length === 0) {
    drawPlaceholder(ctx, "run a cooldown to fill the waterfall", w, h);
    return;
  }
  const wavelengths = rows
    .map((r) => r.fundamental_nm)
    .filter((v): v is number => v !== null);
  const sx = makeScale(wavelengths.length ? wavelengths : [940, 946]);
  const rowH = h / rows.length;
  rows.forEach((r, i) => {
    ctx.fillStyle = "#21262d";
    ctx.fillRect(0, i * rowH, w, rowH - 1);
    if (r.fundamental_nm !== null) {
      const px = sx.toPixel(r.fundamental_nm, w);
      const depth = Math.min(Math.max(r.fundamental_contrast, 0), 1);
      ctx.fillStyle = `rgba(88, 166, 255, ${0.35 + 0.65 * depth})`;
      ctx.fillRect(px - 2, i * rowH, 4, rowH - 1);
    }
  });
}

function drawPlaceholder(ctx: Ctx2D, text: string, w: number, h: number): void {
  ctx.fillStyle = "#8b949e";
  ctx.font = "12px sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(text, w / 2, h / 2);
}
