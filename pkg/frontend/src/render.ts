/** The three figure kinds rendered from documented CSV outputs.
 *
 * Norms are never recomputed here: the log-log rate figure draws the
 * published record values and fits only the displayed points, the radius
 * figure overlays the closed-form shrinking-sphere radius, and the
 * residual figure plots a residual dump as-is.
 */

import * as fs from "fs";
import * as path from "path";

import { MalformedCsvError, numericColumn, readCsv } from "./csv";
import { Figure, Primitive, WIDTH, HEIGHT, axes, linearScale, logScale, plotArea } from "./figure";
import { logLogFit } from "./fit";
import { encodePng } from "./png";
import { rasterize } from "./raster";
import { toSvg } from "./svg";

export type PlotKind = "loglog_rate" | "radius_vs_time" | "residual_profile";

export interface PlotSpec {
  input: string;
  kind: PlotKind;
  out: string;
  /** loglog_rate: which sweep.csv column to plot (default sup_grad_phi). */
  norm?: string;
  /** radius_vs_time: overlay parameters; default r0 from the first row, n = 2. */
  r0?: number;
  n?: number;
  title?: string;
}

const KINDS: PlotKind[] = ["loglog_rate", "radius_vs_time", "residual_profile"];

export function loadSpec(specPath: string): PlotSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(fs.readFileSync(specPath, "utf8"));
  } catch (err) {
    throw new MalformedCsvError(`cannot read spec ${specPath}: ${(err as Error).message}`);
  }
  const spec = raw as Partial<PlotSpec>;
  if (typeof spec.input !== "string" || typeof spec.out !== "string") {
    throw new MalformedCsvError(`${specPath}: spec needs string 'input' and 'out'`);
  }
  if (!KINDS.includes(spec.kind as PlotKind)) {
    throw new MalformedCsvError(
      `${specPath}: 'kind' must be one of ${KINDS.join(", ")}`
    );
  }
  const base = path.dirname(specPath);
  return {
    ...(spec as PlotSpec),
    input: path.resolve(base, spec.input),
    out: path.resolve(base, spec.out),
  };
}

export interface RenderResult {
  svgPath: string;
  pngPath: string;
  annotation: string;
  slope?: number;
}

export function render(spec: PlotSpec): RenderResult {
  let fig: Figure;
  let annotation: string;
  let slope: number | undefined;
  if (spec.kind === "loglog_rate") {
    const r = loglogRateFigure(spec);
    fig = r.fig;
    annotation = r.annotation;
    slope = r.slope;
  } else if (spec.kind === "radius_vs_time") {
    const r = radiusFigure(spec);
    fig = r.fig;
    annotation = r.annotation;
  } else {
    const r = residualFigure(spec);
    fig = r.fig;
    annotation = r.annotation;
  }
  const outBase = spec.out.replace(/\.(svg|png)$/, "");
  const svgPath = `${outBase}.svg`;
  const pngPath = `${outBase}.png`;
  fs.mkdirSync(path.dirname(outBase), { recursive: true });
  fs.writeFileSync(svgPath, toSvg(fig));
  const raster = rasterize(fig);
  fs.writeFileSync(pngPath, encodePng(raster.width, raster.height, raster.data));
  return { svgPath, pngPath, annotation, slope };
}

function markerAndLine(
  xs: number[],
  ys: number[],
  xScale: { toPixel(v: number): number },
  yScale: { toPixel(v: number): number },
  color: string,
  withLine: boolean
): Primitive[] {
  const prims: Primitive[] = [];
  if (withLine) {
    prims.push({
      kind: "polyline",
      pts: xs.map((x, i) => [xScale.toPixel(x), yScale.toPixel(ys[i])] as [number, number]),
      stroke: color,
      width: 1.5,
    });
  }
  for (let i = 0; i < xs.length; i++) {
    prims.push({ kind: "marker", x: xScale.toPixel(xs[i]), y: yScale.toPixel(ys[i]), r: 3.5, fill: color });
  }
  return prims;
}

function loglogRateFigure(spec: PlotSpec): { fig: Figure; annotation: string; slope: number } {
  const table = readCsv(spec.input);
  const norm = spec.norm ?? "sup_grad_phi";
  const eps = numericColumn(table, "eps", spec.input);
  const vals = numericColumn(table, norm, spec.input);
  const eta = numericColumn(table, "eta", spec.input);
  const status = table.rows.map((r) => r["status"] ?? "ok");
  // Same admissibility gate as the producing harness: fits use eta < 1/2.
  const keep = eps.map((_, i) => status[i] === "ok" && eta[i] < 0.5);
  const xs = eps.filter((_, i) => keep[i]);
  const ys = vals.filter((_, i) => keep[i]);
  if (xs.length < 2) {
    throw new MalformedCsvError(`${spec.input}: fewer than 2 admissible records`);
  }
  const fit = logLogFit(xs, ys);
  const area = plotArea();
  const xScale = logScale(Math.min(...xs), Math.max(...xs), area.x0, area.x1);
  const yScale = logScale(Math.min(...ys), Math.max(...ys), area.y0, area.y1);
  const prims = axes({
    xLabel: "eps",
    yLabel: norm,
    title: spec.title ?? `rate of ${norm}`,
    xScale,
    yScale,
  });
  // fitted power law drawn across the data range
  const fitted = xs.map(
    (x) => [xScale.toPixel(x), yScale.toPixel(Math.exp(fit.intercept + fit.slope * Math.log(x)))] as [number, number]
  );
  prims.push({ kind: "polyline", pts: fitted, stroke: "#d62728", width: 1.5 });
  prims.push(...markerAndLine(xs, ys, xScale, yScale, "#1f77b4", false));
  const annotation = `slope ${fit.slope.toFixed(2)} (r^2 ${fit.rSquared.toFixed(4)})`;
  prims.push({
    kind: "text",
    x: area.x0 + 12,
    y: area.y1 + 18,
    s: annotation,
    color: "#d62728",
  });
  return { fig: { width: WIDTH, height: HEIGHT, prims }, annotation, slope: fit.slope };
}

function radiusFigure(spec: PlotSpec): { fig: Figure; annotation: string } {
  const table = readCsv(spec.input);
  const t = numericColumn(table, "t", spec.input);
  const r = numericColumn(table, "radius_mid", spec.input);
  const r0 = spec.r0 ?? r[0];
  const n = spec.n ?? 2;
  const area = plotArea();
  const xScale = linearScale(Math.min(...t), Math.max(...t), area.x0, area.x1);
  const lo = Math.min(...r);
  const hi = Math.max(...r);
  const yScale = linearScale(lo, hi, area.y0, area.y1);
  const prims = axes({
    xLabel: "t",
    yLabel: "radius",
    title: spec.title ?? "front radius vs exact flow",
    xScale,
    yScale,
  });
  // exact shrinking-sphere overlay r(t) = sqrt(r0^2 - 2 (n-1) t)
  const overlay: Array<[number, number]> = [];
  for (const tv of t) {
    const sq = r0 * r0 - 2 * (n - 1) * tv;
    if (sq <= 0) break;
    overlay.push([xScale.toPixel(tv), yScale.toPixel(Math.sqrt(sq))]);
  }
  prims.push({ kind: "polyline", pts: overlay, stroke: "#d62728", width: 1.5, dash: true });
  prims.push(...markerAndLine(t, r, xScale, yScale, "#1f77b4", true));
  let worst = 0;
  for (let i = 0; i < t.length; i++) {
    const sq = r0 * r0 - 2 * (n - 1) * t[i];
    if (sq > 0) worst = Math.max(worst, Math.abs(r[i] - Math.sqrt(sq)));
  }
  const annotation = `max |r - r_exact| = ${worst.toExponential(2)}`;
  prims.push({ kind: "text", x: area.x0 + 12, y: area.y1 + 18, s: annotation, color: "#d62728" });
  return { fig: { width: WIDTH, height: HEIGHT, prims }, annotation };
}

function residualFigure(spec: PlotSpec): { fig: Figure; annotation: string } {
  const table = readCsv(spec.input);
  if (!table.columns.includes("r") || !table.columns.includes("x1")) {
    throw new MalformedCsvError(`${spec.input}: residual dumps need columns x1 and r`);
  }
  const pairs: Array<[number, number]> = [];
  for (const row of table.rows) {
    const x = Number(row["x1"]);
    const v = Number(row["r"]);
    if (Number.isFinite(x) && Number.isFinite(v)) pairs.push([x, v]);
  }
  if (pairs.length < 2) {
    throw new MalformedCsvError(`${spec.input}: no finite residual entries`);
  }
  pairs.sort((a, b) => a[0] - b[0]);
  const xs = pairs.map((p) => p[0]);
  const ys = pairs.map((p) => p[1]);
  const area = plotArea();
  const xScale = linearScale(Math.min(...xs), Math.max(...xs), area.x0, area.x1);
  const yScale = linearScale(Math.min(...ys, 0), Math.max(...ys), area.y0, area.y1);
  const prims = axes({
    xLabel: "x1",
    yLabel: "residual",
    title: spec.title ?? "residual along the band",
    xScale,
    yScale,
  });
  prims.push({
    kind: "polyline",
    pts: xs.map((x, i) => [xScale.toPixel(x), yScale.toPixel(ys[i])] as [number, number]),
    stroke: "#1f77b4",
    width: 1.5,
  });
  const sup = Math.max(...ys.map(Math.abs));
  const annotation = `sup |r| = ${sup.toExponential(2)} over ${xs.length} nodes`;
  prims.push({ kind: "text", x: area.x0 + 12, y: area.y1 + 18, s: annotation, color: "#d62728" });
  return { fig: { width: WIDTH, height: HEIGHT, prims }, annotation };
}
