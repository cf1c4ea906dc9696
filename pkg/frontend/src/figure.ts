/** Device-independent figure description: a display list plus builders.
 *
 * Both the SVG writer and the PNG rasterizer consume the same primitives,
 * so the two outputs always show the same figure.  Sizes are fixed and no
 * primitive carries a timestamp: byte-identical inputs give byte-identical
 * figures.
 */

export type Primitive =
  | { kind: "rect"; x: number; y: number; w: number; h: number; stroke?: string; fill?: string }
  | { kind: "polyline"; pts: Array<[number, number]>; stroke: string; width?: number; dash?: boolean }
  | { kind: "marker"; x: number; y: number; r: number; fill: string }
  | {
      kind: "text";
      x: number;
      y: number;
      s: string;
      color?: string;
      anchor?: "start" | "middle" | "end";
      size?: number;
    };

export interface Figure {
  width: number;
  height: number;
  prims: Primitive[];
}

export const WIDTH = 640;
export const HEIGHT = 480;
export const MARGIN = { left: 70, right: 20, top: 40, bottom: 50 };

export interface Scale {
  toPixel(v: number): number;
  ticks(): number[];
  label(v: number): string;
}

function niceTicks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = Math.pow(10, Math.floor(Math.log10(span / target)));
  let step = step0;
  for (const m of [1, 2, 5, 10]) {
    if (span / (step0 * m) <= target) {
      step = step0 * m;
      break;
    }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return Number(v.toPrecision(4)).toString();
  }
  return v.toExponential(1);
}

export function linearScale(lo: number, hi: number, p0: number, p1: number): Scale {
  if (!(hi > lo)) {
    hi = lo + 1;
    lo = lo - 1;
  }
  const pad = 0.06 * (hi - lo);
  const a = lo - pad;
  const b = hi + pad;
  return {
    toPixel: (v) => p0 + ((v - a) / (b - a)) * (p1 - p0),
    ticks: () => niceTicks(lo, hi),
    label: fmt,
  };
}

export function logScale(lo: number, hi: number, p0: number, p1: number): Scale {
  if (!(lo > 0 && hi > 0)) throw new Error("log scale needs positive bounds");
  const la = Math.log10(lo) - 0.08;
  const lb = Math.log10(hi) + 0.08;
  return {
    toPixel: (v) => p0 + ((Math.log10(v) - la) / (lb - la)) * (p1 - p0),
    ticks: () => {
      const out: number[] = [];
      for (let e = Math.ceil(la); e <= Math.floor(lb); e++) out.push(Math.pow(10, e));
      if (out.length < 3) {
        // add 2x and 5x subdivisions when few decades are visible
        const extra: number[] = [];
        for (let e = Math.floor(la); e <= Math.ceil(lb); e++) {
          for (const m of [1, 2, 5]) {
            const v = m * Math.pow(10, e);
            if (Math.log10(v) >= la && Math.log10(v) <= lb) extra.push(v);
          }
        }
        return extra;
      }
      return out;
    },
    label: fmt,
  };
}

export interface AxesSpec {
  xLabel: string;
  yLabel: string;
  title: string;
  xScale: Scale;
  yScale: Scale;
}

/** Frame, tick marks, tick labels, axis labels and title. */
export function axes(spec: AxesSpec): Primitive[] {
  const prims: Primitive[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  prims.push({ kind: "rect", x: x0, y: y1, w: x1 - x0, h: y0 - y1, stroke: "#000000" });
  for (const t of spec.xScale.ticks()) {
    const px = spec.xScale.toPixel(t);
    if (px < x0 - 0.5 || px > x1 + 0.5) continue;
    prims.push({ kind: "polyline", pts: [[px, y0], [px, y0 + 5]], stroke: "#000000" });
    prims.push({
      kind: "polyline",
      pts: [[px, y0], [px, y1]],
      stroke: "#dddddd",
    });
    prims.push({ kind: "text", x: px, y: y0 + 18, s: spec.xScale.label(t), anchor: "middle" });
  }
  for (const t of spec.yScale.ticks()) {
    const py = spec.yScale.toPixel(t);
    if (py > y0 + 0.5 || py < y1 - 0.5) continue;
    prims.push({ kind: "polyline", pts: [[x0 - 5, py], [x0, py]], stroke: "#000000" });
    prims.push({
      kind: "polyline",
      pts: [[x0, py], [x1, py]],
      stroke: "#dddddd",
    });
    prims.push({ kind: "text", x: x0 - 8, y: py + 4, s: spec.yScale.label(t), anchor: "end" });
  }
  prims.push({
    kind: "text",
    x: (x0 + x1) / 2,
    y: HEIGHT - 12,
    s: spec.xLabel,
    anchor: "middle",
  });
  prims.push({ kind: "text", x: 12, y: y1 - 10, s: spec.yLabel, anchor: "start" });
  prims.push({
    kind: "text",
    x: (x0 + x1) / 2,
    y: 22,
    s: spec.title,
    anchor: "middle",
    size: 2,
  });
  return prims;
}

export function plotArea(): { x0: number; x1: number; y0: number; y1: number } {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}
