/** Deterministic software rasterizer for the figure primitives. */

import { Figure, Primitive } from "./figure";
import { GLYPH_HEIGHT, GLYPH_WIDTH, glyph, textWidth } from "./font";

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array; // RGB, row-major

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 3).fill(255);
  }

  set(x: number, y: number, rgb: [number, number, number]): void {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) return;
    const k = (yi * this.width + xi) * 3;
    this.data[k] = rgb[0];
    this.data[k + 1] = rgb[1];
    this.data[k + 2] = rgb[2];
  }

  line(x0: number, y0: number, x1: number, y1: number, rgb: [number, number, number]): void {
    // Bresenham on rounded endpoints; thickness one pixel.
    let xa = Math.round(x0);
    let ya = Math.round(y0);
    const xb = Math.round(x1);
    const yb = Math.round(y1);
    const dx = Math.abs(xb - xa);
    const dy = -Math.abs(yb - ya);
    const sx = xa < xb ? 1 : -1;
    const sy = ya < yb ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.set(xa, ya, rgb);
      if (xa === xb && ya === yb) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        xa += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ya += sy;
      }
    }
  }

  disc(cx: number, cy: number, r: number, rgb: [number, number, number]): void {
    for (let y = Math.floor(cy - r); y <= Math.ceil(cy + r); y++) {
      for (let x = Math.floor(cx - r); x <= Math.ceil(cx + r); x++) {
        if ((x - cx) ** 2 + (y - cy) ** 2 <= r * r + 0.25) this.set(x, y, rgb);
      }
    }
  }

  text(
    x: number,
    y: number,
    s: string,
    rgb: [number, number, number],
    scale = 1,
    anchor: "start" | "middle" | "end" = "start"
  ): void {
    let px = Math.round(x);
    if (anchor === "middle") px -= Math.round(textWidth(s, scale) / 2);
    if (anchor === "end") px -= textWidth(s, scale);
    const top = Math.round(y) - GLYPH_HEIGHT * scale; // y is the text baseline
    for (const ch of s) {
      const rows = glyph(ch);
      for (let gy = 0; gy < rows.length; gy++) {
        const row = rows[gy];
        for (let gx = 0; gx < row.length; gx++) {
          if (row[gx] === "#") {
            for (let oy = 0; oy < scale; oy++) {
              for (let ox = 0; ox < scale; ox++) {
                this.set(px + gx * scale + ox, top + gy * scale + oy, rgb);
              }
            }
          }
        }
      }
      px += GLYPH_WIDTH * scale;
    }
  }
}

function parseColor(c: string): [number, number, number] {
  const m = /^#([0-9a-fA-F]{6})$/.exec(c);
  if (!m) return [0, 0, 0];
  const v = parseInt(m[1], 16);
  return [(v >> 16) & 255, (v >> 8) & 255, v & 255];
}

export function rasterize(fig: Figure): Raster {
  const r = new Raster(fig.width, fig.height);
  for (const p of fig.prims) {
    drawPrimitive(r, p);
  }
  return r;
}

function drawPrimitive(r: Raster, p: Primitive): void {
  switch (p.kind) {
    case "rect": {
      if (p.fill && p.fill !== "none") {
        const rgb = parseColor(p.fill);
        for (let y = p.y; y < p.y + p.h; y++) {
          for (let x = p.x; x < p.x + p.w; x++) r.set(x, y, rgb);
        }
      }
      if (p.stroke && p.stroke !== "none") {
        const rgb = parseColor(p.stroke);
        r.line(p.x, p.y, p.x + p.w, p.y, rgb);
        r.line(p.x + p.w, p.y, p.x + p.w, p.y + p.h, rgb);
        r.line(p.x + p.w, p.y + p.h, p.x, p.y + p.h, rgb);
        r.line(p.x, p.y + p.h, p.x, p.y, rgb);
      }
      break;
    }
    case "polyline": {
      const rgb = parseColor(p.stroke);
      for (let i = 1; i < p.pts.length; i++) {
        if (p.dash && i % 2 === 0) continue; // coarse dash: skip alternate segments
        r.line(p.pts[i - 1][0], p.pts[i - 1][1], p.pts[i][0], p.pts[i][1], rgb);
      }
      break;
    }
    case "marker":
      r.disc(p.x, p.y, p.r, parseColor(p.fill));
      break;
    case "text":
      r.text(p.x, p.y, p.s, parseColor(p.color ?? "#000000"), p.size && p.size > 1 ? 2 : 1, p.anchor ?? "start");
      break;
  }
}
