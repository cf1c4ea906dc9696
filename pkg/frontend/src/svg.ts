/** Serialize a figure to SVG. */

import { Figure, Primitive } from "./figure";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function one(p: Primitive): string {
  switch (p.kind) {
    case "rect": {
      const fill = p.fill ?? "none";
      const stroke = p.stroke ?? "none";
      return `<rect x="${p.x}" y="${p.y}" width="${p.w}" height="${p.h}" fill="${fill}" stroke="${stroke}"/>`;
    }
    case "polyline": {
      const pts = p.pts.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
      const dash = p.dash ? ' stroke-dasharray="6 4"' : "";
      const w = p.width ?? 1;
      return `<polyline points="${pts}" fill="none" stroke="${p.stroke}" stroke-width="${w}"${dash}/>`;
    }
    case "marker":
      return `<circle cx="${p.x.toFixed(2)}" cy="${p.y.toFixed(2)}" r="${p.r}" fill="${p.fill}"/>`;
    case "text": {
      const anchor = p.anchor ?? "start";
      const size = 12 * (p.size ?? 1);
      const color = p.color ?? "#000000";
      return (
        `<text x="${p.x.toFixed(2)}" y="${p.y.toFixed(2)}" font-family="monospace" ` +
        `font-size="${size}" fill="${color}" text-anchor="${anchor}">${esc(p.s)}</text>`
      );
    }
  }
}

export function toSvg(fig: Figure): string {
  const body = fig.prims.map(one).join("\n  ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fig.width}" height="${fig.height}" ` +
    `viewBox="0 0 ${fig.width} ${fig.height}">\n` +
    `  <rect x="0" y="0" width="${fig.width}" height="${fig.height}" fill="#ffffff"/>\n` +
    `  ${body}\n</svg>\n`
  );
}
