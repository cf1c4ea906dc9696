/** Minimal 5x7 bitmap font for PNG labels.
 *
 * Covers digits, lowercase letters and the punctuation the figure labels
 * use; uppercase maps onto the lowercase shapes.  Unknown characters draw
 * a hollow box so missing glyphs are visible rather than silent.
 */

const G: Record<string, string[]> = {
  " ": ["", "", "", "", "", "", ""],
  ".": ["", "", "", "", "", ".##", ".##"],
  ",": ["", "", "", "", ".##", "..#", ".#."],
  "-": ["", "", "", "###", "", "", ""],
  "+": ["", ".#.", ".#.", "###", ".#.", ".#.", ""],
  "=": ["", "", "###", "", "###", "", ""],
  ":": ["", ".##", ".##", "", ".##", ".##", ""],
  "(": ["..#", ".#.", "#..", "#..", "#..", ".#.", "..#"],
  ")": ["#..", ".#.", "..#", "..#", "..#", ".#.", "#.."],
  "[": ["###", "#..", "#..", "#..", "#..", "#..", "###"],
  "]": ["###", "..#", "..#", "..#", "..#", "..#", "###"],
  "/": ["....#", "...#.", "..#..", "..#..", ".#...", "#....", ""],
  "^": [".#.", "#.#", "", "", "", "", ""],
  "_": ["", "", "", "", "", "", "#####"],
  "|": [".#.", ".#.", ".#.", ".#.", ".#.", ".#.", ".#."],
  "0": [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."],
  "1": ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."],
  "2": [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"],
  "3": [".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."],
  "4": ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."],
  "5": ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."],
  "6": [".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."],
  "7": ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."],
  "8": [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."],
  "9": [".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."],
  a: ["", "", ".###.", "....#", ".####", "#...#", ".####"],
  b: ["#....", "#....", "####.", "#...#", "#...#", "#...#", "####."],
  c: ["", "", ".####", "#....", "#....", "#....", ".####"],
  d: ["....#", "....#", ".####", "#...#", "#...#", "#...#", ".####"],
  e: ["", "", ".###.", "#...#", "#####", "#....", ".###."],
  f: ["..##.", ".#...", "####.", ".#...", ".#...", ".#...", ".#..."],
  g: ["", ".####", "#...#", "#...#", ".####", "....#", ".###."],
  h: ["#....", "#....", "####.", "#...#", "#...#", "#...#", "#...#"],
  i: [".#.", "...", ".#.", ".#.", ".#.", ".#.", ".#."],
  j: ["..#", "...", "..#", "..#", "..#", "#.#", ".#."],
  k: ["#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."],
  l: [".#.", ".#.", ".#.", ".#.", ".#.", ".#.", "..#"],
  m: ["", "", "##.#.", "#.#.#", "#.#.#", "#.#.#", "#.#.#"],
  n: ["", "", "####.", "#...#", "#...#", "#...#", "#...#"],
  o: ["", "", ".###.", "#...#", "#...#", "#...#", ".###."],
  p: ["", "####.", "#...#", "#...#", "####.", "#....", "#...."],
  q: ["", ".####", "#...#", "#...#", ".####", "....#", "....#"],
  r: ["", "", "#.##.", "##...", "#....", "#....", "#...."],
  s: ["", "", ".####", "#....", ".###.", "....#", "####."],
  t: [".#...", ".#...", "####.", ".#...", ".#...", ".#...", "..##."],
  u: ["", "", "#...#", "#...#", "#...#", "#...#", ".####"],
  v: ["", "", "#...#", "#...#", "#...#", ".#.#.", "..#.."],
  w: ["", "", "#.#.#", "#.#.#", "#.#.#", "#.#.#", ".#.#."],
  x: ["", "", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"],
  y: ["", "#...#", "#...#", "#...#", ".####", "....#", ".###."],
  z: ["", "", "#####", "...#.", "..#..", ".#...", "#####"],
};

const UNKNOWN = ["#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"];

export const GLYPH_WIDTH = 6; // 5 pixels plus 1 spacing column
export const GLYPH_HEIGHT = 7;

export function glyph(ch: string): string[] {
  if (ch in G) return G[ch];
  const lower = ch.toLowerCase();
  if (lower in G) return G[lower];
  return UNKNOWN;
}

/** Pixel width of a rendered string at integer scale. */
export function textWidth(s: string, scale = 1): number {
  return s.length * GLYPH_WIDTH * scale;
}
