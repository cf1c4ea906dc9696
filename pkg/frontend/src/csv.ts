/** Strict CSV reading for the documented table formats. */

import * as fs from "fs";

export class MalformedCsvError extends Error {}

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

/** Parse a comma-separated table with a header row; no quoting dialects. */
export function readCsv(path: string): Table {
  let text: string;
  try {
    text = fs.readFileSync(path, "utf8");
  } catch (err) {
    throw new MalformedCsvError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new MalformedCsvError(`${path}: need a header row and at least one data row`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  if (new Set(columns).size !== columns.length) {
    throw new MalformedCsvError(`${path}: duplicate column names`);
  }
  const rows: Record<string, string>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== columns.length) {
      throw new MalformedCsvError(
        `${path}: row ${i} has ${parts.length} fields, expected ${columns.length}`
      );
    }
    const row: Record<string, string> = {};
    columns.forEach((c, k) => (row[c] = parts[k].trim()));
    rows.push(row);
  }
  return { columns, rows };
}

/** Extract a numeric column, failing loudly on anything non-finite. */
export function numericColumn(table: Table, name: string, path = "<csv>"): number[] {
  if (!table.columns.includes(name)) {
    throw new MalformedCsvError(`${path}: missing column '${name}'`);
  }
  return table.rows.map((r, i) => {
    const v = Number(r[name]);
    if (!Number.isFinite(v)) {
      throw new MalformedCsvError(`${path}: row ${i + 1}, column '${name}' is not a number`);
    }
    return v;
  });
}
