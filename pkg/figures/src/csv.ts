/**
 * Minimal CSV reader for conelab exports (plain comma-separated numeric
 * tables with a header row, no quoting).
 */

import { readFileSync } from "fs";

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV document");
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, string> = {};
    columns.forEach((name, i) => {
      row[name] = cells[i] ?? "";
    });
    return row;
  });
  return { columns, rows };
}

export function readCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new Error(`missing input: ${path}`);
  }
  return parseCsv(text);
}

export function numericColumn(table: Table, name: string, path = "table"): number[] {
  if (!table.columns.includes(name)) {
    throw new Error(`missing column '${name}' in ${path}`);
  }
  return table.rows
    .map((row) => row[name])
    .filter((cell) => cell !== "")
    .map((cell) => {
      const value = Number(cell);
      if (!Number.isFinite(value)) {
        throw new Error(`non-numeric cell '${cell}' in column '${name}' of ${path}`);
      }
      return value;
    });
}

/** Rows where every requested column holds a finite number. */
export function numericRows(
  table: Table,
  names: string[],
  path = "table",
): number[][] {
  for (const name of names) {
    if (!table.columns.includes(name)) {
      throw new Error(`missing column '${name}' in ${path}`);
    }
  }
  const out: number[][] = [];
  for (const row of table.rows) {
    const values = names.map((name) => Number(row[name]));
    if (values.every((v) => Number.isFinite(v)) && names.every((n) => row[n] !== "")) {
      out.push(values);
    }
  }
  return out;
}
