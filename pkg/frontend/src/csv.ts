/**
 * Parsing and validation of the simulator's results.csv contract.
 *
 * Schema: header `x,series,mse,ser_lu,ser_tag,trials`; one row per
 * (grid point, series); numeric fields may be empty when a series does not
 * define them (bounds carry no SER, the genie detector no MSE).
 */

export class CsvSchemaError extends Error {}

export interface ResultRow {
  x: number;
  series: string;
  mse: number | null;
  serLu: number | null;
  serTag: number | null;
  trials: number;
}

export interface ResultTable {
  rows: ResultRow[];
  seriesNames: string[];
}

const REQUIRED = ["x", "series", "mse", "ser_lu", "ser_tag", "trials"] as const;

function parseNumber(
  raw: string,
  column: string,
  line: number,
  source: string,
): number | null {
  if (raw === "") return null;
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new CsvSchemaError(
      `${source}:${line}: column "${column}" has non-numeric value "${raw}"`,
    );
  }
  return value;
}

export function parseResultsCsv(text: string, source = "<csv>"): ResultTable {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new CsvSchemaError(`${source}: file is empty`);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  for (const col of REQUIRED) {
    if (!header.includes(col)) {
      throw new CsvSchemaError(`${source}: missing required column "${col}"`);
    }
  }
  const idx = Object.fromEntries(REQUIRED.map((c) => [c, header.indexOf(c)]));

  const rows: ResultRow[] = [];
  const seriesNames: string[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = lines[i].split(",");
    if (fields.length !== header.length) {
      throw new CsvSchemaError(
        `${source}:${i + 1}: expected ${header.length} fields, got ${fields.length}`,
      );
    }
    const series = fields[idx.series].trim();
    if (series === "") {
      throw new CsvSchemaError(`${source}:${i + 1}: column "series" is empty`);
    }
    const x = parseNumber(fields[idx.x], "x", i + 1, source);
    if (x === null) {
      throw new CsvSchemaError(`${source}:${i + 1}: column "x" is empty`);
    }
    const trials = parseNumber(fields[idx.trials], "trials", i + 1, source) ?? 0;
    rows.push({
      x,
      series,
      mse: parseNumber(fields[idx.mse], "mse", i + 1, source),
      serLu: parseNumber(fields[idx.ser_lu], "ser_lu", i + 1, source),
      serTag: parseNumber(fields[idx.ser_tag], "ser_tag", i + 1, source),
      trials,
    });
    if (!seriesNames.includes(series)) seriesNames.push(series);
  }
  return { rows, seriesNames };
}

/** Rows of one series ordered by x. */
export function seriesRows(table: ResultTable, name: string): ResultRow[] {
  return table.rows
    .filter((r) => r.series === name)
    .sort((a, b) => a.x - b.x);
}
