/**
 * Figure construction: one chart option per sweep kind.
 *
 * MSE kinds (pt, data, iters, tags) plot 10*log10(MSE) against the swept
 * variable with the bound curves dashed; the ser kind plots both LU and
 * tag symbol-error rates on a log axis with the genie benchmark included.
 * The renderer never recomputes statistics: everything plotted comes
 * straight from the CSV.
 */

import { CsvSchemaError, ResultRow, ResultTable, seriesRows } from "./csv";

export type FigureKind = "pt" | "data" | "iters" | "ser" | "tags";

export const FIGURE_KINDS: FigureKind[] = ["pt", "data", "iters", "ser", "tags"];

export interface FigureSpec {
  input: string;
  kind: FigureKind;
  out: string;
  /** y-scale for MSE kinds; "db" (default) or "log". */
  yScale?: "db" | "log";
  include?: string[];
  exclude?: string[];
  width?: number;
  height?: number;
}

const X_LABEL: Record<FigureKind, string> = {
  pt: "transmit power (dBm)",
  data: "data block length",
  iters: "iteration",
  ser: "transmit power (dBm)",
  tags: "number of tags",
};

const MSE_SERIES = ["pilot", "amdd", "ecm", "pcrb", "sbcrb"];
const SER_SERIES = ["pilot", "amdd", "ecm", "genie"];
const DASHED = new Set(["pcrb", "sbcrb"]);

const PALETTE: Record<string, string> = {
  pilot: "#1f77b4",
  amdd: "#ff7f0e",
  ecm: "#2ca02c",
  pcrb: "#555555",
  sbcrb: "#999999",
  genie: "#d62728",
};

function wanted(spec: FigureSpec, base: string[], table: ResultTable): string[] {
  let names = base.filter((s) => table.seriesNames.includes(s));
  if (spec.include && spec.include.length) {
    names = names.filter((s) => spec.include!.includes(s));
  }
  if (spec.exclude && spec.exclude.length) {
    names = names.filter((s) => !spec.exclude!.includes(s));
  }
  return names;
}

function linePoints(
  rows: ResultRow[],
  pick: (r: ResultRow) => number | null,
  transform: (v: number) => number,
): [number, number][] {
  const pts: [number, number][] = [];
  for (const r of rows) {
    const v = pick(r);
    if (v !== null && v > 0) pts.push([r.x, transform(v)]);
  }
  return pts;
}

function lineSeries(
  name: string,
  label: string,
  pts: [number, number][],
  dashed: boolean,
) {
  return {
    name: label,
    type: "line" as const,
    data: pts,
    symbol: dashed ? "none" : "circle",
    symbolSize: 6,
    lineStyle: {
      type: dashed ? ("dashed" as const) : ("solid" as const),
      width: 2,
      color: PALETTE[name] ?? "#000",
    },
    itemStyle: { color: PALETTE[name] ?? "#000" },
  };
}

export function buildChartOption(table: ResultTable, spec: FigureSpec): object {
  return spec.kind === "ser" ? serOption(table, spec) : mseOption(table, spec);
}

function mseOption(table: ResultTable, spec: FigureSpec) {
  const names = wanted(spec, MSE_SERIES, table);
  const useDb = (spec.yScale ?? "db") === "db";
  const transform = useDb ? (v: number) => 10 * Math.log10(v) : (v: number) => v;
  const series = [];
  for (const name of names) {
    const pts = linePoints(seriesRows(table, name), (r) => r.mse, transform);
    if (pts.length) series.push(lineSeries(name, name, pts, DASHED.has(name)));
  }
  if (!series.length) {
    throw new CsvSchemaError(
      `kind "${spec.kind}" plots the "mse" column, but no series provides it`,
    );
  }
  return {
    animation: false,
    backgroundColor: "#ffffff",
    legend: { data: series.map((s) => s.name), top: 8 },
    grid: { left: 70, right: 24, top: 48, bottom: 48 },
    xAxis: { type: "value", name: X_LABEL[spec.kind], nameLocation: "middle", nameGap: 28 },
    yAxis: useDb
      ? { type: "value", name: "MSE (dB)", nameLocation: "middle", nameGap: 48 }
      : { type: "log", name: "MSE", nameLocation: "middle", nameGap: 48 },
    series,
  };
}

function serOption(table: ResultTable, spec: FigureSpec) {
  const names = wanted(spec, SER_SERIES, table);
  const series = [];
  for (const name of names) {
    const rows = seriesRows(table, name);
    const lu = linePoints(rows, (r) => r.serLu, (v) => v);
    if (lu.length) series.push(lineSeries(name, name, lu, false));
    const tag = linePoints(rows, (r) => r.serTag, (v) => v);
    if (tag.length) series.push(lineSeries(name, `${name} (tag)`, tag, true));
  }
  if (!series.length) {
    throw new CsvSchemaError(
      'kind "ser" plots the "ser_lu"/"ser_tag" columns, but no series provides them',
    );
  }
  return {
    animation: false,
    backgroundColor: "#ffffff",
    legend: { data: series.map((s) => s.name), top: 8 },
    grid: { left: 70, right: 24, top: 48, bottom: 48 },
    xAxis: { type: "value", name: X_LABEL.ser, nameLocation: "middle", nameGap: 28 },
    yAxis: { type: "log", name: "symbol error rate", nameLocation: "middle", nameGap: 48 },
    series,
  };
}
