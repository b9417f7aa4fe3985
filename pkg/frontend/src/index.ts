export { CsvSchemaError, parseResultsCsv, seriesRows } from "./csv";
export type { ResultRow, ResultTable } from "./csv";
export { buildChartOption, FIGURE_KINDS } from "./figures";
export type { FigureKind, FigureSpec } from "./figures";
export { renderFigure, renderToPng, renderToSvg } from "./render";
