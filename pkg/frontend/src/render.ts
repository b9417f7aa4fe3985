/**
 * Headless figure rendering.
 *
 * `.svg` outputs use the zero-dependency SSR string renderer; any other
 * extension renders onto a raster canvas and encodes PNG.  The image is
 * produced fully in memory before the output file is created, so a failed
 * render never leaves a partial file behind.
 */

import { readFileSync, writeFileSync } from "fs";
import * as echarts from "echarts";
import { createCanvas } from "@napi-rs/canvas";

import { parseResultsCsv } from "./csv";
import { buildChartOption, FigureSpec } from "./figures";

// echarts probes text metrics through a platform hook that may be called
// without dimensions.
echarts.setPlatformAPI({
  createCanvas: ((w?: number, h?: number) =>
    createCanvas(Math.max(1, Math.floor(w || 1)), Math.max(1, Math.floor(h || 1)))) as never,
});

export function renderToSvg(spec: FigureSpec, option: object): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: spec.width ?? 800,
    height: spec.height ?? 560,
  });
  try {
    chart.setOption(option as echarts.EChartsOption);
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}

export function renderToPng(spec: FigureSpec, option: object): Buffer {
  const canvas = createCanvas(spec.width ?? 800, spec.height ?? 560);
  const chart = echarts.init(canvas as never);
  try {
    chart.setOption(option as echarts.EChartsOption);
    return canvas.toBuffer("image/png");
  } finally {
    chart.dispose();
  }
}

/** Render one figure from CSV to an image file; returns the output path. */
export function renderFigure(spec: FigureSpec): string {
  const text = readFileSync(spec.input, "utf-8");
  const table = parseResultsCsv(text, spec.input);
  const option = buildChartOption(table, spec);
  if (spec.out.toLowerCase().endsWith(".svg")) {
    writeFileSync(spec.out, renderToSvg(spec, option));
  } else {
    writeFileSync(spec.out, renderToPng(spec, option));
  }
  return spec.out;
}
