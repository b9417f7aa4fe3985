#!/usr/bin/env node
/**
 * plot --in <results.csv> --kind <pt|data|iters|ser|tags> --out <png|svg>
 *
 * Exit codes: 0 success, 2 schema/input errors.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { CsvSchemaError } from "./csv";
import { FIGURE_KINDS, FigureKind } from "./figures";
import { renderFigure } from "./render";

export function main(argv: string[]): number {
  let args;
  const parser = yargs(argv)
    .scriptName("plot")
    .option("in", { type: "string", demandOption: true, describe: "input results.csv" })
    .option("kind", {
      type: "string",
      demandOption: true,
      choices: FIGURE_KINDS,
      describe: "figure kind",
    })
    .option("out", { type: "string", demandOption: true, describe: "output image (.png or .svg)" })
    .option("y-scale", { type: "string", choices: ["db", "log"], default: "db" })
    .option("include", { type: "string", describe: "comma-separated series to keep" })
    .option("exclude", { type: "string", describe: "comma-separated series to drop" })
    .strict()
    .exitProcess(false);
  try {
    args = parser.parseSync();
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  if (args.help || args.version) {
    return 0;
  }

  try {
    const out = renderFigure({
      input: args.in,
      kind: args.kind as FigureKind,
      out: args.out,
      yScale: args["y-scale"] as "db" | "log",
      include: args.include ? args.include.split(",").map((s) => s.trim()) : undefined,
      exclude: args.exclude ? args.exclude.split(",").map((s) => s.trim()) : undefined,
    });
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    if (err instanceof CsvSchemaError) {
      console.error(`schema error: ${err.message}`);
      return 2;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`input not found: ${(err as Error).message}`);
      return 2;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(hideBin(process.argv)));
}
