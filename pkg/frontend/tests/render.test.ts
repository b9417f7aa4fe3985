import { describe, expect, it } from "vitest";
import { spawnSync } from "child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { CsvSchemaError } from "../src/csv";
import { FIGURE_KINDS, FigureKind } from "../src/figures";
import { renderFigure } from "../src/render";

const FIXTURES = join(__dirname, "fixtures");
const OUT = mkdtempSync(join(tmpdir(), "ambciq-plot-"));

describe("renderFigure", () => {
  for (const kind of FIGURE_KINDS) {
    it(`renders the ${kind} figure to SVG`, () => {
      const out = join(OUT, `${kind}.svg`);
      renderFigure({ input: join(FIXTURES, `${kind}.csv`), kind, out });
      expect(existsSync(out)).toBe(true);
      const svg = readFileSync(out, "utf-8");
      expect(svg.startsWith("<svg")).toBe(true);
      if (kind === "ser") {
        expect(svg).toContain("genie");
        expect(svg).toContain("pilot (tag)");
        expect(svg).toContain("symbol error rate");
      } else {
        expect(svg).toContain("MSE (dB)");
        expect(svg).toContain("ecm");
      }
    });
  }

  it("renders PNG output", () => {
    const out = join(OUT, "pt.png");
    renderFigure({ input: join(FIXTURES, "pt.csv"), kind: "pt", out });
    const head = readFileSync(out).subarray(0, 8);
    expect([...head]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  });

  it("plots exactly the series present in the CSV", () => {
    const out = join(OUT, "pt-series.svg");
    renderFigure({ input: join(FIXTURES, "pt.csv"), kind: "pt", out });
    const svg = readFileSync(out, "utf-8");
    for (const name of ["pilot", "amdd", "ecm", "pcrb", "sbcrb"]) {
      expect(svg).toContain(name);
    }
  });

  it("is deterministic across tool runs for identical input", () => {
    const cli = join(__dirname, "..", "dist", "cli.js");
    const a = join(OUT, "a.svg");
    const b = join(OUT, "b.svg");
    for (const out of [a, b]) {
      const res = spawnSync("node", [cli, "--in", join(FIXTURES, "data.csv"),
                                     "--kind", "data", "--out", out]);
      expect(res.status).toBe(0);
    }
    expect(readFileSync(a, "utf-8")).toBe(readFileSync(b, "utf-8"));
  });

  it("cli exits 2 on a malformed csv", () => {
    const cli = join(__dirname, "..", "dist", "cli.js");
    const bad = join(OUT, "cli-missing.csv");
    writeFileSync(bad, "x,series,ser_lu,ser_tag,trials\n1,pilot,0.1,0.2,3\n");
    const res = spawnSync("node", [cli, "--in", bad, "--kind", "pt",
                                   "--out", join(OUT, "never3.svg")]);
    expect(res.status).toBe(2);
    expect(String(res.stderr)).toMatch(/missing required column "mse"/);
  });

  it("supports include/exclude series filters", () => {
    const out = join(OUT, "pt-filtered.svg");
    renderFigure({
      input: join(FIXTURES, "pt.csv"), kind: "pt", out,
      include: ["pilot", "pcrb"],
    });
    const svg = readFileSync(out, "utf-8");
    expect(svg).toContain("pilot");
    expect(svg).not.toContain("amdd");
  });

  it("refuses a CSV missing a required column, naming it", () => {
    const bad = join(OUT, "missing.csv");
    writeFileSync(bad, "x,series,ser_lu,ser_tag,trials\n1,pilot,0.1,0.2,3\n");
    const out = join(OUT, "never.svg");
    expect(() => renderFigure({ input: bad, kind: "pt", out }))
      .toThrowError(/missing required column "mse"/);
    expect(existsSync(out)).toBe(false);
  });

  it("refuses a kind whose columns are absent", () => {
    // The iteration sweep leaves every SER field empty, so the ser kind
    // has nothing to plot from it.
    const out = join(OUT, "never2.svg");
    expect(() =>
      renderFigure({ input: join(FIXTURES, "iters.csv"), kind: "ser" as FigureKind, out }),
    ).toThrowError(CsvSchemaError);
    expect(existsSync(out)).toBe(false);
  });
});
