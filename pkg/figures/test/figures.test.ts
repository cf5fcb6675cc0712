import { mkdirSync, mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { beforeAll, describe, expect, it } from "vitest";

import {
  renderConvergence,
  renderCrossingFamily,
  renderRebound,
  renderWigner,
} from "../src/figures.js";
import { main } from "../src/cli.js";
import { parseCsv, numericRows } from "../src/csv.js";

function writeParabola(path: string, sign: number): void {
  const lines = ["t,x1,xi1,segment_tag"];
  for (let i = 0; i <= 50; i++) {
    const t = i / 50;
    lines.push(`${t},${(sign * t * t) / 2},${sign * t},exterior`);
  }
  writeFileSync(path, lines.join("\n") + "\n");
}

function makeRunDir(): string {
  const dir = mkdtempSync(join(tmpdir(), "conelab-run-"));
  mkdirSync(join(dir, "trajectories"));
  writeParabola(join(dir, "trajectories", "branch_plus.csv"), 1);
  writeParabola(join(dir, "trajectories", "branch_minus.csv"), -1);
  const metrics = ["experiment,eps,t,peak_x,peak_xi,max_error"];
  for (let i = 1; i <= 5; i++) {
    const t = i / 5;
    metrics.push(`rebound,0.00390625,${t},${(t * t) / 2},${t},`);
    metrics.push(`rebound,0.00390625,${t},${(-t * t) / 2},${-t},`);
  }
  metrics.push("packet,0.015625,1,,,0.0328");
  metrics.push("packet,0.0078125,1,,,0.0233");
  metrics.push("packet,0.00390625,1,,,0.0165");
  writeFileSync(join(dir, "metrics.csv"), metrics.join("\n") + "\n");
  writeFileSync(
    join(dir, "events.json"),
    JSON.stringify([{ t0: 0.0, sigma: [0.0], rho_limit: null, residual: 0 }]),
  );
  const wigner = ["x,xi,w"];
  for (let i = 0; i < 16; i++) {
    for (let j = 0; j < 16; j++) {
      const x = -1 + i / 8;
      const xi = -1 + j / 8;
      wigner.push(`${x},${xi},${Math.exp(-8 * (x * x + xi * xi))}`);
    }
  }
  writeFileSync(join(dir, "wigner_even.csv"), wigner.join("\n") + "\n");
  return dir;
}

describe("figure renderers", () => {
  let dir: string;

  beforeAll(() => {
    dir = makeRunDir();
  });

  it("renders the rebound phase plane", () => {
    const svg = renderRebound(dir);
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("polyline");
    expect(svg).toContain("contact t0=0");
  });

  it("renders the crossing family", () => {
    const svg = renderCrossingFamily(dir);
    expect(svg).toContain("crossing family");
  });

  it("renders the Wigner heatmap with a peak marker", () => {
    const svg = renderWigner(dir);
    expect(svg).toContain("rect");
    expect(svg).toContain("stroke=\"#111\""); // peak ring
  });

  it("renders the convergence curve", () => {
    const svg = renderConvergence(dir);
    expect(svg).toContain("packet error scaling");
  });

  it("is byte-stable across re-renders", () => {
    for (const renderer of [renderRebound, renderCrossingFamily, renderWigner, renderConvergence]) {
      expect(renderer(dir)).toEqual(renderer(dir));
    }
  });

  it("plain plot when the event list is empty", () => {
    const bare = makeRunDir();
    writeFileSync(join(bare, "events.json"), "[]");
    const svg = renderRebound(bare);
    expect(svg).not.toContain("contact t0");
  });

  it("fails loudly on a missing column", () => {
    const broken = makeRunDir();
    writeFileSync(join(broken, "wigner_even.csv"), "x,xi\n0,0\n");
    expect(() => renderWigner(broken)).toThrow(/missing column 'w'/);
  });

  it("fails loudly on a missing directory", () => {
    expect(() => renderRebound(join(dir, "nope"))).toThrow(/missing input/);
  });
});

describe("csv reader", () => {
  it("parses and filters numeric rows", () => {
    const table = parseCsv("a,b\n1,2\n3,\n4,x\n");
    expect(table.columns).toEqual(["a", "b"]);
    expect(numericRows(table, ["a", "b"])).toEqual([[1, 2]]);
    expect(() => numericRows(table, ["c"])).toThrow(/missing column/);
  });
});

describe("cli", () => {
  it("renders through the command line surface", () => {
    const dir = makeRunDir();
    const out = join(dir, "fig.svg");
    expect(main(["render", "rebound", "--in", dir, "--out", out])).toBe(0);
    expect(main(["render", "bogus", "--in", dir, "--out", out])).toBe(2);
    expect(main(["render"])).toBe(2);
    expect(main(["render", "wigner", "--in", join(dir, "nope"), "--out", out])).toBe(1);
  });
});
