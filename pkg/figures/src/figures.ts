/**
 * Figure renderers over a finished run directory.
 *
 * Pure functions of the input files: trajectory CSVs (t,x1,xi1,...),
 * metrics.csv, events.json and Wigner CSVs (x,xi,w) as written by the
 * simulation harness.  No physics is recomputed here.
 */

import { existsSync, readFileSync, readdirSync } from "fs";
import { join } from "path";

import { numericRows, readCsv } from "./csv.js";
import { diverging } from "./colormap.js";
import { fmt, makeFrame } from "./svg.js";

const TRACK_COLORS = ["#1f4e9c", "#b03030", "#2e7d32", "#7b1fa2", "#666666"];

interface EventRecord {
  t0: number;
  sigma: number[];
  rho_limit: number[] | null;
}

function readEvents(dir: string, name = "events.json"): EventRecord[] {
  const path = join(dir, name);
  if (!existsSync(path)) {
    return [];
  }
  const doc = JSON.parse(readFileSync(path, "utf8"));
  return Array.isArray(doc) ? (doc as EventRecord[]) : [];
}

function phaseRange(tracks: number[][][]): {
  x: [number, number];
  y: [number, number];
} {
  let xlo = Infinity;
  let xhi = -Infinity;
  let ylo = Infinity;
  let yhi = -Infinity;
  for (const track of tracks) {
    for (const [x, xi] of track) {
      xlo = Math.min(xlo, x);
      xhi = Math.max(xhi, x);
      ylo = Math.min(ylo, xi);
      yhi = Math.max(yhi, xi);
    }
  }
  if (!Number.isFinite(xlo)) {
    throw new Error("no finite trajectory points to plot");
  }
  const padX = 0.08 * (xhi - xlo || 1);
  const padY = 0.08 * (yhi - ylo || 1);
  return { x: [xlo - padX, xhi + padX], y: [ylo - padY, yhi + padY] };
}

function readTrajectories(dir: string, names?: string[]): Array<{ name: string; points: number[][] }> {
  const trajDir = join(dir, "trajectories");
  if (!existsSync(trajDir)) {
    throw new Error(`missing input: ${trajDir}`);
  }
  const files = (names ?? readdirSync(trajDir).sort()).filter((f) => f.endsWith(".csv"));
  if (files.length === 0) {
    throw new Error(`no trajectory CSVs under ${trajDir}`);
  }
  return files.map((file) => {
    const table = readCsv(join(trajDir, file));
    return { name: file.replace(/\.csv$/, ""), points: numericRows(table, ["x1", "xi1"], file) };
  });
}

function peakRows(dir: string): number[][] {
  const path = join(dir, "metrics.csv");
  if (!existsSync(path)) {
    return [];
  }
  const table = readCsv(path);
  if (!table.columns.includes("peak_x") || !table.columns.includes("peak_xi")) {
    return [];
  }
  return numericRows(table, ["peak_x", "peak_xi"], "metrics.csv");
}

/** Phase-plane figure: classical branch trajectories with measured peaks
 * and contact annotations. */
export function renderTrajectories(dir: string, title: string): string {
  const tracks = readTrajectories(dir);
  const peaks = peakRows(dir);
  const range = phaseRange(tracks.map((t) => t.points).concat(peaks.length ? [peaks] : []));
  const frame = makeFrame(560, 420, range.x, range.y, "x", "xi", title);
  tracks.forEach((track, i) => {
    frame.svg.polyline(
      track.points.map(([x, xi]) => [frame.sx.map(x), frame.sy.map(xi)]),
      TRACK_COLORS[i % TRACK_COLORS.length],
    );
    const [lx, lxi] = track.points[track.points.length - 1];
    frame.svg.text(frame.sx.map(lx), frame.sy.map(lxi) - 6, track.name, 9, "middle", "#555");
  });
  for (const [x, xi] of peaks) {
    frame.svg.circle(frame.sx.map(x), frame.sy.map(xi), 2.6, "#111", ' opacity="0.75"');
  }
  for (const event of readEvents(dir)) {
    const sx = frame.sx.map(event.sigma[0] ?? 0);
    const sy = frame.sy.map(0);
    frame.svg.circle(sx, sy, 5, "none", ' stroke="#b03030" stroke-width="1.5"');
    frame.svg.text(sx + 8, sy - 8, `contact t0=${fmt(event.t0)}`, 9, "start", "#b03030");
  }
  return frame.svg.render();
}

export function renderRebound(dir: string): string {
  return renderTrajectories(dir, "rebound: the two parabola branches and measured peaks");
}

export function renderCrossingFamily(dir: string): string {
  return renderTrajectories(dir, "crossing family: launch momenta shrinking toward zero");
}

/** Heatmap of a Wigner CSV (columns x, xi, w) with peak marker. */
export function renderWigner(dir: string): string {
  const candidates = readdirSync(dir)
    .filter((f) => f.startsWith("wigner") && f.endsWith(".csv"))
    .sort();
  if (candidates.length === 0) {
    throw new Error(`missing input: no wigner_*.csv under ${dir}`);
  }
  const table = readCsv(join(dir, candidates[0]));
  const rows = numericRows(table, ["x", "xi", "w"], candidates[0]);
  const xs = Array.from(new Set(rows.map((r) => r[0]))).sort((a, b) => a - b);
  const ps = Array.from(new Set(rows.map((r) => r[1]))).sort((a, b) => a - b);
  let wmax = 0;
  for (const [, , w] of rows) {
    wmax = Math.max(wmax, Math.abs(w));
  }
  const frame = makeFrame(
    600,
    460,
    [xs[0], xs[xs.length - 1]],
    [ps[0], ps[ps.length - 1]],
    "x",
    "xi",
    `phase-space density (${candidates[0]})`,
    { left: 56, right: 70, top: 30, bottom: 42 },
  );
  const dx = xs.length > 1 ? frame.sx.map(xs[1]) - frame.sx.map(xs[0]) : 4;
  const dp = ps.length > 1 ? Math.abs(frame.sy.map(ps[1]) - frame.sy.map(ps[0])) : 4;
  let best: [number, number, number] = [xs[0], ps[0], -Infinity];
  for (const [x, p, w] of rows) {
    if (w > best[2]) {
      best = [x, p, w];
    }
    const color = diverging(0.5 + 0.5 * (wmax === 0 ? 0 : w / wmax));
    frame.svg.rect(frame.sx.map(x) - dx / 2, frame.sy.map(p) - dp / 2, dx, dp, color);
  }
  frame.svg.circle(frame.sx.map(best[0]), frame.sy.map(best[1]), 5, "none", ' stroke="#111" stroke-width="1.4"');
  // colorbar
  const cbX = 600 - 52;
  for (let i = 0; i < 60; i++) {
    frame.svg.rect(cbX, 380 - i * 5.5, 14, 5.5, diverging(i / 59));
  }
  frame.svg.text(cbX + 7, 396, fmt(-wmax), 9);
  frame.svg.text(cbX + 7, 42, fmt(wmax), 9);
  return frame.svg.render();
}

/** Error-vs-epsilon plot from a packet-convergence metrics table. */
export function renderConvergence(dir: string): string {
  const table = readCsv(join(dir, "metrics.csv"));
  const rows = numericRows(table, ["eps", "max_error"], "metrics.csv");
  if (rows.length === 0) {
    throw new Error("metrics.csv carries no (eps, max_error) rows");
  }
  const pts = rows
    .map(([eps, err]) => [Math.log10(eps), Math.log10(err)] as [number, number])
    .sort((a, b) => a[0] - b[0]);
  const xr: [number, number] = [pts[0][0] - 0.2, pts[pts.length - 1][0] + 0.2];
  const ys = pts.map((p) => p[1]);
  const yr: [number, number] = [Math.min(...ys) - 0.3, Math.max(...ys) + 0.3];
  const frame = makeFrame(520, 400, xr, yr, "log10 eps", "log10 max error", "packet error scaling");
  frame.svg.polyline(
    pts.map(([x, y]) => [frame.sx.map(x), frame.sy.map(y)]),
    TRACK_COLORS[0],
  );
  for (const [x, y] of pts) {
    frame.svg.circle(frame.sx.map(x), frame.sy.map(y), 3, TRACK_COLORS[0]);
  }
  return frame.svg.render();
}

export const FIGURES: Record<string, (dir: string) => string> = {
  rebound: renderRebound,
  "crossing-family": renderCrossingFamily,
  wigner: renderWigner,
  convergence: renderConvergence,
};
