#!/usr/bin/env node
/**
 * conelab-figures render <figure-id> --in <run-dir> --out <file.svg>
 */

import { writeFileSync } from "fs";

import { FIGURES } from "./figures.js";

function usage(): string {
  return (
    "usage: conelab-figures render <figure-id> --in <run-dir> --out <file.svg>\n" +
    `figure ids: ${Object.keys(FIGURES).sort().join(", ")}`
  );
}

export function main(argv: string[]): number {
  if (argv[0] !== "render" || argv.length < 2) {
    process.stderr.write(usage() + "\n");
    return 2;
  }
  const id = argv[1];
  let inDir = "";
  let outFile = "";
  for (let i = 2; i < argv.length; i += 2) {
    if (argv[i] === "--in") {
      inDir = argv[i + 1] ?? "";
    } else if (argv[i] === "--out") {
      outFile = argv[i + 1] ?? "";
    } else {
      process.stderr.write(`unknown option ${argv[i]}\n${usage()}\n`);
      return 2;
    }
  }
  if (!inDir || !outFile) {
    process.stderr.write(usage() + "\n");
    return 2;
  }
  const renderer = FIGURES[id];
  if (!renderer) {
    process.stderr.write(`unknown figure id '${id}'\n${usage()}\n`);
    return 2;
  }
  try {
    writeFileSync(outFile, renderer(inDir));
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  process.stdout.write(`wrote ${outFile}\n`);
  return 0;
}

import { pathToFileURL } from "url";

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exitCode = main(process.argv.slice(2));
}
