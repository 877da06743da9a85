#!/usr/bin/env node
// render --kind K --in CSV... --out FILE [--label L ...]

import { writeFileSync } from "node:fs";
import { basename, dirname } from "node:path";
import { SchemaError } from "./csv.js";
import { assertKind, renderIpgHist, renderOffsetBars, renderPerCurve, renderSweepBox } from "./figures.js";
import { loadCombined, loadIpgHist, loadPerCurve } from "./schema.js";

interface Args {
  kind: string;
  inputs: string[];
  out: string;
  labels: string[];
}

export function parseArgs(argv: string[]): Args {
  const args: Args = { kind: "", inputs: [], out: "", labels: [] };
  let i = 0;
  if (argv[0] === "render") i = 1; // optional subcommand word
  for (; i < argv.length; i++) {
    switch (argv[i]) {
      case "--kind":
        args.kind = argv[++i] ?? "";
        break;
      case "--in":
        while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
          args.inputs.push(argv[++i]);
        }
        break;
      case "--label":
        args.labels.push(argv[++i] ?? "");
        break;
      case "--out":
        args.out = argv[++i] ?? "";
        break;
      default:
        throw new SchemaError(`unknown argument '${argv[i]}'`);
    }
  }
  if (!args.kind || args.inputs.length === 0 || !args.out) {
    throw new SchemaError(
      "usage: render --kind per_curve|ipg_hist|sweep_box|offset_bars --in CSV... --out FILE [--label L ...]",
    );
  }
  return args;
}

function defaultLabel(path: string): string {
  const dir = basename(dirname(path));
  return dir === "." || dir === "" ? basename(path, ".csv") : dir;
}

export function render(args: Args): string {
  const kind = assertKind(args.kind);
  const label = (i: number) => args.labels[i] ?? defaultLabel(args.inputs[i]);
  switch (kind) {
    case "per_curve":
      return renderPerCurve(args.inputs.map((p, i) => ({ label: label(i), data: loadPerCurve(p) })));
    case "ipg_hist":
      return renderIpgHist(args.inputs.map((p, i) => ({ label: label(i), data: loadIpgHist(p) })));
    case "sweep_box":
      return renderSweepBox(args.inputs.map((p, i) => ({ label: label(i), data: loadIpgHist(p) })));
    case "offset_bars": {
      if (args.inputs.length !== 1) {
        throw new SchemaError("offset_bars takes exactly one combined.csv input");
      }
      return renderOffsetBars(loadCombined(args.inputs[0]));
    }
  }
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    writeFileSync(args.out, render(args));
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    if (err instanceof Error && "code" in err) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
