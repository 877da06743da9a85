// Typed loaders for the simulator's documented CSV schemas.

import { readFileSync } from "node:fs";
import { asNumber, asOptionalNumber, columnIndex, parseCsv, SchemaError } from "./csv.js";

export interface PerBin {
  lowM: number;
  highM: number;
  attempts: number;
  failures: number;
  per: number | null;
}

export interface IpgBin {
  lowMs: number;
  highMs: number; // Infinity marks the overflow bucket
  freq: number;
  count: number;
}

export interface IpgHist {
  bins: IpgBin[];
  overflow: IpgBin;
  capMs: number;
}

export interface CombinedRow {
  axis: string;
  value: string;
  seed: number;
  perTotal: number;
  ipgMeanMs: number;
  ipgP95Ms: number;
  dataRateBps: number;
}

export function loadPerCurve(path: string): PerBin[] {
  const table = parseCsv(readFileSync(path, "utf8"));
  const lo = columnIndex(table, "bin_low_m", path);
  const hi = columnIndex(table, "bin_high_m", path);
  const att = columnIndex(table, "attempts", path);
  const fail = columnIndex(table, "failures", path);
  const per = columnIndex(table, "per", path);
  return table.rows.map((r) => ({
    lowM: asNumber(r[lo], "bin_low_m", path),
    highM: asNumber(r[hi], "bin_high_m", path),
    attempts: asNumber(r[att], "attempts", path),
    failures: asNumber(r[fail], "failures", path),
    per: asOptionalNumber(r[per], "per", path),
  }));
}

export function loadIpgHist(path: string): IpgHist {
  const table = parseCsv(readFileSync(path, "utf8"));
  const lo = columnIndex(table, "bin_low_ms", path);
  const hi = columnIndex(table, "bin_high_ms", path);
  const freq = columnIndex(table, "freq", path);
  const count = columnIndex(table, "count", path);
  const bins = table.rows.map((r) => ({
    lowMs: asNumber(r[lo], "bin_low_ms", path),
    highMs: asNumber(r[hi], "bin_high_ms", path),
    freq: asNumber(r[freq], "freq", path),
    count: asNumber(r[count], "count", path),
  }));
  const overflow = bins.find((b) => !Number.isFinite(b.highMs));
  if (!overflow) {
    throw new SchemaError(`${path}: missing the overflow row (bin_high_ms = inf)`);
  }
  return {
    bins: bins.filter((b) => Number.isFinite(b.highMs)),
    overflow,
    capMs: overflow.lowMs,
  };
}

export function loadCombined(path: string): CombinedRow[] {
  const table = parseCsv(readFileSync(path, "utf8"));
  const axis = columnIndex(table, "axis", path);
  const value = columnIndex(table, "value", path);
  const seed = columnIndex(table, "seed", path);
  const per = columnIndex(table, "per_total", path);
  const mean = columnIndex(table, "ipg_mean_ms", path);
  const p95 = columnIndex(table, "ipg_p95_ms", path);
  const rate = columnIndex(table, "data_rate_bps", path);
  return table.rows.map((r) => ({
    axis: r[axis],
    value: r[value],
    seed: asNumber(r[seed], "seed", path),
    perTotal: asNumber(r[per], "per_total", path),
    ipgMeanMs: asNumber(r[mean], "ipg_mean_ms", path),
    ipgP95Ms: asNumber(r[p95], "ipg_p95_ms", path),
    dataRateBps: asNumber(r[rate], "data_rate_bps", path),
  }));
}
