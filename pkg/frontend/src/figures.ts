// The four figure kinds, each a pure function from loaded tables to SVG.

import { SchemaError } from "./csv.js";
import { CombinedRow, IpgHist, PerBin } from "./schema.js";
import { el, esc, fmt, Frame, PALETTE, placard } from "./svg.js";

const W = 640;
const H = 420;

export interface Series<T> {
  label: string;
  data: T;
}

function legend(frame: Frame, labels: string[]): string {
  const parts: string[] = [];
  labels.forEach((label, i) => {
    const y = 40 + 16 * i;
    parts.push(el("line", { x1: W - 150, y1: y, x2: W - 126, y2: y, stroke: PALETTE[i % PALETTE.length], "stroke-width": 2 }));
    parts.push(el("text", { x: W - 120, y: y + 4, "font-size": 11 }, esc(label)));
  });
  return parts.join("");
}

/** PER against distance, one polyline per run; empty bins break the line. */
export function renderPerCurve(series: Series<PerBin[]>[]): string {
  const populated = series.filter((s) => s.data.some((b) => b.per !== null));
  if (populated.length === 0) {
    return placard(W, H, "no populated distance bins in any input");
  }
  const xMax = Math.max(...populated.flatMap((s) => s.data.map((b) => b.highM)));
  const frame = new Frame({
    width: W, height: H, xMin: 0, xMax, yMin: 0, yMax: 1,
    xLabel: "transmitter-receiver distance (m)", yLabel: "packet error rate",
    title: "PER by distance",
  });
  const body: string[] = [];
  populated.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    let segment: string[] = [];
    const flush = () => {
      if (segment.length > 1) {
        body.push(el("polyline", { points: segment.join(" "), fill: "none", stroke: color, "stroke-width": 1.8 }));
      } else if (segment.length === 1) {
        const [x, y] = segment[0].split(",").map(Number);
        body.push(el("circle", { cx: x, cy: y, r: 2, fill: color }));
      }
      segment = [];
    };
    for (const b of s.data) {
      if (b.per === null) {
        flush();   // gap, not zero
      } else {
        segment.push(`${fmt(frame.x((b.lowM + b.highM) / 2))},${fmt(frame.y(b.per))}`);
      }
    }
    flush();
  });
  body.push(legend(frame, populated.map((s) => s.label)));
  return frame.document(body.join(""));
}

/** Normalized inter-packet gap histogram with the overflow count annotated. */
export function renderIpgHist(series: Series<IpgHist>[]): string {
  const withMass = series.filter((s) =>
    s.data.bins.some((b) => b.count > 0) || s.data.overflow.count > 0);
  if (withMass.length === 0) {
    return placard(W, H, "no gap samples in any input");
  }
  const capMs = Math.max(...withMass.map((s) => s.data.capMs));
  const yMax = Math.max(...withMass.flatMap((s) => s.data.bins.map((b) => b.freq)), 0.01);
  const frame = new Frame({
    width: W, height: H, xMin: 0, xMax: capMs, yMin: 0, yMax: yMax * 1.08,
    xLabel: "inter-packet gap (ms)", yLabel: "normalized frequency",
    title: `Inter-packet gap distribution (display capped at ${capMs} ms)`,
  });
  const body: string[] = [];
  const n = withMass.length;
  withMass.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    for (const b of s.data.bins) {
      const x0 = frame.x(b.lowMs);
      const x1 = frame.x(b.highMs);
      const bw = (x1 - x0) / n;
      body.push(el("rect", {
        x: x0 + i * bw + 1, y: frame.y(b.freq),
        width: Math.max(bw - 2, 1), height: Math.max(frame.y(0) - frame.y(b.freq), 0),
        fill: color, "fill-opacity": 0.85,
      }));
    }
    const o = s.data.overflow;
    body.push(el("text", {
      x: W - 20, y: 40 + 16 * i, "text-anchor": "end", "font-size": 11, fill: color,
    }, esc(`${s.label}: overflow >= ${s.data.capMs} ms: n=${o.count} (f=${o.freq.toFixed(4)})`)));
  });
  return frame.document(body.join(""));
}

interface BoxStats {
  label: string;
  q1: number;
  median: number;
  q3: number;
  whiskerLow: number;
  p95: number;
  p95Clipped: boolean;
  overflowCount: number;
}

/** Weighted percentile over histogram bins (midpoints), overflow at the cap. */
function histPercentile(h: IpgHist, q: number): { value: number; clipped: boolean } {
  const total = h.bins.reduce((a, b) => a + b.count, 0) + h.overflow.count;
  if (total === 0) return { value: NaN, clipped: false };
  const target = q * total;
  let cum = 0;
  for (const b of h.bins) {
    cum += b.count;
    if (cum >= target) return { value: (b.lowMs + b.highMs) / 2, clipped: false };
  }
  return { value: h.capMs, clipped: true };
}

export function boxStats(label: string, h: IpgHist): BoxStats {
  const first = h.bins.find((b) => b.count > 0);
  const p95 = histPercentile(h, 0.95);
  return {
    label,
    q1: histPercentile(h, 0.25).value,
    median: histPercentile(h, 0.5).value,
    q3: histPercentile(h, 0.75).value,
    whiskerLow: first ? (first.lowMs + first.highMs) / 2 : NaN,
    p95: p95.value,
    p95Clipped: p95.clipped,
    overflowCount: h.overflow.count,
  };
}

/** Distribution comparison across swept values: box, median, p95 whisker. */
export function renderSweepBox(series: Series<IpgHist>[]): string {
  const stats = series
    .filter((s) => s.data.bins.some((b) => b.count > 0) || s.data.overflow.count > 0)
    .map((s) => boxStats(s.label, s.data));
  if (stats.length === 0) {
    return placard(W, H, "no gap samples in any input");
  }
  const capMs = Math.max(...series.map((s) => s.data.capMs));
  const frame = new Frame({
    width: W, height: H, xMin: 0, xMax: stats.length, yMin: 0, yMax: capMs * 1.05,
    xLabel: "swept value", yLabel: "inter-packet gap (ms)",
    title: "IPG distribution by swept value (whisker at the 95th percentile)",
  });
  const body: string[] = [];
  stats.forEach((st, i) => {
    const color = PALETTE[i % PALETTE.length];
    const cx = frame.x(i + 0.5);
    const half = (frame.x(0.8) - frame.x(0.2)) / 2 / stats.length * 2;
    body.push(el("rect", {
      x: cx - half, y: frame.y(st.q3), width: 2 * half,
      height: Math.max(frame.y(st.q1) - frame.y(st.q3), 1),
      fill: color, "fill-opacity": 0.35, stroke: color,
    }));
    body.push(el("line", { x1: cx - half, y1: frame.y(st.median), x2: cx + half, y2: frame.y(st.median), stroke: color, "stroke-width": 2 }));
    body.push(el("line", { x1: cx, y1: frame.y(st.q3), x2: cx, y2: frame.y(st.p95), stroke: color }));
    body.push(el("line", { x1: cx - half / 2, y1: frame.y(st.p95), x2: cx + half / 2, y2: frame.y(st.p95), stroke: color, "stroke-width": 2 }));
    if (st.p95Clipped) {
      body.push(el("text", { x: cx, y: frame.y(st.p95) - 5, "text-anchor": "middle", "font-size": 10, fill: color }, "p95 > cap"));
    }
    body.push(el("line", { x1: cx, y1: frame.y(st.q1), x2: cx, y2: frame.y(st.whiskerLow), stroke: color }));
    body.push(el("text", { x: cx, y: frame.y(0) + 16, "text-anchor": "middle", "font-size": 11 }, esc(st.label)));
    body.push(el("text", { x: cx, y: frame.y(0) + 28, "text-anchor": "middle", "font-size": 9, fill: "#555" },
      esc(`overflow n=${st.overflowCount}`)));
  });
  return frame.document(body.join(""));
}

/** Seed-averaged total PER and delivered data rate per offset policy. */
export function renderOffsetBars(rows: CombinedRow[]): string {
  if (rows.length === 0) {
    return placard(W, H, "combined sweep table has no rows");
  }
  const values: string[] = [];
  for (const r of rows) {
    if (!values.includes(r.value)) values.push(r.value);
  }
  const mean = (v: string, pick: (r: CombinedRow) => number) => {
    const xs = rows.filter((r) => r.value === v).map(pick);
    return xs.reduce((a, b) => a + b, 0) / xs.length;
  };
  const pers = values.map((v) => mean(v, (r) => r.perTotal));
  const rates = values.map((v) => mean(v, (r) => r.dataRateBps));
  const axisName = rows[0].axis;
  const frame = new Frame({
    width: W, height: H, xMin: 0, xMax: values.length, yMin: 0,
    yMax: Math.max(...pers, 0.01) * 1.15,
    xLabel: axisName, yLabel: "total packet error rate",
    title: "Offset experiment: PER bars, delivered-rate markers",
  });
  const rateMax = Math.max(...rates) * 1.1;
  const body: string[] = [];
  values.forEach((v, i) => {
    const x0 = frame.x(i + 0.2);
    const x1 = frame.x(i + 0.8);
    body.push(el("rect", {
      x: x0, y: frame.y(pers[i]), width: x1 - x0,
      height: Math.max(frame.y(0) - frame.y(pers[i]), 0.5),
      fill: PALETTE[0], "fill-opacity": 0.8,
    }));
    const ry = frame.y((rates[i] / rateMax) * frame.o.yMax);
    body.push(el("circle", { cx: (x0 + x1) / 2, cy: ry, r: 4, fill: PALETTE[1] }));
    body.push(el("text", { x: (x0 + x1) / 2, y: ry - 8, "text-anchor": "middle", "font-size": 9, fill: PALETTE[1] },
      esc(`${(rates[i] / 1e6).toFixed(2)} Mbit/s`)));
    body.push(el("text", { x: (x0 + x1) / 2, y: frame.y(0) + 16, "text-anchor": "middle", "font-size": 11 }, esc(v)));
    body.push(el("text", { x: (x0 + x1) / 2, y: frame.y(pers[i]) - 4, "text-anchor": "middle", "font-size": 10 },
      esc(pers[i].toFixed(4))));
  });
  body.push(el("text", { x: W - 20, y: 40, "text-anchor": "end", "font-size": 11, fill: PALETTE[1] },
    "markers: delivered data rate"));
  return frame.document(body.join(""));
}

export const KINDS = ["per_curve", "ipg_hist", "sweep_box", "offset_bars"] as const;
export type Kind = (typeof KINDS)[number];

export function assertKind(kind: string): Kind {
  if ((KINDS as readonly string[]).includes(kind)) return kind as Kind;
  throw new SchemaError(`unknown figure kind '${kind}'; expected one of ${KINDS.join(", ")}`);
}
