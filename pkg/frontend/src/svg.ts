// Deterministic string-built SVG primitives: no DOM, no randomness, so a
// re-render of the same inputs is byte-identical.

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function el(tag: string, attrs: Record<string, string | number>, body = ""): string {
  const a = Object.entries(attrs)
    .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : esc(v)}"`)
    .join(" ");
  return body === "" ? `<${tag} ${a}/>` : `<${tag} ${a}>${body}</${tag}>`;
}

export function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(2);
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export interface FrameOpts {
  width: number;
  height: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
  xLabel: string;
  yLabel: string;
  title: string;
}

const MARGIN = { left: 58, right: 16, top: 30, bottom: 42 };

/** Linear data-to-pixel frame with axes, ticks and labels. */
export class Frame {
  constructor(readonly o: FrameOpts) {}

  x(v: number): number {
    const span = this.o.width - MARGIN.left - MARGIN.right;
    return MARGIN.left + ((v - this.o.xMin) / (this.o.xMax - this.o.xMin)) * span;
  }

  y(v: number): number {
    const span = this.o.height - MARGIN.top - MARGIN.bottom;
    return this.o.height - MARGIN.bottom - ((v - this.o.yMin) / (this.o.yMax - this.o.yMin)) * span;
  }

  axes(): string {
    const o = this.o;
    const parts: string[] = [];
    parts.push(el("rect", {
      x: MARGIN.left, y: MARGIN.top,
      width: o.width - MARGIN.left - MARGIN.right,
      height: o.height - MARGIN.top - MARGIN.bottom,
      fill: "none", stroke: "#333", "stroke-width": 1,
    }));
    for (const t of ticks(o.xMin, o.xMax)) {
      const px = this.x(t);
      parts.push(el("line", { x1: px, y1: this.y(o.yMin), x2: px, y2: this.y(o.yMin) + 4, stroke: "#333" }));
      parts.push(el("text", { x: px, y: o.height - MARGIN.bottom + 16, "text-anchor": "middle", "font-size": 10 }, esc(tickLabel(t))));
    }
    for (const t of ticks(o.yMin, o.yMax)) {
      const py = this.y(t);
      parts.push(el("line", { x1: MARGIN.left - 4, y1: py, x2: MARGIN.left, y2: py, stroke: "#333" }));
      parts.push(el("text", { x: MARGIN.left - 7, y: py + 3, "text-anchor": "end", "font-size": 10 }, esc(tickLabel(t))));
      parts.push(el("line", { x1: MARGIN.left, y1: py, x2: o.width - MARGIN.right, y2: py, stroke: "#ddd", "stroke-width": 0.5 }));
    }
    parts.push(el("text", { x: o.width / 2, y: o.height - 8, "text-anchor": "middle", "font-size": 11 }, esc(o.xLabel)));
    parts.push(el("text", {
      x: 14, y: o.height / 2, "text-anchor": "middle", "font-size": 11,
      transform: `rotate(-90 14 ${o.height / 2})`,
    }, esc(o.yLabel)));
    parts.push(el("text", { x: o.width / 2, y: 18, "text-anchor": "middle", "font-size": 13 }, esc(o.title)));
    return parts.join("");
  }

  document(body: string): string {
    return `<?xml version="1.0" encoding="UTF-8"?>\n` + el("svg", {
      xmlns: "http://www.w3.org/2000/svg",
      width: this.o.width, height: this.o.height,
      "font-family": "Helvetica, Arial, sans-serif",
    }, el("rect", { x: 0, y: 0, width: this.o.width, height: this.o.height, fill: "white" }) + this.axes() + body);
  }
}

export function ticks(min: number, max: number, target = 6): number[] {
  const span = max - min;
  if (span <= 0) return [min];
  const step = niceStep(span / target);
  const out: number[] = [];
  for (let t = Math.ceil(min / step) * step; t <= max + 1e-9; t += step) {
    out.push(Number(t.toPrecision(12)));
  }
  return out;
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2 * mag;
  if (r < 7.5) return 5 * mag;
  return 10 * mag;
}

function tickLabel(t: number): string {
  if (Math.abs(t) >= 1e6) return `${t / 1e6}M`;
  if (Math.abs(t) >= 1e4) return `${t / 1e3}k`;
  return Number.isInteger(t) ? String(t) : String(Number(t.toPrecision(3)));
}

/** Full-size placard used when an input has no rows to draw. */
export function placard(width: number, height: number, message: string): string {
  return `<?xml version="1.0" encoding="UTF-8"?>\n` + el("svg", {
    xmlns: "http://www.w3.org/2000/svg", width, height,
    "font-family": "Helvetica, Arial, sans-serif",
  }, el("rect", { x: 0, y: 0, width, height, fill: "white", stroke: "#999" })
    + el("text", { x: width / 2, y: height / 2, "text-anchor": "middle", "font-size": 16, fill: "#666" }, esc(`no data: ${message}`)));
}
