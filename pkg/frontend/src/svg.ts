/** Minimal deterministic SVG assembly: no DOM, no timestamps, pure strings. */

import { LinearScale, ticks } from "./scale.js";

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function fmt(x: number): string {
  if (!isFinite(x)) return "0";
  const r = Number(x.toPrecision(9));
  return Object.is(r, -0) ? "0" : String(r);
}

export interface Margins {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export class Chart {
  readonly width: number;
  readonly height: number;
  readonly margins: Margins;
  private parts: string[] = [];

  constructor(width = 720, height = 480, margins?: Partial<Margins>) {
    this.width = width;
    this.height = height;
    this.margins = { top: 40, right: 24, bottom: 52, left: 68, ...margins };
  }

  get plotLeft(): number {
    return this.margins.left;
  }
  get plotRight(): number {
    return this.width - this.margins.right;
  }
  get plotTop(): number {
    return this.margins.top;
  }
  get plotBottom(): number {
    return this.height - this.margins.bottom;
  }

  raw(fragment: string): void {
    this.parts.push(fragment);
  }

  element(tag: string, attrs: Record<string, string | number>, text?: string): void {
    const attrStr = Object.entries(attrs)
      .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : v}"`)
      .join(" ");
    if (text === undefined) {
      this.parts.push(`<${tag} ${attrStr}/>`);
    } else {
      this.parts.push(`<${tag} ${attrStr}>${esc(text)}</${tag}>`);
    }
  }

  title(text: string): void {
    this.element(
      "text",
      {
        x: (this.plotLeft + this.plotRight) / 2,
        y: this.margins.top - 16,
        "text-anchor": "middle",
        "font-size": 16,
        "font-family": "sans-serif",
      },
      text,
    );
  }

  axes(x: LinearScale, y: LinearScale, xLabel: string, yLabel: string): void {
    this.element("rect", {
      x: this.plotLeft,
      y: this.plotTop,
      width: this.plotRight - this.plotLeft,
      height: this.plotBottom - this.plotTop,
      fill: "none",
      stroke: "#333",
      "stroke-width": 1,
    });
    for (const t of ticks(x.domain[0], x.domain[1])) {
      const px = x(t);
      if (px < this.plotLeft - 1e-6 || px > this.plotRight + 1e-6) continue;
      this.element("line", {
        x1: px, y1: this.plotBottom, x2: px, y2: this.plotBottom + 5,
        stroke: "#333", "stroke-width": 1,
      });
      this.element(
        "text",
        { x: px, y: this.plotBottom + 20, "text-anchor": "middle",
          "font-size": 11, "font-family": "sans-serif" },
        fmt(t),
      );
    }
    for (const t of ticks(y.domain[0], y.domain[1])) {
      const py = y(t);
      if (py < this.plotTop - 1e-6 || py > this.plotBottom + 1e-6) continue;
      this.element("line", {
        x1: this.plotLeft - 5, y1: py, x2: this.plotLeft, y2: py,
        stroke: "#333", "stroke-width": 1,
      });
      this.element(
        "text",
        { x: this.plotLeft - 8, y: py + 4, "text-anchor": "end",
          "font-size": 11, "font-family": "sans-serif" },
        fmt(t),
      );
    }
    this.element(
      "text",
      { x: (this.plotLeft + this.plotRight) / 2, y: this.height - 12,
        "text-anchor": "middle", "font-size": 13, "font-family": "sans-serif" },
      xLabel,
    );
    this.element(
      "text",
      {
        x: 16,
        y: (this.plotTop + this.plotBottom) / 2,
        "text-anchor": "middle",
        "font-size": 13,
        "font-family": "sans-serif",
        transform: `rotate(-90 16 ${fmt((this.plotTop + this.plotBottom) / 2)})`,
      },
      yLabel,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, opts: Record<string, string | number> = {}): void {
    if (points.length === 0) return;
    const path = points.map((p) => `${fmt(p[0])},${fmt(p[1])}`).join(" ");
    this.element("polyline", {
      points: path, fill: "none", stroke, "stroke-width": 1.5, ...opts,
    });
  }

  circles(points: Array<[number, number]>, fill: string, r = 3): void {
    for (const [cx, cy] of points) {
      this.element("circle", { cx, cy, r, fill });
    }
  }

  legend(entries: Array<{ label: string; color: string }>, x: number, y: number): void {
    entries.forEach((entry, i) => {
      const yy = y + i * 18;
      this.element("line", {
        x1: x, y1: yy - 4, x2: x + 22, y2: yy - 4,
        stroke: entry.color, "stroke-width": 2,
      });
      this.element(
        "text",
        { x: x + 28, y: yy, "font-size": 12, "font-family": "sans-serif" },
        entry.label,
      );
    });
  }

  warning(text: string): void {
    this.element(
      "text",
      {
        x: (this.plotLeft + this.plotRight) / 2,
        y: (this.plotTop + this.plotBottom) / 2,
        "text-anchor": "middle",
        "font-size": 14,
        "font-family": "sans-serif",
        fill: "#b00",
      },
      text,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>\n` +
      this.parts.join("\n") +
      `\n</svg>\n`
    );
  }
}
