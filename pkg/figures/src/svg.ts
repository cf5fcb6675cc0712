/**
 * Deterministic SVG scene builder: fixed number formatting, no timestamps,
 * append-only element list, so identical inputs give identical bytes.
 */

export function fmt(value: number): string {
  if (!Number.isFinite(value)) {
    return "0";
  }
  const rounded = Number(value.toPrecision(6));
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

export interface Margins {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export class Scale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  map(value: number): number {
    const t = (value - this.d0) / (this.d1 - this.d0 || 1);
    return this.r0 + t * (this.r1 - this.r0);
  }

  ticks(count = 5): number[] {
    const span = this.d1 - this.d0;
    if (span === 0) {
      return [this.d0];
    }
    const step = Math.pow(10, Math.floor(Math.log10(Math.abs(span) / count)));
    const candidates = [step, 2 * step, 5 * step, 10 * step];
    const chosen =
      candidates.find((s) => Math.abs(span) / s <= count + 1) ?? 10 * step;
    const start = Math.ceil(this.d0 / chosen) * chosen;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-12; v += chosen) {
      out.push(Number(v.toPrecision(10)));
    }
    return out;
  }
}

export class Svg {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  raw(element: string): void {
    this.parts.push(element);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, extra = ""): void {
    this.raw(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"${extra}/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.raw(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${fmt(width)}"/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5, dash = ""): void {
    const path = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.raw(
      `<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="${fmt(width)}"${dashAttr}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, fill: string, extra = ""): void {
    this.raw(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" fill="${fill}"${extra}/>`);
  }

  text(x: number, y: number, content: string, size = 11, anchor = "middle", fill = "#222"): void {
    this.raw(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-family="Helvetica,Arial,sans-serif" font-size="${size}" text-anchor="${anchor}" fill="${fill}">${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export interface Frame {
  svg: Svg;
  sx: Scale;
  sy: Scale;
}

/** Plot frame with axes, ticks and labels. */
export function makeFrame(
  width: number,
  height: number,
  xDomain: [number, number],
  yDomain: [number, number],
  xLabel: string,
  yLabel: string,
  title: string,
  margins: Margins = { left: 56, right: 16, top: 30, bottom: 42 },
): Frame {
  const svg = new Svg(width, height);
  const sx = new Scale(xDomain[0], xDomain[1], margins.left, width - margins.right);
  const sy = new Scale(yDomain[0], yDomain[1], height - margins.bottom, margins.top);
  svg.rect(
    margins.left,
    margins.top,
    width - margins.left - margins.right,
    height - margins.top - margins.bottom,
    "none",
    ' stroke="#444" stroke-width="1"',
  );
  for (const t of sx.ticks()) {
    const px = sx.map(t);
    svg.line(px, sy.map(yDomain[0]), px, sy.map(yDomain[0]) + 4, "#444");
    svg.text(px, height - margins.bottom + 16, fmt(t), 10);
  }
  for (const t of sy.ticks()) {
    const py = sy.map(t);
    svg.line(margins.left - 4, py, margins.left, py, "#444");
    svg.text(margins.left - 8, py + 3, fmt(t), 10, "end");
  }
  svg.text((margins.left + width - margins.right) / 2, height - 10, xLabel, 11);
  svg.raw(
    `<text x="14" y="${fmt((margins.top + height - margins.bottom) / 2)}" font-family="Helvetica,Arial,sans-serif" font-size="11" text-anchor="middle" fill="#222" transform="rotate(-90 14 ${fmt(
      (margins.top + height - margins.bottom) / 2,
    )})">${yLabel}</text>`,
  );
  svg.text((margins.left + width - margins.right) / 2, 18, title, 13);
  return { svg, sx, sy };
}
