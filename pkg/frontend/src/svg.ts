/**
 * Minimal SVG assembly. Coordinates are emitted with fixed decimals so a
 * rebuild of the same data is byte-identical.
 */

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function px(v: number): string {
  return v.toFixed(2);
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number],
  range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  return f;
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}" ` +
      `font-family="Helvetica, Arial, sans-serif">`);
    this.parts.push(
      `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
    width = 1, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${px(x1)}" y1="${px(y1)}" x2="${px(x2)}" y2="${px(y2)}" ` +
      `stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string,
    stroke?: string): void {
    const s = stroke ? ` stroke="${stroke}"` : "";
    this.parts.push(
      `<rect x="${px(x)}" y="${px(y)}" width="${px(w)}" height="${px(h)}" ` +
      `fill="${fill}"${s}/>`);
  }

  circle(x: number, y: number, r: number, fill: string, stroke?: string): void {
    const s = stroke ? ` stroke="${stroke}" fill-opacity="0"` : "";
    this.parts.push(
      `<circle cx="${px(x)}" cy="${px(y)}" r="${px(r)}" fill="${fill}"${s}/>`);
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1,
    opacity = 1): void {
    const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" ` +
      `stroke-width="${width}" stroke-opacity="${opacity}"/>`);
  }

  text(x: number, y: number, s: string, size = 11, anchor = "middle",
    fill = "#222222", rotate?: number): void {
    const r = rotate === undefined ? ""
      : ` transform="rotate(${rotate} ${px(x)} ${px(y)})"`;
    this.parts.push(
      `<text x="${px(x)}" y="${px(y)}" font-size="${size}" ` +
      `text-anchor="${anchor}" fill="${fill}"${r}>${esc(s)}</text>`);
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

/** Y axis with ticks, labels, and a title reading up the left margin. */
export function yAxis(svg: Svg, scale: Scale, x: number, ticks: number[],
  step: number, label: (v: number, step: number) => string,
  title?: string): void {
  const [d0, d1] = scale.domain;
  svg.line(x, scale(d0), x, scale(d1), "#222222");
  for (const t of ticks) {
    const y = scale(t);
    svg.line(x - 4, y, x, y, "#222222");
    svg.text(x - 7, y + 3.5, label(t, step), 10, "end");
  }
  if (title) {
    svg.text(x - 38, (scale(d0) + scale(d1)) / 2, title, 11, "middle",
      "#222222", -90);
  }
}
