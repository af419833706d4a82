/**
 * Small SVG renderers: line charts with an uncertainty band, log-scale bound
 * curves, and histograms. No chart library; everything is plain markup.
 */

const W = 640;
const H = 220;
const PAD = { left: 54, right: 12, top: 10, bottom: 24 };

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  dashed?: boolean;
}

export interface Band {
  x: number[];
  lower: number[];
  upper: number[];
  color: string;
}

function scales(xs: number[], ys: number[]) {
  const xmin = Math.min(...xs);
  const xmax = Math.max(...xs);
  let ymin = Math.min(...ys);
  let ymax = Math.max(...ys);
  if (!(ymax > ymin)) {
    ymin -= 1;
    ymax += 1;
  }
  const sx = (x: number) => PAD.left + ((x - xmin) / (xmax - xmin || 1)) * (W - PAD.left - PAD.right);
  const sy = (y: number) => H - PAD.bottom - ((y - ymin) / (ymax - ymin)) * (H - PAD.top - PAD.bottom);
  return { sx, sy, xmin, xmax, ymin, ymax };
}

function fmt(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a < 1e-3 || a >= 1e4)) return v.toExponential(1);
  return String(Math.round(v * 1000) / 1000);
}

function polyline(x: number[], y: number[], sx: (v: number) => number, sy: (v: number) => number): string {
  return x.map((xv, i) => `${sx(xv).toFixed(2)},${sy(y[i]).toFixed(2)}`).join(" ");
}

function axes(s: ReturnType<typeof scales>): string {
  const x0 = PAD.left;
  const y0 = H - PAD.bottom;
  return (
    `<line x1="${x0}" y1="${PAD.top}" x2="${x0}" y2="${y0}" stroke="#888"/>` +
    `<line x1="${x0}" y1="${y0}" x2="${W - PAD.right}" y2="${y0}" stroke="#888"/>` +
    `<text x="${x0 - 6}" y="${PAD.top + 8}" class="tick" text-anchor="end">${fmt(s.ymax)}</text>` +
    `<text x="${x0 - 6}" y="${y0}" class="tick" text-anchor="end">${fmt(s.ymin)}</text>` +
    `<text x="${x0}" y="${H - 6}" class="tick">${fmt(s.xmin)}</text>` +
    `<text x="${W - PAD.right}" y="${H - 6}" class="tick" text-anchor="end">${fmt(s.xmax)}</text>`
  );
}

/** Line chart with an optional shaded band (e.g. magnitude +/- bound). */
export function lineChart(series: Series[], band?: Band): string {
  const ys = series.flatMap((s) => s.y).concat(band ? band.lower.concat(band.upper) : []);
  const xs = series.flatMap((s) => s.x);
  const s = scales(xs, ys);
  let body = "";
  if (band) {
    const upper = polyline(band.x, band.upper, s.sx, s.sy);
    const lowerReversed = band.x
      .map((xv, i) => ({ xv, yv: band.lower[i] }))
      .reverse()
      .map(({ xv, yv }) => `${s.sx(xv).toFixed(2)},${s.sy(yv).toFixed(2)}`)
      .join(" ");
    body += `<polygon class="band" points="${upper} ${lowerReversed}" fill="${band.color}" opacity="0.25" stroke="none"/>`;
  }
  for (const line of series) {
    body += `<polyline points="${polyline(line.x, line.y, s.sx, s.sy)}" fill="none" stroke="${line.color}"` +
      `${line.dashed ? ' stroke-dasharray="4 3"' : ""} stroke-width="1.5"><title>${line.label}</title></polyline>`;
  }
  return `<svg viewBox="0 0 ${W} ${H}" xmlns="http://www.w3.org/2000/svg">${axes(s)}${body}</svg>`;
}

/** Log-scale curve for error bounds (zero values are floored for display). */
export function boundChart(x: number[], bounds: number[], color = "#b5651d"): string {
  const floored = bounds.map((b) => Math.max(b, 1e-300));
  const logs = floored.map((b) => Math.log10(b));
  const s = scales(x, logs);
  const pts = polyline(x, logs, s.sx, s.sy);
  const ticks =
    `<text x="${PAD.left - 6}" y="${PAD.top + 8}" class="tick" text-anchor="end">1e${Math.ceil(s.ymax)}</text>` +
    `<text x="${PAD.left - 6}" y="${H - PAD.bottom}" class="tick" text-anchor="end">1e${Math.floor(s.ymin)}</text>` +
    `<text x="${PAD.left}" y="${H - 6}" class="tick">${fmt(s.xmin)}</text>` +
    `<text x="${W - PAD.right}" y="${H - 6}" class="tick" text-anchor="end">${fmt(s.xmax)}</text>`;
  const frame =
    `<line x1="${PAD.left}" y1="${PAD.top}" x2="${PAD.left}" y2="${H - PAD.bottom}" stroke="#888"/>` +
    `<line x1="${PAD.left}" y1="${H - PAD.bottom}" x2="${W - PAD.right}" y2="${H - PAD.bottom}" stroke="#888"/>`;
  return `<svg viewBox="0 0 ${W} ${H}" xmlns="http://www.w3.org/2000/svg">${frame}${ticks}` +
    `<polyline class="bound" points="${pts}" fill="none" stroke="${color}" stroke-width="1.5"/></svg>`;
}

/** Histogram bars from bin edges and counts. */
export function histogramChart(edges: number[], counts: number[], color = "#4477aa"): string {
  const maxCount = Math.max(...counts, 1);
  const s = scales([edges[0], edges[edges.length - 1]], [0, maxCount]);
  let bars = "";
  for (let i = 0; i < counts.length; i++) {
    const x0 = s.sx(edges[i]);
    const x1 = s.sx(edges[i + 1]);
    const y = s.sy(counts[i]);
    bars += `<rect class="bar" x="${x0.toFixed(2)}" y="${y.toFixed(2)}" width="${Math.max(x1 - x0 - 1, 0.5).toFixed(2)}"` +
      ` height="${(H - PAD.bottom - y).toFixed(2)}" fill="${color}"><title>${counts[i]}</title></rect>`;
  }
  return `<svg viewBox="0 0 ${W} ${H}" xmlns="http://www.w3.org/2000/svg">${axes(s)}${bars}</svg>`;
}
