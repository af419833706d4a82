/**
 * Sweep panel: real and imaginary output across the sweep axis, the
 * magnitude curve with a +/- bound band, and the certified bound itself on a
 * log scale underneath. Slider moves re-query the service (latest wins);
 * failures keep the last curve, marked stale, with a retry banner.
 */

import { ServiceClient, SweepResponse } from "./api.js";
import { boundChart, lineChart, Series } from "./charts.js";
import { LatestWins, SessionState, sweepValues } from "./state.js";

export const SWEEP_POINTS = 50;

const PIN_COLORS = ["#999933", "#882255", "#44aa99", "#117733", "#dfc27d", "#aa4499", "#6699cc", "#661100"];

export interface SweepElements {
  curves: HTMLElement;
  bound: HTMLElement;
  banner: HTMLElement;
  status: HTMLElement;
}

export class SweepView {
  private latest = new LatestWins();
  private lastGood: { values: number[]; response: SweepResponse } | null = null;
  stale = false;

  constructor(
    private client: ServiceClient,
    private state: SessionState,
    private el: SweepElements,
  ) {}

  values(): number[] {
    const [lo, hi] = this.state.box(this.state.sweepAxis);
    return sweepValues(lo, hi, SWEEP_POINTS);
  }

  /** Query the service and redraw; stale responses are dropped. */
  async refresh(): Promise<void> {
    const { signal, isCurrent } = this.latest.begin();
    const values = this.values();
    try {
      const response = await this.client.sweep(
        this.state.sweepAxis, values, this.state.fixedParams(), this.state.allowExtrapolation, signal,
      );
      if (!isCurrent()) return;
      this.lastGood = { values, response };
      this.stale = false;
      this.el.banner.hidden = true;
      this.render();
    } catch (err) {
      if ((err as Error).name === "AbortError" || !isCurrent()) return;
      this.stale = this.lastGood !== null;
      this.el.banner.hidden = false;
      this.el.banner.textContent = `service unavailable (${(err as Error).message}) — `;
      const retry = document.createElement("button");
      retry.textContent = "retry";
      retry.onclick = () => void this.refresh();
      this.el.banner.appendChild(retry);
      this.render();
    }
  }

  pinCurrent(): boolean {
    if (!this.lastGood) return false;
    const ok = this.state.pin({
      label: Object.entries(this.state.fixedParams())
        .map(([k, v]) => `${k}=${v.toFixed(2)}`)
        .join(", "),
      values: this.lastGood.values,
      qoiRe: this.lastGood.response.results.map((r) => r.qoi.re),
      qoiIm: this.lastGood.response.results.map((r) => r.qoi.im),
    });
    if (ok) this.render();
    return ok;
  }

  render(): void {
    if (!this.lastGood) return;
    const { values, response } = this.lastGood;
    const ok = response.results.filter((r) => !r.error);
    const re = ok.map((r) => r.qoi.re);
    const im = ok.map((r) => r.qoi.im);
    const mag = ok.map((r) => Math.hypot(r.qoi.re, r.qoi.im));
    const bounds = ok.map((r) => r.error_bound);
    const series: Series[] = [
      { label: "Re", x: values, y: re, color: "#4477aa" },
      { label: "Im", x: values, y: im, color: "#cc6677" },
      { label: "|QoI|", x: values, y: mag, color: "#332288", dashed: true },
    ];
    this.state.pinned.forEach((pin, i) => {
      series.push({ label: `pin: ${pin.label}`, x: pin.values, y: pin.qoiRe, color: PIN_COLORS[i % PIN_COLORS.length], dashed: true });
    });
    const band = {
      x: values,
      lower: mag.map((m, i) => m - bounds[i]),
      upper: mag.map((m, i) => m + bounds[i]),
      color: "#332288",
    };
    this.el.curves.innerHTML = lineChart(series, band);
    this.el.bound.innerHTML = boundChart(values, bounds);
    const failures = response.results.length - ok.length;
    this.el.status.textContent =
      `${ok.length} points along ${this.state.sweepAxis}` +
      (failures ? `, ${failures} failed` : "") +
      (this.stale ? " (stale)" : "") +
      (response.wall_time_s !== undefined ? ` in ${(response.wall_time_s * 1000).toFixed(0)} ms` : "");
    this.el.curves.classList.toggle("stale", this.stale);
  }
}
