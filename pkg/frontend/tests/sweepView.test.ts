/** Sweep panel: redraw latency, bound band, failure banner, pinning. */

// @vitest-environment jsdom

import { beforeEach, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { SessionState } from "../src/state.js";
import { SweepView, SWEEP_POINTS } from "../src/sweepView.js";
import { installFakeService, SNAPSHOT_MU0 } from "./fake_service.js";

function elements() {
  document.body.innerHTML = `
    <div id="curves"></div><div id="bound"></div>
    <p id="banner" hidden></p><span id="status"></span>`;
  return {
    curves: document.getElementById("curves")!,
    bound: document.getElementById("bound")!,
    banner: document.getElementById("banner")!,
    status: document.getElementById("status")!,
  };
}

async function makeView(options = {}) {
  installFakeService(options);
  const client = new ServiceClient("http://fake");
  const state = new SessionState(await client.info());
  const el = elements();
  return { view: new SweepView(client, state, el), state, el };
}

describe("sweep view", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("redraws within 200 ms of a parameter change", async () => {
    const { view, state } = await makeView();
    state.setParam("mu1", 2.5);
    const start = performance.now();
    await view.refresh();
    const elapsed = performance.now() - start;
    expect(elapsed).toBeLessThan(200);
    expect(document.querySelectorAll("#curves svg polyline").length).toBeGreaterThanOrEqual(3);
    expect(document.querySelectorAll("#bound svg .bound").length).toBe(1);
  });

  it("sweeps the declared number of points", async () => {
    const { view, el } = await makeView();
    await view.refresh();
    expect(el.status.textContent).toContain(`${SWEEP_POINTS} points`);
  });

  it("bound band collapses near the snapshot frequency", async () => {
    const { view } = await makeView();
    await view.refresh();
    const polygon = document.querySelector("#curves svg polygon.band")!;
    const points = (polygon.getAttribute("points") ?? "")
      .trim()
      .split(/\s+/)
      .map((pair) => pair.split(",").map(Number));
    // polygon = upper path then reversed lower path: width at each x is the
    // vertical gap between the two passes
    const n = points.length / 2;
    const widths: { x: number; w: number }[] = [];
    for (let i = 0; i < n; i++) {
      const upper = points[i];
      const lower = points[points.length - 1 - i];
      widths.push({ x: upper[0], w: Math.abs(lower[1] - upper[1]) });
    }
    const xs = widths.map((p) => p.x);
    const snapX = xs[0] + ((SNAPSHOT_MU0 - 14) / 6) * (xs[n - 1] - xs[0]);
    const nearest = widths.reduce((a, b) => (Math.abs(b.x - snapX) < Math.abs(a.x - snapX) ? b : a));
    const maxWidth = Math.max(...widths.map((p) => p.w));
    expect(nearest.w).toBeLessThan(0.03 * maxWidth); // x-grid point nearest the snapshot
  });

  it("keeps the stale curve and shows a retry banner on failure", async () => {
    const log: Array<{ path: string; body: unknown }> = [];
    const { view, el } = await makeView({ log });
    await view.refresh();
    expect(el.banner.hidden).toBe(true);
    installFakeService({ failSweeps: true, log });
    await view.refresh();
    expect(el.banner.hidden).toBe(false);
    expect(el.banner.querySelector("button")).not.toBeNull();
    expect(el.status.textContent).toContain("stale");
    expect(el.curves.classList.contains("stale")).toBe(true);
    expect(el.curves.querySelector("svg")).not.toBeNull(); // old curve retained
  });

  it("drops superseded responses (latest wins)", async () => {
    const { view, state, el } = await makeView({ delayMs: 30 });
    state.setParam("mu1", 1.0);
    const first = view.refresh();
    state.setParam("mu1", 4.8);
    const second = view.refresh();
    await Promise.all([first, second]);
    // the status line reflects exactly one applied sweep
    expect(el.status.textContent).toContain("50 points");
    expect(view.stale).toBe(false);
  });

  it("pins at most eight comparison curves", async () => {
    const { view, state } = await makeView();
    await view.refresh();
    for (let i = 0; i < 8; i++) {
      state.params.mu2 = 1 + i * 0.2;
      expect(view.pinCurrent()).toBe(true);
    }
    expect(view.pinCurrent()).toBe(false);
    expect(document.querySelectorAll("#curves svg polyline").length).toBeGreaterThanOrEqual(11);
  });
});
