/** Session state: box clamping, pin cap, latest-wins request guard. */

import { describe, expect, it } from "vitest";

import type { ModelInfo } from "../src/api.js";
import { LatestWins, MAX_PINNED, SessionState, sweepValues } from "../src/state.js";
import { BOX } from "./fake_service.js";

function info(): ModelInfo {
  return {
    format_version: "1",
    problem: {},
    parameter_names: Object.keys(BOX),
    parameter_box: BOX,
    resolutions: [20, 3, 3, 3],
    n: 40,
    n_hat: 6,
    dz_matrix: 20,
    dz_rhs: 12,
    beta_lb: 1.7,
    snapshot_mus: [],
    allow_extrapolation: false,
  };
}

describe("session state", () => {
  it("starts at the box center and clamps slider values", () => {
    const state = new SessionState(info());
    expect(state.params.mu0).toBe(17);
    expect(state.setParam("mu1", 99)).toBe(5); // refused to leave the box
    expect(state.setParam("mu1", -3)).toBe(1);
    expect(state.params.mu1).toBe(1);
  });

  it("lets values escape the box only when extrapolation is on", () => {
    const state = new SessionState(info());
    state.allowExtrapolation = true;
    expect(state.setParam("mu0", 25)).toBe(25);
  });

  it("rejects unknown parameters", () => {
    const state = new SessionState(info());
    expect(() => state.setParam("zz", 1)).toThrow();
  });

  it("caps pinned curves at eight", () => {
    const state = new SessionState(info());
    for (let i = 0; i < MAX_PINNED; i++) {
      expect(state.pin({ label: `c${i}`, values: [1], qoiRe: [0], qoiIm: [0] })).toBe(true);
    }
    expect(state.pin({ label: "over", values: [1], qoiRe: [0], qoiIm: [0] })).toBe(false);
    state.unpin(0);
    expect(state.pinned.length).toBe(MAX_PINNED - 1);
  });

  it("excludes the sweep axis from fixed parameters", () => {
    const state = new SessionState(info());
    expect(Object.keys(state.fixedParams())).toEqual(["mu1", "mu2", "mu3"]);
  });

  it("sweep values span the box inclusively", () => {
    const v = sweepValues(14, 20, 50);
    expect(v.length).toBe(50);
    expect(v[0]).toBe(14);
    expect(v[49]).toBe(20);
  });
});

describe("latest-wins guard", () => {
  it("aborts the previous request and marks stale tokens", () => {
    const guard = new LatestWins();
    const first = guard.begin();
    expect(first.isCurrent()).toBe(true);
    const second = guard.begin();
    expect(first.signal.aborted).toBe(true);
    expect(first.isCurrent()).toBe(false);
    expect(second.isCurrent()).toBe(true);
  });
});
