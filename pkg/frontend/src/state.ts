/**
 * Session state: current parameter values (clamped to the served box unless
 * extrapolation is toggled), pinned comparison curves, and a latest-wins
 * guard for in-flight requests.
 */

import type { ModelInfo } from "./api.js";

export const MAX_PINNED = 8;

export interface PinnedCurve {
  label: string;
  values: number[];
  qoiRe: number[];
  qoiIm: number[];
}

export class SessionState {
  params: Record<string, number> = {};
  sweepAxis: string;
  allowExtrapolation = false;
  pinned: PinnedCurve[] = [];

  constructor(public info: ModelInfo) {
    this.sweepAxis = info.parameter_names[0];
    for (const name of info.parameter_names) {
      const [lo, hi] = info.parameter_box[name];
      this.params[name] = 0.5 * (lo + hi);
    }
  }

  box(name: string): [number, number] {
    const bounds = this.info.parameter_box[name];
    if (!bounds) throw new Error(`unknown parameter ${name}`);
    return bounds;
  }

  /** Set a parameter; out-of-box values are clamped unless extrapolating. */
  setParam(name: string, value: number): number {
    const [lo, hi] = this.box(name);
    let applied = value;
    if (!this.allowExtrapolation) {
      applied = Math.min(hi, Math.max(lo, value));
    }
    this.params[name] = applied;
    return applied;
  }

  /** Parameters other than the sweep axis, for sweep request bodies. */
  fixedParams(): Record<string, number> {
    const fixed: Record<string, number> = {};
    for (const name of this.info.parameter_names) {
      if (name !== this.sweepAxis) fixed[name] = this.params[name];
    }
    return fixed;
  }

  pin(curve: PinnedCurve): boolean {
    if (this.pinned.length >= MAX_PINNED) return false;
    this.pinned.push(curve);
    return true;
  }

  unpin(index: number): void {
    this.pinned.splice(index, 1);
  }
}

/**
 * Latest-wins request guard: starting a new request aborts the previous one,
 * and stale responses can be detected before they touch the DOM.
 */
export class LatestWins {
  private token = 0;
  private controller: AbortController | null = null;

  begin(): { signal: AbortSignal; isCurrent: () => boolean } {
    this.controller?.abort();
    this.controller = new AbortController();
    const mine = ++this.token;
    return {
      signal: this.controller.signal,
      isCurrent: () => mine === this.token,
    };
  }
}

/** Evenly spaced sweep values across the served box (endpoints included). */
export function sweepValues(lo: number, hi: number, count: number): number[] {
  const values: number[] = [];
  for (let i = 0; i < count; i++) {
    values.push(lo + ((hi - lo) * i) / (count - 1));
  }
  return values;
}
