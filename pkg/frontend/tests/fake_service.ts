/**
 * Deterministic in-memory stand-in for the model service, installed as a
 * fetch replacement. Outputs are analytic functions of the parameters so
 * client-side computations can be cross-checked exactly; the error bound
 * collapses at the fake snapshot frequency 17.
 */

import type { Complex } from "../src/api.js";

export const BOX: Record<string, [number, number]> = {
  mu0: [14, 20],
  mu1: [1, 5],
  mu2: [1, 5],
  mu3: [1, 5],
};

export const SNAPSHOT_MU0 = 17.0;

export function fakeQoi(params: Record<string, number>): Complex {
  const s = params.mu0 + 0.3 * params.mu1 + 0.2 * params.mu2 + 0.1 * params.mu3;
  return { re: Math.sin(s), im: Math.cos(0.7 * s) };
}

export function fakeBound(params: Record<string, number>): number {
  return 5e-2 * Math.abs(params.mu0 - SNAPSHOT_MU0) + 1e-9;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function solveBody(params: Record<string, number>) {
  return {
    qoi: fakeQoi(params),
    error_bound: fakeBound(params),
    extrapolated: false,
    clamped: false,
    wall_time_s: 1e-5,
  };
}

export interface FakeOptions {
  failSweeps?: boolean;
  failComboMu1?: number;        // sweeps with this mu1 report a failed point
  delayMs?: number;
  log?: Array<{ path: string; body: unknown }>;
}

export function installFakeService(options: FakeOptions = {}): void {
  const fetchImpl = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    if (options.delayMs) await new Promise((r) => setTimeout(r, options.delayMs));
    if (init?.signal?.aborted) throw new DOMException("aborted", "AbortError");
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    options.log?.push({ path, body });

    const json = (payload: unknown, status = 200) =>
      new Response(JSON.stringify(payload), { status, headers: { "content-type": "application/json" } });

    if (path === "/model/info") {
      return json({
        format_version: "1",
        problem: { kind: "kernel", n: 40 },
        parameter_names: Object.keys(BOX),
        parameter_box: BOX,
        resolutions: [20, 3, 3, 3],
        n: 40,
        n_hat: 6,
        dz_matrix: 20,
        dz_rhs: 12,
        beta_lb: 1.7,
        snapshot_mus: [[SNAPSHOT_MU0, 3, 3, 3]],
        allow_extrapolation: false,
      });
    }
    if (path === "/solve") {
      const params = body.params as Record<string, number>;
      for (const name of Object.keys(params)) {
        if (!(name in BOX)) return json({ detail: `unknown parameter ${name}` }, 400);
      }
      return json(solveBody(params));
    }
    if (path === "/sweep") {
      if (options.failSweeps) return json({ detail: "internal error" }, 500);
      const results = (body.values as number[]).map((v) => {
        const params = { ...(body.params as Record<string, number>), [body.axis as string]: v };
        if (options.failComboMu1 !== undefined && params.mu1 === options.failComboMu1) {
          return { error: "singular reduced system" };
        }
        return solveBody(params);
      });
      return json({ results, wall_time_s: 2e-4 });
    }
    if (path === "/uq") {
      const rand = mulberry32((body.seed as number) + (body.n_samples as number));
      const bins = (body.bins as number) ?? 30;
      const hist = () => {
        const counts = Array.from({ length: bins }, () => Math.floor(rand() * 50));
        const edges = Array.from({ length: bins + 1 }, (_, i) => -1 + (2 * i) / bins);
        return { edges, counts };
      };
      const parameters: Record<string, unknown> = {};
      for (const name of Object.keys(body.distributions as object)) parameters[name] = hist();
      return json({
        seed: body.seed,
        n_samples: body.n_samples,
        clamped_to_cap: false,
        re: hist(),
        im: hist(),
        parameters,
      });
    }
    if (path === "/cost-scan") {
      const gridNames = Object.keys(body.grids as Record<string, number[]>);
      const gridValues = gridNames.map((n) => (body.grids as Record<string, number[]>)[n]);
      let combos: number[][] = [[]];
      for (const values of gridValues) combos = combos.flatMap((c) => values.map((v) => [...c, v]));
      const costs: Record<string, number>[] = [];
      let argmin: Record<string, number> | null = null;
      for (const combo of combos) {
        const params: Record<string, number> = { ...(body.params as Record<string, number>) };
        gridNames.forEach((n, i) => (params[n] = combo[i]));
        let total = 0;
        (body.axis_values as number[]).forEach((v, i) => {
          const q = fakeQoi({ ...params, [body.axis as string]: v });
          total += (body.weights as number[])[i] * (q.re * q.re + q.im * q.im);
        });
        const p = body.penalty as { scale: number; coefficients: number[]; exponents: number[]; offset: number };
        let h = p.offset;
        if (p.coefficients.length) {
          let sum = 0;
          p.coefficients.forEach((c, k) => (sum += c * Math.pow(combo[k], p.exponents[k])));
          h = p.scale * sum + p.offset;
        }
        const cell: Record<string, number> = { cost: total + h };
        gridNames.forEach((n, i) => (cell[n] = combo[i]));
        costs.push(cell);
        if (argmin === null || cell.cost < argmin.cost) argmin = cell;
      }
      return json({ argmin, costs });
    }
    return json({ detail: "not found" }, 404);
  };
  globalThis.fetch = fetchImpl as typeof fetch;
}
