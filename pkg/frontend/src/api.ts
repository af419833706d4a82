/**
 * Typed client for the model service. All numbers displayed anywhere in the
 * UI come from these responses; the only client-side numerics is the shared
 * cost formula in cost.ts.
 */

export interface Complex {
  re: number;
  im: number;
}

export interface ModelInfo {
  format_version: string;
  problem: Record<string, unknown>;
  parameter_names: string[];
  parameter_box: Record<string, [number, number]>;
  resolutions: number[];
  n: number;
  n_hat: number;
  dz_matrix: number;
  dz_rhs: number;
  beta_lb: number;
  snapshot_mus: number[][];
  allow_extrapolation: boolean;
}

export interface SolveResult {
  qoi: Complex;
  error_bound: number;
  extrapolated: boolean;
  clamped: boolean;
  wall_time_s: number;
  gamma_hat?: Complex[];
  error?: string;
}

export interface SweepResponse {
  results: SolveResult[];
  wall_time_s?: number;
}

export interface Histogram {
  edges: number[];
  counts: number[];
}

export interface UqResponse {
  seed: number;
  n_samples: number;
  clamped_to_cap: boolean;
  re: Histogram;
  im: Histogram;
  parameters: Record<string, Histogram>;
}

export interface PenaltySpec {
  scale: number;
  coefficients: number[];
  exponents: number[];
  offset: number;
}

export interface CostScanCell {
  [param: string]: number | string | undefined;
  cost?: number;
  error?: string;
}

export interface CostScanResponse {
  argmin: CostScanCell | null;
  costs: CostScanCell[];
}

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      if (body && body.detail) detail = String(body.detail);
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ServiceError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ServiceClient {
  constructor(public baseUrl: string) {}

  private post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    return fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    }).then((r) => expectJson<T>(r));
  }

  info(): Promise<ModelInfo> {
    return fetch(this.baseUrl + "/model/info").then((r) => expectJson<ModelInfo>(r));
  }

  solve(params: Record<string, number>, allowExtrapolation = false): Promise<SolveResult> {
    return this.post("/solve", { params, allow_extrapolation: allowExtrapolation });
  }

  sweep(
    axis: string,
    values: number[],
    params: Record<string, number>,
    allowExtrapolation = false,
    signal?: AbortSignal,
  ): Promise<SweepResponse> {
    return this.post("/sweep", { axis, values, params, allow_extrapolation: allowExtrapolation }, signal);
  }

  uq(
    distributions: Record<string, Record<string, unknown>>,
    nSamples: number,
    seed: number,
    bins: number,
    signal?: AbortSignal,
  ): Promise<UqResponse> {
    return this.post("/uq", { distributions, n_samples: nSamples, seed, bins }, signal);
  }

  costScan(
    axis: string,
    axisValues: number[],
    weights: number[],
    grids: Record<string, number[]>,
    penalty: PenaltySpec,
    params: Record<string, number> = {},
  ): Promise<CostScanResponse> {
    return this.post("/cost-scan", {
      axis,
      axis_values: axisValues,
      weights,
      grids,
      penalty,
      params,
    });
  }
}
