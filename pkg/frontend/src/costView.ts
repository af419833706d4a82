/**
 * Cost explorer: scans a grid of impedance-like parameters, evaluating the
 * weighted squared-output cost for each combination from batched sweep
 * calls. The formula runs client side (shared with the Python package and
 * pinned by common test vectors); a server-side replay cross-checks the
 * argmin through /cost-scan.
 */

import { PenaltySpec, ServiceClient } from "./api.js";
import { costFunction, impedancePenalty } from "./cost.js";
import { SessionState, sweepValues } from "./state.js";

export interface CostScanSpec {
  axis: string;
  axisValues: number[];
  weights: number[];
  gridNames: string[];
  gridValues: number[][];
  penalty: PenaltySpec;
}

export interface CostCell {
  combo: number[];
  cost: number | null;
  error?: string;
}

export interface CostScanResult {
  cells: CostCell[];
  argmin: CostCell | null;
}

export function combinations(gridValues: number[][]): number[][] {
  let combos: number[][] = [[]];
  for (const values of gridValues) {
    combos = combos.flatMap((c) => values.map((v) => [...c, v]));
  }
  return combos;
}

export function defaultScanSpec(state: SessionState, perAxis = 10, frequencies = 20): CostScanSpec {
  const axis = state.sweepAxis;
  const [lo, hi] = state.box(axis);
  const gridNames = state.info.parameter_names.filter((n) => n !== axis);
  return {
    axis,
    axisValues: sweepValues(lo, hi, frequencies),
    weights: new Array(frequencies).fill(1),
    gridNames,
    gridValues: gridNames.map((n) => {
      const [glo, ghi] = state.box(n);
      return sweepValues(glo, ghi, perAxis);
    }),
    penalty: { scale: 1 / 6, coefficients: [], exponents: [], offset: 0 },
  };
}

export class CostView {
  constructor(private client: ServiceClient, private state: SessionState) {}

  /** Run the scan client side; failed cells carry an error marker. */
  async run(spec: CostScanSpec, onProgress?: (done: number, total: number) => void): Promise<CostScanResult> {
    const combos = combinations(spec.gridValues);
    const cells: CostCell[] = [];
    let argmin: CostCell | null = null;
    let done = 0;
    for (const combo of combos) {
      const params: Record<string, number> = { ...this.state.fixedParams() };
      spec.gridNames.forEach((name, i) => (params[name] = combo[i]));
      delete params[spec.axis];
      let cell: CostCell;
      try {
        const sweep = await this.client.sweep(spec.axis, spec.axisValues, params, this.state.allowExtrapolation);
        const failed = sweep.results.find((r) => r.error);
        if (failed) {
          cell = { combo, cost: null, error: failed.error };
        } else {
          const h = spec.penalty.coefficients.length
            ? impedancePenalty(combo, spec.penalty.coefficients, spec.penalty.exponents, spec.penalty.scale, spec.penalty.offset)
            : spec.penalty.offset;
          cell = { combo, cost: costFunction(sweep.results.map((r) => r.qoi), spec.weights, h) };
        }
      } catch (err) {
        cell = { combo, cost: null, error: (err as Error).message };
      }
      cells.push(cell);
      if (cell.cost !== null && (argmin === null || cell.cost < (argmin.cost as number))) {
        argmin = cell;
      }
      onProgress?.(++done, combos.length);
    }
    return { cells, argmin };
  }

  /** Ask the service to replay the same scan and compare the argmin. */
  async replayMatches(spec: CostScanSpec, local: CostScanResult, relTol = 1e-9): Promise<boolean> {
    const grids: Record<string, number[]> = {};
    spec.gridNames.forEach((name, i) => (grids[name] = spec.gridValues[i]));
    const params = { ...this.state.fixedParams() };
    delete params[spec.axis];
    for (const name of spec.gridNames) delete params[name];
    const remote = await this.client.costScan(spec.axis, spec.axisValues, spec.weights, grids, spec.penalty, params);
    if (!remote.argmin || !local.argmin || local.argmin.cost === null) return false;
    const remoteCost = remote.argmin.cost as number;
    const costsAgree =
      Math.abs(remoteCost - local.argmin.cost) <= relTol * Math.max(Math.abs(remoteCost), 1e-300);
    const comboAgrees = spec.gridNames.every(
      (name, i) => Math.abs((remote.argmin![name] as number) - local.argmin!.combo[i]) < 1e-12,
    );
    return costsAgree && comboAgrees;
  }

  renderTable(result: CostScanResult, spec: CostScanSpec, target: HTMLElement): void {
    const head = spec.gridNames.map((n) => `<th>${n}</th>`).join("") + "<th>cost</th>";
    const rows = result.cells
      .map((cell) => {
        const isMin = result.argmin !== null && cell === result.argmin;
        const cols = cell.combo.map((v) => `<td>${v.toPrecision(4)}</td>`).join("");
        const value = cell.cost === null ? `<td class="error" title="${cell.error}">failed</td>` : `<td>${cell.cost.toPrecision(6)}</td>`;
        return `<tr${isMin ? ' class="argmin"' : ""}>${cols}${value}</tr>`;
      })
      .join("");
    target.innerHTML = `<table><thead><tr>${head}</tr></thead><tbody>${rows}</tbody></table>`;
  }
}
