/**
 * Uncertainty panel: per-parameter distribution settings, output histograms
 * (real and imaginary part) and previews of the sampled inputs. The seed is
 * user visible; re-running with the same seed reproduces the bins exactly.
 */

import { ServiceClient, UqResponse } from "./api.js";
import { histogramChart } from "./charts.js";
import { SessionState } from "./state.js";

export const N_SAMPLES_CAP = 50_000;

export type DistributionKind = "point" | "uniform" | "truncated_gaussian" | "truncated_lognormal";

export interface DistributionSetting {
  kind: DistributionKind;
  params: Record<string, number>;
}

export interface UqElements {
  re: HTMLElement;
  im: HTMLElement;
  inputs: HTMLElement;
  status: HTMLElement;
}

export function clampSamples(requested: number): { value: number; clamped: boolean } {
  if (requested > N_SAMPLES_CAP) return { value: N_SAMPLES_CAP, clamped: true };
  return { value: Math.max(1, Math.floor(requested)), clamped: false };
}

export function defaultDistributions(state: SessionState): Record<string, DistributionSetting> {
  const settings: Record<string, DistributionSetting> = {};
  for (const name of state.info.parameter_names) {
    settings[name] = { kind: "point", params: { value: state.params[name] } };
  }
  return settings;
}

export class UqView {
  lastResponse: UqResponse | null = null;

  constructor(private client: ServiceClient, private state: SessionState, private el: UqElements) {}

  async run(
    distributions: Record<string, DistributionSetting>,
    nSamples: number,
    seed: number,
    bins = 30,
  ): Promise<UqResponse> {
    const { value, clamped } = clampSamples(nSamples);
    if (clamped) {
      this.el.status.textContent = `sample count capped at ${N_SAMPLES_CAP}`;
    }
    const body: Record<string, Record<string, unknown>> = {};
    for (const [name, setting] of Object.entries(distributions)) {
      body[name] = { kind: setting.kind, ...setting.params };
    }
    const response = await this.client.uq(body, value, seed, bins);
    this.lastResponse = response;
    this.render(response, seed);
    return response;
  }

  render(response: UqResponse, seed: number): void {
    this.el.re.innerHTML = histogramChart(response.re.edges, response.re.counts, "#4477aa");
    this.el.im.innerHTML = histogramChart(response.im.edges, response.im.counts, "#cc6677");
    const previews = Object.entries(response.parameters)
      .map(
        ([name, hist]) =>
          `<figure><figcaption>${name}</figcaption>${histogramChart(hist.edges, hist.counts, "#44aa99")}</figure>`,
      )
      .join("");
    this.el.inputs.innerHTML = previews;
    if (!this.el.status.textContent?.includes("capped")) {
      this.el.status.textContent = `${response.n_samples} samples, seed ${seed}`;
    }
  }
}
