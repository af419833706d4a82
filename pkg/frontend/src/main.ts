/**
 * Page wiring: connect to the service, build parameter sliders from the
 * served box, and drive the three panels (sweep, cost explorer, UQ).
 */

import { ServiceClient } from "./api.js";
import { SessionState } from "./state.js";
import { SweepView } from "./sweepView.js";
import { CostView, defaultScanSpec } from "./costView.js";
import { defaultDistributions, DistributionSetting, UqView } from "./uqView.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function connect(baseUrl: string): Promise<void> {
  const client = new ServiceClient(baseUrl);
  const info = await client.info();
  const state = new SessionState(info);

  el("model-summary").textContent =
    `${info.problem["kind"] ?? "model"}: n=${info.n}, basis ${info.n_hat}, ` +
    `weights ${info.dz_matrix}/${info.dz_rhs}, stability ${info.beta_lb.toExponential(2)}`;

  const sweep = new SweepView(client, state, {
    curves: el("sweep-curves"),
    bound: el("sweep-bound"),
    banner: el("sweep-banner"),
    status: el("sweep-status"),
  });

  // sliders for every parameter; the sweep axis slider is replaced by a note
  const sliders = el("sliders");
  sliders.innerHTML = "";
  const extrapolate = el<HTMLInputElement>("allow-extrapolation");
  extrapolate.onchange = () => {
    state.allowExtrapolation = extrapolate.checked;
  };
  for (const name of info.parameter_names) {
    const [lo, hi] = info.parameter_box[name];
    const row = document.createElement("label");
    row.className = "slider-row";
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = String(lo);
    slider.max = String(hi);
    slider.step = String((hi - lo) / 200);
    slider.value = String(state.params[name]);
    const readout = document.createElement("span");
    readout.textContent = `${name} = ${state.params[name].toFixed(3)}`;
    slider.oninput = () => {
      const applied = state.setParam(name, Number(slider.value));
      slider.value = String(applied);  // refuses to leave the box unless extrapolating
      readout.textContent = `${name} = ${applied.toFixed(3)}`;
    };
    slider.onchange = () => void sweep.refresh();  // on release
    row.append(readout, slider);
    sliders.appendChild(row);
    if (name === state.sweepAxis) slider.disabled = true;
  }

  el("pin-button").onclick = () => {
    if (!sweep.pinCurrent()) {
      el("sweep-status").textContent = "pin limit reached (8) or nothing to pin";
    }
  };

  // cost explorer
  const cost = new CostView(client, state);
  el("cost-run").onclick = async () => {
    const spec = defaultScanSpec(state, Number(el<HTMLInputElement>("cost-per-axis").value) || 10);
    const weightsText = el<HTMLInputElement>("cost-weights").value.trim();
    if (weightsText) {
      const weights = weightsText.split(/[\s,]+/).map(Number);
      spec.axisValues = spec.axisValues.slice(0, weights.length);
      spec.weights = weights;
    }
    const coef = el<HTMLInputElement>("penalty-coefficients").value.trim();
    const expo = el<HTMLInputElement>("penalty-exponents").value.trim();
    spec.penalty = {
      scale: Number(el<HTMLInputElement>("penalty-scale").value) || 1 / 6,
      coefficients: coef ? coef.split(/[\s,]+/).map(Number) : [],
      exponents: expo ? expo.split(/[\s,]+/).map(Number) : [],
      offset: Number(el<HTMLInputElement>("penalty-offset").value) || 0,
    };
    const status = el("cost-status");
    const result = await cost.run(spec, (done, total) => {
      status.textContent = `scanning ${done}/${total}`;
    });
    cost.renderTable(result, spec, el("cost-table"));
    if (result.argmin) {
      const combo = spec.gridNames.map((n, i) => `${n}=${result.argmin!.combo[i].toPrecision(3)}`).join(", ");
      status.textContent = `minimum ${result.argmin.cost!.toPrecision(6)} at ${combo}`;
      const agrees = await cost.replayMatches(spec, result);
      status.textContent += agrees ? " (server replay agrees)" : " (server replay DISAGREES)";
    } else {
      status.textContent = "scan failed everywhere";
    }
  };

  // uncertainty panel
  const uq = new UqView(client, state, {
    re: el("uq-re"),
    im: el("uq-im"),
    inputs: el("uq-inputs"),
    status: el("uq-status"),
  });
  el("uq-run").onclick = async () => {
    const distributions = defaultDistributions(state);
    for (const name of info.parameter_names) {
      const select = el<HTMLSelectElement>(`uq-kind-${name}`);
      const kind = select.value as DistributionSetting["kind"];
      const [lo, hi] = info.parameter_box[name];
      const mid = state.params[name];
      if (kind === "point") distributions[name] = { kind, params: { value: mid } };
      else if (kind === "uniform") distributions[name] = { kind, params: {} };
      else if (kind === "truncated_gaussian")
        distributions[name] = { kind, params: { mean: mid, std: (hi - lo) / 6 } };
      else distributions[name] = { kind, params: { log_mean: Math.log(Math.max(mid, 1e-6)), log_std: 0.4 } };
    }
    const seed = Number(el<HTMLInputElement>("uq-seed").value) || 0;
    const samples = Number(el<HTMLInputElement>("uq-samples").value) || 1000;
    try {
      await uq.run(distributions, samples, seed);
    } catch (err) {
      el("uq-status").textContent = `failed: ${(err as Error).message}`;
    }
  };
  const kinds = el("uq-kinds");
  kinds.innerHTML = "";
  for (const name of info.parameter_names) {
    const wrap = document.createElement("label");
    wrap.textContent = name + " ";
    const select = document.createElement("select");
    select.id = `uq-kind-${name}`;
    for (const kind of ["point", "uniform", "truncated_gaussian", "truncated_lognormal"]) {
      const option = document.createElement("option");
      option.value = kind;
      option.textContent = kind;
      select.appendChild(option);
    }
    wrap.appendChild(select);
    kinds.appendChild(wrap);
  }

  await sweep.refresh();
}

function boot(): void {
  const urlInput = el<HTMLInputElement>("service-url");
  const connectButton = el<HTMLButtonElement>("connect");
  const doConnect = () =>
    connect(urlInput.value.replace(/\/$/, "")).catch((err) => {
      el("model-summary").textContent = `connection failed: ${(err as Error).message}`;
    });
  connectButton.onclick = doConnect;
  void doConnect();
}

boot();
