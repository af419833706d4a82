/**
 * The cost formula shared with the Python side.
 *
 * Both implementations are exercised against the same frozen vectors
 * (tests/data/cost_vectors.json), so a scan evaluated in the browser agrees
 * with a server-side replay to round-off.
 */

import type { Complex } from "./api.js";

/** Weighted squared magnitudes of the outputs plus a penalty term. */
export function costFunction(qois: Complex[], weights: number[], penalty: number): number {
  if (qois.length !== weights.length) {
    throw new Error(`qois and weights must have equal length (${qois.length} vs ${weights.length})`);
  }
  let total = 0;
  for (let i = 0; i < qois.length; i++) {
    const q = qois[i];
    total += weights[i] * (q.re * q.re + q.im * q.im);
  }
  return total + penalty;
}

/** Separable impedance-treatment penalty: scale * sum(c_k mu_k^e_k) + offset. */
export function impedancePenalty(
  mu: number[],
  coefficients: number[],
  exponents: number[],
  scale: number,
  offset: number,
): number {
  if (mu.length !== coefficients.length || mu.length !== exponents.length) {
    throw new Error("impedances, coefficients and exponents must have equal length");
  }
  let sum = 0;
  for (let k = 0; k < mu.length; k++) {
    sum += coefficients[k] * Math.pow(mu[k], exponents[k]);
  }
  return scale * sum + offset;
}
