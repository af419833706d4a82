/** The shared cost formula must match the Python side on frozen vectors. */

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { costFunction, impedancePenalty } from "../src/cost.js";

interface CostCase {
  qoi: [number, number][];
  weights: number[];
  penalty: number;
  expected: string;
}

interface PenaltyCase {
  mu: number[];
  coefficients: number[];
  exponents: number[];
  scale: number;
  offset: number;
  expected: string;
}

const vectors = JSON.parse(readFileSync(new URL("./data/cost_vectors.json", import.meta.url), "utf-8")) as {
  cost: CostCase[];
  penalty: PenaltyCase[];
};

describe("shared cost formula", () => {
  it("reproduces every frozen vector to 1e-12", () => {
    expect(vectors.cost.length).toBeGreaterThanOrEqual(10);
    for (const v of vectors.cost) {
      const qois = v.qoi.map(([re, im]) => ({ re, im }));
      const value = costFunction(qois, v.weights, v.penalty);
      const expected = Number(v.expected);
      const tol = 1e-12 * Math.max(Math.abs(expected), 1);
      expect(Math.abs(value - expected)).toBeLessThanOrEqual(tol);
    }
  });

  it("reproduces the penalty vectors", () => {
    for (const v of vectors.penalty) {
      const value = impedancePenalty(v.mu, v.coefficients, v.exponents, v.scale, v.offset);
      expect(Math.abs(value - Number(v.expected))).toBeLessThanOrEqual(1e-12 * Math.abs(Number(v.expected)));
    }
  });

  it("rejects mismatched lengths", () => {
    expect(() => costFunction([{ re: 1, im: 0 }], [1, 2], 0)).toThrow();
    expect(() => impedancePenalty([1, 2], [1], [1], 1, 0)).toThrow();
  });

  it("all-zero outputs leave only the penalty", () => {
    const qois = Array.from({ length: 5 }, () => ({ re: 0, im: 0 }));
    expect(costFunction(qois, [1, 2, 3, 4, 5], -8)).toBe(-8);
  });
});
