// Live score computation: the weighted mean of selected option scores and
// the derived DP noise multiplier. Accumulation runs in catalog order with
// plain float64 arithmetic, exactly like the simulator's engine.

import type { FactorCatalog, NoisePolicy } from './catalog';

export type Selections = Record<string, string>;

export function computeScore(catalog: FactorCatalog, selections: Selections): number {
  for (const factorId of Object.keys(selections)) {
    if (!catalog.factors.some((f) => f.id === factorId)) {
      throw new Error(`unknown factor '${factorId}'`);
    }
  }
  let weighted = 0;
  let weightSum = 0;
  for (const factor of catalog.factors) {
    const label = selections[factor.id];
    if (label === undefined) {
      throw new Error(`no selection for factor '${factor.id}'`);
    }
    const option = factor.options.find((o) => o.label === label);
    if (!option) {
      throw new Error(`factor '${factor.id}' has no option '${label}'`);
    }
    weighted += factor.weight * option.score;
    weightSum += factor.weight;
  }
  if (!(weightSum > 0)) {
    throw new Error('weights sum to zero; score undefined');
  }
  return weighted / weightSum;
}

export function noiseMultiplier(score: number, policy: NoisePolicy): number {
  if (!(score >= 0 && score <= 1)) {
    throw new Error(`compliance score ${score} outside [0, 1]`);
  }
  return (1.0 - score) + policy.min_noise_multiplier;
}

export function isEligible(score: number, policy: NoisePolicy): boolean {
  return score >= policy.participation_threshold;
}

// Display helper: the noise floor prints as "1e-10" rather than "0.0000".
export function formatNoise(noise: number): string {
  return noise < 1e-4 ? noise.toExponential(0) : noise.toFixed(4);
}
