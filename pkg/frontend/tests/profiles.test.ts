import { mkdirSync, writeFileSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import { describe, expect, it } from 'vitest';

import { DEFAULT_CATALOG, DEFAULT_POLICY } from '../src/catalog';
import {
  exportProfiles,
  importProfiles,
  validateClients,
  type ClientProfile,
} from '../src/profiles';
import { noiseMultiplier } from '../src/scoring';

const fixtureDir = fileURLToPath(new URL('../fixtures', import.meta.url));

// Deterministic PRNG so the exported artifact is stable across runs.
function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

function randomClients(count: number, seed: number): ClientProfile[] {
  const rand = lcg(seed);
  return Array.from({ length: count }, (_, i) => {
    const selections: Record<string, string> = {};
    for (const factor of DEFAULT_CATALOG.factors) {
      const pick = Math.floor(rand() * factor.options.length);
      selections[factor.id] = factor.options[pick].label;
    }
    return { client_id: `ui_client_${String(i).padStart(2, '0')}`, selections };
  });
}

describe('profile export and import', () => {
  it('round-trips through the document format', () => {
    const clients = randomClients(8, 7);
    const doc = exportProfiles(DEFAULT_CATALOG, clients);
    const back = importProfiles(doc, DEFAULT_CATALOG);
    expect(back).toEqual(clients);
    // A second export of the re-imported state is structurally identical.
    expect(exportProfiles(DEFAULT_CATALOG, back)).toEqual(doc);
  });

  it('refuses to export an empty client list', () => {
    expect(() => exportProfiles(DEFAULT_CATALOG, [])).toThrowError(/no clients/);
  });

  it('reports missing selections per client', () => {
    const clients = randomClients(2, 3);
    delete clients[1].selections['audit_logs'];
    const issues = validateClients(DEFAULT_CATALOG, clients);
    expect(issues).toHaveLength(1);
    expect(issues[0].client_id).toBe('ui_client_01');
    expect(issues[0].problems[0]).toMatch(/audit_logs/);
    expect(() => exportProfiles(DEFAULT_CATALOG, clients)).toThrowError(/audit_logs/);
  });

  it('names unknown factor ids on import', () => {
    const doc = exportProfiles(DEFAULT_CATALOG, randomClients(1, 5));
    (doc.clients[0].selections as Record<string, string>)['made_up'] = 'x';
    expect(() => importProfiles(doc, DEFAULT_CATALOG)).toThrowError(/made_up/);
  });

  it('rejects tampered cached scores', () => {
    const doc = exportProfiles(DEFAULT_CATALOG, randomClients(1, 9));
    doc.clients[0].score = 0.123;
    expect(() => importProfiles(doc, DEFAULT_CATALOG)).toThrowError(/caches score/);
  });

  it('writes the export artifact consumed by the simulator CLI', () => {
    const clients = randomClients(20, 2024);
    const doc = exportProfiles(DEFAULT_CATALOG, clients);
    const expected = doc.clients.map((c) => ({
      client_id: c.client_id,
      score: c.score,
      noise_multiplier: noiseMultiplier(c.score, DEFAULT_POLICY),
    }));
    mkdirSync(fixtureDir, { recursive: true });
    writeFileSync(
      `${fixtureDir}/ui_export.json`,
      JSON.stringify(doc, null, 2) + '\n',
    );
    writeFileSync(
      `${fixtureDir}/ui_export_expected.json`,
      JSON.stringify(expected, null, 2) + '\n',
    );
    expect(doc.clients).toHaveLength(20);
  });
});
