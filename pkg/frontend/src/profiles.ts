// Profile import/export against the simulator's profile file schema:
//   {catalog_version, clients: [{client_id, selections, score}]}
// Export recomputes every score; import re-validates and rejects documents
// whose cached scores disagree with their selections.

import type { FactorCatalog } from './catalog';
import { computeScore, type Selections } from './scoring';

export interface ClientProfile {
  client_id: string;
  selections: Selections;
}

export interface ProfileDocument {
  catalog_version: string;
  clients: Array<{ client_id: string; selections: Selections; score: number }>;
}

export interface ValidationIssue {
  client_id: string;
  problems: string[];
}

const SCORE_RECOMPUTE_TOL = 1e-12;

export function validateClients(
  catalog: FactorCatalog,
  clients: ClientProfile[],
): ValidationIssue[] {
  const issues: ValidationIssue[] = [];
  for (const client of clients) {
    const problems: string[] = [];
    for (const factorId of Object.keys(client.selections)) {
      const factor = catalog.factors.find((f) => f.id === factorId);
      if (!factor) {
        problems.push(`unknown factor '${factorId}'`);
      } else if (!factor.options.some((o) => o.label === client.selections[factorId])) {
        problems.push(`factor '${factorId}' has no option '${client.selections[factorId]}'`);
      }
    }
    for (const factor of catalog.factors) {
      if (client.selections[factor.id] === undefined) {
        problems.push(`missing selection for factor '${factor.id}'`);
      }
    }
    if (problems.length > 0) {
      issues.push({ client_id: client.client_id, problems });
    }
  }
  return issues;
}

export function exportProfiles(
  catalog: FactorCatalog,
  clients: ClientProfile[],
): ProfileDocument {
  if (clients.length === 0) {
    throw new Error('nothing to export: no clients defined');
  }
  const issues = validateClients(catalog, clients);
  if (issues.length > 0) {
    const detail = issues
      .map((i) => `${i.client_id}: ${i.problems.join('; ')}`)
      .join(' | ');
    throw new Error(`profiles incomplete: ${detail}`);
  }
  return {
    catalog_version: catalog.version,
    clients: clients.map((c) => ({
      client_id: c.client_id,
      selections: { ...c.selections },
      score: computeScore(catalog, c.selections),
    })),
  };
}

export function importProfiles(
  doc: ProfileDocument,
  catalog: FactorCatalog,
): ClientProfile[] {
  if (!Array.isArray(doc.clients)) {
    throw new Error("profile document has no 'clients' list");
  }
  const clients = doc.clients.map((c) => ({
    client_id: String(c.client_id),
    selections: { ...c.selections },
  }));
  const issues = validateClients(catalog, clients);
  if (issues.length > 0) {
    const detail = issues
      .map((i) => `${i.client_id}: ${i.problems.join('; ')}`)
      .join(' | ');
    throw new Error(`invalid profile document: ${detail}`);
  }
  for (const entry of doc.clients) {
    const recomputed = computeScore(catalog, entry.selections);
    if (Math.abs(recomputed - entry.score) > SCORE_RECOMPUTE_TOL) {
      throw new Error(
        `client '${entry.client_id}' caches score ${entry.score} but selections give ${recomputed}`,
      );
    }
  }
  return clients;
}
