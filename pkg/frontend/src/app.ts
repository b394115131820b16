// Single-page profile builder. All state lives in this module; every edit
// re-renders the affected client cards with freshly computed scores. No
// backend, no network: files move through download links and file inputs.

import {
  cloneCatalog,
  DEFAULT_CATALOG,
  DEFAULT_POLICY,
  validateCatalog,
  type FactorCatalog,
  type NoisePolicy,
} from './catalog';
import { exportProfiles, importProfiles, type ClientProfile } from './profiles';
import { computeScore, formatNoise, isEligible, noiseMultiplier } from './scoring';

let catalog: FactorCatalog = cloneCatalog(DEFAULT_CATALOG);
let policy: NoisePolicy = { ...DEFAULT_POLICY };
let clients: ClientProfile[] = [];
let clientCounter = 0;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

function defaultSelections(): Record<string, string> {
  const selections: Record<string, string> = {};
  for (const factor of catalog.factors) selections[factor.id] = factor.options[0].label;
  return selections;
}

function downloadJson(name: string, doc: unknown): void {
  const blob = new Blob([JSON.stringify(doc, null, 2) + '\n'], {
    type: 'application/json',
  });
  const url = URL.createObjectURL(blob);
  const anchor = el('a', { href: url, download: name });
  anchor.click();
  URL.revokeObjectURL(url);
}

function pickJsonFile(onLoad: (doc: unknown) => void): void {
  const input = el('input', { type: 'file', accept: 'application/json' });
  input.addEventListener('change', () => {
    const file = input.files?.[0];
    if (!file) return;
    file.text().then((text) => {
      try {
        onLoad(JSON.parse(text));
      } catch (err) {
        showError(err instanceof Error ? err.message : String(err));
      }
    });
  });
  input.click();
}

function showError(message: string): void {
  const bar = document.getElementById('error-bar')!;
  bar.textContent = message;
  bar.style.display = message ? 'block' : 'none';
}

function renderCatalogEditor(): void {
  const root = document.getElementById('catalog')!;
  root.replaceChildren();
  root.append(el('h2', {}, 'Compliance factors'));
  const table = el('table');
  const head = el('tr');
  for (const title of ['Factor', 'Weight', 'Options']) head.append(el('th', {}, title));
  table.append(head);
  catalog.factors.forEach((factor, index) => {
    const row = el('tr');
    row.append(el('td', {}, factor.name));
    const weightCell = el('td');
    const weightInput = el('input', {
      type: 'number', step: '0.1', min: '0', value: String(factor.weight),
    });
    weightInput.addEventListener('change', () => {
      const weight = Number(weightInput.value);
      if (!(weight >= 0)) {
        weightInput.value = String(factor.weight);
        showError(`weight for '${factor.name}' must be >= 0`);
        return;
      }
      showError('');
      catalog.factors[index].weight = weight;
      renderClients();
    });
    weightCell.append(weightInput);
    row.append(weightCell);
    row.append(
      el('td', {},
         factor.options.map((o) => `${o.label} (${o.score})`).join(' / ')),
    );
    table.append(row);
  });
  root.append(table);
}

function renderPolicyControls(): void {
  const root = document.getElementById('policy')!;
  root.replaceChildren();
  root.append(el('h2', {}, 'Participation policy'));
  const thresholdLabel = el('label', {}, 'Participation threshold: ');
  const threshold = el('input', {
    type: 'number', step: '0.05', min: '0', max: '1',
    value: String(policy.participation_threshold),
  });
  threshold.addEventListener('change', () => {
    const value = Number(threshold.value);
    if (!(value >= 0 && value <= 1)) {
      threshold.value = String(policy.participation_threshold);
      showError('threshold must be in [0, 1]');
      return;
    }
    showError('');
    policy.participation_threshold = value;
    renderClients();
  });
  thresholdLabel.append(threshold);
  root.append(thresholdLabel);
  root.append(
    el('p', { class: 'hint' },
       `Minimum noise multiplier: ${policy.min_noise_multiplier.toExponential(0)} ` +
       '(applied to every client, however compliant).'),
  );
}

function renderClients(): void {
  const root = document.getElementById('clients')!;
  root.replaceChildren();
  root.append(el('h2', {}, 'Clients'));
  if (clients.length === 0) {
    root.append(el('p', { class: 'hint' }, 'No clients yet. Add one to begin.'));
  }
  clients.forEach((client, index) => {
    const card = el('div', { class: 'client-card' });
    const header = el('div', { class: 'client-header' });
    const nameInput = el('input', { type: 'text', value: client.client_id });
    nameInput.addEventListener('change', () => {
      client.client_id = nameInput.value || client.client_id;
    });
    header.append(nameInput);
    const remove = el('button', {}, 'Remove');
    remove.addEventListener('click', () => {
      clients.splice(index, 1);
      renderClients();
    });
    header.append(remove);
    card.append(header);

    for (const factor of catalog.factors) {
      const line = el('label', { class: 'factor-line' }, `${factor.name}: `);
      const select = el('select');
      for (const option of factor.options) {
        const item = el('option', { value: option.label },
                        `${option.label} (${option.score})`);
        if (client.selections[factor.id] === option.label) {
          item.setAttribute('selected', 'selected');
        }
        select.append(item);
      }
      select.addEventListener('change', () => {
        client.selections[factor.id] = select.value;
        renderClients();
      });
      line.append(select);
      card.append(line);
    }

    const score = computeScore(catalog, client.selections);
    const noise = noiseMultiplier(score, policy);
    const eligible = isEligible(score, policy);
    const status = el('div', { class: 'status' });
    status.append(el('span', {}, `S_c = ${score.toFixed(4)}`));
    status.append(el('span', {}, `noise = ${formatNoise(noise)}`));
    status.append(
      el('span', { class: eligible ? 'badge eligible' : 'badge ineligible' },
         eligible ? 'eligible' : 'ineligible'),
    );
    card.append(status);
    root.append(card);
  });
}

function wireToolbar(): void {
  document.getElementById('add-client')!.addEventListener('click', () => {
    clientCounter += 1;
    clients.push({
      client_id: `client_${String(clientCounter).padStart(2, '0')}`,
      selections: defaultSelections(),
    });
    renderClients();
  });

  document.getElementById('export-profiles')!.addEventListener('click', () => {
    try {
      downloadJson('profiles.json', exportProfiles(catalog, clients));
      showError('');
    } catch (err) {
      showError(err instanceof Error ? err.message : String(err));
    }
  });

  document.getElementById('import-profiles')!.addEventListener('click', () => {
    pickJsonFile((doc) => {
      clients = importProfiles(doc as never, catalog);
      clientCounter = clients.length;
      showError('');
      renderClients();
    });
  });

  document.getElementById('export-catalog')!.addEventListener('click', () => {
    downloadJson('catalog.json', catalog);
  });

  document.getElementById('import-catalog')!.addEventListener('click', () => {
    pickJsonFile((doc) => {
      const candidate = doc as FactorCatalog;
      const problems = validateCatalog(candidate);
      if (problems.length > 0) {
        showError(`invalid catalog: ${problems.join('; ')}`);
        return;
      }
      catalog = candidate;
      clients = [];
      showError('');
      renderCatalogEditor();
      renderClients();
    });
  });
}

export function start(): void {
  wireToolbar();
  renderCatalogEditor();
  renderPolicyControls();
  renderClients();
}

start();
