import { api, IndexInfo, SimulationRequest, SimulationResponse } from '../api.js';
import { clearError, showError } from '../banner.js';
import { escapeHtml, fixed3, reportCsv, REPORT_FIELDS } from '../format.js';

/** Per-query precision/recall bars. Chart geometry scales the service
 * values for drawing; the numbers shown anywhere remain the raw API
 * values run through fixed3. */
export function renderBarChart(report: SimulationResponse): string {
  const rows = report.rows;
  if (rows.length === 0) return '';
  const barWidth = 14;
  const gap = 10;
  const groupWidth = barWidth * 2 + gap + 8;
  const height = 120;
  const width = rows.length * groupWidth + 40;
  const bars = rows
    .map((row, i) => {
      const x = 30 + i * groupWidth;
      const ph = Math.round(row.precision * 100);
      const rh = Math.round(row.recall * 100);
      return `
      <g>
        <rect class="bar-precision" x="${x}" y="${height - ph}" width="${barWidth}" height="${ph}">
          <title>${escapeHtml(row.name)} precision ${fixed3(row.precision)}</title>
        </rect>
        <rect class="bar-recall" x="${x + barWidth + 2}" y="${height - rh}" width="${barWidth}" height="${rh}">
          <title>${escapeHtml(row.name)} recall ${fixed3(row.recall)}</title>
        </rect>
        <text x="${x + barWidth}" y="${height + 12}" text-anchor="middle">${i + 1}</text>
      </g>`;
    })
    .join('');
  return `
    <svg id="sim-chart" viewBox="0 0 ${width} ${height + 18}" role="img"
         aria-label="per-query precision and recall">
      <line x1="28" y1="0" x2="28" y2="${height}" class="axis" />
      <line x1="28" y1="${height}" x2="${width}" y2="${height}" class="axis" />
      <text x="24" y="10" text-anchor="end">1</text>
      <text x="24" y="${height}" text-anchor="end">0</text>
      ${bars}
    </svg>
    <p class="meta legend"><span class="swatch bar-precision"></span> precision
       <span class="swatch bar-recall"></span> recall</p>`;
}

export function renderSimulationResults(report: SimulationResponse): string {
  const header = REPORT_FIELDS.map((f) => `<th>${f}</th>`).join('');
  const body = report.rows
    .map(
      (row) => `
    <tr>
      <td>${escapeHtml(row.name)}</td>
      <td>${row.RI}</td><td>${row.AI}</td><td>${row.rai}</td>
      <td>${row.iri}</td><td>${row.anr}</td><td>${row.inr}</td>
      <td class="precision">${fixed3(row.precision)}</td>
      <td class="recall">${fixed3(row.recall)}</td>
    </tr>`,
    )
    .join('');
  return `
    <p id="sim-aggregate" class="aggregate">
      mean precision <strong id="agg-precision">${fixed3(report.aggregate.meanPrecision)}</strong>,
      mean recall <strong id="agg-recall">${fixed3(report.aggregate.meanRecall)}</strong>
      over ${report.rows.length} queries
    </p>
    ${renderBarChart(report)}
    <table class="listing" id="sim-table">
      <thead><tr>${header}</tr></thead>
      <tbody>${body || '<tr><td colspan="9" class="empty">no queries ran</td></tr>'}</tbody>
    </table>
    <button type="button" id="sim-export" ${report.rows.length === 0 ? 'disabled' : ''}>Export CSV</button>`;
}

export function renderSimulationPanel(indexes: IndexInfo[]): string {
  const options = indexes
    .map((ix) => `<option value="${ix.indexId}">#${ix.indexId} (k=${ix.k})</option>`)
    .join('');
  return `
    <form id="sim-form">
      <fieldset ${indexes.length === 0 ? 'disabled' : ''}>
        <label>Index <select id="sim-index">${options}</select></label>
        <label>Mode
          <select id="sim-mode">
            <option value="topK">top K</option>
            <option value="threshold">threshold</option>
          </select>
        </label>
        <label>K <input type="number" id="sim-topk" value="10" min="1" /></label>
        <label><input type="checkbox" id="sim-use-split" checked /> hold out a query split</label>
        <label>ratio <input type="number" id="sim-ratio" value="0.9" min="0.05" max="0.95" step="0.05" /></label>
        <label>seed <input type="number" id="sim-seed" value="0" /></label>
        <button type="submit" id="sim-run">Run simulation</button>
      </fieldset>
      ${indexes.length === 0 ? '<p class="empty">Build an index first.</p>' : ''}
    </form>
    <div id="sim-results"></div>`;
}

export function initSimulation(container: HTMLElement, indexes: IndexInfo[]): void {
  container.innerHTML = renderSimulationPanel(indexes);
  const form = container.querySelector<HTMLFormElement>('#sim-form')!;
  const results = container.querySelector<HTMLElement>('#sim-results')!;
  const runButton = container.querySelector<HTMLButtonElement>('#sim-run')!;

  let lastReport: SimulationResponse | null = null;
  let running = false; // one simulation at a time

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    if (!running) void run();
  });

  async function run(): Promise<void> {
    running = true;
    runButton.disabled = true;
    clearError();
    results.innerHTML = '<p class="meta">replaying queries&hellip;</p>';
    const body: SimulationRequest = {
      indexId: Number(container.querySelector<HTMLSelectElement>('#sim-index')!.value),
      options: buildOptions(),
    };
    if (container.querySelector<HTMLInputElement>('#sim-use-split')!.checked) {
      body.split = {
        ratio: Number(container.querySelector<HTMLInputElement>('#sim-ratio')!.value),
        seed: Number(container.querySelector<HTMLInputElement>('#sim-seed')!.value),
      };
    }
    try {
      const report = await api.simulateMulti(body);
      lastReport = report;
      results.innerHTML = renderSimulationResults(report);
      results.querySelector('#sim-export')?.addEventListener('click', exportCsv);
    } catch (err) {
      lastReport = null;
      results.innerHTML = ''; // a failed run never shows stale numbers
      showError(err);
    } finally {
      running = false;
      runButton.disabled = false;
    }
  }

  function buildOptions(): SimulationRequest['options'] {
    const mode = container.querySelector<HTMLSelectElement>('#sim-mode')!.value;
    if (mode === 'topK') {
      return {
        mode,
        topK: Number(container.querySelector<HTMLInputElement>('#sim-topk')!.value),
      };
    }
    return { mode };
  }

  function exportCsv(): void {
    if (!lastReport) return;
    const blob = new Blob([reportCsv(lastReport)], { type: 'text/csv' });
    const link = document.createElement('a');
    link.href = URL.createObjectURL(blob);
    link.download = 'simulation-report.csv';
    link.click();
    URL.revokeObjectURL(link.href);
  }
}
