import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';
import type { SimulationResponse } from '../src/api.js';
import { reportCsv } from '../src/format.js';
import { initSimulation, renderSimulationResults } from '../src/views/simulation.js';

function jsonResponse(data: unknown, status = 200): Response {
  return new Response(JSON.stringify(data), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

const flush = () => new Promise((resolve) => setTimeout(resolve, 0));

// Rows deliberately not sorted by precision, recall, or name: the dashboard
// must present them exactly as the service ordered them.
const REPORT: SimulationResponse = {
  rows: [
    { name: 'checks_07.png', RI: 6, AI: 10, rai: 4, iri: 2, anr: 6, inr: 48, precision: 0.333333333, recall: 0.666666667 },
    { name: 'stripes_01.png', RI: 8, AI: 10, rai: 8, iri: 0, anr: 2, inr: 50, precision: 0.8, recall: 0.25 },
    { name: 'blobs "mix", v2.png', RI: 7, AI: 10, rai: 4, iri: 3, anr: 3, inr: 50, precision: 0.571428571, recall: 0.142857143 },
  ],
  aggregate: { meanPrecision: 0.568253968, meanRecall: 0.35318127 },
};

const INDEXES = [
  { indexId: 2, k: 16, seed: 0, createdAt: 'now', images: 12 },
  { indexId: 5, k: 64, seed: 1, createdAt: 'later', images: 12 },
];

beforeEach(() => {
  document.body.innerHTML = '<div id="banner" hidden></div><div id="panel"></div>';
});

afterEach(() => {
  vi.unstubAllGlobals();
});

function runSimulation(): HTMLElement {
  const panel = document.querySelector<HTMLElement>('#panel')!;
  initSimulation(panel, INDEXES);
  panel.querySelector<HTMLFormElement>('#sim-form')!.dispatchEvent(new Event('submit'));
  return panel;
}

describe('simulation dashboard', () => {
  it('displays the service report verbatim: order, values, aggregate', async () => {
    const fetchMock = vi.fn(async () => jsonResponse(REPORT));
    vi.stubGlobal('fetch', fetchMock);
    const panel = runSimulation();
    await flush();

    const rows = [...panel.querySelectorAll('#sim-table tbody tr')];
    expect(rows.map((tr) => tr.querySelector('td')!.textContent))
      .toEqual(REPORT.rows.map((r) => r.name));
    expect(rows.map((tr) => tr.querySelector('td.precision')!.textContent))
      .toEqual(REPORT.rows.map((r) => r.precision.toFixed(3)));
    expect(rows.map((tr) => tr.querySelector('td.recall')!.textContent))
      .toEqual(REPORT.rows.map((r) => r.recall.toFixed(3)));
    // Pin the rounding direction once by hand.
    expect(rows[0]!.querySelector('td.recall')!.textContent).toBe('0.667');

    expect(panel.querySelector('#agg-precision')!.textContent).toBe('0.568');
    expect(panel.querySelector('#agg-recall')!.textContent).toBe('0.353');

    expect(panel.querySelectorAll('#sim-chart rect.bar-precision')).toHaveLength(3);
    expect(panel.querySelectorAll('#sim-chart rect.bar-recall')).toHaveLength(3);
  });

  it('sends the form settings through unchanged', async () => {
    const fetchMock = vi.fn(async () => jsonResponse(REPORT));
    vi.stubGlobal('fetch', fetchMock);
    runSimulation();
    await flush();

    const [url, init] = fetchMock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe('/simulate/multi');
    expect(JSON.parse(init.body as string)).toEqual({
      indexId: 2,
      options: { mode: 'topK', topK: 10 },
      split: { ratio: 0.9, seed: 0 },
    });
  });

  it('shows the banner and drops stale results when the service is down', async () => {
    let calls = 0;
    const fetchMock = vi.fn(async () => {
      calls += 1;
      if (calls === 1) return jsonResponse(REPORT);
      throw new TypeError('fetch failed');
    });
    vi.stubGlobal('fetch', fetchMock);
    const panel = runSimulation();
    await flush();
    expect(panel.querySelectorAll('#sim-table tbody tr').length).toBe(3);

    panel.querySelector<HTMLFormElement>('#sim-form')!.dispatchEvent(new Event('submit'));
    await flush();

    const banner = document.querySelector<HTMLElement>('#banner')!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toBe('the retrieval service is not responding');
    expect(panel.querySelector('#sim-results')!.innerHTML).toBe('');
  });

  it('renders an empty report with dashes and a disabled export', () => {
    const empty: SimulationResponse = {
      rows: [],
      aggregate: { meanPrecision: null, meanRecall: null },
    };
    document.body.innerHTML = renderSimulationResults(empty);
    expect(document.querySelector('#agg-precision')!.textContent).toBe('—');
    expect(document.querySelector('#agg-recall')!.textContent).toBe('—');
    expect(document.querySelector<HTMLButtonElement>('#sim-export')!.disabled).toBe(true);
    expect(document.querySelector('#sim-table td.empty')).not.toBeNull();
  });
});

describe('reportCsv', () => {
  it('exports rows at full precision with the mean line last', () => {
    expect(reportCsv(REPORT)).toBe(
      'name,RI,AI,rai,iri,anr,inr,precision,recall\n' +
      'checks_07.png,6,10,4,2,6,48,0.333333333,0.666666667\n' +
      'stripes_01.png,8,10,8,0,2,50,0.8,0.25\n' +
      '"blobs ""mix"", v2.png",7,10,4,3,3,50,0.571428571,0.142857143\n' +
      'mean,,,,,,,0.568253968,0.35318127\n',
    );
  });

  it('leaves the aggregate cells blank when no queries ran', () => {
    const empty: SimulationResponse = {
      rows: [],
      aggregate: { meanPrecision: null, meanRecall: null },
    };
    expect(reportCsv(empty)).toBe(
      'name,RI,AI,rai,iri,anr,inr,precision,recall\nmean,,,,,,,,\n',
    );
  });
});
