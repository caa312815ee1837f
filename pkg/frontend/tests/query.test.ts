import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';
import type { QueryEntry, QueryResponse } from '../src/api.js';
import { initQuery, renderResults } from '../src/views/query.js';

function jsonResponse(data: unknown, status = 200): Response {
  return new Response(JSON.stringify(data), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

const flush = () => new Promise((resolve) => setTimeout(resolve, 0));

beforeEach(() => {
  document.body.innerHTML = '<div id="banner" hidden></div><div id="panel"></div>';
});

afterEach(() => {
  vi.unstubAllGlobals();
});

// Entries deliberately not sorted by similarity: the panel must not reorder them.
const ENTRIES: QueryEntry[] = [
  { imageId: 7, name: 'stripes_02.png', similarity: 0.412398321 },
  { imageId: 3, name: 'blobs_01.png', similarity: 0.934512876 },
  { imageId: 5, name: 'checks_04.png', similarity: 0.71200013 },
];

describe('renderResults', () => {
  const source = { blob: new Blob(), filename: 'probe.png', preview: 'data:,x' };
  const response: QueryResponse = { entries: ENTRIES, queryDescriptorCount: 42 };

  it('keeps hits in the order the service returned', () => {
    document.body.innerHTML = renderResults(source, response);
    const names = [...document.querySelectorAll('figure:not(.query) figcaption .name')]
      .map((el) => el.textContent);
    expect(names).toEqual(ENTRIES.map((e) => e.name));
  });

  it('shows similarities as the service values to three places', () => {
    document.body.innerHTML = renderResults(source, response);
    const badges = [...document.querySelectorAll('figure:not(.query) .badge')]
      .map((el) => el.textContent);
    expect(badges).toEqual(ENTRIES.map((e) => e.similarity.toFixed(3)));
  });

  it('marks the probe image apart from the hits', () => {
    document.body.innerHTML = renderResults(source, response);
    const cards = document.querySelectorAll('figure.card');
    expect(cards[0]!.classList.contains('query')).toBe(true);
    expect(document.querySelectorAll('figure.card.query')).toHaveLength(1);
  });
});

describe('query panel', () => {
  const detail = {
    id: 1,
    name: 'probe.png',
    classLabel: 'stripes',
    width: 8,
    height: 8,
    imageBytes: btoa('fake png bytes'),
  };

  it('aborts a pending search when a new one starts', async () => {
    const signals: AbortSignal[] = [];
    let firstHang: Promise<Response> | null = null;
    const fetchMock = vi.fn(async (url: string, init?: RequestInit) => {
      if (url === '/images/1') return jsonResponse(detail);
      signals.push(init!.signal as AbortSignal);
      if (signals.length === 1) {
        firstHang = new Promise<Response>(() => {});
        return firstHang;
      }
      return jsonResponse({ entries: ENTRIES, queryDescriptorCount: 3 });
    });
    vi.stubGlobal('fetch', fetchMock);

    const panel = document.querySelector<HTMLElement>('#panel')!;
    const controls = initQuery(panel, [
      { indexId: 1, k: 8, seed: 0, createdAt: 'now', images: 6 },
    ]);
    await controls.pickImage(1);

    const form = panel.querySelector<HTMLFormElement>('#query-form')!;
    form.dispatchEvent(new Event('submit'));
    await flush();
    form.dispatchEvent(new Event('submit'));
    await flush();
    await flush();

    expect(signals).toHaveLength(2);
    expect(signals[0]!.aborted).toBe(true);
    expect(signals[1]!.aborted).toBe(false);
    const names = [...panel.querySelectorAll('figure:not(.query) figcaption .name')]
      .map((el) => el.textContent);
    expect(names).toEqual(ENTRIES.map((e) => e.name));
  });

  it('clears results and raises the banner when the search fails', async () => {
    const fetchMock = vi.fn(async (url: string) => {
      if (url === '/images/1') return jsonResponse(detail);
      return jsonResponse(
        { code: 'NOT_FOUND', message: 'no indexes entity with id 1', detail: null },
        404,
      );
    });
    vi.stubGlobal('fetch', fetchMock);

    const panel = document.querySelector<HTMLElement>('#panel')!;
    const controls = initQuery(panel, [
      { indexId: 1, k: 8, seed: 0, createdAt: 'now', images: 6 },
    ]);
    await controls.pickImage(1);
    panel.querySelector<HTMLFormElement>('#query-form')!.dispatchEvent(new Event('submit'));
    await flush();
    await flush();

    const banner = document.querySelector<HTMLElement>('#banner')!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toBe('NOT_FOUND: no indexes entity with id 1');
    expect(panel.querySelector('#query-results')!.innerHTML).toBe('');
  });
});
