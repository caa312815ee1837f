import { api, IndexInfo, QueryResponse, QuerySettings } from '../api.js';
import { clearError, showError } from '../banner.js';
import { escapeHtml, fixed3 } from '../format.js';

interface QuerySource {
  blob: Blob;
  filename: string;
  preview: string; // data URI shown in the query slot
}

export function renderQueryPanel(indexes: IndexInfo[]): string {
  const options = indexes
    .map((ix) => `<option value="${ix.indexId}">#${ix.indexId} (k=${ix.k}, ${ix.images} images)</option>`)
    .join('');
  return `
    <form id="query-form">
      <fieldset ${indexes.length === 0 ? 'disabled' : ''}>
        <label>Image <input type="file" id="query-file" accept="image/*" /></label>
        <label>Index <select id="query-index">${options}</select></label>
        <label>Mode
          <select id="query-mode">
            <option value="topK">top K</option>
            <option value="threshold">threshold</option>
          </select>
        </label>
        <label id="query-topk-wrap">K <input type="number" id="query-topk" value="10" min="1" /></label>
        <label id="query-minsim-wrap" hidden>Min similarity
          <input type="number" id="query-minsim" value="0.5" min="0" max="1" step="0.05" />
        </label>
        <button type="submit" id="query-submit">Search</button>
      </fieldset>
      ${indexes.length === 0 ? '<p class="empty">Build an index first.</p>' : ''}
    </form>
    <div id="query-slot"></div>
    <div id="query-results"></div>`;
}

/** Result grid in the exact order the service returned; the query image
 * leads with a distinguishing border. */
export function renderResults(source: QuerySource, result: QueryResponse): string {
  const hits = result.entries
    .map(
      (entry) => `
    <figure class="card hit">
      <img data-thumb="${entry.imageId}" alt="${escapeHtml(entry.name)}" />
      <figcaption>
        <span class="name">${escapeHtml(entry.name)}</span>
        <span class="badge">${fixed3(entry.similarity)}</span>
      </figcaption>
    </figure>`,
    )
    .join('');
  return `
    <p class="meta">${result.entries.length} matches, ${result.queryDescriptorCount} query descriptors</p>
    <div class="grid">
      <figure class="card query">
        <img src="${source.preview}" alt="query image" />
        <figcaption><span class="name">${escapeHtml(source.filename)}</span>
          <span class="badge">query</span></figcaption>
      </figure>
      ${hits}
    </div>`;
}

function base64ToBlob(b64: string): Blob {
  const raw = atob(b64);
  const bytes = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
  return new Blob([bytes], { type: 'image/png' });
}

export function initQuery(container: HTMLElement, indexes: IndexInfo[]): {
  pickImage: (imageId: number) => Promise<void>;
} {
  container.innerHTML = renderQueryPanel(indexes);
  const form = container.querySelector<HTMLFormElement>('#query-form')!;
  const slot = container.querySelector<HTMLElement>('#query-slot')!;
  const results = container.querySelector<HTMLElement>('#query-results')!;
  const fileInput = container.querySelector<HTMLInputElement>('#query-file')!;
  const modeSelect = container.querySelector<HTMLSelectElement>('#query-mode')!;

  let source: QuerySource | null = null;
  let pending: AbortController | null = null;

  modeSelect.addEventListener('change', () => {
    const topK = modeSelect.value === 'topK';
    container.querySelector<HTMLElement>('#query-topk-wrap')!.hidden = !topK;
    container.querySelector<HTMLElement>('#query-minsim-wrap')!.hidden = topK;
  });

  function setSource(next: QuerySource): void {
    source = next;
    slot.innerHTML = `<figure class="card query"><img src="${next.preview}" alt="query image" />
      <figcaption><span class="name">${escapeHtml(next.filename)}</span></figcaption></figure>`;
  }

  fileInput.addEventListener('change', () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    const reader = new FileReader();
    reader.onload = () =>
      setSource({ blob: file, filename: file.name, preview: String(reader.result) });
    reader.readAsDataURL(file);
  });

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    void submit();
  });

  async function submit(): Promise<void> {
    if (!source) {
      showError(new Error('choose or pick a query image first'));
      return;
    }
    // A newer search supersedes any in-flight one.
    pending?.abort();
    pending = new AbortController();
    clearError();
    results.innerHTML = '<p class="meta">searching&hellip;</p>';
    const settings: QuerySettings = {
      indexId: Number(container.querySelector<HTMLSelectElement>('#query-index')!.value),
      mode: modeSelect.value as QuerySettings['mode'],
    };
    if (settings.mode === 'topK') {
      settings.topK = Number(container.querySelector<HTMLInputElement>('#query-topk')!.value);
    } else {
      settings.minSimilarity = Number(
        container.querySelector<HTMLInputElement>('#query-minsim')!.value,
      );
    }
    try {
      const response = await api.query(source.blob, source.filename, settings, pending.signal);
      results.innerHTML = renderResults(source, response);
      void loadHitThumbnails(results);
    } catch (err) {
      if (err instanceof DOMException && err.name === 'AbortError') return;
      results.innerHTML = '';
      showError(err);
    }
  }

  async function loadHitThumbnails(root: HTMLElement): Promise<void> {
    const images = Array.from(root.querySelectorAll<HTMLImageElement>('img[data-thumb]'));
    await Promise.all(
      images.map(async (img) => {
        try {
          const detail = await api.getImage(Number(img.dataset.thumb));
          img.src = `data:image/png;base64,${detail.imageBytes}`;
        } catch {
          img.alt += ' (thumbnail unavailable)';
        }
      }),
    );
  }

  return {
    async pickImage(imageId: number): Promise<void> {
      clearError();
      try {
        const detail = await api.getImage(imageId);
        setSource({
          blob: base64ToBlob(detail.imageBytes),
          filename: detail.name,
          preview: `data:image/png;base64,${detail.imageBytes}`,
        });
      } catch (err) {
        showError(err);
      }
    },
  };
}
