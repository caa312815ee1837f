import { api, ImagePage } from '../api.js';
import { clearError, showError } from '../banner.js';
import { escapeHtml } from '../format.js';

const PAGE_SIZE = 24;

export function renderGallery(page: ImagePage): string {
  if (page.total === 0) {
    return '<p class="empty">No images yet. Upload some from the Query tab or ingest via the CLI.</p>';
  }
  const cards = page.items
    .map(
      (img) => `
    <figure class="card" data-image-id="${img.id}">
      <img data-thumb="${img.id}" alt="${escapeHtml(img.name)}" width="${img.width}" height="${img.height}" />
      <figcaption>
        <span class="name">${escapeHtml(img.name)}</span>
        <span class="label">${escapeHtml(img.classLabel) || '&mdash;'}</span>
      </figcaption>
      <button type="button" class="use-as-query" data-query-id="${img.id}">query with this</button>
    </figure>`,
    )
    .join('');
  const last = Math.min(page.offset + page.items.length, page.total);
  return `
    <div class="pager">
      <button type="button" id="gallery-prev" ${page.offset === 0 ? 'disabled' : ''}>&larr;</button>
      <span>${page.offset + 1}&ndash;${last} of ${page.total}</span>
      <button type="button" id="gallery-next" ${last >= page.total ? 'disabled' : ''}>&rarr;</button>
    </div>
    <div class="grid">${cards}</div>`;
}

async function loadThumbnails(container: HTMLElement): Promise<void> {
  const images = Array.from(
    container.querySelectorAll<HTMLImageElement>('img[data-thumb]'),
  );
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

export function initGallery(
  container: HTMLElement,
  onPickQuery: (imageId: number) => void,
): void {
  let offset = 0;

  async function load(): Promise<void> {
    clearError();
    try {
      const page = await api.listImages(offset, PAGE_SIZE);
      container.innerHTML = renderGallery(page);
      container.querySelector('#gallery-prev')?.addEventListener('click', () => {
        offset = Math.max(0, offset - PAGE_SIZE);
        void load();
      });
      container.querySelector('#gallery-next')?.addEventListener('click', () => {
        offset += PAGE_SIZE;
        void load();
      });
      for (const btn of container.querySelectorAll<HTMLButtonElement>('.use-as-query')) {
        btn.addEventListener('click', () => onPickQuery(Number(btn.dataset.queryId)));
      }
      void loadThumbnails(container);
    } catch (err) {
      container.innerHTML = '';
      showError(err);
    }
  }

  void load();
}
