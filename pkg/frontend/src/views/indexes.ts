import { api, IndexInfo } from '../api.js';
import { clearError, showError } from '../banner.js';

export function renderIndexes(indexes: IndexInfo[]): string {
  const rows = indexes
    .map(
      (ix) => `
    <tr>
      <td>${ix.indexId}</td><td>${ix.k}</td><td>${ix.seed}</td>
      <td>${ix.createdAt}</td><td>${ix.images}</td>
      <td><button type="button" class="delete-index" data-index-id="${ix.indexId}">delete</button></td>
    </tr>`,
    )
    .join('');
  return `
    <table class="listing">
      <thead><tr><th>id</th><th>k</th><th>seed</th><th>created</th><th>images</th><th></th></tr></thead>
      <tbody>${rows || '<tr><td colspan="6" class="empty">no indexes</td></tr>'}</tbody>
    </table>
    <form id="index-form">
      <label>k <input type="number" id="index-k" value="64" min="2" /></label>
      <label>seed <input type="number" id="index-seed" value="0" /></label>
      <button type="submit" id="index-create">Build index</button>
      <span id="index-status" class="meta"></span>
    </form>`;
}

export function initIndexes(container: HTMLElement, onChange: () => void): void {
  async function load(): Promise<void> {
    clearError();
    try {
      const { items } = await api.listIndexes();
      container.innerHTML = renderIndexes(items);
      wire();
    } catch (err) {
      container.innerHTML = '';
      showError(err);
    }
  }

  function wire(): void {
    const form = container.querySelector<HTMLFormElement>('#index-form')!;
    const status = container.querySelector<HTMLElement>('#index-status')!;
    const button = container.querySelector<HTMLButtonElement>('#index-create')!;
    form.addEventListener('submit', async (event) => {
      event.preventDefault();
      clearError();
      button.disabled = true;
      status.textContent = 'building… (clusters every stored descriptor)';
      try {
        const k = Number(container.querySelector<HTMLInputElement>('#index-k')!.value);
        const seed = Number(container.querySelector<HTMLInputElement>('#index-seed')!.value);
        const { indexId } = await api.createIndex(k, seed);
        status.textContent = `index #${indexId} ready`;
        onChange();
        await load();
      } catch (err) {
        status.textContent = '';
        button.disabled = false;
        showError(err);
      }
    });
    for (const btn of container.querySelectorAll<HTMLButtonElement>('.delete-index')) {
      btn.addEventListener('click', async () => {
        clearError();
        try {
          await api.deleteIndex(Number(btn.dataset.indexId));
          onChange();
          await load();
        } catch (err) {
          showError(err);
        }
      });
    }
  }

  void load();
}
