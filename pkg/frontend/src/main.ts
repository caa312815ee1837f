import { api, IndexInfo, setBaseUrl } from './api.js';
import { clearError, showError } from './banner.js';
import { initGallery } from './views/gallery.js';
import { initIndexes } from './views/indexes.js';
import { initQuery } from './views/query.js';
import { initSimulation } from './views/simulation.js';

type Tab = 'gallery' | 'query' | 'indexes' | 'simulation';

// Same-origin by default; ?api=http://host:port points elsewhere (the
// service ships permissive CORS for exactly this).
const override = new URLSearchParams(location.search).get('api');
if (override) setBaseUrl(override);

const view = document.getElementById('view')!;
let indexes: IndexInfo[] = [];
let queryControls: { pickImage: (id: number) => Promise<void> } | null = null;
let active: Tab = 'gallery';

async function refreshIndexes(): Promise<void> {
  indexes = (await api.listIndexes()).items;
}

async function show(tab: Tab): Promise<void> {
  active = tab;
  for (const button of document.querySelectorAll<HTMLButtonElement>('nav button')) {
    button.classList.toggle('active', button.dataset.tab === tab);
  }
  clearError();
  view.innerHTML = '';
  try {
    if (tab !== 'gallery') await refreshIndexes();
    switch (tab) {
      case 'gallery':
        initGallery(view, (imageId) => {
          void show('query').then(() => queryControls?.pickImage(imageId));
        });
        break;
      case 'query':
        queryControls = initQuery(view, indexes);
        break;
      case 'indexes':
        initIndexes(view, () => void refreshIndexes());
        break;
      case 'simulation':
        initSimulation(view, indexes);
        break;
    }
  } catch (err) {
    showError(err);
  }
}

for (const button of document.querySelectorAll<HTMLButtonElement>('nav button')) {
  button.addEventListener('click', () => void show(button.dataset.tab as Tab));
}

async function boot(): Promise<void> {
  try {
    const health = await api.health();
    document.getElementById('health')!.textContent =
      `${health.images} images, ${health.indexes} indexes`;
  } catch (err) {
    showError(err);
    return; // nothing to render against a dead service
  }
  void show(active);
}

void boot();
