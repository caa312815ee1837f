import { ApiError } from './api.js';

// One banner element for the whole app; views clear it before each
// request so a visible banner always refers to the latest action.

export function showError(err: unknown): void {
  const el = document.getElementById('banner');
  if (!el) return;
  if (err instanceof ApiError) {
    el.textContent = err.code === 'UNREACHABLE'
      ? err.message
      : `${err.code}: ${err.message}`;
  } else {
    el.textContent = String(err);
  }
  el.hidden = false;
}

export function clearError(): void {
  const el = document.getElementById('banner');
  if (!el) return;
  el.textContent = '';
  el.hidden = true;
}
