// Typed client for the retrieval service. Every number shown anywhere in
// the UI originates from one of these response shapes; the client never
// computes similarities or factors itself.

export interface ImageMeta {
  id: number;
  name: string;
  classLabel: string;
  width: number;
  height: number;
}

export interface ImagePage {
  items: ImageMeta[];
  total: number;
  offset: number;
  limit: number;
}

export interface ImageDetail extends ImageMeta {
  imageBytes: string; // base64 PNG/JPEG as stored
}

export interface IndexInfo {
  indexId: number;
  k: number;
  seed: number;
  createdAt: string;
  images: number;
}

export interface QueryEntry {
  imageId: number;
  name: string;
  similarity: number;
}

export interface QueryResponse {
  entries: QueryEntry[];
  queryDescriptorCount: number;
}

export interface QuerySettings {
  indexId: number;
  mode: 'topK' | 'threshold';
  topK?: number;
  minSimilarity?: number;
}

export interface FactorsRow {
  name: string;
  RI: number;
  AI: number;
  rai: number;
  iri: number;
  anr: number;
  inr: number;
  precision: number;
  recall: number;
}

export interface SimulationResponse {
  rows: FactorsRow[];
  aggregate: { meanPrecision: number | null; meanRecall: number | null };
}

export interface SimulationRequest {
  indexId: number;
  options?: { mode?: string; topK?: number; minSimilarity?: number };
  split?: { ratio: number; seed: number };
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly detail: unknown = null,
    readonly status = 0,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

let base = '';

/** Point the client somewhere other than the page origin. */
export function setBaseUrl(url: string): void {
  base = url.replace(/\/+$/, '');
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(base + path, init);
  } catch (err) {
    // Aborts are flow control, not failures; everything else means the
    // service is unreachable.
    if (err instanceof DOMException && err.name === 'AbortError') throw err;
    throw new ApiError('UNREACHABLE', 'the retrieval service is not responding', String(err));
  }
  if (!resp.ok) {
    let body: { code?: unknown; message?: unknown; detail?: unknown } | null = null;
    try {
      body = await resp.json();
    } catch {
      body = null;
    }
    if (body && typeof body.code === 'string') {
      throw new ApiError(
        body.code,
        typeof body.message === 'string' ? body.message : resp.statusText,
        body.detail ?? null,
        resp.status,
      );
    }
    throw new ApiError(`HTTP_${resp.status}`, resp.statusText, null, resp.status);
  }
  if (resp.status === 204) return undefined as T;
  return resp.json() as Promise<T>;
}

const json = { 'Content-Type': 'application/json' };

export const api = {
  health: () =>
    request<{ status: string; images: number; indexes: number }>('/health'),

  listImages: (offset = 0, limit = 24) =>
    request<ImagePage>(`/images?offset=${offset}&limit=${limit}`),

  getImage: (id: number) => request<ImageDetail>(`/images/${id}`),

  uploadImage(file: File, classLabel = ''): Promise<{ imageId: number }> {
    const form = new FormData();
    form.append('image', file);
    if (classLabel) form.append('classLabel', classLabel);
    return request('/images', { method: 'POST', body: form });
  },

  listIndexes: () => request<{ items: IndexInfo[] }>('/indexes'),

  createIndex: (k: number, seed: number) =>
    request<{ indexId: number }>('/indexes', {
      method: 'POST',
      headers: json,
      body: JSON.stringify({ k, seed }),
    }),

  deleteIndex: (id: number) =>
    request<void>(`/indexes/${id}`, { method: 'DELETE' }),

  query(
    image: Blob,
    filename: string,
    settings: QuerySettings,
    signal?: AbortSignal,
  ): Promise<QueryResponse> {
    const form = new FormData();
    form.append('image', image, filename);
    form.append('options', JSON.stringify(settings));
    return request('/query', { method: 'POST', body: form, signal });
  },

  simulateMulti: (body: SimulationRequest) =>
    request<SimulationResponse>('/simulate/multi', {
      method: 'POST',
      headers: json,
      body: JSON.stringify(body),
    }),
};
