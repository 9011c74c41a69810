/** Typed client for the gantryflow API; all statistics stay server-side. */

import type {
  AvgTimeView,
  BestDepartureView,
  CorridorInfo,
  DatasetInfo,
  HeatmapView,
  HourlyView,
  JobRecord,
  VehicleTypesView,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`API error ${status}: ${detail}`);
  }
}

export interface JobRequest {
  dataset: string;
  corridors: string[];
  date_range: { start: string; end: string } | null;
  overrides?: Record<string, unknown>;
}

export interface ViewParams {
  corridor: string;
  weekday?: string;
  window?: string; // "6-20"
  min_samples?: number;
  vehicle_types?: string; // "31,5"
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body && typeof body.detail === 'string') detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  corridors(): Promise<CorridorInfo[]> {
    return this.get('/api/corridors');
  }

  datasets(): Promise<DatasetInfo[]> {
    return this.get('/api/datasets');
  }

  async submitJob(request: JobRequest): Promise<string> {
    const response = await this.fetchFn(this.baseUrl + '/api/jobs', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(request),
    });
    if (!response.ok) throw await parseError(response);
    const body = (await response.json()) as { job_id: string };
    return body.job_id;
  }

  getJob(jobId: string): Promise<JobRecord> {
    return this.get(`/api/jobs/${encodeURIComponent(jobId)}`);
  }

  private view<T>(jobId: string, name: string, params: ViewParams): Promise<T> {
    const query = new URLSearchParams({ corridor: params.corridor });
    if (params.weekday) query.set('weekday', params.weekday);
    if (params.window) query.set('window', params.window);
    if (params.min_samples !== undefined) query.set('min_samples', String(params.min_samples));
    if (params.vehicle_types) query.set('vehicle_types', params.vehicle_types);
    return this.get(`/api/jobs/${encodeURIComponent(jobId)}/views/${name}?${query}`);
  }

  hourly(jobId: string, params: ViewParams): Promise<HourlyView> {
    return this.view(jobId, 'hourly', params);
  }

  heatmap(jobId: string, params: ViewParams): Promise<HeatmapView> {
    return this.view(jobId, 'heatmap', params);
  }

  vehicleTypes(jobId: string, params: ViewParams): Promise<VehicleTypesView> {
    return this.view(jobId, 'vehicle_types', params);
  }

  avgTime(jobId: string, params: ViewParams): Promise<AvgTimeView> {
    return this.view(jobId, 'avg_time', params);
  }

  bestDeparture(jobId: string, params: ViewParams): Promise<BestDepartureView> {
    return this.view(jobId, 'best_departure', params);
  }
}
