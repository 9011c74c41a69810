/** Wire types for the gantryflow HTTP API. */

export interface SegmentInfo {
  gantry: string;
  distance_km: number;
  fee_twd: number;
  interchange_start: string;
  interchange_stop: string;
}

export interface CorridorInfo {
  id: string;
  freeway: string;
  bearing: 'North' | 'South';
  start_gantry: string;
  end_gantry: string;
  segments: SegmentInfo[];
  totals: { distance_km: number; fee_twd: number };
}

export interface DatasetInfo {
  id: string;
  month_span: [string, string];
  files: number;
}

export type JobState = 'pending' | 'running' | 'done' | 'failed';

export interface JobRecord {
  id: string;
  state: JobState;
  error: string | null;
  created_at: string;
  started_at: string | null;
  finished_at: string | null;
}

export interface HourlyView {
  corridor: string;
  vehicle_types: number[] | null;
  counts: number[]; // 24 bins
  total: number;
}

export interface HeatmapView {
  corridor: string;
  weekdays: string[]; // Mon..Sun
  values: number[][]; // 7 x 24
}

export interface VehicleTypesView {
  corridor: string;
  profiles: Array<{ code: number; label: string; counts: number[]; total: number }>;
}

export interface AvgTimeView {
  corridor: string;
  min_samples: number;
  weekdays: string[];
  minutes: Array<Array<number | null>>; // 7 x 24, null below the sample floor
}

export interface BestDepartureView {
  corridor: string;
  weekday: string;
  window: [number, number];
  min_samples: number;
  hour: number;
  minutes: number;
}

export const WEEKDAYS = ['Mon', 'Tue', 'Wed', 'Thu', 'Fri', 'Sat', 'Sun'] as const;
export type Weekday = (typeof WEEKDAYS)[number];

/** What the user has picked in the explorer. */
export interface QuerySelection {
  dataset: string;
  corridor: string;
  dateFrom: string; // YYYY-MM-DD
  dateTo: string;
  weekday: Weekday;
  vehicleTypes: number[] | null; // null = all
  windowFrom: number; // departure window, inclusive hours
  windowTo: number;
}
