/** Selection validation: mirrors the API's request checks so an invalid
 * range or unknown id is never submitted. */

import type { JobRequest, ViewParams } from './api.js';
import type { QuerySelection } from './types.js';
import { WEEKDAYS } from './types.js';

const DATE_RE = /^\d{4}-\d{2}-\d{2}$/;

function isValidDate(text: string): boolean {
  if (!DATE_RE.test(text)) return false;
  const [y, m, d] = text.split('-').map(Number);
  const parsed = new Date(Date.UTC(y, m - 1, d));
  return (
    parsed.getUTCFullYear() === y &&
    parsed.getUTCMonth() === m - 1 &&
    parsed.getUTCDate() === d
  );
}

/** Human-readable problems; empty array means the selection is submittable. */
export function validateSelection(
  selection: QuerySelection,
  knownCorridors: string[],
  knownDatasets: string[],
): string[] {
  const problems: string[] = [];
  if (!selection.dataset) problems.push('pick a dataset');
  else if (!knownDatasets.includes(selection.dataset))
    problems.push(`unknown dataset ${selection.dataset}`);
  if (!selection.corridor) problems.push('pick a corridor');
  else if (!knownCorridors.includes(selection.corridor))
    problems.push(`unknown corridor ${selection.corridor}`);
  if (!isValidDate(selection.dateFrom)) problems.push('start date must be YYYY-MM-DD');
  if (!isValidDate(selection.dateTo)) problems.push('end date must be YYYY-MM-DD');
  if (
    isValidDate(selection.dateFrom) &&
    isValidDate(selection.dateTo) &&
    selection.dateFrom > selection.dateTo
  )
    problems.push('date range starts after it ends');
  if (!WEEKDAYS.includes(selection.weekday)) problems.push('pick a weekday');
  if (
    !Number.isInteger(selection.windowFrom) ||
    !Number.isInteger(selection.windowTo) ||
    selection.windowFrom < 0 ||
    selection.windowTo > 23 ||
    selection.windowFrom > selection.windowTo
  )
    problems.push('departure window must lie within 0..23');
  return problems;
}

export function toJobRequest(selection: QuerySelection): JobRequest {
  return {
    dataset: selection.dataset,
    corridors: [selection.corridor],
    date_range: { start: selection.dateFrom, end: selection.dateTo },
  };
}

export function toViewParams(selection: QuerySelection): ViewParams {
  const params: ViewParams = { corridor: selection.corridor };
  if (selection.vehicleTypes && selection.vehicleTypes.length)
    params.vehicle_types = selection.vehicleTypes.join(',');
  return params;
}

export function toBestDepartureParams(selection: QuerySelection): ViewParams {
  return {
    ...toViewParams(selection),
    weekday: selection.weekday,
    window: `${selection.windowFrom}-${selection.windowTo}`,
  };
}

/** Key identifying the extraction a selection needs; view-only knobs
 * (weekday, window, vehicle filter) intentionally excluded so changing them
 * reuses the cached job. */
export function extractionKey(selection: QuerySelection): string {
  return [selection.dataset, selection.corridor, selection.dateFrom, selection.dateTo].join('|');
}
