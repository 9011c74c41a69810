/** Explorer controller: wires the form, the job lifecycle and the charts.
 *
 * One extraction job is in flight at a time; finished jobs are cached by
 * extraction key (dataset, corridor, date range) so weekday / window /
 * vehicle-type changes only re-fetch views and never re-extract.
 */

import { ApiClient, ApiError } from './api.js';
import {
  renderAvgTimeLines,
  renderHeatmap,
  renderHourlyBars,
  renderRecommendation,
  renderVehicleStack,
} from './charts.js';
import { pollJob, type PollOptions } from './poll.js';
import {
  extractionKey,
  toBestDepartureParams,
  toJobRequest,
  toViewParams,
  validateSelection,
} from './selection.js';
import type { BestDepartureView, CorridorInfo, DatasetInfo, QuerySelection, Weekday } from './types.js';
import { WEEKDAYS } from './types.js';

const VEHICLE_CHOICES: Array<[number, string]> = [
  [31, 'Car/Sedan'],
  [32, 'Truck'],
  [42, 'BigTruck'],
  [5, 'Trailer'],
  [41, 'Bus'],
];

/** Option label: route interchanges plus distance/fee totals, all taken
 * verbatim from the corridors payload. */
export function corridorLabel(c: CorridorInfo): string {
  const start = c.segments.find((s) => s.gantry === c.start_gantry);
  const stop = c.segments.find((s) => s.gantry === c.end_gantry);
  const route = start && stop ? ` ${start.interchange_start} → ${stop.interchange_stop}` : '';
  return (
    `${c.id}${route} (${c.totals.distance_km.toFixed(1)} km, ` +
    `${c.totals.fee_twd.toFixed(1)} TWD)`
  );
}

export class App {
  private corridors: CorridorInfo[] = [];
  private datasets: DatasetInfo[] = [];
  private jobByKey = new Map<string, string>(); // extraction key -> done job id
  private inFlight = false;

  constructor(
    private readonly root: Document,
    private readonly api: ApiClient,
    private readonly pollOptions: PollOptions = {},
  ) {}

  async init(): Promise<void> {
    this.el('run').addEventListener('click', () => void this.runQuery());
    this.el('retry').addEventListener('click', () => void this.loadChoices());
    for (const id of ['weekday', 'window-from', 'window-to'] as const) {
      this.el(id).addEventListener('change', () => void this.refreshRecommendation());
    }
    await this.loadChoices();
  }

  private el(id: string): HTMLElement {
    const found = this.root.getElementById(id);
    if (!found) throw new Error(`missing element #${id}`);
    return found;
  }

  private banner(text: string | null, kind: 'error' | 'info' = 'error'): void {
    const banner = this.el('banner');
    banner.textContent = text ?? '';
    banner.className = text ? `banner ${kind}` : 'banner hidden';
    this.el('retry').classList.toggle('hidden', !text || kind !== 'error');
  }

  async loadChoices(): Promise<void> {
    try {
      [this.corridors, this.datasets] = await Promise.all([
        this.api.corridors(),
        this.api.datasets(),
      ]);
    } catch (err) {
      this.banner(`could not reach the API (${String(err)}) — is the service running?`);
      return;
    }
    this.banner(null);
    const corridorSel = this.el('corridor') as HTMLSelectElement;
    corridorSel.innerHTML = '';
    for (const c of this.corridors) {
      const opt = this.root.createElement('option');
      opt.value = c.id;
      opt.textContent = corridorLabel(c);
      corridorSel.appendChild(opt);
    }
    const datasetSel = this.el('dataset') as HTMLSelectElement;
    datasetSel.innerHTML = '';
    for (const d of this.datasets) {
      const opt = this.root.createElement('option');
      opt.value = d.id;
      opt.textContent = `${d.id} (${d.month_span[0]}..${d.month_span[1]}, ${d.files} files)`;
      datasetSel.appendChild(opt);
    }
    const types = this.el('vehicle-types');
    if (!types.childElementCount) {
      for (const [code, label] of VEHICLE_CHOICES) {
        const id = `vt-${code}`;
        const wrap = this.root.createElement('label');
        wrap.innerHTML = `<input type="checkbox" id="${id}" value="${code}" checked> ${label}`;
        types.appendChild(wrap);
      }
    }
  }

  selection(): QuerySelection {
    const value = (id: string) => (this.el(id) as HTMLInputElement | HTMLSelectElement).value;
    const checked = Array.from(
      this.el('vehicle-types').querySelectorAll<HTMLInputElement>('input:checked'),
    ).map((input) => Number(input.value));
    return {
      dataset: value('dataset'),
      corridor: value('corridor'),
      dateFrom: value('date-from'),
      dateTo: value('date-to'),
      weekday: value('weekday') as Weekday,
      vehicleTypes: checked.length === VEHICLE_CHOICES.length ? null : checked,
      windowFrom: Number(value('window-from')),
      windowTo: Number(value('window-to')),
    };
  }

  async runQuery(): Promise<void> {
    if (this.inFlight) return; // one extraction per tab
    const selection = this.selection();
    const problems = validateSelection(
      selection,
      this.corridors.map((c) => c.id),
      this.datasets.map((d) => d.id),
    );
    if (problems.length) {
      this.banner(problems.join('; '), 'error');
      return;
    }
    const key = extractionKey(selection);
    let jobId = this.jobByKey.get(key);
    if (!jobId) {
      this.inFlight = true;
      this.setBusy(true, 'submitting extraction job…');
      try {
        jobId = await this.api.submitJob(toJobRequest(selection));
        const record = await pollJob(
          () => this.api.getJob(jobId as string),
          (job) => this.setBusy(true, `job ${job.id}: ${job.state}…`),
          this.pollOptions,
        );
        if (record.state === 'failed') {
          this.banner(`extraction failed: ${record.error ?? 'unknown reason'}`);
          return;
        }
        this.jobByKey.set(key, jobId);
      } catch (err) {
        this.banner(`job submission failed: ${String(err)}`);
        return;
      } finally {
        this.inFlight = false;
        this.setBusy(false);
      }
    }
    await this.renderViews(jobId, selection);
  }

  private setBusy(busy: boolean, message = ''): void {
    (this.el('run') as HTMLButtonElement).disabled = busy;
    this.el('progress').textContent = message;
    this.el('views').classList.toggle('stale', busy);
  }

  private async renderViews(jobId: string, selection: QuerySelection): Promise<void> {
    this.banner(null);
    const params = toViewParams(selection);
    try {
      const [hourly, heat, stack, avg] = await Promise.all([
        this.api.hourly(jobId, params),
        this.api.heatmap(jobId, params),
        this.api.vehicleTypes(jobId, params),
        this.api.avgTime(jobId, params),
      ]);
      this.el('hourly').innerHTML = renderHourlyBars(hourly);
      this.el('heatmap').innerHTML = renderHeatmap(heat);
      this.el('vehicle-stack').innerHTML = renderVehicleStack(stack);
      const best = await this.fetchBest(jobId, selection);
      this.el('avg-time').innerHTML = renderAvgTimeLines(
        avg,
        best && { weekday: best.weekday, hour: best.hour, minutes: best.minutes },
      );
      this.el('recommendation').innerHTML = best
        ? renderRecommendation(best)
        : 'No hour in the chosen window has enough samples — widen the window or pick another weekday.';
      this.el('views').dataset.jobId = jobId;
    } catch (err) {
      this.banner(`could not load views: ${String(err)}`);
    }
  }

  private async fetchBest(
    jobId: string,
    selection: QuerySelection,
  ): Promise<BestDepartureView | null> {
    try {
      return await this.api.bestDeparture(jobId, toBestDepartureParams(selection));
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null; // NoData
      throw err;
    }
  }

  /** Weekday/window change: reuse the cached job, only re-fetch views. */
  async refreshRecommendation(): Promise<void> {
    const selection = this.selection();
    const jobId = this.jobByKey.get(extractionKey(selection));
    if (!jobId) return;
    await this.renderViews(jobId, selection);
  }
}

export function weekdayOptions(): string {
  return WEEKDAYS.map((w) => `<option value="${w}">${w}</option>`).join('');
}
