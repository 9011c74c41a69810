/** Secondary acceptance: drive the full query flow against captured API
 * payloads from the synthetic September scenario (southern corridor) and
 * check what would be rendered. */
import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import {
  renderAvgTimeLines,
  renderHeatmap,
  renderHourlyBars,
  renderVehicleStack,
} from '../src/charts.js';
import { pollJob } from '../src/poll.js';
import {
  extractionKey,
  toBestDepartureParams,
  toJobRequest,
  toViewParams,
  validateSelection,
} from '../src/selection.js';
import type {
  AvgTimeView,
  BestDepartureView,
  HeatmapView,
  HourlyView,
  JobRecord,
  QuerySelection,
  VehicleTypesView,
} from '../src/types.js';
import { fixture, stubFetch } from './helpers.js';

const selection: QuerySelection = {
  dataset: 'september-2018',
  corridor: 'NF03-S', // a southern corridor
  dateFrom: '2018-09-01',
  dateTo: '2018-09-30',
  weekday: 'Sat',
  vehicleTypes: null,
  windowFrom: 6,
  windowTo: 20,
};

function scenarioApi() {
  const done = fixture<JobRecord>('job_done');
  let polls = 0;
  const routes = {
    'GET /api/corridors': fixture('corridors'),
    'GET /api/datasets': fixture('datasets'),
    'POST /api/jobs': { status: 202, body: { job_id: 'job-fixture' } },
    'GET /api/jobs/job-fixture': () => {
      polls += 1;
      if (polls === 1) return { body: { ...done, state: 'pending', started_at: null, finished_at: null } };
      if (polls === 2) return { body: { ...done, state: 'running', finished_at: null } };
      return { body: done };
    },
    'GET /api/jobs/job-fixture/views/hourly': fixture('hourly'),
    'GET /api/jobs/job-fixture/views/heatmap': fixture('heatmap'),
    'GET /api/jobs/job-fixture/views/vehicle_types': fixture('vehicle_types'),
    'GET /api/jobs/job-fixture/views/avg_time': fixture('avg_time'),
    'GET /api/jobs/job-fixture/views/best_departure': fixture('best_departure'),
  };
  const { fetchFn, calls } = stubFetch(routes);
  return { client: new ApiClient('', fetchFn), calls };
}

describe('scenario walk-through (southern corridor)', () => {
  it('runs the whole flow and renders scenario-shaped charts', async () => {
    const { client, calls } = scenarioApi();

    const corridors = await client.corridors();
    const datasets = await client.datasets();
    expect(
      validateSelection(selection, corridors.map((c) => c.id), datasets.map((d) => d.id)),
    ).toEqual([]);

    const jobId = await client.submitJob(toJobRequest(selection));
    const states: string[] = [];
    const record = await pollJob(
      () => client.getJob(jobId),
      (j) => states.push(j.state),
      { sleep: async () => {} },
    );
    expect(states).toEqual(['pending', 'running', 'done']);
    expect(record.state).toBe('done');

    const params = toViewParams(selection);
    const hourly = await client.hourly(jobId, params);
    const heatmap = await client.heatmap(jobId, params);
    const stack = await client.vehicleTypes(jobId, params);
    const avg = await client.avgTime(jobId, params);
    const best = await client.bestDeparture(jobId, toBestDepartureParams(selection));

    // 24-bin chart peaking at bin 16
    const hourlySvg = renderHourlyBars(hourly);
    expect(hourly.counts.indexOf(Math.max(...hourly.counts))).toBe(16);
    expect((hourlySvg.match(/data-hour=/g) ?? []).length).toBe(24);

    // 7x24 heatmap
    const heatSvg = renderHeatmap(heatmap);
    expect((heatSvg.match(/class="cell"/g) ?? []).length).toBe(7 * 24);

    // vehicle stack led by Car
    const stackSvg = renderVehicleStack(stack);
    const carTotal = stack.profiles.find((p) => p.code === 31)!.total;
    for (const p of stack.profiles) {
      if (p.code !== 31) expect(carTotal).toBeGreaterThan(p.total);
    }
    expect(stackSvg).toContain('Car/Sedan');

    // average-time line with the best-departure highlight equal to the API
    const avgSvg = renderAvgTimeLines(avg, {
      weekday: best.weekday,
      hour: best.hour,
      minutes: best.minutes,
    });
    const ring = avgSvg.match(/class="best-departure" data-weekday="(\w+)" data-hour="(\d+)"/);
    expect(ring![1]).toBe(best.weekday);
    expect(Number(ring![2])).toBe(best.hour);

    // weekday/window changes reuse the job: extraction key is stable
    expect(extractionKey({ ...selection, weekday: 'Mon', windowFrom: 8 })).toBe(
      extractionKey(selection),
    );
    // and the flow used exactly one extraction job
    const posts = calls.filter((c) => c.method === 'POST');
    expect(posts).toHaveLength(1);
  });

  it('shows an error banner state when the API is down', async () => {
    const { fetchFn } = stubFetch({}); // everything 404s
    const client = new ApiClient('', fetchFn);
    await expect(client.corridors()).rejects.toMatchObject({ status: 404 });
  });
});
