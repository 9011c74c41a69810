/** Hand-rolled SVG chart renderers.
 *
 * Every function is a pure payload -> SVG-string mapping: no aggregation or
 * arithmetic beyond pixel scaling happens here, and each rendered datum
 * carries its exact payload value in a data-* attribute so tests (and
 * curious users) can trace every number back to one API response field.
 * Same payload in, same string out.
 */

import type {
  AvgTimeView,
  BestDepartureView,
  HeatmapView,
  HourlyView,
  VehicleTypesView,
} from './types.js';

const W = 720;
const BAR_AREA_H = 220;
const AXIS_H = 24;

const TYPE_COLORS: Record<string, string> = {
  '5': '#b08968',
  '31': '#2a6f97',
  '32': '#e07a5f',
  '41': '#6a994e',
  '42': '#9d4edd',
};

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;').replace(/"/g, '&quot;');
}

function svgOpen(height: number, cls: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${height}" ` +
    `class="${cls}" role="img">`
  );
}

function hourAxis(y: number, step = 44, left = 40): string {
  const parts: string[] = [];
  for (let h = 0; h < 24; h += 2) {
    const x = left + (h + 0.5) * ((W - left - 8) / 24);
    parts.push(`<text x="${x.toFixed(1)}" y="${y}" class="axis" text-anchor="middle">${h}</text>`);
  }
  return parts.join('');
}

/** 24-bin hourly bar chart (one bar per hour of day). */
export function renderHourlyBars(view: HourlyView, color = '#2a6f97'): string {
  const left = 40;
  const barSpan = (W - left - 8) / 24;
  const max = Math.max(...view.counts, 1);
  const parts = [svgOpen(BAR_AREA_H + AXIS_H, 'chart-hourly')];
  view.counts.forEach((count, hour) => {
    const h = (count / max) * (BAR_AREA_H - 16);
    const x = left + hour * barSpan + 2;
    const y = BAR_AREA_H - h;
    parts.push(
      `<rect x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${(barSpan - 4).toFixed(1)}" ` +
        `height="${h.toFixed(1)}" fill="${color}" data-hour="${hour}" data-count="${count}">` +
        `<title>${hour}:00 — ${count} vehicles</title></rect>`,
    );
  });
  parts.push(`<text x="4" y="14" class="axis" data-total="${view.total}">max ${max}</text>`);
  parts.push(hourAxis(BAR_AREA_H + 16));
  parts.push('</svg>');
  return parts.join('');
}

/** 7x24 weekday-by-hour heatmap; Sat/Sun rows are visually set apart. */
export function renderHeatmap(view: HeatmapView): string {
  const left = 40;
  const cellW = (W - left - 8) / 24;
  const cellH = 26;
  const height = 7 * cellH + AXIS_H;
  const max = Math.max(...view.values.flat(), 1);
  const parts = [svgOpen(height, 'chart-heatmap')];
  view.weekdays.forEach((label, day) => {
    const weekend = label === 'Sat' || label === 'Sun';
    parts.push(
      `<text x="4" y="${(day * cellH + cellH / 2 + 4).toFixed(1)}" ` +
        `class="axis${weekend ? ' weekend' : ''}">${esc(label)}</text>`,
    );
    view.values[day].forEach((count, hour) => {
      const opacity = count === 0 ? 0 : 0.15 + 0.85 * (count / max);
      parts.push(
        `<rect x="${(left + hour * cellW).toFixed(1)}" y="${day * cellH}" ` +
          `width="${(cellW - 1).toFixed(1)}" height="${cellH - 1}" ` +
          `fill="#c1121f" fill-opacity="${opacity.toFixed(3)}" class="cell" ` +
          `data-weekday="${esc(label)}" data-hour="${hour}" data-count="${count}">` +
          `<title>${esc(label)} ${hour}:00 — ${count}</title></rect>`,
      );
    });
  });
  parts.push(hourAxis(height - 6));
  parts.push('</svg>');
  return parts.join('');
}

/** Stacked per-hour bars, one layer per vehicle type (payload order). */
export function renderVehicleStack(view: VehicleTypesView): string {
  const left = 40;
  const barSpan = (W - left - 8) / 24;
  const totals = Array.from({ length: 24 }, (_, h) =>
    view.profiles.reduce((acc, p) => acc + p.counts[h], 0),
  );
  const max = Math.max(...totals, 1);
  const parts = [svgOpen(BAR_AREA_H + AXIS_H + 20, 'chart-vehicle-stack')];
  for (let hour = 0; hour < 24; hour++) {
    let yBottom = BAR_AREA_H;
    for (const profile of view.profiles) {
      const count = profile.counts[hour];
      if (count === 0) continue;
      const h = (count / max) * (BAR_AREA_H - 16);
      yBottom -= h;
      const color = TYPE_COLORS[String(profile.code)] ?? '#888888';
      parts.push(
        `<rect x="${(left + hour * barSpan + 2).toFixed(1)}" y="${yBottom.toFixed(1)}" ` +
          `width="${(barSpan - 4).toFixed(1)}" height="${h.toFixed(1)}" fill="${color}" ` +
          `data-code="${profile.code}" data-hour="${hour}" data-count="${count}">` +
          `<title>${esc(profile.label)} ${hour}:00 — ${count}</title></rect>`,
      );
    }
  }
  let legendX = left;
  for (const profile of view.profiles) {
    const color = TYPE_COLORS[String(profile.code)] ?? '#888888';
    parts.push(
      `<rect x="${legendX}" y="${BAR_AREA_H + AXIS_H + 4}" width="10" height="10" fill="${color}"/>` +
        `<text x="${legendX + 14}" y="${BAR_AREA_H + AXIS_H + 13}" class="axis" ` +
        `data-legend-code="${profile.code}" data-total="${profile.total}">` +
        `${esc(profile.label)} (${profile.total})</text>`,
    );
    legendX += 16 + 9 * (profile.label.length + String(profile.total).length);
  }
  parts.push(hourAxis(BAR_AREA_H + 16));
  parts.push('</svg>');
  return parts.join('');
}

export interface Highlight {
  weekday: string;
  hour: number;
  minutes: number;
}

/** Average travel-time lines, one polyline per weekday, with an optional
 * best-departure highlight ring at exactly the API-reported hour. */
export function renderAvgTimeLines(view: AvgTimeView, highlight?: Highlight | null): string {
  const left = 40;
  const span = (W - left - 8) / 24;
  const present = view.minutes.flat().filter((v): v is number => v !== null);
  const max = present.length ? Math.max(...present) : 1;
  const min = present.length ? Math.min(...present) : 0;
  const pad = Math.max((max - min) * 0.15, 0.5);
  const lo = min - pad;
  const hi = max + pad;
  const yOf = (v: number) => BAR_AREA_H - ((v - lo) / (hi - lo)) * (BAR_AREA_H - 16);
  const xOf = (h: number) => left + (h + 0.5) * span;
  const colors = ['#577590', '#43aa8b', '#90be6d', '#f9c74f', '#f8961e', '#f3722c', '#f94144'];
  const parts = [svgOpen(BAR_AREA_H + AXIS_H + 20, 'chart-avg-time')];
  view.weekdays.forEach((label, day) => {
    const row = view.minutes[day];
    const segments: string[][] = [[]];
    row.forEach((value, hour) => {
      if (value === null) {
        if (segments[segments.length - 1].length) segments.push([]);
        return;
      }
      segments[segments.length - 1].push(`${xOf(hour).toFixed(1)},${yOf(value).toFixed(1)}`);
    });
    for (const points of segments) {
      if (points.length > 1)
        parts.push(
          `<polyline points="${points.join(' ')}" fill="none" stroke="${colors[day]}" ` +
            `stroke-width="2" data-weekday="${esc(label)}"/>`,
        );
    }
    row.forEach((value, hour) => {
      if (value === null) return;
      parts.push(
        `<circle cx="${xOf(hour).toFixed(1)}" cy="${yOf(value).toFixed(1)}" r="2.5" ` +
          `fill="${colors[day]}" data-weekday="${esc(label)}" data-hour="${hour}" ` +
          `data-minutes="${value}"><title>${esc(label)} ${hour}:00 — ${value} min</title></circle>`,
      );
    });
    parts.push(
      `<text x="${W - 40}" y="${14 + day * 13}" class="axis" fill="${colors[day]}">${esc(label)}</text>`,
    );
  });
  if (highlight) {
    const day = view.weekdays.indexOf(highlight.weekday);
    const row = day >= 0 ? view.minutes[day] : undefined;
    const value = row ? row[highlight.hour] : null;
    const cy = value !== null && value !== undefined ? yOf(value) : BAR_AREA_H / 2;
    parts.push(
      `<circle cx="${xOf(highlight.hour).toFixed(1)}" cy="${cy.toFixed(1)}" r="9" ` +
        `fill="none" stroke="#c1121f" stroke-width="2.5" class="best-departure" ` +
        `data-weekday="${esc(highlight.weekday)}" data-hour="${highlight.hour}" ` +
        `data-minutes="${highlight.minutes}"/>`,
    );
  }
  parts.push(hourAxis(BAR_AREA_H + 16));
  parts.push('</svg>');
  return parts.join('');
}

/** One-line recommendation text, straight from the API payload. */
export function renderRecommendation(best: BestDepartureView): string {
  return (
    `Best departure on ${best.weekday} within ${best.window[0]}:00–${best.window[1]}:00: ` +
    `<strong data-hour="${best.hour}" data-minutes="${best.minutes}">` +
    `${best.hour}:00</strong> (expected ${best.minutes} min on ${best.corridor})`
  );
}
