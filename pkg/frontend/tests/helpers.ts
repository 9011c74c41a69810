/** Fetch stub backed by canned route handlers, plus fixture loading. */
import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import type { FetchLike } from '../src/api.js';

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, 'fixtures', `${name}.json`), 'utf-8')) as T;
}

export interface StubCall {
  url: string;
  method: string;
  body?: unknown;
}

export type RouteHandler = (call: StubCall) => { status?: number; body: unknown };

/** Routes match on "METHOD pathname" prefixes; later registrations win. */
export function stubFetch(routes: Record<string, RouteHandler | unknown>): {
  fetchFn: FetchLike;
  calls: StubCall[];
} {
  const calls: StubCall[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    const call = { url, method, body };
    calls.push(call);
    const pathname = url.split('?')[0];
    const key = `${method} ${pathname}`;
    const handler = routes[key];
    if (handler === undefined) {
      return jsonResponse(404, { detail: `no stub for ${key}` });
    }
    let result: { status?: number; body: unknown };
    if (typeof handler === 'function') {
      result = (handler as RouteHandler)(call);
    } else if (handler && typeof handler === 'object' && 'body' in (handler as object)) {
      result = handler as { status?: number; body: unknown };
    } else {
      result = { body: handler };
    }
    return jsonResponse(result.status ?? 200, result.body);
  };
  return { fetchFn, calls };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}
