/** Job polling: 1 s interval with multiplicative backoff, one job at a time. */

import type { JobRecord } from './types.js';

export interface PollOptions {
  intervalMs?: number; // first wait, default 1000
  backoff?: number; // interval multiplier per poll, default 1.5
  maxIntervalMs?: number; // default 5000
  timeoutMs?: number; // default 10 minutes
  sleep?: (ms: number) => Promise<void>; // injectable for tests
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class PollTimeout extends Error {
  constructor(public readonly jobId: string) {
    super(`job ${jobId} did not finish in time`);
  }
}

/** Poll until the job reaches done or failed; reports every record seen. */
export async function pollJob(
  getJob: () => Promise<JobRecord>,
  onUpdate?: (job: JobRecord) => void,
  options: PollOptions = {},
): Promise<JobRecord> {
  const sleep = options.sleep ?? defaultSleep;
  const backoff = options.backoff ?? 1.5;
  const maxInterval = options.maxIntervalMs ?? 5000;
  const timeout = options.timeoutMs ?? 600_000;
  let interval = options.intervalMs ?? 1000;
  let waited = 0;
  for (;;) {
    const job = await getJob();
    if (onUpdate) onUpdate(job);
    if (job.state === 'done' || job.state === 'failed') return job;
    if (waited >= timeout) throw new PollTimeout(job.id);
    await sleep(interval);
    waited += interval;
    interval = Math.min(Math.round(interval * backoff), maxInterval);
  }
}
