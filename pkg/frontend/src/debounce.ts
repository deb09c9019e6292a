/** Debouncing and latest-wins request coordination for the threshold slider. */

export const SLIDER_DEBOUNCE_MS = 250;

/**
 * Trailing-edge debounce: at most one invocation per quiet window, with the
 * most recent arguments.
 */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = undefined;
      fn(...args);
    }, waitMs);
  };
}

/**
 * Runs async tasks so only the newest one can deliver a result: starting a
 * new task aborts the previous one's signal, and a superseded task resolves
 * to undefined instead of its (now stale) value.
 */
export class LatestWins {
  private controller: AbortController | null = null;
  private seq = 0;

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T | undefined> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const id = ++this.seq;
    try {
      const value = await task(controller.signal);
      return id === this.seq ? value : undefined;
    } catch (err) {
      if (controller.signal.aborted && id !== this.seq) return undefined;
      throw err;
    }
  }
}
