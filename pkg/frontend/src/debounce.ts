/**
 * Latest-wins rate limiter for the style sliders: at most `maxPerSecond`
 * dispatches, always sending the newest pending value, so a monotone drag
 * emits a monotone subsequence. Responses arriving for superseded requests
 * are dropped by the caller via the returned generation token.
 */

export class SliderScheduler<T> {
  private pending: T | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private lastSent = 0;
  private generation = 0;
  private readonly intervalMs: number;

  constructor(
    private readonly send: (value: T, generation: number) => void,
    maxPerSecond = 4,
  ) {
    this.intervalMs = 1000 / maxPerSecond;
  }

  /** Queue a value; it is sent immediately if the rate budget allows,
   *  otherwise it replaces whatever was waiting. */
  update(value: T): void {
    this.pending = value;
    const now = Date.now();
    const wait = this.lastSent + this.intervalMs - now;
    if (wait <= 0) {
      this.flush();
    } else if (this.timer === null) {
      this.timer = setTimeout(() => this.flush(), wait);
    }
  }

  /** True when a response token is still the newest dispatch. */
  isCurrent(generation: number): boolean {
    return generation === this.generation;
  }

  private flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.pending === null) return;
    const value = this.pending;
    this.pending = null;
    this.lastSent = Date.now();
    this.generation++;
    this.send(value, this.generation);
  }
}
