/** Frame playback: loops the response three times at its fps, then pauses.
 *
 * The clock is injectable so tests can drive playback deterministically.
 */

export type FrameCallback = (frameIndex: number, cycle: number) => void;

export interface Scheduler {
  schedule(callback: () => void, delayMs: number): number;
  cancel(handle: number): void;
}

export const realScheduler: Scheduler = {
  schedule: (callback, delayMs) => setTimeout(callback, delayMs) as unknown as number,
  cancel: (handle) => clearTimeout(handle),
};

export const LOOP_CYCLES = 3;

export class Player {
  private frameCount = 0;
  private fps = 10;
  private index = -1;
  private cycle = 0;
  private handle: number | null = null;
  private consumed = new Set<number>();

  constructor(
    private readonly onFrame: FrameCallback,
    private readonly scheduler: Scheduler = realScheduler,
    private readonly onPause: () => void = () => {},
  ) {}

  get playing(): boolean {
    return this.handle !== null;
  }

  /** Indices shown at least once during the current load. */
  get framesConsumed(): ReadonlySet<number> {
    return this.consumed;
  }

  load(frameCount: number, fps: number): void {
    this.stop();
    this.frameCount = frameCount;
    this.fps = fps;
    this.index = -1;
    this.cycle = 0;
    this.consumed = new Set();
    this.advance();
  }

  stop(): void {
    if (this.handle !== null) {
      this.scheduler.cancel(this.handle);
      this.handle = null;
    }
  }

  private advance = (): void => {
    this.handle = null;
    if (this.frameCount === 0) {
      return;
    }
    this.index += 1;
    if (this.index >= this.frameCount) {
      this.index = 0;
      this.cycle += 1;
      if (this.cycle >= LOOP_CYCLES) {
        this.onPause();
        return;
      }
    }
    this.consumed.add(this.index);
    this.onFrame(this.index, this.cycle);
    this.handle = this.scheduler.schedule(this.advance, 1000 / this.fps);
  };
}
