/** Poke submission: builds requests from gestures, enforces server limits,
 * keeps one request in flight (latest gesture wins while busy), records
 * successes in the session history, and hands frames to the player.
 */

import type { Transport } from "./api.js";
import { ApiRequestError } from "./api.js";
import { displacementForMode, gestureToImagePoke } from "./coords.js";
import { SessionHistory } from "./history.js";
import type { Player } from "./playback.js";
import type {
  PokeGesture,
  PokeMode,
  PokeRequest,
  PokeResponse,
  ServerLimits,
} from "./types.js";

export interface SubmitOptions {
  gesture: PokeGesture;
  mode: PokeMode;
  numFrames: number;
  impulseMagnitude: number;
  zoom: number;
  imageId: string;
}

export interface ControllerEvents {
  onResponse?: (response: PokeResponse, historyIndex: number) => void;
  onError?: (error: ApiRequestError | Error, options: SubmitOptions) => void;
}

export class PokeController {
  readonly history = new SessionHistory();
  private inFlight = false;
  private pending: SubmitOptions | null = null;
  /** Last gesture is preserved across failures for resubmission. */
  lastGesture: PokeGesture | null = null;

  constructor(
    private readonly transport: Transport,
    private readonly player: Player,
    private readonly limits: ServerLimits,
    private readonly events: ControllerEvents = {},
  ) {}

  buildRequest(options: SubmitOptions): PokeRequest {
    const poke = gestureToImagePoke(options.gesture, options.zoom);
    const displacement = displacementForMode(
      poke.displacement,
      options.mode,
      options.impulseMagnitude,
      this.limits.maxDisplacement,
    );
    return {
      image_id: options.imageId,
      location: poke.location,
      displacement,
      mode: options.mode,
      num_frames: Math.min(options.numFrames, this.limits.maxFrames),
    };
  }

  /** Submit a gesture; while a request is in flight the latest call waits. */
  async submit(options: SubmitOptions): Promise<void> {
    this.lastGesture = options.gesture;
    if (this.inFlight) {
      this.pending = options; // latest wins
      return;
    }
    this.inFlight = true;
    try {
      const request = this.buildRequest(options);
      const response = await this.transport.poke(request);
      const index = this.history.add({
        gesture: options.gesture,
        mode: options.mode,
        numFrames: request.num_frames,
        response,
      });
      this.player.load(response.frames.length, response.fps);
      this.events.onResponse?.(response, index);
    } catch (error) {
      this.events.onError?.(error as Error, options);
    } finally {
      this.inFlight = false;
      if (this.pending) {
        const next = this.pending;
        this.pending = null;
        void this.submit(next);
      }
    }
  }

  /** Replay a history entry: no network, just playback of stored frames. */
  replay(index: number): PokeResponse {
    const entry = this.history.replay(index);
    this.player.load(entry.response.frames.length, entry.response.fps);
    return entry.response;
  }
}
