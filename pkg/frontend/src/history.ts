/** Session history: every successful poke is replayable without the network. */

import type { PokeGesture, PokeMode, PokeResponse } from "./types.js";

export interface HistoryEntry {
  gesture: PokeGesture;
  mode: PokeMode;
  numFrames: number;
  response: PokeResponse;
}

export class SessionHistory {
  private readonly entries: HistoryEntry[] = [];

  get length(): number {
    return this.entries.length;
  }

  add(entry: HistoryEntry): number {
    this.entries.push(entry);
    return this.entries.length - 1;
  }

  /** Stored response for replay; never touches the transport. */
  replay(index: number): HistoryEntry {
    const entry = this.entries[index];
    if (!entry) {
      throw new Error(`no history entry ${index}`);
    }
    return entry;
  }

  list(): readonly HistoryEntry[] {
    return this.entries;
  }
}
