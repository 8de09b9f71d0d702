/** Bounded undo/redo stack of layer snapshots. */

export interface Snapshot {
  mask: Uint8Array;
  sketch: Uint8Array;
}

export const HISTORY_DEPTH = 20;

function clone(s: Snapshot): Snapshot {
  return { mask: s.mask.slice(), sketch: s.sketch.slice() };
}

export class HistoryStack {
  private past: Snapshot[] = [];
  private future: Snapshot[] = [];

  constructor(private depth: number = HISTORY_DEPTH) {}

  /** Record the state as it was before a mutation; clears the redo branch. */
  push(state: Snapshot): void {
    this.past.push(clone(state));
    if (this.past.length > this.depth) {
      this.past.shift();
    }
    this.future = [];
  }

  canUndo(): boolean {
    return this.past.length > 0;
  }

  canRedo(): boolean {
    return this.future.length > 0;
  }

  /** Returns the snapshot to restore, saving the current state for redo. */
  undo(current: Snapshot): Snapshot | null {
    const prev = this.past.pop();
    if (!prev) return null;
    this.future.push(clone(current));
    return prev;
  }

  redo(current: Snapshot): Snapshot | null {
    const next = this.future.pop();
    if (!next) return null;
    this.past.push(clone(current));
    return next;
  }
}
