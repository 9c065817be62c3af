/**
 * Timeline model: one lane per session, anchored on a shared ordinal axis.
 *
 * A derived session (a replay) starts at its parent_offset, so its lane is
 * shifted right until its first call lines up under the originating call of
 * the parent lane. Moving the cursor keeps every lane in sync: each lane
 * reports the call under the cursor, or null when the cursor falls outside
 * the lane's extent.
 */

import type { Call, Session } from "./api.js";

export interface Lane {
  session: Session;
  calls: Call[];
  /** Absolute ordinal of the lane's first call on the shared axis. */
  anchor: number;
}

export interface CursorHit {
  session: number;
  call: Call | null;
}

export class TimelineModel {
  private lanes = new Map<number, Lane>();
  cursor = 0;

  addLane(session: Session, calls: Call[]): Lane {
    const sorted = [...calls].sort((x, y) => x.ordinal - y.ordinal);
    const lane: Lane = {
      session,
      calls: sorted,
      anchor: this.anchorFor(session, sorted),
    };
    this.lanes.set(session.id, lane);
    return lane;
  }

  private anchorFor(session: Session, calls: Call[]): number {
    const own = calls.length > 0 ? calls[0]!.ordinal : 0;
    if (session.parent_session === null || session.parent_offset === null) {
      return own;
    }
    const parent = this.lanes.get(session.parent_session);
    // Anchor relative to the parent lane when it is loaded; otherwise the
    // stored parent_offset already is an absolute ordinal on the original
    // timeline.
    const parentBase = parent ? parent.anchor : 0;
    return parentBase + session.parent_offset;
  }

  removeLane(sessionId: number): void {
    this.lanes.delete(sessionId);
  }

  laneIds(): number[] {
    return [...this.lanes.keys()];
  }

  lane(sessionId: number): Lane | undefined {
    return this.lanes.get(sessionId);
  }

  /** Rightmost axis position occupied by any lane. */
  extent(): number {
    let max = 0;
    for (const lane of this.lanes.values()) {
      if (lane.calls.length > 0) {
        max = Math.max(max, lane.anchor + lane.calls.length - 1);
      }
    }
    return max;
  }

  setCursor(position: number): CursorHit[] {
    this.cursor = Math.max(0, Math.min(position, this.extent()));
    return this.hits();
  }

  step(delta: number): CursorHit[] {
    return this.setCursor(this.cursor + delta);
  }

  /** The call each lane has under the cursor (null outside the lane). */
  hits(): CursorHit[] {
    const out: CursorHit[] = [];
    for (const lane of this.lanes.values()) {
      const index = this.cursor - lane.anchor;
      const call =
        index >= 0 && index < lane.calls.length ? lane.calls[index]! : null;
      out.push({ session: lane.session.id, call });
    }
    return out;
  }

  /** Jump the cursor so that the given call of the given lane is selected. */
  focusCall(sessionId: number, ordinal: number): CursorHit[] {
    const lane = this.lanes.get(sessionId);
    if (!lane) return this.hits();
    const index = lane.calls.findIndex((c) => c.ordinal === ordinal);
    if (index < 0) return this.hits();
    return this.setCursor(lane.anchor + index);
  }
}
