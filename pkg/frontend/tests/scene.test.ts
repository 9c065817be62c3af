import { describe, expect, it } from "vitest";

import {
  asScene,
  DEFAULT_THEME,
  OVERLAY_ALPHA,
  SceneRenderer,
  type Ctx2D,
} from "../src/scene.js";

interface Op {
  op: string;
  alpha: number;
  style: string;
  args: unknown[];
}

function recordingCtx(): { ctx: Ctx2D; ops: Op[] } {
  const ops: Op[] = [];
  const ctx: Ctx2D = {
    globalAlpha: 1,
    fillStyle: "",
    fillRect(...args) {
      ops.push({ op: "rect", alpha: ctx.globalAlpha, style: ctx.fillStyle, args });
    },
    fillText(...args) {
      ops.push({ op: "text", alpha: ctx.globalAlpha, style: ctx.fillStyle, args });
    },
    clearRect(...args) {
      ops.push({ op: "clear", alpha: ctx.globalAlpha, style: ctx.fillStyle, args });
    },
  };
  return { ctx, ops };
}

const SCENE = [
  { kind: "bird", x: 30, y: 60 },
  { kind: "pipe", x: 100, gap_y: 50 },
  { kind: "score", value: 3 },
];

describe("SceneRenderer", () => {
  it("draws bird, pipe halves and score opaquely", () => {
    const { ctx, ops } = recordingCtx();
    new SceneRenderer(ctx, 1).render(SCENE);
    const rects = ops.filter((o) => o.op === "rect");
    expect(rects).toHaveLength(3); // bird + two pipe segments
    expect(rects.every((o) => o.alpha === 1)).toBe(true);
    expect(ops.filter((o) => o.op === "text")).toHaveLength(1);
    expect(rects[0]!.style).toBe(DEFAULT_THEME.bird);
  });

  it("renders the overlay scene at half opacity in the overlay tint", () => {
    const { ctx, ops } = recordingCtx();
    new SceneRenderer(ctx, 1).renderOverlay(SCENE, SCENE);
    const rects = ops.filter((o) => o.op === "rect");
    const overlayRects = rects.filter((o) => o.alpha === OVERLAY_ALPHA);
    expect(overlayRects).toHaveLength(3);
    expect(overlayRects.every((o) => o.style === DEFAULT_THEME.overlay)).toBe(true);
    // base pass stays opaque
    expect(rects.filter((o) => o.alpha === 1)).toHaveLength(3);
  });

  it("clears before every render", () => {
    const { ctx, ops } = recordingCtx();
    const renderer = new SceneRenderer(ctx, 2);
    renderer.render(SCENE);
    renderer.render(SCENE);
    expect(ops.filter((o) => o.op === "clear")).toHaveLength(2);
  });
});

describe("asScene", () => {
  it("accepts display lists and rejects other payloads", () => {
    expect(asScene(SCENE)).toEqual(SCENE);
    expect(asScene({ kind: "bird" })).toBeNull();
    expect(asScene([1, 2, 3])).toBeNull();
    expect(asScene(null)).toBeNull();
  });
});
