/**
 * Scene renderer for the declarative display lists stored by the
 * capture_scene hook: `[{kind: "bird"|"pipe"|"score", ...}, ...]`.
 *
 * Drawing goes through a minimal 2D-context interface so the renderer can
 * target a real canvas or a recording fake in tests. Overlay mode draws a
 * second scene at half opacity on top of the first, which is how diverged
 * branches are compared visually.
 */

export interface SceneItem {
  kind: string;
  x?: number;
  y?: number;
  gap_y?: number;
  value?: number;
}

export interface Ctx2D {
  globalAlpha: number;
  fillStyle: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

export interface SceneTheme {
  bird: string;
  pipe: string;
  text: string;
  overlay: string;
}

export const DEFAULT_THEME: SceneTheme = {
  bird: "#f2c94c",
  pipe: "#27ae60",
  text: "#f0f0f0",
  overlay: "#eb5757",
};

export const WORLD = { width: 160, height: 130 } as const;
export const OVERLAY_ALPHA = 0.5;

const BIRD_SIZE = 8;
const PIPE_WIDTH = 10;
const PIPE_GAP = 30;

export class SceneRenderer {
  constructor(
    private ctx: Ctx2D,
    private scale = 3,
    private theme: SceneTheme = DEFAULT_THEME,
  ) {}

  clear(): void {
    this.ctx.clearRect(0, 0, WORLD.width * this.scale, WORLD.height * this.scale);
  }

  /** Draw one scene fully opaque. */
  render(scene: SceneItem[]): void {
    this.clear();
    this.drawItems(scene, 1, false);
  }

  /**
   * Draw a base scene opaque, then a comparison scene at half opacity in
   * the overlay tint, so differences show through.
   */
  renderOverlay(base: SceneItem[], overlay: SceneItem[]): void {
    this.clear();
    this.drawItems(base, 1, false);
    this.drawItems(overlay, OVERLAY_ALPHA, true);
  }

  private drawItems(scene: SceneItem[], alpha: number, tinted: boolean): void {
    const ctx = this.ctx;
    const s = this.scale;
    ctx.globalAlpha = alpha;
    for (const item of scene) {
      if (item.kind === "bird") {
        ctx.fillStyle = tinted ? this.theme.overlay : this.theme.bird;
        ctx.fillRect(
          (item.x ?? 0) * s,
          (item.y ?? 0) * s,
          BIRD_SIZE * s,
          BIRD_SIZE * s,
        );
      } else if (item.kind === "pipe") {
        ctx.fillStyle = tinted ? this.theme.overlay : this.theme.pipe;
        const x = (item.x ?? 0) * s;
        const gapTop = (item.gap_y ?? 0) - PIPE_GAP / 2;
        const gapBottom = (item.gap_y ?? 0) + PIPE_GAP / 2;
        ctx.fillRect(x, 0, PIPE_WIDTH * s, Math.max(0, gapTop) * s);
        ctx.fillRect(
          x,
          gapBottom * s,
          PIPE_WIDTH * s,
          Math.max(0, WORLD.height - gapBottom) * s,
        );
      } else if (item.kind === "score") {
        ctx.fillStyle = this.theme.text;
        ctx.fillText(`score ${item.value ?? 0}`, 4 * s, 10 * s);
      }
    }
    ctx.globalAlpha = 1;
  }
}

/** Narrow an unknown hook payload to a scene display list, if it is one. */
export function asScene(value: unknown): SceneItem[] | null {
  if (!Array.isArray(value)) return null;
  if (!value.every((v) => typeof v === "object" && v !== null && "kind" in v)) {
    return null;
  }
  return value as SceneItem[];
}
