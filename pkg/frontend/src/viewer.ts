// Shared pan/zoom state for the three image panels.  One viewport drives all
// panels, so zooming or dragging anywhere keeps the same region under
// comparison everywhere.

export interface Viewport {
  scale: number;
  x: number;
  y: number;
}

export const HOME: Viewport = { scale: 1, x: 0, y: 0 };

export const MIN_SCALE = 0.25;
export const MAX_SCALE = 64;

function clampScale(scale: number): number {
  return Math.min(MAX_SCALE, Math.max(MIN_SCALE, scale));
}

/** Zoom by `factor` keeping the panel-local point (cx, cy) stationary. */
export function zoomAt(vp: Viewport, factor: number, cx: number, cy: number): Viewport {
  const scale = clampScale(vp.scale * factor);
  const k = scale / vp.scale;
  return {
    scale,
    x: cx - k * (cx - vp.x),
    y: cy - k * (cy - vp.y),
  };
}

export function pan(vp: Viewport, dx: number, dy: number): Viewport {
  return { scale: vp.scale, x: vp.x + dx, y: vp.y + dy };
}

export function cssTransform(vp: Viewport): string {
  return `translate(${vp.x}px, ${vp.y}px) scale(${vp.scale})`;
}

/** Applies one viewport to every registered panel content element. */
export class SyncedPanels {
  private viewport: Viewport = HOME;

  constructor(private readonly contents: HTMLElement[]) {
    this.apply();
  }

  get(): Viewport {
    return this.viewport;
  }

  set(vp: Viewport): void {
    this.viewport = vp;
    this.apply();
  }

  reset(): void {
    this.set(HOME);
  }

  private apply(): void {
    const transform = cssTransform(this.viewport);
    for (const el of this.contents) {
      el.style.transform = transform;
      el.style.transformOrigin = "0 0";
    }
  }
}

/** Wire wheel-zoom and drag-pan on a panel; all panels share `sync`. */
export function bindPanZoom(panel: HTMLElement, sync: SyncedPanels): void {
  panel.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const rect = panel.getBoundingClientRect();
    const factor = ev.deltaY < 0 ? 1.2 : 1 / 1.2;
    sync.set(zoomAt(sync.get(), factor, ev.clientX - rect.left, ev.clientY - rect.top));
  });
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  panel.addEventListener("pointerdown", (ev) => {
    dragging = true;
    lastX = ev.clientX;
    lastY = ev.clientY;
    panel.setPointerCapture?.(ev.pointerId);
  });
  panel.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    sync.set(pan(sync.get(), ev.clientX - lastX, ev.clientY - lastY));
    lastX = ev.clientX;
    lastY = ev.clientY;
  });
  const stop = () => {
    dragging = false;
  };
  panel.addEventListener("pointerup", stop);
  panel.addEventListener("pointerleave", stop);
}
