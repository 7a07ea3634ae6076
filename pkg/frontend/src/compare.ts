/** Compare-view support: a per-scene component cache (each component is
 * fetched at most once) and a shared pan/zoom transform for side-by-side
 * panes. */

import { ComponentName, ServiceClient } from "./api.js";

export class ComponentCache {
  private cache = new Map<string, Promise<Blob>>();
  fetches = 0;

  constructor(private readonly client: ServiceClient) {}

  get(sceneId: string, name: ComponentName): Promise<Blob> {
    const key = `${sceneId}/${name}`;
    let hit = this.cache.get(key);
    if (!hit) {
      this.fetches++;
      hit = this.client.fetchComponent(sceneId, name);
      this.cache.set(key, hit);
    }
    return hit;
  }

  clearScene(sceneId: string): void {
    for (const key of [...this.cache.keys()]) {
      if (key.startsWith(`${sceneId}/`)) this.cache.delete(key);
    }
  }
}

export interface Viewport {
  scale: number;
  x: number;
  y: number;
}

export const MIN_SCALE = 1;
export const MAX_SCALE = 16;

/** One transform shared by every pane, so pan/zoom stays synchronized. */
export class SharedViewport {
  private vp: Viewport = { scale: 1, x: 0, y: 0 };
  private listeners: Array<(vp: Viewport) => void> = [];

  get current(): Viewport {
    return { ...this.vp };
  }

  subscribe(fn: (vp: Viewport) => void): void {
    this.listeners.push(fn);
    fn(this.current);
  }

  zoom(factor: number, cx: number, cy: number): void {
    const next = Math.min(MAX_SCALE, Math.max(MIN_SCALE, this.vp.scale * factor));
    const applied = next / this.vp.scale;
    // keep the zoom centered on (cx, cy)
    this.vp = {
      scale: next,
      x: cx - (cx - this.vp.x) * applied,
      y: cy - (cy - this.vp.y) * applied,
    };
    if (this.vp.scale === 1) this.vp = { scale: 1, x: 0, y: 0 };
    this.emit();
  }

  pan(dx: number, dy: number): void {
    this.vp = { ...this.vp, x: this.vp.x + dx, y: this.vp.y + dy };
    this.emit();
  }

  reset(): void {
    this.vp = { scale: 1, x: 0, y: 0 };
    this.emit();
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.current);
  }
}
