/** DOM wiring for the flash editor: scene gallery, sliders, viewport, and
 * the compare view. All behavior lives in the headless modules; this file
 * only connects them to elements. */

import { ComponentName, SceneInfo, ServiceClient } from "./api.js";
import { ComponentCache, SharedViewport } from "./compare.js";
import { EditorController } from "./controller.js";
import { sliderLabel, ViewMode } from "./state.js";

const COMPARE_COMPONENTS: ComponentName[] = ["A", "F", "S_A", "S_F"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text) node.textContent = text;
  return node;
}

export class App {
  private readonly client: ServiceClient;
  private readonly cache: ComponentCache;
  private readonly viewport = new SharedViewport();
  private controller: EditorController | null = null;
  private currentUrl: string | null = null;

  constructor(private readonly root: HTMLElement, baseUrl = "") {
    this.client = new ServiceClient(baseUrl);
    this.cache = new ComponentCache(this.client);
  }

  async boot(): Promise<void> {
    this.root.innerHTML = "";
    const banner = el("div", "banner hidden");
    const gallery = el("div", "gallery");
    const editor = el("div", "editor hidden");
    this.root.append(banner, gallery, editor);

    let scenes: SceneInfo[];
    try {
      scenes = await this.client.listScenes();
    } catch (err) {
      banner.textContent = `Cannot reach the relighting service: ${String(err)}`;
      banner.classList.remove("hidden");
      const retry = el("button", "", "Retry");
      retry.onclick = () => void this.boot();
      banner.append(" ", retry);
      return;
    }

    for (const scene of scenes) {
      const card = el("div", "card");
      const img = el("img", "thumb");
      img.src = this.client.componentUrl(scene.id, "P");
      img.alt = scene.id;
      const label = el("div", "card-label", `${scene.id} · ${Math.round(scene.kelvin)} K`);
      card.append(img, label);
      if (scene.has_decomposition) {
        card.onclick = () => this.openScene(scene, editor, gallery);
      } else {
        card.classList.add("disabled");
        card.title = "No decomposition stored for this scene";
      }
      gallery.append(card);
    }
  }

  private openScene(scene: SceneInfo, editor: HTMLElement, gallery: HTMLElement): void {
    gallery.classList.add("hidden");
    editor.classList.remove("hidden");
    editor.innerHTML = "";
    this.controller?.dispose();

    const viewImg = el("img", "viewport-img");
    viewImg.alt = "relit photograph";
    const errorBox = el("div", "error hidden");

    this.controller = new EditorController(
      this.client,
      {
        display: (blob) => {
          const url = URL.createObjectURL(blob);
          if (this.currentUrl) URL.revokeObjectURL(this.currentUrl);
          this.currentUrl = url;
          viewImg.src = url;
          errorBox.classList.add("hidden");
        },
        error: (message) => {
          errorBox.textContent = message;
          errorBox.classList.remove("hidden");
        },
      },
      scene.id,
      scene.kelvin,
    );

    const controls = el("div", "controls");
    const sliders: Array<["kappa" | "alpha" | "kelvin", number, number, number]> = [
      ["kappa", 0, 2, 0.01],
      ["alpha", 0, 2, 0.01],
      ["kelvin", 2000, 10000, 50],
    ];
    const labelNodes = new Map<string, HTMLElement>();
    for (const [field, min, max, step] of sliders) {
      const row = el("div", "slider-row");
      const name = el("span", "slider-name", field === "kelvin" ? "temperature" : field);
      const input = el("input");
      input.type = "range";
      input.min = String(min);
      input.max = String(max);
      input.step = String(step);
      input.value = String(this.controller.state[field]);
      const value = el("span", "slider-value");
      labelNodes.set(field, value);
      input.oninput = () => {
        this.controller!.onSlider(field, Number(input.value));
        this.updateLabels(labelNodes);
      };
      row.append(name, input, value);
      controls.append(row);
    }

    const reset = el("button", "", "Reset");
    reset.onclick = () => {
      this.controller!.reset();
      this.updateLabels(labelNodes);
      editor.querySelectorAll<HTMLInputElement>("input[type=range]").forEach((inp, i) => {
        const field = sliders[i][0];
        inp.value = String(this.controller!.state[field]);
      });
    };
    const back = el("button", "", "Back to gallery");
    back.onclick = () => {
      editor.classList.add("hidden");
      gallery.classList.remove("hidden");
    };

    const modes: ViewMode[] = ["result", "ambient", "flash", "shadings"];
    const viewBar = el("div", "view-bar");
    const compare = el("div", "compare hidden");
    for (const mode of modes) {
      const btn = el("button", "", mode);
      btn.onclick = () => void this.showMode(mode, scene, viewImg, compare);
      viewBar.append(btn);
    }

    controls.append(reset, back);
    const viewWrap = el("div", "viewport");
    viewWrap.append(viewImg, compare);
    editor.append(errorBox, controls, viewBar, viewWrap);
    this.updateLabels(labelNodes);
    this.attachPanZoom(viewWrap);

    void this.controller.refresh(); // initial render at kappa=1/alpha=1
  }

  private updateLabels(labels: Map<string, HTMLElement>): void {
    for (const field of ["kappa", "alpha", "kelvin"] as const) {
      const node = labels.get(field);
      if (node) node.textContent = sliderLabel(field, this.controller!.state);
    }
  }

  private async showMode(
    mode: ViewMode,
    scene: SceneInfo,
    viewImg: HTMLImageElement,
    compare: HTMLElement,
  ): Promise<void> {
    if (mode === "result") {
      viewImg.classList.remove("hidden");
      compare.classList.add("hidden");
      return;
    }
    viewImg.classList.add("hidden");
    compare.classList.remove("hidden");
    compare.innerHTML = "";
    const names: ComponentName[] =
      mode === "ambient" ? ["P", "A"] : mode === "flash" ? ["P", "F"] : COMPARE_COMPONENTS;
    for (const name of names) {
      const pane = el("figure", "pane");
      const img = el("img", "pane-img");
      const blob = await this.cache.get(scene.id, name); // cached across toggles
      img.src = URL.createObjectURL(blob);
      this.viewport.subscribe((vp) => {
        img.style.transform = `translate(${vp.x}px, ${vp.y}px) scale(${vp.scale})`;
      });
      pane.append(img, el("figcaption", "", name));
      compare.append(pane);
    }
  }

  private attachPanZoom(zone: HTMLElement): void {
    zone.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const rect = zone.getBoundingClientRect();
      this.viewport.zoom(ev.deltaY < 0 ? 1.2 : 1 / 1.2, ev.clientX - rect.left, ev.clientY - rect.top);
    });
    let dragging = false;
    let last = { x: 0, y: 0 };
    zone.addEventListener("pointerdown", (ev) => {
      dragging = true;
      last = { x: ev.clientX, y: ev.clientY };
    });
    zone.addEventListener("pointermove", (ev) => {
      if (!dragging) return;
      this.viewport.pan(ev.clientX - last.x, ev.clientY - last.y);
      last = { x: ev.clientX, y: ev.clientY };
    });
    window.addEventListener("pointerup", () => {
      dragging = false;
    });
  }
}
