/** Editor state: slider values clamped to their ranges, plus the view mode.
 * All relighting requests derive from one EditorState snapshot. */

import type { RelightParams } from "./api.js";

export const KAPPA_RANGE: readonly [number, number] = [0, 2];
export const ALPHA_RANGE: readonly [number, number] = [0, 2];
export const KELVIN_RANGE: readonly [number, number] = [2000, 10000];

export type ViewMode = "result" | "ambient" | "flash" | "shadings";

export interface EditorState {
  sceneId: string;
  sceneKelvin: number; // the scene's decomposed temperature (reset target)
  kappa: number;
  alpha: number;
  kelvin: number;
  view: ViewMode;
}

function clamp(v: number, [lo, hi]: readonly [number, number]): number {
  return Math.min(hi, Math.max(lo, v));
}

export function initialState(sceneId: string, sceneKelvin: number): EditorState {
  return {
    sceneId,
    sceneKelvin,
    kappa: 1,
    alpha: 1,
    kelvin: clamp(sceneKelvin, KELVIN_RANGE),
    view: "result",
  };
}

export function withSlider(
  state: EditorState,
  field: "kappa" | "alpha" | "kelvin",
  value: number,
): EditorState {
  const range =
    field === "kappa" ? KAPPA_RANGE : field === "alpha" ? ALPHA_RANGE : KELVIN_RANGE;
  return { ...state, [field]: clamp(value, range) };
}

export function resetSliders(state: EditorState): EditorState {
  return {
    ...state,
    kappa: 1,
    alpha: 1,
    kelvin: clamp(state.sceneKelvin, KELVIN_RANGE),
  };
}

export function relightParams(state: EditorState): RelightParams {
  return {
    scene_id: state.sceneId,
    kappa: state.kappa,
    alpha: state.alpha,
    kelvin: state.kelvin,
  };
}

export function sliderLabel(field: "kappa" | "alpha" | "kelvin", state: EditorState): string {
  if (field === "kelvin") return `${Math.round(state.kelvin)} K`;
  return (field === "kappa" ? state.kappa : state.alpha).toFixed(2);
}
