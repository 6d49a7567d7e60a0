// Decision panel: slider/selector state and its validated wire form.

import { Recommendation, WireAction } from "./types";

export interface PanelState {
  fuel: number;        // slider [0, 1]
  battery: number;     // slider [-1, 1]
  pit: number;         // 0 stay, 1..3 mount that compound
  useAgent: boolean;
}

export function defaultPanel(): PanelState {
  return { fuel: 0.5, battery: 0.0, pit: 0, useAgent: false };
}

// Validates against the fixed action space before anything goes on the
// wire; throws on out-of-range values instead of silently clamping, so a
// broken slider cannot smuggle garbage into a race.
export function toWire(panel: PanelState): WireAction {
  return WireAction.parse({ f: panel.fuel, b: panel.battery, ps: panel.pit });
}

export function stepBody(panel: PanelState): Record<string, unknown> {
  if (panel.useAgent) {
    return { agent: true };
  }
  return { ...toWire(panel), agent: false };
}

export function fromRecommendation(rec: Recommendation): PanelState {
  return { fuel: rec.action.f, battery: rec.action.b, pit: rec.action.ps, useAgent: false };
}

export function describePit(pit: number): string {
  return ["stay out", "pit: soft", "pit: medium", "pit: hard"][pit] ?? "?";
}
