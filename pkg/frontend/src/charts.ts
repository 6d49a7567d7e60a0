// Bare-canvas charts: a lap-time strip and a cumulative-delta line. No
// chart library; the console only ever draws two small series.

import { SessionView } from "./state";
import { COMPOUND_COLORS } from "./types";

export function drawLapStrip(canvas: HTMLCanvasElement, view: SessionView): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (view.laps.length === 0) return;

  const times = view.laps.map((l) => l.lapTime);
  const lo = Math.min(...times);
  const hi = Math.max(...times);
  const span = Math.max(hi - lo, 1e-9);
  const w = width / Math.max(view.nLaps, view.laps.length);

  view.laps.forEach((lap, i) => {
    const h = ((lap.lapTime - lo) / span) * (height - 18) + 4;
    ctx.fillStyle = lap.ps > 0 ? "#3da9fc" : lap.kind === "outlap" ? "#90b4ce" : "#5f6c7b";
    ctx.fillRect(i * w + 1, height - h, Math.max(w - 2, 1), h);
    if (lap.forced || lap.outOfBox) {
      ctx.fillStyle = "#ef4565";
      ctx.fillRect(i * w + 1, 0, Math.max(w - 2, 1), 4);
    }
  });
}

export function drawDelta(canvas: HTMLCanvasElement, view: SessionView): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const plan = view.deltaToPlan.filter((d): d is number => d !== null);
  const agent = view.deltaToAgent.filter((d): d is number => d !== null);
  if (plan.length < 2 && agent.length < 2) return;
  const all = [...plan, ...agent];
  const lo = Math.min(0, ...all);
  const hi = Math.max(0.1, ...all);
  const y = (v: number) => height - ((v - lo) / (hi - lo)) * (height - 8) - 4;

  ctx.strokeStyle = "#5f6c7b";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(0, y(0));
  ctx.lineTo(width, y(0));
  ctx.stroke();
  ctx.setLineDash([]);

  const line = (series: number[], color: string) => {
    if (series.length < 2) return;
    ctx.strokeStyle = color;
    ctx.beginPath();
    series.forEach((v, i) => {
      const x = (i / Math.max(view.nLaps - 1, 1)) * width;
      i === 0 ? ctx.moveTo(x, y(v)) : ctx.lineTo(x, y(v));
    });
    ctx.stroke();
  };
  line(plan, "#3da9fc");   // vs optimizer plan
  line(agent, "#2cb67d");  // vs agent twin
}

export function wearBarStyle(view: SessionView): { widthPct: number; color: string } {
  if (!view.state) return { widthPct: 0, color: "#444" };
  return {
    widthPct: Math.round(view.state.wear * 100),
    color: COMPOUND_COLORS[view.state.compound] ?? "#888",
  };
}
