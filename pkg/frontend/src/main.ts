// Console wiring: one session, one WebSocket, human-paced laps.

import { ServiceClient } from "./client";
import { drawDelta, drawLapStrip, wearBarStyle } from "./charts";
import { defaultPanel, describePit, fromRecommendation, stepBody } from "./panel";
import { emptyView, finalRaceTime, gaugeText, reduce, setAgentReference, setReferencePlan } from "./state";
import { SessionView } from "./state";

const client = new ServiceClient("");
let view: SessionView = emptyView();
let panel = defaultPanel();
let stopStream: (() => void) | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function toast(text: string): void {
  const box = el<HTMLDivElement>("toasts");
  const div = document.createElement("div");
  div.className = "toast";
  div.textContent = text;
  box.appendChild(div);
  setTimeout(() => div.remove(), 5000);
}

function render(): void {
  el<HTMLDivElement>("gauges").innerText = gaugeText(view).join("\n");
  const wear = wearBarStyle(view);
  const bar = el<HTMLDivElement>("wearbar");
  bar.style.width = `${wear.widthPct}%`;
  bar.style.background = wear.color;

  drawLapStrip(el<HTMLCanvasElement>("lapstrip"), view);
  drawDelta(el<HTMLCanvasElement>("deltachart"), view);

  el<HTMLDivElement>("badges").innerText = view.badges
    .slice(-6)
    .map((b) => `lap ${b.lap}: ${b.text}`)
    .join("\n");

  const finished = view.status === "finished";
  for (const id of ["fuel", "battery", "pit", "useagent", "step", "inject", "whatif", "compare"]) {
    (el<HTMLInputElement>(id) as HTMLInputElement | HTMLButtonElement).toggleAttribute(
      "disabled",
      finished,
    );
  }
  const final = finalRaceTime(view);
  el<HTMLDivElement>("result").innerText = final === null ? "" : `race time ${final.toFixed(3)} s`;
}

function onEvent(raw: unknown): void {
  try {
    view = reduce(view, raw);
  } catch (err) {
    toast(`bad event: ${err}`);
    return;
  }
  render();
}

async function connect(): Promise<void> {
  const summary = await client.createSession({}, "manual");
  view = reduce(emptyView(), { type: "hello", session: summary, history: [] });
  stopStream?.();
  stopStream = client.stream(summary.id, onEvent, () => toast("stream dropped, reconnecting"));
  render();
}

async function submitDecision(): Promise<void> {
  panel = {
    fuel: Number(el<HTMLInputElement>("fuel").value),
    battery: Number(el<HTMLInputElement>("battery").value),
    pit: Number(el<HTMLSelectElement>("pit").value),
    useAgent: el<HTMLInputElement>("useagent").checked,
  };
  try {
    await client.step(view.sessionId, stepBody(panel));
    // state arrives over the stream; no optimistic update
  } catch (err) {
    toast(String(err));
  }
}

async function whatIf(): Promise<void> {
  try {
    const jobId = await client.submitOptimize({
      state: viewStateForSolver(),
      start_lap: view.lap,
      gap: 0.1,
    });
    toast(`optimizing from lap ${view.lap}...`);
    const plan = await client.pollOptimize(jobId);
    view = setReferencePlan(view, plan);
    el<HTMLDivElement>("plan").innerText = `plan ${plan.strategy}: ${plan.t_race.toFixed(2)} s to go`;
    render();
  } catch (err) {
    toast(String(err));
  }
}

function viewStateForSolver(): Record<string, unknown> | null {
  return view.state ? { ...view.state } : null;
}

// compare(): run an agent twin of this scenario to completion on the
// server and overlay its cumulative race-time series.
async function compareWithAgent(): Promise<void> {
  try {
    const twin = await client.createSession({}, "agent-assisted");
    const series: { lap: number; raceTime: number }[] = [];
    for (;;) {
      const event = (await client.step(twin.id, { agent: true })) as {
        lap: number;
        done: boolean;
        lap_record: { t_race: number };
      };
      series.push({ lap: event.lap, raceTime: event.lap_record.t_race });
      if (event.done) break;
    }
    view = setAgentReference(view, series);
    render();
    toast(`agent twin finished: ${series[series.length - 1].raceTime.toFixed(2)} s`);
  } catch (err) {
    toast(String(err));
  }
}

async function showRecommendation(): Promise<void> {
  try {
    const rec = await client.recommendation(view.sessionId);
    panel = fromRecommendation(rec);
    el<HTMLInputElement>("fuel").value = String(panel.fuel.toFixed(3));
    el<HTMLInputElement>("battery").value = String(panel.battery.toFixed(3));
    el<HTMLSelectElement>("pit").value = String(panel.pit);
    el<HTMLDivElement>("recco").innerText = rec.top_pit_actions
      .map((t) => `${describePit(t.ps)} ${(100 * t.p).toFixed(1)}%`)
      .join("  |  ");
  } catch (err) {
    toast(String(err));
  }
}

window.addEventListener("load", () => {
  el<HTMLButtonElement>("connect").addEventListener("click", () => void connect());
  el<HTMLButtonElement>("step").addEventListener("click", () => void submitDecision());
  el<HTMLButtonElement>("whatif").addEventListener("click", () => void whatIf());
  el<HTMLButtonElement>("compare").addEventListener("click", () => void compareWithAgent());
  el<HTMLButtonElement>("recommend").addEventListener("click", () => void showRecommendation());
  el<HTMLButtonElement>("inject").addEventListener("click", () => {
    const delta = Number(el<HTMLInputElement>("twdelta").value);
    client.inject(view.sessionId, delta).catch((err) => toast(String(err)));
  });
});
