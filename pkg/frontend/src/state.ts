// Session view model: a pure reducer over server events. Every number shown
// in the console comes from here, and everything here comes off the wire.

import {
  CarState,
  LapEvent,
  OptimizeResult,
  SessionSummary,
  StreamEvent,
} from "./types";

export interface LapRow {
  lap: number;
  lapTime: number;
  raceTime: number;
  kind: string;
  ps: number;
  wear: number;
  battery: number;
  fuel: number;
  forced: boolean;
  outOfBox: boolean;
}

export interface Badge {
  lap: number;
  text: string;
}

export interface SessionView {
  sessionId: string;
  status: "connecting" | "running" | "finished";
  lap: number;
  nLaps: number;
  state: CarState | null;
  laps: LapRow[];
  badges: Badge[];
  disturbances: { lap: number; twDelta: number }[];
  // cumulative race-time difference against the reference plan, by lap
  referencePlan: OptimizeResult | null;
  deltaToPlan: (number | null)[];
  // agent twin-session series (server-computed, used by compare())
  agentReference: { lap: number; raceTime: number }[] | null;
  deltaToAgent: (number | null)[];
}

export function emptyView(): SessionView {
  return {
    sessionId: "",
    status: "connecting",
    lap: 0,
    nLaps: 0,
    state: null,
    laps: [],
    badges: [],
    disturbances: [],
    referencePlan: null,
    deltaToPlan: [],
    agentReference: null,
    deltaToAgent: [],
  };
}

function applySummary(view: SessionView, summary: SessionSummary): SessionView {
  return {
    ...view,
    sessionId: summary.id,
    status: summary.status,
    lap: summary.lap,
    nLaps: summary.n_laps,
    state: summary.state,
  };
}

function applyLap(view: SessionView, event: LapEvent): SessionView {
  const rec = event.lap_record;
  const row: LapRow = {
    lap: event.lap,
    lapTime: rec.t_lap,
    raceTime: rec.t_race,
    kind: event.kind,
    ps: event.applied.ps,
    wear: event.state.wear,
    battery: event.state.battery,
    fuel: event.state.fuel,
    forced: event.flags.forced_compound,
    outOfBox: event.flags.out_of_box,
  };
  const badges = [...view.badges];
  if (event.flags.forced_compound) {
    badges.push({ lap: event.lap, text: "compound change forced" });
  }
  if (event.flags.battery_case !== 0) {
    badges.push({ lap: event.lap, text: `battery overwrite (case ${event.flags.battery_case})` });
  }
  if (event.flags.fuel_case !== 0) {
    badges.push({ lap: event.lap, text: `fuel overwrite (case ${event.flags.fuel_case})` });
  }
  const next: SessionView = {
    ...view,
    status: event.done ? "finished" : "running",
    lap: event.lap + 1,
    state: event.state,
    laps: [...view.laps, row],
    badges,
  };
  next.deltaToPlan = computePlanDelta(next);
  next.deltaToAgent = computeAgentDelta(next);
  return next;
}

export function reduce(view: SessionView, raw: unknown): SessionView {
  const event = StreamEvent.parse(raw);
  switch (event.type) {
    case "hello": {
      let v = applySummary(view, event.session);
      for (const h of event.history) {
        v = reduce(v, h);
      }
      return v;
    }
    case "lap":
      return applyLap(view, event);
    case "disturbance":
      return {
        ...view,
        state: event.state,
        disturbances: [...view.disturbances, { lap: event.lap, twDelta: event.tw_delta }],
        badges: [...view.badges, { lap: event.lap, text: `wear +${event.tw_delta.toFixed(2)} injected` }],
      };
  }
}

export function setReferencePlan(view: SessionView, plan: OptimizeResult): SessionView {
  const next = { ...view, referencePlan: plan };
  next.deltaToPlan = computePlanDelta(next);
  return next;
}

// compare(): the agent reference is another session's lap series, fetched
// from the server; overlaying it never involves client-side simulation.
export function setAgentReference(
  view: SessionView,
  series: { lap: number; raceTime: number }[],
): SessionView {
  const next = { ...view, agentReference: series };
  next.deltaToAgent = computeAgentDelta(next);
  return next;
}

function computeAgentDelta(view: SessionView): (number | null)[] {
  if (!view.agentReference) return view.laps.map(() => null);
  const byLap = new Map(view.agentReference.map((r) => [r.lap, r.raceTime]));
  return view.laps.map((row) => {
    const ref = byLap.get(row.lap);
    return ref === undefined ? null : row.raceTime - ref;
  });
}

// Difference of the live cumulative race time against the plan's, lap by
// lap. Both series come from the server; nothing is simulated here.
function computePlanDelta(view: SessionView): (number | null)[] {
  const plan = view.referencePlan;
  if (!plan) return view.laps.map(() => null);
  const planByLap = new Map(plan.laps.map((r) => [r.k, r.t_race]));
  return view.laps.map((row) => {
    const ref = planByLap.get(row.lap);
    return ref === undefined ? null : row.raceTime - ref;
  });
}

// Formatting helpers shared by the DOM layer and the rendering tests.
export function gaugeText(view: SessionView): string[] {
  if (!view.state) return ["no state"];
  const s = view.state;
  return [
    `lap ${view.lap}/${view.nLaps}`,
    `battery ${(100 * s.battery / Math.max(s.battery, 4)).toFixed(0)}% (${s.battery.toFixed(2)} MJ)`,
    `fuel ${s.fuel.toFixed(1)} MJ`,
    `mass ${s.mass.toFixed(1)} kg`,
    `tires ${s.compound_label} wear ${(100 * s.wear).toFixed(0)}% age ${s.tire_age}`,
    `race time ${s.race_time.toFixed(3)} s`,
    view.status,
  ];
}

export function finalRaceTime(view: SessionView): number | null {
  if (view.status !== "finished" || view.laps.length === 0) return null;
  return view.laps[view.laps.length - 1].raceTime;
}
