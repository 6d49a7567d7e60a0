// Wire types mirrored from the service. The console never derives physics
// from these; it only displays what the server sent.

import { z } from "zod";

export const CarState = z.object({
  battery: z.number(),
  fuel: z.number(),
  mass: z.number(),
  race_time: z.number(),
  compound_changes: z.number(),
  compound: z.number().int().min(1).max(3),
  compound_label: z.string(),
  wear: z.number(),
  tire_age: z.number().int(),
  outlap: z.boolean(),
});
export type CarState = z.infer<typeof CarState>;

export const LapRecord = z.object({
  k: z.number().int(),
  e_b: z.number(),
  e_f: z.number(),
  m_car: z.number(),
  tw: z.number(),
  tc: z.number().int(),
  ps: z.number().int(),
  de_b: z.number(),
  de_f: z.number(),
  t_lap: z.number(),
  t_race: z.number(),
  kind: z.string(),
  tire_age: z.number().int(),
  compound_changes: z.number().int(),
});
export type LapRecord = z.infer<typeof LapRecord>;

export const LapEvent = z.object({
  type: z.literal("lap"),
  lap: z.number().int(),
  reward: z.number(),
  done: z.boolean(),
  state: CarState,
  observation: z.array(z.number()).length(10),
  lap_record: LapRecord,
  applied: z.object({ de_b: z.number(), de_f: z.number(), ps: z.number().int() }),
  flags: z.object({
    battery_case: z.number().int(),
    fuel_case: z.number().int(),
    forced_compound: z.boolean(),
    out_of_box: z.boolean(),
  }),
  kind: z.string(),
});
export type LapEvent = z.infer<typeof LapEvent>;

export const DisturbanceEvent = z.object({
  type: z.literal("disturbance"),
  lap: z.number().int(),
  tw_delta: z.number(),
  wear: z.number(),
  state: CarState,
});
export type DisturbanceEvent = z.infer<typeof DisturbanceEvent>;

export const SessionSummary = z.object({
  id: z.string(),
  status: z.enum(["running", "finished"]),
  mode: z.string(),
  lap: z.number().int(),
  n_laps: z.number().int(),
  state: CarState,
  observation: z.array(z.number()),
  t_lap_prev: z.number(),
});
export type SessionSummary = z.infer<typeof SessionSummary>;

export const HelloEvent = z.object({
  type: z.literal("hello"),
  session: SessionSummary,
  history: z.array(z.unknown()),
});
export type HelloEvent = z.infer<typeof HelloEvent>;

export const StreamEvent = z.discriminatedUnion("type", [
  HelloEvent,
  LapEvent,
  DisturbanceEvent,
]);
export type StreamEvent = z.infer<typeof StreamEvent>;

export const Recommendation = z.object({
  action: z.object({ f: z.number(), b: z.number(), ps: z.number().int() }),
  pit_probabilities: z.array(z.number()).length(4),
  top_pit_actions: z.array(z.object({ ps: z.number().int(), p: z.number() })),
});
export type Recommendation = z.infer<typeof Recommendation>;

export const PlanStop = z.tuple([z.number().int(), z.number().int()]);

export const OptimizeResult = z.object({
  strategy: z.string(),
  stops: z.array(PlanStop),
  t_race: z.number(),
  gap: z.number(),
  status: z.string(),
  start_lap: z.number().int(),
  laps: z.array(LapRecord),
});
export type OptimizeResult = z.infer<typeof OptimizeResult>;

// The fixed action space the decision panel submits into. The service
// clips/overwrites internally; the panel still refuses to send garbage.
export const WireAction = z.object({
  f: z.number().min(0).max(1),
  b: z.number().min(-1).max(1),
  ps: z.number().int().min(0).max(3),
});
export type WireAction = z.infer<typeof WireAction>;

export const COMPOUND_LABELS: Record<number, string> = { 1: "S", 2: "M", 3: "H" };
export const COMPOUND_COLORS: Record<number, string> = {
  1: "#e10600", // soft
  2: "#f5d014", // medium
  3: "#f0f0f0", // hard
};
