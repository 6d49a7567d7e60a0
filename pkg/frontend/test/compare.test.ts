// compare(): overlay deltas are plain differences of two server series.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { emptyView, reduce, setAgentReference } from "../src/state";

const FIXTURE = join(__dirname, "fixtures", "agent_session.jsonl");

function playedView() {
  const events = readFileSync(FIXTURE, "utf-8").trim().split("\n").map((l) => JSON.parse(l));
  let view = emptyView();
  for (const e of events) {
    if (e.type === "final") continue;
    view = reduce(view, e);
  }
  return view;
}

describe("agent comparison overlay", () => {
  it("is identically zero against the session's own series", () => {
    const view = playedView();
    const own = view.laps.map((row) => ({ lap: row.lap, raceTime: row.raceTime }));
    const compared = setAgentReference(view, own);
    for (const d of compared.deltaToAgent) {
      expect(d).toBe(0);
    }
  });

  it("tracks a shifted reference exactly", () => {
    const view = playedView();
    const shifted = view.laps.map((row) => ({ lap: row.lap, raceTime: row.raceTime + 2.25 }));
    const compared = setAgentReference(view, shifted);
    for (const d of compared.deltaToAgent) {
      expect(d).toBeCloseTo(-2.25, 9);
    }
  });

  it("marks laps without reference data as null", () => {
    const view = playedView();
    const partial = view.laps.slice(0, 5).map((row) => ({ lap: row.lap, raceTime: row.raceTime }));
    const compared = setAgentReference(view, partial);
    expect(compared.deltaToAgent.slice(0, 5).every((d) => d === 0)).toBe(true);
    expect(compared.deltaToAgent.slice(5).every((d) => d === null)).toBe(true);
  });
});
