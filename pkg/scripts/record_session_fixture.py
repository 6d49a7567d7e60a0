#!/usr/bin/env python3
"""Record a full agent-driven session as a frontend test fixture.

Drives the real service in-process with "use agent" for every lap and dumps
the hello event, every stream event, and the final result to a JSONL file
the console's rendering tests replay.
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from racestrat.env import ScenarioSpec
from racestrat.service import create_app

ROOT = Path(__file__).resolve().parent.parent
CHECKPOINT = ROOT / "checkpoints" / "default_57lap.pt"
OUT = ROOT / "frontend" / "test" / "fixtures" / "agent_session.jsonl"


def main() -> None:
    app = create_app(data_dir=ROOT / "artifacts" / "fixture-data", checkpoint=CHECKPOINT)
    lines = []
    with TestClient(app) as client:
        spec = ScenarioSpec()
        created = client.post("/sessions", json={"spec": spec.to_dict(), "mode": "agent-assisted"}).json()
        sid = created["id"]
        summary = client.get(f"/sessions/{sid}").json()
        lines.append({"type": "hello", "session": summary, "history": []})
        done = False
        while not done:
            event = client.post(f"/sessions/{sid}/step", json={"agent": True}).json()
            lines.append(event)
            done = event["done"]
        final = client.get(f"/sessions/{sid}").json()
        lines.append({"type": "final", "t_race": final["state"]["race_time"], "status": final["status"]})

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(json.dumps(line, sort_keys=True) for line in lines) + "\n")
    print(f"{len(lines)} events -> {OUT}")
    print(f"agent race time: {final['state']['race_time']:.3f} s")


if __name__ == "__main__":
    main()
