"""Service contract: endpoints, golden replay, persistence, streaming."""

import json
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from racestrat.config import Compound, toy_config
from racestrat.env import AgentAction, RaceEnv, ScenarioSpec
from racestrat.service import SessionStore, create_app, state_to_wire

CHECKPOINT = Path(__file__).resolve().parent.parent / "checkpoints" / "default_57lap.pt"


@pytest.fixture()
def client(tmp_path):
    app = create_app(data_dir=tmp_path, checkpoint=None)
    with TestClient(app) as c:
        c.data_dir = tmp_path
        yield c


@pytest.fixture()
def client_with_agent(tmp_path):
    app = create_app(data_dir=tmp_path, checkpoint=CHECKPOINT)
    with TestClient(app) as c:
        c.data_dir = tmp_path
        yield c


def toy_spec_dict():
    return ScenarioSpec(cfg=toy_config(10)).to_dict()


def make_session(client, spec=None):
    r = client.post("/sessions", json={"spec": spec or toy_spec_dict()})
    assert r.status_code == 200, r.text
    return r.json()["id"]


def random_actions(n, seed=3):
    rng = np.random.default_rng(seed)
    return [
        {"f": float(rng.random()), "b": float(rng.uniform(-1, 1)), "ps": int(rng.integers(0, 4))}
        for _ in range(n)
    ]


class TestSessionLifecycle:
    def test_create_and_get(self, client):
        sid = make_session(client)
        r = client.get(f"/sessions/{sid}")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "running"
        assert body["lap"] == 0
        assert body["state"]["battery"] == pytest.approx(4.0)
        assert len(body["observation"]) == 10

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        assert client.post("/sessions/nope/step", json={"agent": False, "f": 0.5, "b": 0, "ps": 0}).status_code == 404

    def test_malformed_action_422(self, client):
        sid = make_session(client)
        assert client.post(f"/sessions/{sid}/step", json={"f": 0.5}).status_code == 422
        assert client.post(f"/sessions/{sid}/step", json={"f": 0.5, "b": 0.0, "ps": 9}).status_code == 422

    def test_full_race_finishes_and_further_steps_409(self, client):
        sid = make_session(client)
        for action in random_actions(10):
            r = client.post(f"/sessions/{sid}/step", json=action)
            assert r.status_code == 200
        assert r.json()["done"] is True
        assert client.get(f"/sessions/{sid}").json()["status"] == "finished"
        assert client.post(f"/sessions/{sid}/step", json=random_actions(1)[0]).status_code == 409

    def test_recommendation_without_checkpoint_503(self, client):
        sid = make_session(client)
        assert client.get(f"/sessions/{sid}/recommendation").status_code == 503


class TestGoldenReplay:
    def test_api_replay_matches_in_process_bit_for_bit(self, client):
        actions = random_actions(10, seed=11)
        sid = make_session(client)
        api_records = []
        for action in actions:
            r = client.post(f"/sessions/{sid}/step", json=action)
            api_records.append(r.json()["lap_record"])

        env = RaceEnv(ScenarioSpec(cfg=toy_config(10)))
        env.reset()
        local_records = []
        for action in actions:
            res = env.step(AgentAction(action["f"], action["b"], action["ps"]))
            local_records.append(vars(res.info["record"]))

        assert api_records == local_records  # exact float equality through JSON

    def test_session_log_jsonl_replayable(self, client):
        actions = random_actions(10, seed=23)
        sid = make_session(client)
        for action in actions:
            client.post(f"/sessions/{sid}/step", json=action)
        text = client.get(f"/sessions/{sid}/log").text
        lines = [json.loads(line) for line in text.strip().splitlines()]
        laps = [e for e in lines if e["type"] == "lap"]
        assert len(laps) == 10
        assert laps[-1]["done"] is True


class TestDisturbanceAndJobs:
    def test_inject_disturbance_updates_wear(self, client):
        sid = make_session(client)
        client.post(f"/sessions/{sid}/step", json=random_actions(1)[0])
        before = client.get(f"/sessions/{sid}").json()["state"]["wear"]
        r = client.post(f"/sessions/{sid}/disturbance", json={"tw_delta": 0.25})
        assert r.status_code == 200
        assert r.json()["wear"] == pytest.approx(min(1.0, before + 0.25), abs=1e-12)

    def test_optimize_job_midrace_prefix_empty(self, client):
        cfg = toy_config(10)
        env = RaceEnv(ScenarioSpec(cfg=cfg))
        env.reset()
        for _ in range(4):
            env.step(AgentAction(0.5, 0.0, 0))
        body = {
            "config": cfg.to_dict(),
            "state": state_to_wire(env.state),
            "start_lap": 4,
            "gap": 0.0,
        }
        r = client.post("/optimize", json=body)
        assert r.status_code == 200
        jid = r.json()["id"]
        for _ in range(300):
            status = client.get(f"/optimize/{jid}").json()
            if status["status"] in ("done", "failed"):
                break
            time.sleep(0.2)
        assert status["status"] == "done", status
        stops = status["result"]["stops"]
        assert all(lap >= 4 for lap, _ in stops)  # only future laps in the plan
        assert status["result"]["t_race"] > 0

    def test_unknown_job_404(self, client):
        assert client.get("/optimize/nope").status_code == 404


class TestStreaming:
    def test_websocket_receives_lap_events(self, client):
        sid = make_session(client)
        with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
            hello = ws.receive_json()
            assert hello["type"] == "hello"
            assert hello["session"]["lap"] == 0
            action = random_actions(1, seed=5)[0]
            resp = client.post(f"/sessions/{sid}/step", json=action)
            event = ws.receive_json()
            assert event["type"] == "lap"
            assert event["lap"] == 0
            assert event["state"] == resp.json()["state"]


class TestPersistence:
    def test_finished_session_survives_restart(self, client):
        sid = make_session(client)
        for action in random_actions(10, seed=31):
            client.post(f"/sessions/{sid}/step", json=action)
        # a fresh store over the same directory reads everything back
        store = SessionStore(Path(client.data_dir))
        sdir = store.data_dir / "sessions" / sid
        assert json.loads((sdir / "meta.json").read_text())["status"] == "finished"
        lines = (sdir / "log.jsonl").read_text().strip().splitlines()
        assert len([l for l in lines if json.loads(l)["type"] == "lap"]) == 10
        result = json.loads((sdir / "result.json").read_text())
        assert result["t_race"] > 0
        spec = ScenarioSpec.from_dict(json.loads((sdir / "spec.json").read_text()))
        assert spec.cfg.n_laps == 10


@pytest.mark.skipif(not CHECKPOINT.exists(), reason="trained checkpoint not present")
class TestAgentEndpoints:
    def test_agent_step_and_recommendation(self, client_with_agent):
        client = client_with_agent
        r = client.post("/sessions", json={"spec": ScenarioSpec().to_dict(), "mode": "agent-assisted"})
        sid = r.json()["id"]
        rec = client.get(f"/sessions/{sid}/recommendation")
        assert rec.status_code == 200
        body = rec.json()
        assert len(body["pit_probabilities"]) == 4
        assert sum(body["pit_probabilities"]) == pytest.approx(1.0, abs=1e-6)
        step = client.post(f"/sessions/{sid}/step", json={"agent": True})
        assert step.status_code == 200

    def test_disturbed_twin_changes_recommendation(self, client_with_agent):
        client = client_with_agent
        spec = ScenarioSpec().to_dict()
        sid_a = client.post("/sessions", json={"spec": spec}).json()["id"]
        sid_b = client.post("/sessions", json={"spec": spec}).json()["id"]
        for sid in (sid_a, sid_b):
            for _ in range(23):
                client.post(f"/sessions/{sid}/step", json={"agent": True})
        client.post(f"/sessions/{sid_b}/disturbance", json={"tw_delta": 0.25})
        rec_a = client.get(f"/sessions/{sid_a}/recommendation").json()
        rec_b = client.get(f"/sessions/{sid_b}/recommendation").json()
        assert rec_a["pit_probabilities"] != rec_b["pit_probabilities"]