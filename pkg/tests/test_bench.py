"""Benchmark harness: report emission, the go-long baseline, causality."""

import json
from pathlib import Path

import pytest

from racestrat.bench import (
    ArmResult,
    BenchmarkReport,
    emit_report,
    go_long,
    load_report,
    run_disturbance,
    run_nominal,
    snapshot_after,
)
from racestrat.config import Compound, RaceConfig
from racestrat.minlp import BnbOptions, branch_and_bound, build_ocp
from racestrat.race_model import simulate_strategy, strategy_of

CHECKPOINT = Path(__file__).resolve().parent.parent / "checkpoints" / "default_57lap.pt"


@pytest.fixture(scope="module")
def nominal_solution(cfg):
    return branch_and_bound(build_ocp(cfg), BnbOptions(gap=0.0))


class TestGoLong:
    def test_pits_hard_two_laps_after_disturbance(self, cfg, nominal_solution):
        inputs, schedule = go_long(cfg, nominal_solution, (22, 0.2))
        log = simulate_strategy(cfg, inputs, disturbances={22: 0.2}, allow_out_of_box=True)
        stops = log.stops
        post = [s for s in stops if s[0] > 22]
        assert post == [(24, Compound.HARD)]        # immediate hard stop, 2-lap reaction
        assert len(stops) == len([s for s in nominal_solution.strategy.stops if s[0] <= 22]) + 1

    def test_never_takes_a_third_stop(self, cfg, nominal_solution):
        inputs, _ = go_long(cfg, nominal_solution, (22, 0.2))
        log = simulate_strategy(cfg, inputs, disturbances={22: 0.2}, allow_out_of_box=True)
        assert len(log.stops) <= 2

    def test_slower_than_causal_resolve(self, cfg, nominal_solution):
        disturbance = (22, 0.2)
        heur_inputs, _ = go_long(cfg, nominal_solution, disturbance)
        heur = simulate_strategy(cfg, heur_inputs, disturbances={22: 0.2}, allow_out_of_box=True)
        state = snapshot_after(cfg, nominal_solution.inputs, 22, disturbance)
        tail = branch_and_bound(build_ocp(cfg, init_state=state, start_lap=23), BnbOptions(gap=0.0))
        causal_inputs = nominal_solution.inputs[:23] + tail.inputs
        causal = simulate_strategy(cfg, causal_inputs, disturbances={22: 0.2})
        assert causal.total_time < heur.total_time  # optimizing over a superset


class TestEmitReport:
    def make_report(self, cfg):
        log = simulate_strategy(cfg, branch_and_bound(build_ocp(cfg), BnbOptions()).inputs)
        arm = ArmResult(
            name="minlp", strategy=str(strategy_of(log)), t_race=log.total_time,
            delta_t=0.0, wall_time=1.0, log=log,
        )
        return BenchmarkReport(kind="nominal", cfg=cfg, arms=[arm],
                               metadata={"config_hash": cfg.content_hash(), "version": "0"})

    def test_json_roundtrip(self, cfg, tmp_path):
        report = self.make_report(cfg)
        paths = emit_report(report, tmp_path, formats=("json",))
        loaded = load_report(paths[0])
        assert loaded == json.loads(json.dumps(report.to_dict()))
        again = emit_report(report, tmp_path / "b", formats=("json",))
        assert load_report(again[0]) == loaded

    def test_csv_has_one_row_per_lap(self, cfg, tmp_path):
        report = self.make_report(cfg)
        paths = emit_report(report, tmp_path, formats=("csv",))
        lines = paths[0].read_text().strip().splitlines()
        assert len(lines) == cfg.n_laps + 1

    def test_summary_contains_deltas_and_wall_times(self, cfg, tmp_path):
        report = self.make_report(cfg)
        (md_path,) = emit_report(report, tmp_path, formats=("md",))
        text = md_path.read_text()
        assert "delta T" in text and "wall time" in text
        assert "minlp" in text


@pytest.mark.skipif(not CHECKPOINT.exists(), reason="trained checkpoint not present")
class TestWithTrainedAgent:
    @pytest.fixture(scope="class")
    def nominal_report(self, cfg, nominal_solution):
        return run_nominal(cfg, CHECKPOINT, minlp_solution=nominal_solution)

    @pytest.fixture(scope="class")
    def disturbance_report(self, cfg, nominal_solution):
        return run_disturbance(cfg, CHECKPOINT, (22, 0.2), nominal_solution=nominal_solution)

    def test_nominal_reference_is_zero(self, nominal_report):
        assert nominal_report.arm("minlp").delta_t == 0.0

    def test_both_methods_exhaust_energy(self, nominal_report):
        for arm in nominal_report.arms:
            assert abs(arm.extra["terminal_battery"]) <= 1e-6
            assert abs(arm.extra["terminal_fuel"]) <= 1e-6

    def test_causality_before_disturbance(self, disturbance_report, nominal_report):
        lap = disturbance_report.metadata["disturbance"]["lap"]
        causal = disturbance_report.arm("minlp").rows()
        heuristic = disturbance_report.arm("heuristic").rows()
        assert causal[: lap + 1] == heuristic[: lap + 1]   # bitwise identical prefixes
        rl_dist = disturbance_report.arm("rl").rows()
        rl_nom = nominal_report.arm("rl").rows()
        assert rl_dist[: lap + 1] == rl_nom[: lap + 1]

    def test_delta_ordering(self, disturbance_report):
        rl = disturbance_report.arm("rl").delta_t
        heur = disturbance_report.arm("heuristic").delta_t
        assert 0.0 <= rl < heur

    def test_report_reproducible(self, cfg, nominal_solution, disturbance_report):
        again = run_disturbance(cfg, CHECKPOINT, (22, 0.2), nominal_solution=nominal_solution)
        a = {arm.name: (arm.strategy, arm.t_race) for arm in disturbance_report.arms}
        b = {arm.name: (arm.strategy, arm.t_race) for arm in again.arms}
        assert a == b