"""OCP construction, the inner solver, and branch-and-bound vs the oracle."""

import dataclasses

import numpy as np
import pytest

from racestrat.config import Compound, ConfigError, RaceConfig, toy_config
from racestrat.minlp import (
    BnbOptions,
    Infeasible,
    NlpDiverged,
    TooLarge,
    branch_and_bound,
    build_ocp,
    exhaustive_oracle,
    schedule_count,
    solve_nlp,
)
from racestrat.minlp.ocp import PitRules
from racestrat.race_model import StepMode, inputs_for_stops, simulate_strategy


class TestBuildOcp:
    def test_default_dimensions(self, cfg):
        problem = build_ocp(cfg)
        assert problem.horizon == 57
        assert problem.n_variables == 3 * 57

    def test_toy_dimensions(self, toy_cfg):
        assert build_ocp(toy_cfg).n_variables == 30

    def test_missing_tires_rejected(self, cfg):
        broken = dataclasses.replace(cfg, soft=None)
        with pytest.raises(ConfigError):
            build_ocp(broken)

    def test_schedule_counts(self):
        assert schedule_count(10, 1) == 31
        assert schedule_count(10, 2) == 436


class TestSolveNlp:
    def test_fixed_schedule_matches_simulator(self, cfg):
        problem = build_ocp(cfg)
        lo = np.zeros(57)
        lo[18], lo[39] = 2.0, 1.0
        res = solve_nlp(problem, lo, lo)
        assert res.feasible
        log = simulate_strategy(cfg, problem.inputs_from(res.x), mode=StepMode.CLAMP)
        assert log.total_time == pytest.approx(res.objective, abs=1e-6)

    def test_no_stops_is_infeasible(self, toy_cfg):
        problem = build_ocp(toy_cfg)
        zeros = np.zeros(problem.horizon)
        with pytest.raises(NlpDiverged):
            solve_nlp(problem, zeros, zeros)  # terminal compound-change constraint

    def test_root_relaxation_bounds_toy_optimum(self, toy_cfg, toy_oracle):
        problem = build_ocp(toy_cfg)
        root = solve_nlp(problem)
        assert root.feasible
        assert root.objective <= toy_oracle.t_race + 1e-6

    def test_stationarity_and_violation_tolerances(self, toy_cfg):
        problem = build_ocp(toy_cfg)
        lo = np.zeros(10)
        lo[5] = 1.0
        res = solve_nlp(problem, lo, lo)
        assert res.max_violation <= 1e-8
        assert res.stationarity <= 1e-6


class TestBranchAndBound:
    def test_toy_matches_oracle_exactly(self, toy_cfg, toy_oracle):
        sol = branch_and_bound(build_ocp(toy_cfg), BnbOptions(gap=0.0))
        assert abs(sol.t_race - toy_oracle.t_race) <= 1e-4
        assert str(sol.strategy) == str(toy_oracle.strategy)
        assert sol.status == "optimal"

    def test_oracle_enumeration_count(self, toy_oracle):
        assert toy_oracle.enumerated == 436

    def test_oracle_objective_dominates_feasible_candidates(self, toy_cfg, toy_oracle):
        # spot-check: a handful of feasible schedules are no better
        problem = build_ocp(toy_cfg)
        for stops in ({3: 1}, {5: 3}, {2: 1, 6: 3}, {4: 2, 8: 1}):
            try:
                log = simulate_strategy(toy_cfg, inputs_for_stops(toy_cfg, stops))
            except Exception:
                continue
            if log.legal:
                assert toy_oracle.t_race <= log.total_time + 1e-9

    def test_default_config_two_stop_shape(self, cfg):
        sol = branch_and_bound(build_ocp(cfg), BnbOptions(gap=0.0))
        stops = sol.strategy.stops
        assert len(stops) == 2
        (a, c1), (b, c2) = stops
        assert c1 == Compound.MEDIUM and c2 == Compound.SOFT
        assert 15 <= a <= 21
        assert 33 <= b <= 42
        assert sol.log.final_state.battery <= 1e-6
        assert sol.log.final_state.fuel <= 1e-6

    def test_forbidding_all_stops_infeasible(self, toy_cfg):
        rules = PitRules(forbidden_laps=frozenset(range(toy_cfg.n_laps)))
        with pytest.raises(Infeasible):
            branch_and_bound(build_ocp(toy_cfg, rules=rules), BnbOptions())

    def test_bound_monotone_along_tree_paths(self, toy_cfg):
        trace: list = []
        branch_and_bound(build_ocp(toy_cfg), BnbOptions(gap=0.0, node_trace=trace))
        lb_by_id = {row[0]: row[3] for row in trace}
        for node_id, parent_id, depth, lb in trace:
            if parent_id in lb_by_id:
                assert lb >= lb_by_id[parent_id] - 1e-9

    def test_incumbent_passes_strict_simulation(self, toy_cfg):
        sol = branch_and_bound(build_ocp(toy_cfg), BnbOptions(gap=0.0))
        log = simulate_strategy(toy_cfg, sol.inputs, mode=StepMode.STRICT)
        assert log.legal
        assert log.total_time == pytest.approx(sol.t_race, abs=1e-5)

    def test_node_budget_reports_best_effort(self, cfg):
        sol = branch_and_bound(build_ocp(cfg), BnbOptions(gap=0.0, max_nodes=2))
        assert sol.status in ("node_budget", "optimal", "gap_reached")
        assert sol.gap >= 0.0

    def test_too_large_enumeration_rejected(self, cfg):
        with pytest.raises(TooLarge):
            exhaustive_oracle(build_ocp(cfg), max_stops=4)


class TestGradients:
    def test_objective_gradient_matches_finite_differences(self, cfg, rng):
        problem = build_ocp(cfg)
        bounds = problem.variable_bounds()
        lb = np.array([b[0] for b in bounds])
        ub = np.array([b[1] for b in bounds])
        worst = 0.0
        for _ in range(50):
            x = lb + rng.random(lb.size) * (ub - lb)
            _, grad = problem.objective_and_grad(x)
            i = int(rng.integers(0, x.size))
            h = 6e-6 * max(1.0, abs(x[i]))
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fp, _ = problem.objective_and_grad(xp)
            fm, _ = problem.objective_and_grad(xm)
            fd = (fp - fm) / (2 * h)
            worst = max(worst, abs(fd - grad[i]) / max(abs(fd), abs(grad[i]), 1e-3))
        assert worst < 1e-5

    def test_kernel_matches_simulator_at_integer_points(self, cfg, rng):
        # stint lengths capped so wear stays below saturation, where the
        # polynomial dynamics and the clamped simulator coincide
        problem = build_ocp(cfg)
        for _ in range(5):
            first = int(rng.integers(14, 21))
            second = first + int(rng.integers(16, 23))
            stops = {first: int(rng.integers(1, 4)), second: int(rng.integers(1, 4))}
            de_b = np.zeros(57)
            de_f = np.full(57, cfg.fuel_per_lap_nominal)
            ps = np.array([float(stops.get(k, 0)) for k in range(57)])
            x = np.concatenate([de_b, de_f, ps])
            obj, _ = problem.objective_and_grad(x)
            log = simulate_strategy(cfg, inputs_for_stops(cfg, stops))
            assert obj == pytest.approx(log.total_time, abs=1e-9)
