"""Lap-time surrogate: calibration anchors, smoothness, shape properties."""

import numpy as np
import pytest

from racestrat.config import Compound, LapTimeParams, RaceConfig, TireParams
from racestrat.laptime import (
    CalibrationFailure,
    CalibrationTargets,
    LapKind,
    calibrate,
    correction_crossover_age,
    lap_kind,
    nominal_lap_time,
    nominal_lap_time_grad,
    simulated_wear,
    tire_correction,
)

REF = dict(e_b=4.0, de_b=0.0, m_car=898.0)


def ref_time(kind: LapKind, cfg: RaceConfig) -> float:
    return nominal_lap_time(
        REF["e_b"], REF["de_b"], cfg.fuel_per_lap_nominal, REF["m_car"], kind, cfg.lap_time, cfg
    )


class TestLapKind:
    def test_normal(self):
        assert lap_kind(0, False) is LapKind.NORMAL

    def test_out_inlap(self):
        assert lap_kind(2, True) is LapKind.OUT_INLAP

    def test_outlap(self):
        assert lap_kind(0, True) is LapKind.OUTLAP

    def test_inlap(self):
        assert lap_kind(3, False) is LapKind.INLAP


class TestReferenceAnchors:
    """The four lap-kind times at the reference condition are calibration-exact."""

    @pytest.mark.parametrize("kind,want", [
        (LapKind.NORMAL, 93.1),
        (LapKind.INLAP, 104.6),
        (LapKind.OUTLAP, 108.2),
        (LapKind.OUT_INLAP, 119.7),
    ])
    def test_anchor(self, cfg, kind, want):
        assert ref_time(kind, cfg) == pytest.approx(want, abs=1e-9)

    def test_empty_car_base_time(self, cfg):
        t = nominal_lap_time(
            4.0, 0.0, cfg.fuel_per_lap_nominal, cfg.empty_mass, LapKind.NORMAL, cfg.lap_time, cfg
        )
        assert t == pytest.approx(90.0, abs=1e-9)

    def test_kind_ordering(self, cfg):
        times = [ref_time(k, cfg) for k in
                 (LapKind.NORMAL, LapKind.INLAP, LapKind.OUTLAP, LapKind.OUT_INLAP)]
        assert times == sorted(times)
        assert len(set(times)) == 4


class TestTireCorrection:
    def test_fresh_soft_zero(self, cfg):
        assert tire_correction(0.0, Compound.SOFT, cfg=cfg) == 0.0

    def test_fresh_hard_two_seconds(self, cfg):
        assert tire_correction(0.0, Compound.HARD, cfg=cfg) == pytest.approx(2.0, abs=1e-12)

    def test_quadratic_gain(self):
        tp = TireParams(1.06, 0.004, 0.012, 0.0, 7.0)
        assert tire_correction(0.6, Compound.SOFT, tp=tp) == pytest.approx(2.52, abs=1e-12)

    def test_monotone_and_convex_on_grid(self, cfg):
        grid = np.linspace(0.0, 1.0, 201)
        for compound in Compound:
            vals = np.array([tire_correction(t, compound, cfg=cfg) for t in grid])
            assert np.all(np.diff(vals) >= -1e-12)
            assert np.all(np.diff(vals, 2) >= -1e-12)

    def test_defined_up_to_full_wear(self, cfg):
        for compound in Compound:
            assert np.isfinite(tire_correction(1.0, compound, cfg=cfg))

    def test_fresh_offsets_ordered(self, cfg):
        assert 0.0 == cfg.soft.fresh_penalty <= cfg.medium.fresh_penalty <= cfg.hard.fresh_penalty


class TestCalibration:
    def test_default_targets_reproduce_offsets(self):
        lt, tires = calibrate(CalibrationTargets())
        assert lt.inlap_offset == pytest.approx(11.5, abs=1e-12)
        assert lt.outlap_offset == pytest.approx(15.1, abs=1e-12)
        assert lt.out_inlap_offset == pytest.approx(26.6, abs=1e-12)
        assert abs(lt.out_inlap_offset - lt.inlap_offset - lt.outlap_offset) <= 0.5

    def test_mass_gain_fixes_base_time(self):
        lt, _ = calibrate(CalibrationTargets())
        assert lt.mass_gain == pytest.approx(0.031, abs=1e-15)
        assert lt.base_time == pytest.approx(90.0, abs=1e-12)

    def test_empty_targets_fail(self):
        with pytest.raises(CalibrationFailure):
            calibrate(None)

    def test_defaults_match_calibration_output(self, cfg):
        lt, (soft, medium, hard) = calibrate(CalibrationTargets())
        assert soft.wear_curvature == pytest.approx(cfg.soft.wear_curvature, abs=1e-12)
        for name, val in vars(lt).items():
            assert getattr(cfg.lap_time, name) == pytest.approx(val, abs=1e-9), name

    def test_crossover_in_window(self, cfg):
        age = correction_crossover_age(cfg.soft, cfg.hard)
        assert 15 <= age <= 21

    def test_soft_wear_reaches_point_six_near_twenty_laps(self, cfg):
        tw = simulated_wear(cfg.soft, 22)
        assert tw[20] == pytest.approx(0.6, abs=0.05)


class TestSmoothness:
    def kinds(self):
        return (LapKind.NORMAL, LapKind.INLAP, LapKind.OUTLAP, LapKind.OUT_INLAP)

    def test_gradients_match_finite_differences(self, cfg, rng):
        p = cfg.lap_time
        h = 3e-6
        worst = 0.0
        for _ in range(100):
            e_b = rng.uniform(-0.5, 4.5)
            de_b = rng.uniform(-4.5, 2.5)
            de_f = rng.uniform(60.0, 90.0)
            m = rng.uniform(798.0, 905.0)
            kind = self.kinds()[rng.integers(0, 4)]
            grad = nominal_lap_time_grad(e_b, de_b, de_f, m, kind, p, cfg)
            args = [e_b, de_b, de_f, m]
            for i in range(4):
                hi = h * max(1.0, abs(args[i]))
                up = args.copy(); up[i] += hi
                dn = args.copy(); dn[i] -= hi
                fd = (nominal_lap_time(*up, kind, p, cfg) - nominal_lap_time(*dn, kind, p, cfg)) / (2 * hi)
                denom = max(abs(fd), abs(grad[i]), 1e-3)
                worst = max(worst, abs(fd - grad[i]) / denom)
        assert worst < 1e-5

    def test_finite_difference_hessians_exist(self, cfg, rng):
        # central second differences stay finite and symmetric at random points
        p = cfg.lap_time
        h = 1e-4
        for _ in range(100):
            x = np.array([
                rng.uniform(0.0, 4.0), rng.uniform(-4.0, 2.0),
                rng.uniform(65.0, 85.0), rng.uniform(800.0, 898.0),
            ])
            kind = self.kinds()[rng.integers(0, 4)]

            def f(v):
                return nominal_lap_time(v[0], v[1], v[2], v[3], kind, p, cfg)

            hess = np.zeros((4, 4))
            for i in range(4):
                for j in range(4):
                    e_i = np.zeros(4); e_i[i] = h * max(1.0, abs(x[i]))
                    e_j = np.zeros(4); e_j[j] = h * max(1.0, abs(x[j]))
                    hess[i, j] = (
                        f(x + e_i + e_j) - f(x + e_i - e_j) - f(x - e_i + e_j) + f(x - e_i - e_j)
                    ) / (4 * e_i[i] * e_j[j])
            assert np.all(np.isfinite(hess))
            assert np.allclose(hess, hess.T, atol=1e-4)

    def test_partial_derivative_signs(self, cfg, rng):
        p = cfg.lap_time
        for _ in range(200):
            e_b = rng.uniform(0.0, 4.0)
            de_b = rng.uniform(-4.0, 2.0)
            de_f = rng.uniform(65.0, 85.0)
            m = rng.uniform(800.0, 898.0)
            kind = self.kinds()[rng.integers(0, 4)]
            d_eb, d_deb, d_def, d_m = nominal_lap_time_grad(e_b, de_b, de_f, m, kind, p, cfg)
            assert d_m > 0.0          # heavier car, slower lap
            assert d_def < 0.0        # more fuel allocated, faster lap
            assert d_deb >= p.deploy_gain - 1e-12  # more depletion never hurts

    def test_inlap_recharge_window_wider(self, cfg):
        p = cfg.lap_time
        de_b = p.free_recharge + 0.75 * p.inlap_recharge_bonus
        normal_pen = nominal_lap_time(2.0, de_b, cfg.fuel_per_lap_nominal, 870.0, LapKind.NORMAL, p, cfg) - \
            nominal_lap_time(2.0, 0.0, cfg.fuel_per_lap_nominal, 870.0, LapKind.NORMAL, p, cfg)
        inlap_pen = nominal_lap_time(2.0, de_b, cfg.fuel_per_lap_nominal, 870.0, LapKind.INLAP, p, cfg) - \
            nominal_lap_time(2.0, 0.0, cfg.fuel_per_lap_nominal, 870.0, LapKind.INLAP, p, cfg)
        linear = p.deploy_gain * de_b
        assert normal_pen > linear + 1e-6      # heavy recharge penalized on normal laps
        assert inlap_pen == pytest.approx(linear, abs=1e-9)  # free inside the widened window
