"""Polynomial reformulations must replay the logical updates at integer points."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from racestrat.config import Compound, RaceConfig
from racestrat.laptime import tire_correction
from racestrat.minlp.reform import (
    compound_offsets,
    pit_indicator,
    selector_weights,
    smooth_base_blend,
    smooth_change_count,
    smooth_compound_update,
    smooth_correction,
    smooth_wear_update,
)
from racestrat.race_model import update_compound, update_compound_changes, update_tire_wear

ALL_PAIRS = [(tc, ps) for tc in (1, 2, 3) for ps in (0, 1, 2, 3)]


class TestPitIndicator:
    def test_integer_points(self):
        assert pit_indicator(0) == pytest.approx(0.0, abs=1e-15)
        for ps in (1, 2, 3):
            assert pit_indicator(ps) == pytest.approx(1.0, abs=1e-12)

    def test_fractional_value(self):
        assert pit_indicator(0.5) == pytest.approx(0.6875, abs=1e-15)


class TestSelectors:
    @pytest.mark.parametrize("tc,want", [(1, (0, 1, 2)), (2, (-1, 0, 1)), (3, (-2, -1, 0))])
    def test_offsets_table(self, tc, want):
        assert compound_offsets(tc) == pytest.approx(want)

    @pytest.mark.parametrize("tc,want", [(1, (1, 0, 0)), (2, (0, 1, 0)), (3, (0, 0, 1))])
    def test_weights_select_one_compound(self, tc, want):
        w = selector_weights(compound_offsets(tc))
        assert np.allclose(w, want, atol=1e-15)


class TestSmoothUpdates:
    def test_compound_no_stop(self):
        assert smooth_compound_update(2.0, 0.0, pit_indicator(0.0)) == pytest.approx(2.0, abs=1e-12)

    def test_compound_change(self):
        assert smooth_compound_update(1.0, 3.0, pit_indicator(3.0)) == pytest.approx(3.0, abs=1e-12)

    def test_compound_matches_logic_all_pairs(self):
        for tc, ps in ALL_PAIRS:
            got = smooth_compound_update(float(tc), float(ps), pit_indicator(float(ps)))
            assert got == pytest.approx(float(update_compound(tc, ps)), abs=1e-12)

    def test_change_count_squared_jump(self):
        got = smooth_change_count(0.0, 1.0, 3.0, pit_indicator(3.0))
        assert got == pytest.approx(4.0, abs=1e-12)

    def test_change_count_same_compound(self):
        assert smooth_change_count(0.0, 2.0, 2.0, pit_indicator(2.0)) == pytest.approx(0.0, abs=1e-12)

    def test_change_count_sign_matches_logic(self):
        for tc, ps in ALL_PAIRS:
            smooth = smooth_change_count(0.0, float(tc), float(ps), pit_indicator(float(ps)))
            logical = update_compound_changes(0, tc, ps)
            assert (smooth >= 1.0 - 1e-12) == (logical >= 1)

    def test_wear_reset(self, cfg):
        assert smooth_wear_update(0.5, 880.0, 2.0, 1.0, cfg) == pytest.approx(0.0, abs=1e-12)

    def test_wear_integer_compound(self, cfg):
        got = smooth_wear_update(0.3, 880.0, 1.0, 0.0, cfg)
        want = cfg.soft.wear_step(0.3, 880.0 / cfg.initial_mass)
        assert got == pytest.approx(want, abs=1e-12)

    def test_base_blend_corners(self):
        vals = dict(t_normal=93.1, t_inlap=104.6, t_outlap=108.2, t_out_inlap=119.7)
        assert smooth_base_blend(0.0, 0.0, **vals) == pytest.approx(93.1)
        assert smooth_base_blend(1.0, 0.0, **vals) == pytest.approx(104.6)
        assert smooth_base_blend(0.0, 1.0, **vals) == pytest.approx(108.2)
        assert smooth_base_blend(1.0, 1.0, **vals) == pytest.approx(119.7)

    def test_correction_fresh_anchors(self, cfg):
        assert smooth_correction(0.0, 1.0, cfg) == pytest.approx(0.0, abs=1e-12)
        assert smooth_correction(0.0, 3.0, cfg) == pytest.approx(2.0, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(
    tc=st.integers(1, 3),
    ps=st.integers(0, 3),
    tw=st.floats(0.0, 0.85),
    mass=st.floats(798.0, 898.0),
)
def test_wear_equivalence_fuzz(tc, ps, tw, mass):
    """Unsaturated-wear regime: polynomial and logical updates agree to 1e-12."""
    cfg = RaceConfig()
    logical = update_tire_wear(tw, mass, cfg.initial_mass, tc, ps, cfg)
    smooth = smooth_wear_update(tw, mass, float(tc), pit_indicator(float(ps)), cfg)
    assert smooth == pytest.approx(logical, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(tc=st.integers(1, 3), tw=st.floats(0.0, 1.0))
def test_correction_equivalence_fuzz(tc, tw):
    cfg = RaceConfig()
    assert smooth_correction(tw, float(tc), cfg) == pytest.approx(
        tire_correction(tw, tc, cfg=cfg), abs=1e-12
    )
