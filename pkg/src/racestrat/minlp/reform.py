"""Polynomial reformulations of the logical race-model updates.

Each logical branch (pit or not, which compound) is replaced by a smooth
polynomial that agrees with the logic at integer points and is well defined
on the relaxed domains ps in [0, 3], tc in [1, 3]. These are building blocks
for the relaxation the branch-and-bound search solves at every node.
"""

from __future__ import annotations

import numpy as np

from ..config import RaceConfig


def pit_indicator(ps):
    """Smooth 0/1 indicator of a pit stop: cubic through (0,0),(1,1),(2,1),(3,1)."""
    ps = np.asarray(ps, dtype=float)
    return 1.0 - (1.0 - ps) * (2.0 - ps) * (3.0 - ps) / 6.0


def pit_indicator_d(ps):
    """d(pit_indicator)/d(ps)."""
    ps = np.asarray(ps, dtype=float)
    return (11.0 - 12.0 * ps + 3.0 * ps * ps) / 6.0


def compound_offsets(tc):
    """Auxiliary terms (1 - tc, 2 - tc, 3 - tc) selecting the compound."""
    tc = np.asarray(tc, dtype=float)
    return 1.0 - tc, 2.0 - tc, 3.0 - tc


def selector_weights(z):
    """Quadratic Lagrange weights: (1,0,0), (0,1,0), (0,0,1) at tc = 1, 2, 3."""
    z1, z2, z3 = z
    return 0.5 * z2 * z3, -z1 * z3, 0.5 * z1 * z2


def selector_weights_d(tc):
    """Derivatives of the three selector weights with respect to tc."""
    tc = np.asarray(tc, dtype=float)
    return 0.5 * (2.0 * tc - 5.0), 4.0 - 2.0 * tc, 0.5 * (2.0 * tc - 3.0)


def smooth_compound_update(tc, ps, b_ps):
    """Next compound: ps replaces tc when the indicator is on."""
    return tc * (1.0 - b_ps) + ps


def smooth_change_count(b, tc, ps, b_ps):
    """Compound-change counter; the square keeps same-compound stops at zero.

    Values differ from the logical +1 counting, but the sign of (value >= 1)
    matches, which is all the regulation constraint uses.
    """
    d = ps - tc
    return b + d * d * b_ps


def smooth_wear_update(tw, m_car, tc, b_ps, cfg: RaceConfig, m_car0: float | None = None):
    """Wear recursion blended over compounds, reset by the pit indicator.

    No saturation here: the optimizer bounds wear at 1 with an explicit
    constraint instead, keeping the expression polynomial.
    """
    m_car0 = cfg.initial_mass if m_car0 is None else m_car0
    w1, w2, w3 = selector_weights(compound_offsets(tc))
    ratio = np.asarray(m_car, dtype=float) / m_car0
    f = (
        w1 * cfg.soft.wear_step(tw, ratio)
        + w2 * cfg.medium.wear_step(tw, ratio)
        + w3 * cfg.hard.wear_step(tw, ratio)
    )
    return (1.0 - b_ps) * f


def smooth_base_blend(b_inlap, b_outlap, t_normal, t_inlap, t_outlap, t_out_inlap):
    """Bilinear blend of the four lap-kind map values."""
    return (
        (1.0 - b_inlap) * (1.0 - b_outlap) * t_normal
        + b_inlap * (1.0 - b_outlap) * t_inlap
        + (1.0 - b_inlap) * b_outlap * t_outlap
        + b_inlap * b_outlap * t_out_inlap
    )


def smooth_correction(tw, tc, cfg: RaceConfig):
    """Wear correction blended over compounds via the selector weights."""
    w1, w2, w3 = selector_weights(compound_offsets(tc))
    return (
        w1 * cfg.soft.correction(tw)
        + w2 * cfg.medium.correction(tw)
        + w3 * cfg.hard.correction(tw)
    )
