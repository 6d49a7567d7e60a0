"""Certified node bounds for the branch-and-bound search.

A node's objective splits into an energy part (independent of the pit
schedule) and a schedule part (pit-lane offsets plus wear corrections).
Both are lower-bounded separately:

* energy part: one convex solve with pit variables pinned to zero, the
  widest recharge window on every lap, and corrections stripped;
* schedule part: an exact dynamic program over (age, compound, compound-
  changed, stops-used, outlap) states using wear tables computed under a
  per-lap lower bound of the car mass. Lighter cars wear less, so the table
  undercuts every real trajectory.

The sum never exceeds the true optimum of any integer completion in the
node, so pruning against it is safe even though the smooth relaxation is
nonconvex. The DP argmin doubles as a strong initial-incumbent schedule.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from numba import njit

from .ocp import OcpProblem

INITIAL_STINT = 3  # sentinel compound index for the stint already running


def light_mass_profile(problem: OcpProblem) -> np.ndarray:
    """Per-lap lower bound of the car mass (burn fuel as fast as allowed)."""
    n = problem.horizon
    cfg = problem.cfg
    m0 = problem.init[2]
    burn = cfg.fuel_per_lap_max / cfg.fuel_energy_density
    return np.maximum(cfg.empty_mass, m0 - burn * np.arange(1, n + 1))


def correction_tables(problem: OcpProblem) -> tuple[np.ndarray, np.ndarray]:
    """Lower-bound wear-correction tables.

    corr[j, s, a] is the correction of compound j at age a for a stint that
    started at horizon lap s; corr_init[a] is the same for the stint already
    running at the first lap (initial wear, initial compound).
    """
    n = problem.horizon
    cfg = problem.cfg
    mass = light_mass_profile(problem)
    m_ref = problem.tire[15]
    ratios = mass / m_ref

    corr = np.zeros((3, n, n))
    for ji, tp in enumerate((cfg.soft, cfg.medium, cfg.hard)):
        for s in range(n):
            tw = 0.0
            for a in range(n - s):
                corr[ji, s, a] = tp.correction(tw)
                tw = min(1.0, tp.wear_step(tw, ratios[s + a]))

    corr_init = np.zeros(n)
    tp0 = cfg.tire(int(round(problem.init[3])))
    tw = float(problem.init[5])
    for a in range(n):
        corr_init[a] = tp0.correction(tw)
        tw = min(1.0, tp0.wear_step(tw, ratios[a]))
    return corr, corr_init


@njit(cache=True)
def _schedule_dp(n, corr, corr_init, init_compound, init_changed, init_out,
                 lo, hi, max_stops, gap, d_in, d_out, d_oi):
    """Exact minimum of pit offsets + (lower-bound) corrections over all
    schedules consistent with the per-lap domains. Returns (value, schedule)
    with schedule[k] = 0 for stay or the mounted compound code."""
    n_age = n + 1
    n_stop = max_stops + 1
    big = 1e18
    # state index: (((j * n_age + a) * 2 + changed) * n_stop + stops) * 2 + out
    size = 4 * n_age * 2 * n_stop * 2
    dp = np.full(size, big)
    bp = np.full((n, size), -1, dtype=np.int16)
    pred = np.full((n, size), -1, dtype=np.int32)

    def idx(j, a, ch, st, out):
        return (((j * n_age + a) * 2 + ch) * n_stop + st) * 2 + out

    start = idx(INITIAL_STINT, 0, init_changed, 0, init_out)
    dp[start] = 0.0

    for k in range(n):
        ndp = np.full(size, big)
        stay_ok = lo[k] <= 0.0
        c_lo = int(max(1.0, lo[k]))
        c_hi = int(hi[k])
        for j in range(4):
            cur = init_compound if j == INITIAL_STINT else j + 1
            for a in range(min(k + 1, n_age)):
                laps_into = k - a
                if j == INITIAL_STINT:
                    if laps_into != 0:
                        continue
                    base_corr = corr_init[a] if a < n else big
                else:
                    if laps_into < 0:
                        continue
                    base_corr = corr[j, laps_into, a] if laps_into < n else big
                for ch in range(2):
                    for st in range(n_stop):
                        for out in range(2):
                            i = idx(j, a, ch, st, out)
                            v = dp[i]
                            if v >= big:
                                continue
                            # stay out
                            if stay_ok and a + 1 < n_age:
                                cost = v + base_corr + (d_out if out == 1 else 0.0)
                                t = idx(j, a + 1, ch, st, 0)
                                if cost < ndp[t]:
                                    ndp[t] = cost
                                    bp[k, t] = 0
                                    pred[k, t] = i
                            # pit for compound c
                            if st < max_stops and (st == 0 or a >= gap) and c_hi >= 1:
                                for c in range(c_lo, c_hi + 1):
                                    cost = v + base_corr + (d_oi if out == 1 else d_in)
                                    nch = 1 if (ch == 1 or c != cur) else 0
                                    t = idx(c - 1, 0, nch, st + 1, 1)
                                    if cost < ndp[t]:
                                        ndp[t] = cost
                                        bp[k, t] = c
                                        pred[k, t] = i
        dp = ndp

    best = big
    best_i = -1
    for j in range(4):
        for a in range(n_age):
            for st in range(n_stop):
                for out in range(2):
                    i = idx(j, a, 1, st, out)
                    if dp[i] < best:
                        best = dp[i]
                        best_i = i

    schedule = np.zeros(n, dtype=np.int64)
    if best_i >= 0:
        i = best_i
        for k in range(n - 1, -1, -1):
            schedule[k] = bp[k, i]
            i = pred[k, i]
    return best, schedule


def schedule_bound(problem: OcpProblem, lo: np.ndarray, hi: np.ndarray,
                   tables: tuple[np.ndarray, np.ndarray]) -> tuple[float, np.ndarray]:
    """Certified lower bound of the schedule part plus its argmin schedule.

    Returns (inf, zeros) when no legal schedule fits the domains.
    """
    corr, corr_init = tables
    p = problem.lapp
    value, schedule = _schedule_dp(
        problem.horizon, corr, corr_init,
        int(round(problem.init[3])), int(problem.init[4] >= 1.0),
        int(problem.init[6] > 0.5),
        np.asarray(lo, dtype=float), np.asarray(hi, dtype=float),
        int(problem.lims[0]), int(problem.lims[1]),
        p[9], p[10], p[11],
    )
    if value >= 1e17:
        return np.inf, schedule
    return float(value), schedule


def energy_bound_problem(problem: OcpProblem) -> OcpProblem:
    """Copy of the problem with the schedule part stripped out.

    Pit domains pinned to zero, kind offsets and corrections zeroed, widest
    recharge window everywhere, and the compound-change requirement disarmed.
    Its optimum lower-bounds the energy part of every schedule.
    """
    lapp = problem.lapp.copy()
    lapp[7] = lapp[7] + lapp[8]   # widen the free-recharge window
    lapp[8] = 0.0
    lapp[9] = lapp[10] = lapp[11] = 0.0
    tire = problem.tire.copy()
    tire[0:15] = 0.0              # freeze wear, drop penalties and curvature
    init = problem.init.copy()
    init[4] = 1.0                 # compound change satisfied by fiat
    init[5] = 0.0                 # frozen wear state starts at zero
    n = problem.horizon
    return dataclasses.replace(
        problem, lapp=lapp, tire=tire, init=init,
        lo=np.zeros(n), hi=np.zeros(n),
    )
