"""Jitted forward/adjoint evaluation of the reformulated race OCP.

One call evaluates the full lap recursion (states, lap times, race time),
the constraint vector, the augmented-Lagrangian penalty, and the exact
gradient of objective-plus-penalty via a reverse sweep. The branch-and-bound
search calls this thousands of times, hence the numba compilation.

Parameter packs (plain float64 arrays, built by ocp.build_ocp):

lapp[16]: base_time, mass_gain, deploy_gain, fuel_gain, recharge_penalty,
          low_bound_penalty, penalty_scale, free_recharge,
          inlap_recharge_bonus, inlap_offset, outlap_offset,
          out_inlap_offset, empty_mass, fuel_per_lap_nominal,
          battery_capacity, fuel_energy_density
tire[16]: wear_gain[3], wear_mass_gain[3], wear_offset[3],
          fresh_penalty[3], wear_curvature[3], mass_ref
init[7]:  e_b, e_f, m, tc, b_comp, tw, b_outlap at the first solved lap
lims[2]:  max_stops, spacing_gap (0 disables the spacing windows)

Constraint vector layout (all written as g <= 0), N = horizon:
  [0,N)    -e_b[k+1]          [N,2N)   e_b[k+1]-cap     [2N,3N) -e_f[k+1]
  [3N,4N)  tw[k+1]-1          [4N,5N)  -tw[k+1]
  [5N,6N)  1-tc[k+1]          [6N,7N)  tc[k+1]-3
  [7N,8N)  m_empty-m[k+1]     [8N,9N)  m[k+1]-m_start
  9N       1-b_comp[N]        9N+1     sum(b_ps)-max_stops
  [9N+2, ...)  spacing windows sum(b_ps[k:k+gap])-1
"""

from __future__ import annotations

import numpy as np
from numba import njit


def n_constraints(n: int, spacing_gap: int) -> int:
    windows = max(0, n - spacing_gap + 1) if spacing_gap > 0 else 0
    return 9 * n + 2 + windows


@njit(cache=True)
def _hinge(u):
    if u <= 0.0:
        return 0.0
    if u <= 1.0:
        return u * u * u / 3.0
    return u * u - u + 1.0 / 3.0


@njit(cache=True)
def _hinge_d(u):
    if u <= 0.0:
        return 0.0
    if u <= 1.0:
        return u * u
    return 2.0 * u - 1.0


@njit(cache=True)
def ocp_eval(de_b, de_f, ps, init, lapp, tire, lims, lam, rho):
    """Evaluate objective, constraints, AL penalty and its full gradient.

    Returns (t_race, al_value, g, grad_de_b, grad_de_f, grad_ps,
             t_lap, e_b, e_f, m, tc, bc, tw, bps).
    """
    n = de_b.shape[0]
    t0 = lapp[0]
    k_m = lapp[1]
    k_b = lapp[2]
    k_f = lapp[3]
    w_hi = lapp[4]
    w_lo = lapp[5]
    sig = lapp[6]
    r_free = lapp[7]
    r_extra = lapp[8]
    d_in = lapp[9]
    d_out = lapp[10]
    d_oi = lapp[11]
    m_empty = lapp[12]
    de_f_nom = lapp[13]
    cap = lapp[14]
    h_lhv = lapp[15]

    wa = tire[0:3]
    wb = tire[3:6]
    wc = tire[6:9]
    td = tire[9:12]
    te = tire[12:15]
    m_ref = tire[15]

    max_stops = lims[0]
    gap = int(lims[1])
    n_windows = n - gap + 1 if gap > 0 else 0
    if n_windows < 0:
        n_windows = 0
    m_con = 9 * n + 2 + n_windows

    e_b = np.empty(n + 1)
    e_f = np.empty(n + 1)
    m = np.empty(n + 1)
    tc = np.empty(n + 1)
    bc = np.empty(n + 1)
    tw = np.empty(n + 1)
    bps = np.empty(n)
    t_lap = np.empty(n)

    e_b[0] = init[0]
    e_f[0] = init[1]
    m[0] = init[2]
    tc[0] = init[3]
    bc[0] = init[4]
    tw[0] = init[5]
    bout0 = init[6]

    # Forward pass ----------------------------------------------------------
    t_race = 0.0
    for k in range(n):
        p = ps[k]
        bp = 1.0 - (1.0 - p) * (2.0 - p) * (3.0 - p) / 6.0
        bps[k] = bp
        b_in = bp
        b_out = bps[k - 1] if k > 0 else bout0

        z1 = 1.0 - tc[k]
        z2 = 2.0 - tc[k]
        z3 = 3.0 - tc[k]
        w1 = 0.5 * z2 * z3
        w2 = -z1 * z3
        w3 = 0.5 * z1 * z2

        u0 = (de_b[k] - r_free) / sig
        u1 = (de_b[k] - r_free - r_extra) / sig
        uw = (e_b[k] + de_b[k] - cap) / sig
        ul = -(e_b[k] + de_b[k]) / sig
        t_n = w_hi * _hinge(u0)
        t_i = d_in + w_hi * _hinge(u1)
        t_o = d_out + w_hi * _hinge(u0)
        t_oi = d_oi + w_hi * _hinge(u1)
        blend = (
            (1.0 - b_in) * (1.0 - b_out) * t_n
            + b_in * (1.0 - b_out) * t_i
            + (1.0 - b_in) * b_out * t_o
            + b_in * b_out * t_oi
        )
        base = (
            t0
            + k_m * (m[k] - m_empty)
            + k_b * de_b[k]
            - k_f * (de_f[k] - de_f_nom)
            + w_hi * _hinge(uw)
            + w_lo * _hinge(ul)
        )
        corr = (
            w1 * (td[0] + te[0] * tw[k] * tw[k])
            + w2 * (td[1] + te[1] * tw[k] * tw[k])
            + w3 * (td[2] + te[2] * tw[k] * tw[k])
        )
        t_lap[k] = base + blend + corr
        t_race += t_lap[k]

        ratio = m[k] / m_ref
        f1 = wa[0] * tw[k] + wb[0] * ratio + wc[0]
        f2 = wa[1] * tw[k] + wb[1] * ratio + wc[1]
        f3 = wa[2] * tw[k] + wb[2] * ratio + wc[2]
        s_wear = w1 * f1 + w2 * f2 + w3 * f3

        e_b[k + 1] = e_b[k] + de_b[k]
        e_f[k + 1] = e_f[k] - de_f[k]
        m[k + 1] = m[k] - de_f[k] / h_lhv
        tc[k + 1] = tc[k] * (1.0 - bp) + p
        dd = p - tc[k]
        bc[k + 1] = bc[k] + dd * dd * bp
        tw[k + 1] = (1.0 - bp) * s_wear

    # Constraints -----------------------------------------------------------
    g = np.empty(m_con)
    for k in range(n):
        g[k] = -e_b[k + 1]
        g[n + k] = e_b[k + 1] - cap
        g[2 * n + k] = -e_f[k + 1]
        g[3 * n + k] = tw[k + 1] - 1.0
        g[4 * n + k] = -tw[k + 1]
        g[5 * n + k] = 1.0 - tc[k + 1]
        g[6 * n + k] = tc[k + 1] - 3.0
        g[7 * n + k] = m_empty - m[k + 1]
        g[8 * n + k] = m[k + 1] - m[0]
    g[9 * n] = 1.0 - bc[n]
    bps_sum = 0.0
    for k in range(n):
        bps_sum += bps[k]
    g[9 * n + 1] = bps_sum - max_stops
    for w in range(n_windows):
        acc = 0.0
        for j in range(gap):
            acc += bps[w + j]
        g[9 * n + 2 + w] = acc - 1.0

    # Active AL weights mu_i = max(0, lam_i + rho * g_i) -----------------------
    mu = np.zeros(m_con)
    penalty = 0.0
    if rho > 0.0:
        for i in range(m_con):
            t = lam[i] + rho * g[i]
            if t > 0.0:
                mu[i] = t
                penalty += (t * t - lam[i] * lam[i]) / (2.0 * rho)
            else:
                penalty += -(lam[i] * lam[i]) / (2.0 * rho)
    al_value = t_race + penalty

    # Reverse sweep -----------------------------------------------------------
    a_eb = np.zeros(n + 1)
    a_ef = np.zeros(n + 1)
    a_m = np.zeros(n + 1)
    a_tc = np.zeros(n + 1)
    a_bc = np.zeros(n + 1)
    a_tw = np.zeros(n + 1)
    a_bps = np.zeros(n)
    gdb = np.zeros(n)
    gdf = np.zeros(n)
    gps = np.zeros(n)

    for k in range(n):
        a_eb[k + 1] += mu[n + k] - mu[k]
        a_ef[k + 1] += -mu[2 * n + k]
        a_tw[k + 1] += mu[3 * n + k] - mu[4 * n + k]
        a_tc[k + 1] += mu[6 * n + k] - mu[5 * n + k]
        a_m[k + 1] += mu[8 * n + k] - mu[7 * n + k]
        a_bps[k] += mu[9 * n + 1]
    a_bc[n] += -mu[9 * n]
    for w in range(n_windows):
        for j in range(gap):
            a_bps[w + j] += mu[9 * n + 2 + w]

    for k in range(n - 1, -1, -1):
        p = ps[k]
        bp = bps[k]
        b_in = bp
        b_out = bps[k - 1] if k > 0 else bout0

        z1 = 1.0 - tc[k]
        z2 = 2.0 - tc[k]
        z3 = 3.0 - tc[k]
        w1 = 0.5 * z2 * z3
        w2 = -z1 * z3
        w3 = 0.5 * z1 * z2
        w1d = 0.5 * (2.0 * tc[k] - 5.0)
        w2d = 4.0 - 2.0 * tc[k]
        w3d = 0.5 * (2.0 * tc[k] - 3.0)

        # transition adjoints
        a_eb[k] += a_eb[k + 1]
        gdb[k] += a_eb[k + 1]
        a_ef[k] += a_ef[k + 1]
        gdf[k] -= a_ef[k + 1]
        a_m[k] += a_m[k + 1]
        gdf[k] -= a_m[k + 1] / h_lhv

        a_tc[k] += a_tc[k + 1] * (1.0 - bp)
        a_bps[k] -= a_tc[k + 1] * tc[k]
        gps[k] += a_tc[k + 1]

        a_bc[k] += a_bc[k + 1]
        dd = p - tc[k]
        gps[k] += a_bc[k + 1] * 2.0 * dd * bp
        a_tc[k] -= a_bc[k + 1] * 2.0 * dd * bp
        a_bps[k] += a_bc[k + 1] * dd * dd

        ratio = m[k] / m_ref
        f1 = wa[0] * tw[k] + wb[0] * ratio + wc[0]
        f2 = wa[1] * tw[k] + wb[1] * ratio + wc[1]
        f3 = wa[2] * tw[k] + wb[2] * ratio + wc[2]
        s_wear = w1 * f1 + w2 * f2 + w3 * f3
        atw1 = a_tw[k + 1]
        a_tw[k] += atw1 * (1.0 - bp) * (w1 * wa[0] + w2 * wa[1] + w3 * wa[2])
        a_m[k] += atw1 * (1.0 - bp) * (w1 * wb[0] + w2 * wb[1] + w3 * wb[2]) / m_ref
        a_tc[k] += atw1 * (1.0 - bp) * (w1d * f1 + w2d * f2 + w3d * f3)
        a_bps[k] -= atw1 * s_wear

        # lap-time contribution (objective weight 1 per lap)
        u0 = (de_b[k] - r_free) / sig
        u1 = (de_b[k] - r_free - r_extra) / sig
        uw = (e_b[k] + de_b[k] - cap) / sig
        ul = -(e_b[k] + de_b[k]) / sig
        t_n = w_hi * _hinge(u0)
        t_i = d_in + w_hi * _hinge(u1)
        t_o = d_out + w_hi * _hinge(u0)
        t_oi = d_oi + w_hi * _hinge(u1)

        a_m[k] += k_m
        gdf[k] += -k_f
        wall_d = w_hi * _hinge_d(uw) / sig - w_lo * _hinge_d(ul) / sig
        hinge_mix = (
            ((1.0 - b_in) * (1.0 - b_out) + (1.0 - b_in) * b_out) * _hinge_d(u0)
            + (b_in * (1.0 - b_out) + b_in * b_out) * _hinge_d(u1)
        )
        gdb[k] += k_b + wall_d + w_hi * hinge_mix / sig
        a_eb[k] += wall_d
        a_bps[k] += (1.0 - b_out) * (t_i - t_n) + b_out * (t_oi - t_o)
        if k > 0:
            a_bps[k - 1] += (1.0 - b_in) * (t_o - t_n) + b_in * (t_oi - t_i)
        a_tc[k] += (
            w1d * (td[0] + te[0] * tw[k] * tw[k])
            + w2d * (td[1] + te[1] * tw[k] * tw[k])
            + w3d * (td[2] + te[2] * tw[k] * tw[k])
        )
        a_tw[k] += 2.0 * tw[k] * (w1 * te[0] + w2 * te[1] + w3 * te[2])

        dbps = (11.0 - 12.0 * p + 3.0 * p * p) / 6.0
        gps[k] += a_bps[k] * dbps

    return (t_race, al_value, g, gdb, gdf, gps, t_lap, e_b, e_f, m, tc, bc, tw, bps)
