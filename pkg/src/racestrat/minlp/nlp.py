"""Inner continuous solver for the relaxed race OCP.

Augmented-Lagrangian outer loop over the inequality list, with bound-
constrained quasi-Newton (L-BFGS-B) minimization of the merit function.
Targets: constraint violation below 1e-8 and projected-gradient
stationarity below 1e-6; a relaxation that cannot reach violation 1e-6
within the iteration budget is declared infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .ocp import OcpProblem

FEAS_TOL = 1e-8
STAT_TOL = 1e-6
INFEAS_TOL = 1e-6
MAX_TOTAL_ITERS = 2000


class NlpDiverged(RuntimeError):
    """Solver hit its iteration cap far from feasibility; carries best iterate."""

    def __init__(self, message: str, result: "NlpResult"):
        super().__init__(message)
        self.result = result


@dataclass
class NlpResult:
    x: np.ndarray
    objective: float              # race time of the solved horizon, s
    feasible: bool
    max_violation: float
    stationarity: float
    iterations: int
    ps: np.ndarray = field(default=None)
    states: dict = field(default_factory=dict)

    @property
    def lower_bound(self) -> float:
        return self.objective


def _projected_grad_norm(x, grad, lb, ub) -> float:
    stepped = np.clip(x - grad, lb, ub)
    return float(np.max(np.abs(x - stepped)))


def solve_nlp(
    problem: OcpProblem,
    ps_lo: np.ndarray | None = None,
    ps_hi: np.ndarray | None = None,
    x0: np.ndarray | None = None,
    feas_tol: float = FEAS_TOL,
    stat_tol: float = STAT_TOL,
    max_total_iters: int = MAX_TOTAL_ITERS,
) -> NlpResult:
    """Solve the continuous relaxation with the given per-lap pit domains.

    The returned objective is a node bound for every integer completion the
    domains cover (up to the local nature of the solve). Raises NlpDiverged
    when the iteration cap is reached with violation above 1e-6.
    """
    n = problem.horizon
    ps_lo = problem.lo if ps_lo is None else np.asarray(ps_lo, dtype=float)
    ps_hi = problem.hi if ps_hi is None else np.asarray(ps_hi, dtype=float)
    bounds = problem.variable_bounds(ps_lo, ps_hi)
    lb = np.array([b[0] for b in bounds])
    ub = np.array([b[1] for b in bounds])

    if x0 is None:
        x = problem.initial_point()
    else:
        x = np.asarray(x0, dtype=float).copy()
    x = np.clip(x, lb, ub)

    lam = np.zeros(problem.n_constraints)
    rho = 10.0
    total_iters = 0
    prev_viol = np.inf
    best: NlpResult | None = None

    for _ in range(30):
        def merit(xx, lam=lam, rho=rho):
            out = problem.evaluate(xx, lam, rho)
            grad = np.concatenate([out[3], out[4], out[5]])
            return out[1], grad

        res = minimize(
            merit, x, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": 250, "ftol": 1e-14, "gtol": 1e-10, "maxcor": 20},
        )
        x = np.clip(res.x, lb, ub)
        total_iters += int(res.nit)

        out = problem.evaluate(x, lam, rho)
        g = out[2]
        viol = float(np.max(g)) if g.size else 0.0
        viol = max(0.0, viol)
        al_grad = np.concatenate([out[3], out[4], out[5]])
        stat = _projected_grad_norm(x, al_grad, lb, ub)

        current = NlpResult(
            x=x.copy(), objective=float(out[0]),
            feasible=viol <= feas_tol, max_violation=viol, stationarity=stat,
            iterations=total_iters, ps=problem.split(x)[2].copy(),
            states={"e_b": out[7], "e_f": out[8], "m": out[9],
                    "tc": out[10], "bc": out[11], "tw": out[12], "t_lap": out[6]},
        )
        if best is None or (current.max_violation, current.objective) < (best.max_violation, best.objective):
            best = current

        if viol <= feas_tol and stat <= stat_tol:
            return current
        if total_iters >= max_total_iters:
            if viol > INFEAS_TOL:
                raise NlpDiverged(
                    f"violation {viol:.2e} above {INFEAS_TOL} after {total_iters} iterations", best
                )
            return best

        lam = np.maximum(0.0, lam + rho * g)
        if viol > 0.25 * prev_viol:
            rho = min(rho * 8.0, 1e9)
        prev_viol = max(viol, 1e-16)

    if best.max_violation > INFEAS_TOL:
        raise NlpDiverged(
            f"violation {best.max_violation:.2e} after augmented-Lagrangian loop", best
        )
    return best
