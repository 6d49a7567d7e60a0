"""Branch-and-bound over the integer pit variables.

Nodes carry per-lap pit domains (intervals inside [0, 3]). Each node is
bounded by the certified energy + schedule decomposition from bound.py;
the schedule DP's argmin doubles as an integer completion that is solved
exactly (the inner problem is convex once the schedule is fixed) and fed to
the incumbent. Branching partitions the domain of one undecided lap, chosen
along the current node's best schedule so stop decisions are settled first.

Local solves of the smooth relaxation are available through solve_nlp but
are never used for pruning: the relaxation is nonconvex and a local optimum
can exceed the true node optimum, which would cut off the real solution.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from ..config import Compound
from ..race_model import ControlInput, EpisodeLog, Strategy, StepMode
from . import bound as bound_mod
from .nlp import NlpDiverged, NlpResult, solve_nlp
from .ocp import OcpProblem, schedule_count


class Infeasible(RuntimeError):
    """No legal pit schedule exists under the problem's rules."""


class TooLarge(ValueError):
    """Exhaustive enumeration would exceed the schedule budget."""


@dataclass
class BnbOptions:
    gap: float = 0.05                  # s, proven-gap target
    max_nodes: int = 20000
    time_limit: float | None = None   # s of wall time
    deterministic: bool = True
    prune_eps: float = 1e-9
    on_progress: callable = None       # called with (nodes, incumbent, bound)
    node_trace: list | None = None     # filled with (id, parent_id, depth, lb) rows


@dataclass
class BnBNode:
    node_id: int
    lo: np.ndarray
    hi: np.ndarray
    lower_bound: float
    depth: int
    parent_id: int

    def __lt__(self, other: "BnBNode") -> bool:
        return (self.lower_bound, self.node_id) < (other.lower_bound, other.node_id)


@dataclass
class OcpSolution:
    inputs: list[ControlInput]
    strategy: Strategy
    t_race: float
    gap: float
    lower_bound: float
    n_nodes: int
    nlp_iterations: int
    wall_time: float
    status: str                       # optimal | gap_reached | node_budget | time_limit
    log: EpisodeLog
    start_lap: int = 0
    enumerated: int = 0

    def to_dict(self) -> dict:
        return {
            "strategy": str(self.strategy),
            "stops": [[lap, int(c)] for lap, c in self.strategy.stops],
            "t_race": self.t_race,
            "gap": self.gap,
            "lower_bound": self.lower_bound,
            "n_nodes": self.n_nodes,
            "nlp_iterations": self.nlp_iterations,
            "wall_time": self.wall_time,
            "status": self.status,
            "start_lap": self.start_lap,
            "inputs": [[inp.de_b, inp.de_f, inp.ps] for inp in self.inputs],
            "laps": [vars(rec) for rec in self.log.laps],
        }


class _Search:
    """Shared state of one optimization run."""

    def __init__(self, problem: OcpProblem, opts: BnbOptions):
        self.problem = problem
        self.opts = opts
        self.tables = bound_mod.correction_tables(problem)
        energy = solve_nlp(bound_mod.energy_bound_problem(problem))
        if not energy.feasible:
            raise Infeasible("energy sub-problem infeasible")
        self.energy_bound = energy.objective
        self.energy_x = energy.x
        self.cache: dict[tuple, NlpResult | None] = {}
        self.nlp_iterations = int(energy.iterations)
        self.incumbent: NlpResult | None = None
        self.incumbent_sched: np.ndarray | None = None

    def node_bound(self, lo, hi) -> tuple[float, np.ndarray]:
        value, sched = bound_mod.schedule_bound(self.problem, lo, hi, self.tables)
        if not np.isfinite(value):
            return np.inf, sched
        return self.energy_bound + value, sched

    def solve_schedule(self, sched: np.ndarray) -> NlpResult | None:
        """Exact (convex) solve with the pit schedule fixed; memoized."""
        key = tuple(int(c) for c in sched)
        if key in self.cache:
            return self.cache[key]
        n = self.problem.horizon
        lo = np.array(key, dtype=float)
        x0 = self.energy_x.copy()
        x0[2 * n:] = lo
        try:
            res = solve_nlp(self.problem, lo, lo, x0=x0)
        except NlpDiverged:
            res = None
        else:
            self.nlp_iterations += res.iterations
            if not res.feasible:
                res = None
        self.cache[key] = res
        return res

    def offer_incumbent(self, sched: np.ndarray, res: NlpResult | None) -> None:
        if res is None:
            return
        if self.incumbent is None or res.objective < self.incumbent.objective - 1e-12:
            # every incumbent must replay through the strict simulator
            log = self.problem.simulate(_project(self.problem, res.x), mode=StepMode.STRICT)
            self.incumbent = res
            self.incumbent_sched = np.asarray(sched, dtype=int).copy()
            assert abs(log.total_time - res.objective) < 1e-5


def _project(problem: OcpProblem, x: np.ndarray) -> np.ndarray:
    """Clip solver dust so the strict simulator accepts the trajectory."""
    n = problem.horizon
    cfg = problem.cfg
    x = x.copy()
    de_b, de_f, ps = problem.split(x)
    e_b = problem.init[0]
    e_f = problem.init[1]
    for k in range(n):
        de_b[k] = min(max(de_b[k], -e_b), cfg.battery_capacity - e_b)
        de_f[k] = min(de_f[k], e_f)
        e_b += de_b[k]
        e_f -= de_f[k]
        ps[k] = round(ps[k])
    return x


def local_shift(search: _Search, sched: np.ndarray) -> None:
    """One pass of single-lap stop moves and compound swaps."""
    problem = search.problem
    n = problem.horizon
    base = sched.copy()
    stops = [k for k in range(n) if base[k] > 0]
    for k in stops:
        for move in (-1, 1):
            j = k + move
            if 0 <= j < n and base[j] == 0 and problem.hi[j] >= 1:
                cand = base.copy()
                cand[j] = cand[k]
                cand[k] = 0
                if _schedule_ok(problem, cand):
                    search.offer_incumbent(cand, search.solve_schedule(cand))
        for c in (1, 2, 3):
            if c != base[k] and problem.lo[k] <= c <= problem.hi[k]:
                cand = base.copy()
                cand[k] = c
                if _schedule_ok(problem, cand):
                    search.offer_incumbent(cand, search.solve_schedule(cand))


def _schedule_ok(problem: OcpProblem, sched: np.ndarray) -> bool:
    """Pit-rule and legality screen for an integer schedule."""
    rules = problem.rules
    stops = [k for k in range(problem.horizon) if sched[k] > 0]
    if len(stops) > rules.max_stops:
        return False
    for a, b in zip(stops, stops[1:]):
        if b - a < rules.min_stop_gap:
            return False
    for k in stops:
        if not problem.lo[k] <= sched[k] <= problem.hi[k]:
            return False
    for k in range(problem.horizon):
        if sched[k] == 0 and problem.lo[k] > 0:
            return False
    compound = int(round(problem.init[3]))
    changed = problem.init[4] >= 1.0
    for k in stops:
        if sched[k] != compound:
            changed = True
        compound = int(sched[k])
    return changed


def _branch_lap(node: BnBNode, sched: np.ndarray) -> int:
    """Undecided lap to split: along the node's best schedule, stops first."""
    undecided = np.nonzero(node.lo < node.hi)[0]
    for k in undecided:
        if sched[k] > 0:
            return int(k)
    return int(undecided[0])


def _children(node: BnBNode, lap: int, sched_action: int, next_id) -> list[BnBNode]:
    """Partition the parent's domain at one lap.

    The child carrying the parent's best schedule keeps that action; siblings
    cover the remaining interval pieces.
    """
    pieces = []
    lo, hi = int(node.lo[lap]), int(node.hi[lap])
    act = int(sched_action)
    pieces.append((act, act))
    if act == 0:
        if hi >= 1:
            pieces.append((max(1, lo), hi))
    else:
        if lo <= act - 1:
            pieces.append((lo, act - 1))
        if act + 1 <= hi:
            pieces.append((act + 1, hi))
    out = []
    for plo, phi in pieces:
        clo = node.lo.copy()
        chi = node.hi.copy()
        clo[lap], chi[lap] = float(plo), float(phi)
        out.append(BnBNode(
            node_id=next_id(), lo=clo, hi=chi, lower_bound=node.lower_bound,
            depth=node.depth + 1, parent_id=node.node_id,
        ))
    return out


def branch_and_bound(problem: OcpProblem, opts: BnbOptions | None = None) -> OcpSolution:
    """Global search for the minimum-race-time strategy.

    Returns the incumbent with a proven gap, or best-effort with the gap at
    the node budget / time limit. Raises Infeasible when no legal schedule
    exists.
    """
    opts = opts or BnbOptions()
    t_start = time.perf_counter()
    search = _Search(problem, opts)

    counter = iter(range(1, 1 << 30))
    next_id = lambda: next(counter)

    root_lb, root_sched = search.node_bound(problem.lo, problem.hi)
    if not np.isfinite(root_lb):
        raise Infeasible("no legal pit schedule fits the pit rules")
    search.offer_incumbent(root_sched, search.solve_schedule(root_sched))
    if search.incumbent is not None:
        local_shift(search, search.incumbent_sched)

    root = BnBNode(0, problem.lo.copy(), problem.hi.copy(), root_lb, 0, -1)
    queue: list[BnBNode] = [root]
    n_nodes = 1
    status = "optimal"

    while queue:
        if search.incumbent is not None:
            best_lb = queue[0].lower_bound
            if search.incumbent.objective - best_lb <= opts.gap:
                status = "gap_reached" if search.incumbent.objective - best_lb > opts.prune_eps else "optimal"
                break
        if n_nodes >= opts.max_nodes:
            status = "node_budget"
            break
        if opts.time_limit is not None and time.perf_counter() - t_start > opts.time_limit:
            status = "time_limit"
            break

        node = heapq.heappop(queue)
        if search.incumbent is not None and node.lower_bound >= search.incumbent.objective - opts.prune_eps:
            continue

        lb, sched = search.node_bound(node.lo, node.hi)
        lb = max(lb, node.lower_bound)  # child bounds never regress below the parent
        if opts.node_trace is not None:
            opts.node_trace.append((node.node_id, node.parent_id, node.depth, lb))
        if not np.isfinite(lb):
            continue
        if search.incumbent is not None and lb >= search.incumbent.objective - opts.prune_eps:
            continue

        search.offer_incumbent(sched, search.solve_schedule(sched))

        if np.all(node.lo == node.hi):
            continue  # fully fixed: the exact solve above closes the node

        lap = _branch_lap(node, sched)
        for child in _children(node, lap, sched[lap], next_id):
            child.lower_bound = lb
            heapq.heappush(queue, child)
            n_nodes += 1

        if opts.on_progress is not None:
            inc = search.incumbent.objective if search.incumbent else math.inf
            opts.on_progress(n_nodes, inc, queue[0].lower_bound if queue else inc)

    if search.incumbent is None:
        raise Infeasible("no feasible integer solution found")

    open_lb = min((nd.lower_bound for nd in queue), default=search.incumbent.objective)
    gap = max(0.0, search.incumbent.objective - min(open_lb, search.incumbent.objective))
    x = _project(problem, search.incumbent.x)
    log = problem.simulate(x, mode=StepMode.STRICT)
    inputs = problem.inputs_from(x)
    stops = tuple(
        (problem.start_lap + k, Compound(int(s)))
        for k, s in enumerate(search.incumbent_sched) if s > 0
    )
    strategy = Strategy(initial=Compound(int(round(problem.init[3]))), stops=stops)
    return OcpSolution(
        inputs=inputs,
        strategy=strategy,
        t_race=search.incumbent.objective,
        gap=gap,
        lower_bound=search.incumbent.objective - gap,
        n_nodes=n_nodes,
        nlp_iterations=search.nlp_iterations,
        wall_time=time.perf_counter() - t_start,
        status=status,
        log=log,
        start_lap=problem.start_lap,
    )


def exhaustive_oracle(problem: OcpProblem, max_stops: int, budget: int = 1_000_000) -> OcpSolution:
    """Enumerate every raw pit schedule with up to max_stops stops.

    Schedules violating the problem's pit rules count as enumerated but are
    not solved. Independent of branch_and_bound except for the shared inner
    convex solver.
    """
    n = problem.horizon
    total = schedule_count(n, max_stops)
    if total > budget:
        raise TooLarge(f"{total} schedules exceed the {budget} budget")

    t_start = time.perf_counter()
    search = _Search(problem, BnbOptions())
    enumerated = 0
    for s in range(max_stops + 1):
        for laps in combinations(range(n), s):
            for comps in product((1, 2, 3), repeat=s):
                enumerated += 1
                sched = np.zeros(n, dtype=int)
                for lap, c in zip(laps, comps):
                    sched[lap] = c
                if not _schedule_ok(problem, sched):
                    continue
                search.offer_incumbent(sched, search.solve_schedule(sched))
    if search.incumbent is None:
        raise Infeasible("no feasible schedule in the enumeration")

    x = _project(problem, search.incumbent.x)
    log = problem.simulate(x, mode=StepMode.STRICT)
    stops = tuple(
        (problem.start_lap + k, Compound(int(c)))
        for k, c in enumerate(search.incumbent_sched) if c > 0
    )
    return OcpSolution(
        inputs=problem.inputs_from(x),
        strategy=Strategy(initial=Compound(int(round(problem.init[3]))), stops=stops),
        t_race=search.incumbent.objective,
        gap=0.0,
        lower_bound=search.incumbent.objective,
        n_nodes=0,
        nlp_iterations=search.nlp_iterations,
        wall_time=time.perf_counter() - t_start,
        status="optimal",
        log=log,
        start_lap=problem.start_lap,
        enumerated=enumerated,
    )
