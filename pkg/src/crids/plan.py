"""Adaptation planning: per-site threshold assignment, budgeted selection and
the cost/resilience frontier."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .aggregate import post_adaptation_cri
from .model import (
    R3,
    RE4,
    AdaptationOption,
    CridsError,
    MembershipVector,
    OptionName,
    Plan,
    PlanStatus,
    Site,
    factor,
)


class InvalidBudgetError(CridsError, ValueError):
    pass


# Built-in feasibility gates. Each returns True when the option must be dropped.
def _on_moratorium(site: Site) -> bool:
    return bool(site.raw.get(RE4, 0.0))


def _shallow_separation(site: Site) -> bool:
    return R3 in site.raw and site.raw[R3] < 1.0


BUILTIN_EXCLUSIONS = {
    OptionName.SEWER_EXTENSION: (_on_moratorium,),
    OptionName.MOUND_SYSTEM: (_shallow_separation,),
}


@dataclass(frozen=True)
class ExclusionRule:
    """User rule: drop ``option`` when ``raw[factor] <op> value`` holds."""

    option: OptionName
    factor: str
    op: str
    value: float

    _OPS = {
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
        "==": lambda a, b: a == b,
        "!=": lambda a, b: a != b,
    }

    def __post_init__(self):
        if self.op not in self._OPS:
            raise ValueError(f"unsupported comparison {self.op!r}")
        factor(self.factor)

    def excludes(self, site: Site) -> bool:
        f = factor(self.factor)
        if f not in site.raw:
            return False
        return self._OPS[self.op](site.raw[f], self.value)


def feasible_options(
    site: Site,
    scores: Optional[MembershipVector],
    options: Sequence[AdaptationOption],
    rules: Sequence[ExclusionRule] = (),
) -> set[int]:
    """Ids of the options that may be applied at ``site``.

    Sewer extension is dropped inside a moratorium basin and mound systems
    where the vertical separation is under 1 ft; DoNothing always stays.
    """
    out = set()
    for opt in options:
        if opt.name is OptionName.DO_NOTHING:
            out.add(opt.id)
            continue
        if any(gate(site) for gate in BUILTIN_EXCLUSIONS.get(opt.name, ())):
            continue
        if any(r.option is opt.name and r.excludes(site) for r in rules):
            continue
        if not opt.is_feasible(site):
            continue
        out.add(opt.id)
    return out


@dataclass
class PlanningInstance:
    """Dense (site x option) cost, index and feasibility tables."""

    site_ids: list
    option_ids: list
    cost: np.ndarray
    index: np.ndarray
    thresholds: np.ndarray
    feasible: np.ndarray
    option_names: list = field(default_factory=list)

    def __post_init__(self):
        n, m = len(self.site_ids), len(self.option_ids)
        self.cost = np.asarray(self.cost, dtype=float).reshape(n, m)
        self.index = np.asarray(self.index, dtype=float).reshape(n, m)
        self.feasible = np.asarray(self.feasible, dtype=bool).reshape(n, m)
        t = np.asarray(self.thresholds, dtype=float)
        self.thresholds = np.broadcast_to(t, (n,)).copy()
        if (self.cost < 0).any():
            raise ValueError("costs must be nonnegative")

    @property
    def n_sites(self) -> int:
        return len(self.site_ids)

    def plan_from_choice(self, choice: Sequence[int], objective: float = math.nan) -> Plan:
        assignments, per_site, total = {}, {}, 0.0
        for i, l in enumerate(choice):
            sid = self.site_ids[i]
            assignments[sid] = self.option_ids[l]
            per_site[sid] = float(self.index[i, l])
            total += float(self.cost[i, l])
        return Plan(assignments, total, per_site, PlanStatus.OPTIMAL, (), objective)


def build_instance(
    sites: Sequence[Site],
    vectors: Mapping[str, MembershipVector],
    options: Sequence[AdaptationOption],
    thresholds: "float | Mapping[str, float]" = 0.0,
    rules: Sequence[ExclusionRule] = (),
) -> PlanningInstance:
    n, m = len(sites), len(options)
    cost = np.zeros((n, m))
    index = np.zeros((n, m))
    feasible = np.zeros((n, m), dtype=bool)
    b = np.zeros(n)
    for i, s in enumerate(sites):
        vec = vectors[s.id]
        ok = feasible_options(s, vec, options, rules)
        for l, opt in enumerate(options):
            cost[i, l] = opt.cost_for(s.id)
            index[i, l] = post_adaptation_cri(vec.scores, opt)
            feasible[i, l] = opt.id in ok
        b[i] = thresholds.get(s.id, 0.0) if isinstance(thresholds, Mapping) else thresholds
    return PlanningInstance(
        [s.id for s in sites], [o.id for o in options], cost, index, b, feasible,
        [o.name.value for o in options],
    )


def min_cost_assignment(instance: PlanningInstance) -> Plan:
    """Cheapest feasible option per site meeting that site's threshold.

    Ties go to the higher resulting index, then the lower option id. Sites
    with no qualifying option are all listed in an Infeasible plan.
    """
    choice, bad = [], []
    for i in range(instance.n_sites):
        best = None
        for l in range(len(instance.option_ids)):
            if not instance.feasible[i, l] or instance.index[i, l] < instance.thresholds[i]:
                continue
            key = (instance.cost[i, l], -instance.index[i, l], instance.option_ids[l])
            if best is None or key < best[0]:
                best = (key, l)
        if best is None:
            bad.append(instance.site_ids[i])
            choice.append(None)
        else:
            choice.append(best[1])
    if bad:
        partial = {
            instance.site_ids[i]: instance.option_ids[l] for i, l in enumerate(choice) if l is not None
        }
        per_site = {
            instance.site_ids[i]: float(instance.index[i, l]) for i, l in enumerate(choice) if l is not None
        }
        total = sum(float(instance.cost[i, l]) for i, l in enumerate(choice) if l is not None)
        return Plan(partial, total, per_site, PlanStatus.INFEASIBLE, tuple(bad))
    plan = instance.plan_from_choice(choice)
    return Plan(plan.assignments, plan.total_cost, plan.per_site_index, PlanStatus.OPTIMAL, (),
                plan.total_cost)


MAX_TABLE_CELLS = 200_000_000


def _units(instance: PlanningInstance, quantum: float) -> tuple[np.ndarray, int]:
    """Quantized integer costs and their common divisor.

    Dividing by the gcd of all unit costs shrinks the table without changing
    which plans are affordable.
    """
    if not quantum > 0:
        raise ValueError("cost quantum must be positive")
    # round up: a quantized plan never under-reports its spend
    units = np.ceil(instance.cost / quantum - 1e-9).astype(np.int64)
    g = int(np.gcd.reduce(units[instance.feasible])) if instance.feasible.any() else 0
    g = max(g, 1)
    return units // g, g


def _check_table(instance: PlanningInstance, cap: int) -> None:
    if instance.n_sites * (cap + 1) > MAX_TABLE_CELLS:
        raise InvalidBudgetError(
            f"knapsack table of {instance.n_sites} x {cap + 1} cells is too large; raise the cost quantum"
        )


def _knapsack_table(instance: PlanningInstance, units: np.ndarray, cap: int):
    """Exact-spend multiple-choice knapsack.

    ``best[b]`` is the largest index total reachable with quantized spend
    exactly ``b``; ``pick[i, b]`` records the option used for site ``i``.
    """
    n, m = instance.cost.shape
    best = np.full(cap + 1, -np.inf)
    best[0] = 0.0
    pick = np.full((n, cap + 1), -1, dtype=np.int16)
    for i in range(n):
        nxt = np.full(cap + 1, -np.inf)
        for l in range(m):
            if not instance.feasible[i, l]:
                continue
            w = int(units[i, l])
            if w > cap:
                continue
            cand = np.full(cap + 1, -np.inf)
            cand[w:] = best[: cap + 1 - w] + instance.index[i, l]
            better = cand > nxt
            nxt = np.where(better, cand, nxt)
            pick[i, better] = l
        if not np.isfinite(nxt).any():
            raise InvalidBudgetError(f"site {instance.site_ids[i]} has no affordable feasible option")
        best = nxt
    return best, pick


def _backtrack(instance: PlanningInstance, units: np.ndarray, pick: np.ndarray, b: int) -> list[int]:
    choice = [0] * instance.n_sites
    for i in range(instance.n_sites - 1, -1, -1):
        l = int(pick[i, b])
        choice[i] = l
        b -= int(units[i, l])
    return choice


def _min_feasible_cost(instance: PlanningInstance) -> float:
    total = 0.0
    for i in range(instance.n_sites):
        costs = instance.cost[i][instance.feasible[i]]
        if costs.size == 0:
            raise InvalidBudgetError(f"site {instance.site_ids[i]} has no feasible option")
        total += float(costs.min())
    return total


def max_resilience_under_budget(
    instance: PlanningInstance, budget: float, quantum: float = 1.0, objective: str = "sum"
) -> Plan:
    """Best total (or worst-site) index with total cost within ``budget``.

    Costs are rounded up to multiples of ``quantum``; the search is exact on
    the quantized costs. Among equally good plans the cheaper one wins.
    """
    if budget < 0:
        raise InvalidBudgetError("budget must be nonnegative")
    floor = _min_feasible_cost(instance)
    if budget < floor:
        raise InvalidBudgetError(f"budget {budget} is below the cheapest feasible plan ({floor})")
    if objective == "min":
        return _max_min_under_budget(instance, budget, quantum)
    if objective != "sum":
        raise ValueError(f"unknown objective {objective!r}")
    if instance.n_sites == 0:
        return Plan({}, 0.0, {}, PlanStatus.OPTIMAL, (), 0.0)
    units, g = _units(instance, quantum)
    cap = int(math.floor(budget / quantum + 1e-9)) // g
    cap = min(cap, int(np.where(instance.feasible, units, 0).max(axis=1).sum()))
    _check_table(instance, cap)
    best, pick = _knapsack_table(instance, units, cap)
    top = best.max()
    b = int(np.nonzero(best == top)[0][0])
    return instance.plan_from_choice(_backtrack(instance, units, pick, b), float(top))


def _max_min_under_budget(instance: PlanningInstance, budget: float, quantum: float) -> Plan:
    # the optimal worst-site index is one of the table entries; bisect over them
    if instance.n_sites == 0:
        return Plan({}, 0.0, {}, PlanStatus.OPTIMAL, (), 0.0)
    levels = np.unique(instance.index[instance.feasible])
    lo, hi, found = 0, len(levels) - 1, None
    while lo <= hi:
        mid = (lo + hi) // 2
        trial = PlanningInstance(
            instance.site_ids, instance.option_ids, instance.cost, instance.index,
            np.full(instance.n_sites, levels[mid]), instance.feasible,
        )
        plan = min_cost_assignment(trial)
        spend = sum(math.ceil(c / quantum - 1e-9) for c in _chosen_costs(instance, plan))
        if plan.optimal and spend * quantum <= budget + 1e-9 * max(1.0, budget):
            found = plan
            lo = mid + 1
        else:
            hi = mid - 1
    if found is None:
        raise InvalidBudgetError(f"budget {budget} does not cover the quantized cheapest plan")
    worst = min(found.per_site_index.values())
    return Plan(found.assignments, found.total_cost, found.per_site_index, PlanStatus.OPTIMAL, (), worst)


def _chosen_costs(instance: PlanningInstance, plan: Plan):
    col = {o: l for l, o in enumerate(instance.option_ids)}
    for i, sid in enumerate(instance.site_ids):
        if sid in plan.assignments:
            yield float(instance.cost[i, col[plan.assignments[sid]]])


@dataclass(frozen=True)
class FrontierPoint:
    total_cost: float
    total_index: float
    plan: Plan


def pareto_frontier(
    instance: PlanningInstance, quantum: float = 1.0, max_budget: Optional[float] = None
) -> list[FrontierPoint]:
    """Non-dominated (cost, summed index) plans, cheapest first.

    Equivalent to solving the budgeted problem at every reachable spend up to
    ``max_budget`` and keeping the points where resilience strictly improves.
    """
    if instance.n_sites == 0:
        return [FrontierPoint(0.0, 0.0, Plan({}, 0.0, {}, PlanStatus.OPTIMAL, (), 0.0))]
    _min_feasible_cost(instance)
    units, g = _units(instance, quantum)
    cap = int(np.where(instance.feasible, units, 0).max(axis=1).sum())
    if max_budget is not None:
        cap = min(cap, int(math.floor(max_budget / quantum + 1e-9)) // g)
    _check_table(instance, cap)
    best, pick = _knapsack_table(instance, units, cap)
    out = []
    running = -np.inf
    for b in range(cap + 1):
        if best[b] > running:
            running = best[b]
            plan = instance.plan_from_choice(_backtrack(instance, units, pick, b), float(best[b]))
            out.append(FrontierPoint(plan.total_cost, float(best[b]), plan))
    return out


def non_dominated(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Filter (cost, value) pairs to the minimize-cost / maximize-value front."""
    out = []
    for c, v in sorted(set(points), key=lambda p: (p[0], -p[1])):
        if not out or v > out[-1][1]:
            out.append((c, v))
    return out
