"""Exhaustive reference solvers for small planning instances."""
import itertools

import numpy as np

from crids.plan import PlanningInstance


def random_instance(rng, n, m, infeasible=0.2, threshold=None):
    cost = rng.integers(0, 60, (n, m)).astype(float)
    cost[:, 0] = 0.0
    index = rng.uniform(0, 1, (n, m))
    feasible = rng.uniform(0, 1, (n, m)) > infeasible
    feasible[:, 0] = True
    b = rng.uniform(0, 1, n) if threshold is None else threshold
    return PlanningInstance([f"s{i}" for i in range(n)], list(range(1, m + 1)), cost, index, b, feasible)


def choices(inst):
    per_site = [[l for l in range(len(inst.option_ids)) if inst.feasible[i, l]] for i in range(inst.n_sites)]
    return itertools.product(*per_site)


def totals(inst, choice):
    cost = sum(inst.cost[i, l] for i, l in enumerate(choice))
    value = sum(inst.index[i, l] for i, l in enumerate(choice))
    return cost, value


def brute_min_cost(inst):
    """Cheapest total cost over all plans meeting every threshold, or None."""
    best = None
    for ch in choices(inst):
        if all(inst.index[i, l] >= inst.thresholds[i] for i, l in enumerate(ch)):
            c, _ = totals(inst, ch)
            best = c if best is None else min(best, c)
    return best


def brute_budget(inst, budget, objective="sum"):
    best = -np.inf
    for ch in choices(inst):
        c, v = totals(inst, ch)
        if objective == "min":
            v = min(inst.index[i, l] for i, l in enumerate(ch))
        if c <= budget:
            best = max(best, v)
    return best


def brute_frontier(inst):
    pts = [totals(inst, ch) for ch in choices(inst)]
    front = []
    for c, v in sorted(pts, key=lambda p: (p[0], -p[1])):
        if not front or v > front[-1][1] + 1e-12:
            front.append((c, v))
    return front
