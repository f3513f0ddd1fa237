"""Reference implementations that share no code with the package.

Each one is deliberately naive: exhaustive enumeration, textbook Dijkstra,
finite differences.  They read only plain data (sets, dicts, numpy arrays).
"""

import heapq
import itertools
import math
from fractions import Fraction

import numpy as np


def grid_dijkstra(grid, blocked=()):
    """Shortest 4-connected path length from S to G avoiding walls and ``blocked``."""
    cells = {(x, y): ch for y, row in enumerate(grid) for x, ch in enumerate(row)}
    start = next(c for c, ch in cells.items() if ch == "S")
    goal = next(c for c, ch in cells.items() if ch == "G")
    blocked = set(blocked)
    dist = {start: 0}
    heap = [(0, start)]
    while heap:
        d, (x, y) = heapq.heappop(heap)
        if (x, y) == goal:
            return d
        if d > dist[(x, y)]:
            continue
        for nxt in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if cells.get(nxt, "#") == "#" or nxt in blocked:
                continue
            if d + 1 < dist.get(nxt, math.inf):
                dist[nxt] = d + 1
                heapq.heappush(heap, (d + 1, nxt))
    return math.inf


def strips_optimal_cost(init, goal, actions, soft_penalty=0):
    """Dijkstra over reachable states.  ``actions``: name -> (pre, add, del, cost, soft)."""
    init = frozenset(init)
    goal = frozenset(goal)
    best = {init: Fraction(0)}
    heap = [(Fraction(0), sorted(init), init)]
    while heap:
        g, _, state = heapq.heappop(heap)
        if goal <= state:
            return g
        if g > best[state]:
            continue
        for pre, add, dele, cost, soft in actions.values():
            if not set(pre) <= state:
                continue
            step = Fraction(cost or 0) + Fraction(soft_penalty) * len(set(soft) - state)
            nxt = (state - set(dele)) | set(add)
            if g + step < best.get(nxt, math.inf):
                best[nxt] = g + step
                heapq.heappush(heap, (g + step, sorted(nxt), nxt))
    return math.inf


def strips_run(init, goal, actions, steps, soft_penalty=0):
    state = frozenset(init)
    total = Fraction(0)
    for name in steps:
        if name not in actions:
            return math.inf
        pre, add, dele, cost, soft = actions[name]
        if not set(pre) <= state:
            return math.inf
        total += Fraction(cost or 0) + Fraction(soft_penalty) * len(set(soft) - state)
        state = (state - set(dele)) | set(add)
    return total if set(goal) <= state else math.inf


def model_tables(model):
    """Flatten a package Model into the plain tuples the oracles use."""
    actions = {
        a.name: (set(a.preconditions), set(a.add_effects), set(a.del_effects), a.cost, set(a.soft_preconditions))
        for a in model.actions
    }
    return set(model.init), set(model.goal), actions, model.soft_penalty


def plan_gap(model, steps):
    init, goal, actions, penalty = model_tables(model)
    run = strips_run(init, goal, actions, steps, penalty)
    if run == math.inf:
        return math.inf
    return run - strips_optimal_cost(init, goal, actions, penalty)


# -- orderings on a raw feature lattice -------------------------------------------

def ordering_reward(features, w, order):
    """Sum of ``features[mask, i] @ w`` along ``order``."""
    mask, total = 0, 0.0
    for i in order:
        total += float(features[mask, i] @ w)
        mask |= 1 << i
    return total


def ordering_distribution(features, w):
    """Explicit softmax over all n! orderings."""
    n = features.shape[1]
    orders = list(itertools.permutations(range(n)))
    scores = np.array([ordering_reward(features, w, o) for o in orders])
    scores -= scores.max()
    probs = np.exp(scores)
    probs /= probs.sum()
    return dict(zip(orders, probs))


def enumerated_visitation(features, w):
    """Expected number of times each (mask, i) transition is taken."""
    n = features.shape[1]
    freq = np.zeros((1 << n, n))
    for order, p in ordering_distribution(features, w).items():
        mask = 0
        for i in order:
            freq[mask, i] += p
            mask |= 1 << i
    return freq


def trace_log_likelihood(groups, w):
    """``groups``: list of (features, [order, ...]); mean log-probability."""
    total, count = 0.0, 0
    for features, orders in groups:
        n = features.shape[1]
        scores = [ordering_reward(features, w, o) for o in itertools.permutations(range(n))]
        top = max(scores)
        log_z = top + math.log(sum(math.exp(s - top) for s in scores))
        for order in orders:
            total += ordering_reward(features, w, order) - log_z
            count += 1
    return total / count


def central_difference(f, w, h=1e-4):
    grad = np.zeros_like(w)
    for k in range(len(w)):
        e = np.zeros_like(w)
        e[k] = h
        grad[k] = (f(w + e) - f(w - e)) / (2 * h)
    return grad


def best_ordering(features, w, tol=1e-9):
    """Highest-reward ordering; among near-ties the lexicographically least."""
    n = features.shape[1]
    scored = [(ordering_reward(features, w, o), o) for o in itertools.permutations(range(n))]
    top = max(s for s, _ in scored)
    return top, min(o for s, o in scored if s >= top - tol * max(1.0, abs(top)))


def smallest_complete_subsets(changes, is_complete):
    """All complete subsets of minimum size, by exhaustive enumeration."""
    for size in range(len(changes) + 1):
        hits = [c for c in itertools.combinations(changes, size) if is_complete(c)]
        if hits:
            return size, hits
    return None, []
