"""Exact dynamic programs shared by the property and acceptance suites."""

import random
from fractions import Fraction

from stochreach.game import Owner
from stochreach.policies import MemorylessStrategy


def random_memoryless(g, owner, rng: random.Random):
    """A random, possibly randomized, memoryless strategy on ``g``'s edges."""
    choices = {}
    for s in g.owned_by(owner):
        succ = g.successors(s)
        k = rng.randint(1, len(succ))
        picked = rng.sample(succ, k)
        raw = [rng.randint(1, 5) for _ in picked]
        total = sum(raw)
        choices[s] = tuple((d, Fraction(w, total)) for d, w in zip(picked, raw))
    return MemorylessStrategy(owner, choices)


def step_distribution(g, sigma, pi, s):
    if s in g.targets:
        return ((s, Fraction(1)),)
    if g.owners[s] is Owner.RANDOM:
        return g.edges[s]
    strat = sigma if g.owners[s] is Owner.MAX else pi
    return strat.distribution(s)


def horizon_expectations(g, v, sigma, pi, start, horizon):
    """``E[v(X_k)]`` for ``k = 0..horizon`` under a memoryless pair, exactly."""
    dist = {start: Fraction(1)}
    out = [sum(p * v[x] for x, p in dist.items())]
    for _ in range(horizon):
        nxt = {}
        for x, p in dist.items():
            for y, w in step_distribution(g, sigma, pi, x):
                nxt[y] = nxt.get(y, Fraction(0)) + p * w
        dist = nxt
        out.append(sum(p * v[x] for x, p in dist.items()))
    return out
