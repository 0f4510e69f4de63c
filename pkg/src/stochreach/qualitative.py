"""Probability-free analyses: positive attractors and safe states."""

from __future__ import annotations

from collections import deque

from .errors import InvariantBroken
from .game import GameGraph, Owner
from .policies import MemorylessStrategy


def attractor_ranks(g: GameGraph, target_set, fixed=None) -> dict[int, int]:
    """Positive-probability attractor of ``target_set`` for Max, with entry ranks.

    A Max or random state joins once some successor is in the set, a Min state
    once all of its successors are. ``fixed`` optionally restricts successors
    per state (used when Max's choices are already fixed). The rank is the
    round of the backward search in which the state joined, so every
    attractor state outside ``target_set`` has a successor of smaller rank.
    """
    edges = fixed or {}
    succ = [edges.get(s, g.successors(s)) for s in g.states]
    pred: list[list[int]] = [[] for _ in g.states]
    for s in g.states:
        for d in succ[s]:
            pred[d].append(s)
    remaining = [len(set(succ[s])) for s in g.states]
    rank = {s: 0 for s in target_set}
    queue = deque(rank)
    while queue:
        d = queue.popleft()
        for s in set(pred[d]):
            if s in rank:
                continue
            if g.owners[s] is Owner.MIN:
                remaining[s] -= 1
                if remaining[s]:
                    continue
            rank[s] = rank[d] + 1
            queue.append(s)
    return rank


def positive_attractor_max(g: GameGraph, target_set) -> frozenset[int]:
    """States from which Max can force reaching ``target_set`` with positive probability."""
    return frozenset(attractor_ranks(g, target_set))


def safe_states(g: GameGraph) -> frozenset[int]:
    """States where Min can keep the probability of reaching a target at 0."""
    return frozenset(g.states) - positive_attractor_max(g, g.targets)


def safe_strategy_min(g: GameGraph, safe=None) -> MemorylessStrategy:
    """At every safe Min state, move to the first safe successor."""
    if safe is None:
        safe = safe_states(g)
    picks = {}
    for s in sorted(safe):
        if g.owners[s] is not Owner.MIN:
            continue
        for d in g.successors(s):
            if d in safe:
                picks[s] = d
                break
        else:
            raise InvariantBroken(f"safe Min state {g.names[s]!r} has no safe successor")
    return MemorylessStrategy.pure(Owner.MIN, picks)
