"""Strategy representations, product chains, and the strategy text format.

A Max strategy may carry finite memory. It exposes three methods that the
product-chain builder uses:

* ``initial_memory(state)``
* ``choose(state, memory)`` returning ``(successor, probability, memory)`` triples
* ``advance(memory, entered_state)``, applied after every step, whoever moved

Min strategies are always memoryless. Player states with a single edge need
no entry in a strategy, since the move is forced.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import IncompleteStrategy, ValidationError
from .game import GameGraph, Owner, format_fraction, parse_weight


@dataclass(frozen=True, eq=True)
class MemorylessStrategy:
    """Per-state distribution over successors, for the states of one owner."""

    owner: Owner
    choices: Mapping[int, tuple[tuple[int, Fraction], ...]]

    @classmethod
    def pure(cls, owner: Owner, picks: Mapping[int, int]) -> "MemorylessStrategy":
        return cls(owner, {s: ((d, Fraction(1)),) for s, d in picks.items()})

    @classmethod
    def empty(cls, owner: Owner) -> "MemorylessStrategy":
        return cls(owner, {})

    def __contains__(self, state):
        return state in self.choices

    def distribution(self, state):
        try:
            return self.choices[state]
        except KeyError:
            raise IncompleteStrategy(f"strategy has no choice at state {state}")

    def successor(self, state) -> int:
        """The chosen successor of a pure choice."""
        dist = self.distribution(state)
        if len(dist) != 1:
            raise ValueError(f"choice at {state} is randomized")
        return dist[0][0]

    def is_pure(self) -> bool:
        return all(len(d) == 1 for d in self.choices.values())

    def check(self, g: GameGraph):
        for s, dist in self.choices.items():
            succ = set(g.successors(s))
            if g.owners[s] is not self.owner:
                raise ValidationError(f"state {g.names[s]!r} is not owned by {self.owner.value}")
            if any(d not in succ for d, _ in dist):
                raise ValidationError(f"choice at {g.names[s]!r} is not an edge")
            if sum(p for _, p in dist) != 1 or any(p <= 0 for _, p in dist):
                raise ValidationError(f"choice at {g.names[s]!r} is not a distribution")
        return self

    def initial_memory(self, state):
        return None

    def choose(self, state, memory):
        return [(d, p, None) for d, p in self.distribution(state)]

    def advance(self, memory, state):
        return None


@dataclass(frozen=True)
class StageSwitchingStrategy:
    """Follow a base strategy for a fixed number of steps, then re-anchor.

    ``stages[s] = (k, n)`` means: when the current stage ends in ``s`` (or the
    play starts there), follow ``bases[k]`` for the next ``n`` steps. Memory is
    ``(k, remaining)``; the anchor state itself only matters through its
    ``(k, n)`` pair, so it is not stored. With a single base the memory is
    behaviourally irrelevant and is dropped, which keeps product chains small.
    """

    bases: tuple[MemorylessStrategy, ...]
    stages: Mapping[int, tuple[int, int]]
    owner: Owner = Owner.MAX

    def horizon(self, state) -> int:
        return self.stages[state][1]

    def base_for(self, state) -> MemorylessStrategy:
        return self.bases[self.stages[state][0]]

    @property
    def lumped(self) -> bool:
        return len(self.bases) == 1

    def initial_memory(self, state):
        if self.lumped:
            return None
        return self._stage(state)

    def _stage(self, state):
        try:
            return self.stages[state]
        except KeyError:
            raise IncompleteStrategy(f"no stage defined at state {state}")

    def choose(self, state, memory):
        base = self.bases[0] if self.lumped else self.bases[memory[0]]
        return [(d, p, memory) for d, p in base.distribution(state)]

    def advance(self, memory, state):
        if self.lumped:
            return None
        k, remaining = memory
        if remaining <= 1:
            return self._stage(state)
        return (k, remaining - 1)


@dataclass(frozen=True)
class SwitchOnLoss:
    """Copy ``base`` until it would take a value-decreasing edge, then play ``fallback``.

    Memory is a flag recording whether the switch has happened.
    """

    base: MemorylessStrategy
    fallback: MemorylessStrategy
    values: tuple
    tolerance: float = 0.0
    owner: Owner = Owner.MAX

    def initial_memory(self, state):
        return False

    def choose(self, state, memory):
        if memory:
            return [(d, p, True) for d, p in self.fallback.distribution(state)]
        out = []
        for d, p in self.base.distribution(state):
            if self.values[state] > self.values[d] + self.tolerance:
                out.extend((d2, p * p2, True) for d2, p2 in self.fallback.distribution(state))
            else:
                out.append((d, p, False))
        return out

    def advance(self, memory, state):
        return memory


@dataclass
class ProductChain:
    """Markov chain induced by a strategy pair, over ``(state, memory)`` nodes."""

    game: GameGraph
    nodes: list
    succ: list
    start: int
    index: dict = field(repr=False)

    def state_of(self, node: int) -> int:
        return self.nodes[node][0]

    def terminal(self) -> dict[int, Fraction]:
        targets = self.game.targets
        return {i: Fraction(1) for i, (s, _) in enumerate(self.nodes) if s in targets}


def _min_choice(g, pi, s):
    if pi is None:
        raise IncompleteStrategy(f"no Min strategy for state {g.names[s]!r}")
    try:
        return pi.distribution(s)
    except IncompleteStrategy:
        raise IncompleteStrategy(f"Min strategy has no choice at {g.names[s]!r}")


def _covers(strategy, s) -> bool:
    if strategy is None:
        return False
    if isinstance(strategy, MemorylessStrategy):
        return s in strategy
    if isinstance(strategy, StageSwitchingStrategy):
        return all(s in b for b in strategy.bases)
    if isinstance(strategy, SwitchOnLoss):
        return s in strategy.base
    return True


def product_chain(g: GameGraph, sigma, pi, start: int) -> ProductChain:
    """Build the reachable part of the chain induced by ``sigma`` and ``pi`` from ``start``."""
    if sigma is None:
        sigma = MemorylessStrategy.empty(Owner.MAX)
    root = (start, sigma.initial_memory(start))
    index = {root: 0}
    nodes = [root]
    succ: list[list[tuple[int, Fraction]]] = []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        s, mem = nodes[i]
        if s in g.targets:
            moves = [(s, Fraction(1), mem)]
        elif g.owners[s] is Owner.RANDOM:
            moves = [(d, w, mem) for d, w in g.edges[s]]
        elif len(g.edges[s]) == 1 and not _covers(sigma if g.owners[s] is Owner.MAX else pi, s):
            moves = [(g.edges[s][0][0], Fraction(1), mem)]
        elif g.owners[s] is Owner.MIN:
            moves = [(d, p, mem) for d, p in _min_choice(g, pi, s)]
        else:
            try:
                moves = sigma.choose(s, mem)
            except IncompleteStrategy:
                raise IncompleteStrategy(f"Max strategy has no choice at {g.names[s]!r}")
        merged: dict[int, Fraction] = {}
        for d, p, m in moves:
            node = (d, sigma.advance(m, d))
            j = index.get(node)
            if j is None:
                j = index[node] = len(nodes)
                nodes.append(node)
                queue.append(j)
            merged[j] = merged.get(j, Fraction(0)) + p
        while len(succ) <= i:
            succ.append([])
        succ[i] = list(merged.items())
    while len(succ) < len(nodes):
        succ.append([])
    return ProductChain(g, nodes, succ, 0, index)


# --- text format -----------------------------------------------------------


def format_strategy(g: GameGraph, strategy) -> str:
    """Serialize to ``choose`` lines, with ``stage`` headers for stage switching.

    For a stage-switching strategy whose stages all share one base, the base
    is written once (before any header) and the headers carry no choices.
    """
    def choose_lines(m: MemorylessStrategy):
        out = []
        for s in sorted(m.choices):
            dist = m.choices[s]
            for d, p in dist:
                wt = "" if len(dist) == 1 else " " + format_fraction(p)
                out.append(f"choose {g.names[s]} {g.names[d]}{wt}")
        return out

    if isinstance(strategy, MemorylessStrategy):
        lines = choose_lines(strategy)
    elif isinstance(strategy, StageSwitchingStrategy):
        lines = []
        if strategy.lumped:
            lines += choose_lines(strategy.bases[0])
        for s in sorted(strategy.stages):
            k, n = strategy.stages[s]
            lines.append(f"stage {g.names[s]} {n}")
            if not strategy.lumped:
                lines += choose_lines(strategy.bases[k])
    else:
        raise TypeError(f"cannot serialize {type(strategy).__name__}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_strategy(g: GameGraph, text: str, owner: Owner | None = None):
    """Parse a strategy file against ``g``.

    Returns a :class:`MemorylessStrategy`, or a :class:`StageSwitchingStrategy`
    when ``stage`` headers are present. The owner is inferred from the states
    chosen at unless given.
    """
    default: dict[int, list] = {}
    blocks: list[tuple[int, int, dict]] = []
    current = default
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "choose" and len(tok) in (3, 4):
                s, d = g.index(tok[1]), g.index(tok[2])
                p = parse_weight(tok[3]) if len(tok) == 4 else Fraction(1)
                current.setdefault(s, []).append((d, p))
            elif tok[0] == "stage" and len(tok) == 3:
                n = int(tok[2])
                if n < 1:
                    raise ValidationError("stage horizon must be >= 1")
                current = {}
                blocks.append((g.index(tok[1]), n, current))
            else:
                raise ValidationError(f"unrecognized strategy line {line!r}")
        except ValidationError as exc:
            raise ValidationError(str(exc), lineno)
        except Exception as exc:
            raise ValidationError(str(exc), lineno)

    def owner_of(choices):
        owners = {g.owners[s] for s in choices}
        if len(owners) > 1:
            raise ValidationError("strategy mixes states of different owners")
        return owners.pop() if owners else (owner or Owner.MAX)

    def build(choices):
        own = owner or owner_of(choices)
        return MemorylessStrategy(own, {s: tuple(v) for s, v in choices.items()}).check(g)

    if not blocks:
        return build(default)
    bases: list[MemorylessStrategy] = []
    stages = {}
    for s, n, choices in blocks:
        m = build(choices) if choices else build(default)
        if m not in bases:
            bases.append(m)
        stages[s] = (bases.index(m), n)
    return StageSwitchingStrategy(tuple(bases), stages, bases[0].owner)
