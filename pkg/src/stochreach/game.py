"""Finite explicit stochastic reachability games.

A game has three kinds of states: Max and Min states, where the owner picks
a successor, and random states, whose successor is drawn from fixed rational
weights. Targets are absorbing: their only edge is a self-loop.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

from .errors import (
    BadDistribution,
    DanglingEdge,
    DomainMismatch,
    DuplicateState,
    NoSuccessor,
    UnknownState,
    ValidationError,
)


class Owner(enum.Enum):
    MAX = "max"
    MIN = "min"
    RANDOM = "rand"

    @classmethod
    def parse(cls, token) -> "Owner":
        if isinstance(token, Owner):
            return token
        try:
            return cls(str(token).lower())
        except ValueError:
            raise ValidationError(f"unknown owner {token!r} (expected max, min or rand)")


def parse_weight(token) -> Fraction:
    if isinstance(token, Fraction):
        return token
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise BadDistribution(f"malformed weight {token!r}")


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class GameGraph:
    """Validated, immutable game graph.

    ``edges[i]`` lists ``(dst, weight)`` pairs in declaration order; weights are
    exact fractions on random states and ``None`` on player states. Build
    instances with :func:`validate_game`, never directly.
    """

    names: tuple[str, ...]
    owners: tuple[Owner, ...]
    edges: tuple[tuple[tuple[int, Fraction | None], ...], ...]
    targets: frozenset[int]
    _index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    def __len__(self):
        return len(self.names)

    @property
    def states(self) -> range:
        return range(len(self.names))

    def index(self, name: str | int) -> int:
        if isinstance(name, int) and not isinstance(name, bool):
            if 0 <= name < len(self.names):
                return name
            raise UnknownState(f"no state with index {name}")
        try:
            return self._index[name]
        except KeyError:
            raise UnknownState(f"unknown state {name!r}")

    def successors(self, s: int) -> list[int]:
        return [d for d, _ in self.edges[s]]

    def owned_by(self, owner: Owner) -> list[int]:
        return [s for s in self.states if self.owners[s] is owner and s not in self.targets]

    def num_edges(self) -> int:
        return sum(len(e) for e in self.edges)


class Valuation(Sequence):
    """Per-state values in [0, 1], either all exact fractions or all floats."""

    def __init__(self, values: Iterable, exact: bool | None = None):
        vals = tuple(values)
        if exact is None:
            exact = all(isinstance(v, (Fraction, int)) for v in vals)
        if exact:
            vals = tuple(Fraction(v) for v in vals)
        else:
            vals = tuple(float(v) for v in vals)
        self._values = vals
        self.exact = exact

    def __getitem__(self, i):
        return self._values[i]

    def __len__(self):
        return len(self._values)

    def __eq__(self, other):
        if isinstance(other, Valuation):
            return self._values == other._values
        return NotImplemented

    def __hash__(self):
        return hash(self._values)

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        return f"Valuation({list(self._values)!r}, {kind})"

    def as_floats(self) -> list[float]:
        return [float(v) for v in self._values]

    def by_name(self, g: GameGraph) -> dict[str, object]:
        if len(g) != len(self):
            raise DomainMismatch("valuation length does not match the game")
        return {g.names[i]: v for i, v in enumerate(self._values)}


def as_valuation(g: GameGraph, f) -> Valuation:
    if isinstance(f, dict):
        try:
            f = [f[n] for n in g.names]
        except KeyError as exc:
            raise DomainMismatch(f"valuation missing state {exc.args[0]!r}")
    if not isinstance(f, Valuation):
        f = Valuation(f)
    if len(f) != len(g):
        raise DomainMismatch(f"valuation has {len(f)} entries, game has {len(g)} states")
    return f


def validate_game(raw_states, raw_edges, raw_targets=(), *, normalize=False) -> GameGraph:
    """Check raw input and build a :class:`GameGraph`.

    ``raw_states`` holds ``(name, owner)`` pairs, ``raw_edges`` holds
    ``(src, dst, weight)`` triples (weight ``None`` for player states) and
    ``raw_targets`` holds names. A target with no outgoing edges gets its
    self-loop added; a target with other edges is rejected unless
    ``normalize`` is set, in which case its edges are replaced by the loop.
    """
    names, owners, index = [], [], {}
    for entry in raw_states:
        name, owner = entry[0], Owner.parse(entry[1])
        name = str(name)
        if not name or any(c.isspace() for c in name) or name.startswith("#"):
            raise ValidationError(f"invalid state name {name!r}")
        if name in index:
            raise DuplicateState(f"duplicate state {name!r}")
        index[name] = len(names)
        names.append(name)
        owners.append(owner)

    targets = set()
    for t in raw_targets:
        if t not in index:
            raise DanglingEdge(f"target {t!r} is not a state")
        targets.add(index[t])

    out: list[list[tuple[int, Fraction | None]]] = [[] for _ in names]
    for src, dst, weight in raw_edges:
        for end in (src, dst):
            if end not in index:
                raise DanglingEdge(f"edge {src} -> {dst}: {end!r} is not a state")
        i, j = index[src], index[dst]
        if any(d == j for d, _ in out[i]):
            raise ValidationError(f"duplicate edge {src} -> {dst}")
        if owners[i] is Owner.RANDOM:
            if weight is None:
                raise BadDistribution(f"edge {src} -> {dst} from random state needs a weight")
            w = parse_weight(weight)
            if not 0 < w <= 1:
                raise BadDistribution(f"edge {src} -> {dst}: weight {w} outside (0, 1]")
        else:
            if weight is not None:
                raise BadDistribution(f"edge {src} -> {dst}: player states take no weights")
            w = None
        out[i].append((j, w))

    for t in targets:
        loop = [(t, Fraction(1) if owners[t] is Owner.RANDOM else None)]
        others = [e for e in out[t] if e[0] != t]
        if others and not normalize:
            raise ValidationError(f"target {names[t]!r} must only have a self-loop")
        out[t] = loop

    for i, es in enumerate(out):
        if not es:
            raise NoSuccessor(f"state {names[i]!r} has no successor")
        if owners[i] is Owner.RANDOM:
            total = sum(w for _, w in es)
            if total != 1:
                raise BadDistribution(f"weights out of {names[i]!r} sum to {total}, not 1")

    return GameGraph(
        names=tuple(names),
        owners=tuple(owners),
        edges=tuple(tuple(es) for es in out),
        targets=frozenset(targets),
    )


def game_to_raw(g: GameGraph):
    states = [(n, o) for n, o in zip(g.names, g.owners)]
    edges = [(g.names[s], g.names[d], w) for s in g.states for d, w in g.edges[s]]
    targets = [g.names[t] for t in sorted(g.targets)]
    return states, edges, targets


def format_game(g: GameGraph) -> str:
    lines = []
    for s in g.states:
        tail = " target" if s in g.targets else ""
        lines.append(f"state {g.names[s]} {g.owners[s].value}{tail}")
    for s in g.states:
        for d, w in g.edges[s]:
            wt = "" if w is None else " " + format_fraction(w)
            lines.append(f"edge {g.names[s]} {g.names[d]}{wt}")
    return "\n".join(lines) + "\n"


def _tokens(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_game(source: str | TextIO, *, normalize=False) -> GameGraph:
    """Parse the line-oriented game format (``state`` / ``edge`` lines)."""
    text = source if isinstance(source, str) else source.read()
    states, edges, targets = [], [], []
    state_line, edge_line = {}, []
    for lineno, tok in _tokens(text):
        kind = tok[0]
        if kind == "state":
            if len(tok) not in (3, 4) or (len(tok) == 4 and tok[3] != "target"):
                raise ValidationError("expected: state <name> max|min|rand [target]", lineno)
            try:
                owner = Owner.parse(tok[2])
            except ValidationError as exc:
                raise ValidationError(str(exc), lineno)
            states.append((tok[1], owner))
            state_line.setdefault(tok[1], lineno)
            if len(tok) == 4:
                targets.append(tok[1])
        elif kind == "edge":
            if len(tok) not in (3, 4):
                raise ValidationError("expected: edge <src> <dst> [<num>/<den>]", lineno)
            edges.append((tok[1], tok[2], tok[3] if len(tok) == 4 else None))
            edge_line.append(lineno)
        else:
            raise ValidationError(f"unknown directive {kind!r}", lineno)
    try:
        return validate_game(states, edges, targets, normalize=normalize)
    except ValidationError as exc:
        raise _locate(exc, state_line, edge_line, edges)


def _locate(exc, state_line, edge_line, edges):
    # Attach the most plausible line number to an error raised by validation.
    msg = str(exc)
    for k, (src, dst, _) in enumerate(edges):
        if f"{src} -> {dst}" in msg:
            return type(exc)(msg, edge_line[k])
    for name, ln in state_line.items():
        if repr(name) in msg:
            return type(exc)(msg, ln)
    return exc


def reachable_subgame(g: GameGraph, s) -> GameGraph:
    """Restrict ``g`` to the states reachable from ``s`` (declaration order kept)."""
    start = g.index(s)
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for d, _ in g.edges[x]:
            if d not in seen:
                seen.add(d)
                queue.append(d)
    keep = sorted(seen)
    states = [(g.names[x], g.owners[x]) for x in keep]
    edges = [(g.names[x], g.names[d], w) for x in keep for d, w in g.edges[x]]
    targets = [g.names[x] for x in keep if x in g.targets]
    return validate_game(states, edges, targets)
