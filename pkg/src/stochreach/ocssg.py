"""One-counter stochastic games: automata, counter truncation, value bounds and limits.

A configuration ``(control, counter)`` becomes the state ``<control>_<counter>``.
Counter 0 halts: those states are absorbing targets. A truncation at cap
``N`` sends every counter-``N`` state to one absorbing sink, which is a
loss (lower bounds) or a win (upper bounds) for Max. Any Max strategy of
the losing-capped game is also a strategy of the infinite game and wins at
least as often there, since capped runs were already counted as lost. The
winning cap credits Max with every capped run, so it can only overestimate.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import TextIO

from .bellman import SolveConfig, value_iterate
from .errors import BadDistribution, InvalidAutomaton, InvariantBroken, NotConverged, ValidationError
from .game import GameGraph, Owner, format_fraction, parse_weight, validate_game

MONOTONE_TOL = 1e-9


class BoundaryPolicy(enum.Enum):
    LOSING = "losing"
    WINNING = "winning"


@dataclass(frozen=True)
class Rule:
    src: str
    delta: int
    dst: str
    weight: Fraction | None = None


@dataclass(frozen=True)
class OCAutomaton:
    controls: tuple[tuple[str, Owner], ...]
    rules: tuple[Rule, ...]

    @property
    def names(self) -> list[str]:
        return [c for c, _ in self.controls]

    def owner(self, control: str) -> Owner:
        return dict(self.controls)[control]

    def rules_from(self, control: str) -> list[Rule]:
        return [r for r in self.rules if r.src == control]


def validate_oc(controls, rules) -> OCAutomaton:
    """Check and build an automaton from ``(name, owner)`` pairs and rule tuples."""
    ctrl = []
    seen = set()
    for name, owner in controls:
        name = str(name)
        if not name or any(c.isspace() for c in name) or "#" in name:
            raise InvalidAutomaton(f"invalid control name {name!r}")
        if name in seen:
            raise InvalidAutomaton(f"duplicate control {name!r}")
        seen.add(name)
        ctrl.append((name, Owner.parse(owner)))
    owners = dict(ctrl)
    out = []
    keys = set()
    for r in rules:
        if not isinstance(r, Rule):
            r = Rule(*r)
        try:
            delta = int(r.delta)
        except (TypeError, ValueError):
            raise InvalidAutomaton(f"rule {r.src} -> {r.dst}: bad counter change {r.delta!r}")
        if r.src not in owners or r.dst not in owners:
            raise InvalidAutomaton(f"rule {r.src} {delta:+d} {r.dst}: unknown control")
        if delta not in (-1, 0, 1):
            raise InvalidAutomaton(f"rule {r.src} -> {r.dst}: counter change {delta} not in -1, 0, +1")
        if (r.src, delta, r.dst) in keys:
            raise InvalidAutomaton(f"duplicate rule {r.src} {delta:+d} {r.dst}")
        keys.add((r.src, delta, r.dst))
        weight = r.weight
        if owners[r.src] is Owner.RANDOM:
            if weight is None:
                raise BadDistribution(f"rule from random control {r.src!r} needs a weight")
            weight = parse_weight(weight)
            if not 0 < weight <= 1:
                raise BadDistribution(f"rule from {r.src!r}: weight {weight} outside (0, 1]")
        elif weight is not None:
            raise BadDistribution(f"rule from player control {r.src!r} takes no weight")
        out.append(Rule(r.src, delta, r.dst, weight))
    for name, owner in ctrl:
        mine = [r for r in out if r.src == name]
        if not mine:
            raise InvalidAutomaton(f"control {name!r} has no rule")
        if owner is Owner.RANDOM and sum(r.weight for r in mine) != 1:
            raise BadDistribution(f"rule weights out of {name!r} do not sum to 1")
    return OCAutomaton(tuple(ctrl), tuple(out))


def parse_oc(source: str | TextIO) -> OCAutomaton:
    """Parse the ``control`` / ``rule`` text format."""
    text = source if isinstance(source, str) else source.read()
    controls, rules = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "control" and len(tok) == 3:
                controls.append((tok[1], Owner.parse(tok[2])))
            elif tok[0] == "rule" and len(tok) in (4, 5):
                if tok[2] not in ("-1", "0", "+1", "1"):
                    raise InvalidAutomaton(f"counter change {tok[2]!r} not in -1, 0, +1")
                weight = tok[4] if len(tok) == 5 else None
                rules.append(Rule(tok[1], int(tok[2]), tok[3], weight))
            else:
                raise InvalidAutomaton(f"unrecognized line {line!r}")
        except ValidationError as exc:
            raise type(exc)(str(exc), lineno)
    try:
        return validate_oc(controls, rules)
    except ValidationError as exc:
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split("#", 1)[0].split()
            if len(parts) >= 2 and repr(parts[1]) in str(exc):
                raise type(exc)(str(exc), lineno)
        raise


def format_oc(a: OCAutomaton) -> str:
    lines = [f"control {n} {o.value}" for n, o in a.controls]
    for r in a.rules:
        d = {-1: "-1", 0: "0", 1: "+1"}[r.delta]
        wt = "" if r.weight is None else " " + format_fraction(r.weight)
        lines.append(f"rule {r.src} {d} {r.dst}{wt}")
    return "\n".join(lines) + "\n"


def state_name(control: str, counter: int) -> str:
    return f"{control}_{counter}"


SINK = "cap"  # never of the form <control>_<counter>


def unroll(a: OCAutomaton, N: int, policy: BoundaryPolicy = BoundaryPolicy.LOSING) -> GameGraph:
    """Finite game over counters ``0..N`` plus the cap sink."""
    if N < 1:
        raise ValueError("truncation cap must be at least 1")
    sink = SINK
    states, edges, targets = [], [], []
    for n in range(N + 1):
        for c, owner in a.controls:
            name = state_name(c, n)
            states.append((name, owner))
            one = Fraction(1) if owner is Owner.RANDOM else None
            if n == 0:
                edges.append((name, name, one))
                targets.append(name)
            elif n == N:
                edges.append((name, sink, one))
            else:
                for r in a.rules_from(c):
                    edges.append((name, state_name(r.dst, n + r.delta), r.weight))
    states.append((sink, Owner.RANDOM))
    edges.append((sink, sink, Fraction(1)))
    if policy is BoundaryPolicy.WINNING:
        targets.append(sink)
    return validate_game(states, edges, targets)


@dataclass(frozen=True)
class OCBounds:
    automaton: OCAutomaton
    cap: int
    lower_values: tuple
    upper_values: tuple

    def _idx(self, control, counter):
        k = self.automaton.names.index(control)
        if not 0 <= counter <= self.cap:
            raise IndexError(f"counter {counter} outside 0..{self.cap}")
        return counter * len(self.automaton.controls) + k

    def lower(self, control: str, counter: int) -> float:
        return self.lower_values[self._idx(control, counter)]

    def upper(self, control: str, counter: int) -> float:
        return self.upper_values[self._idx(control, counter)]

    def rows(self):
        for c in self.automaton.names:
            for n in range(self.cap + 1):
                yield c, n, self.lower(c, n), self.upper(c, n)


def _solve(g, cfg):
    res = value_iterate(g, cfg)
    if not res.converged:
        raise NotConverged(res)
    return res.valuation


def termination_bounds(a: OCAutomaton, N: int, cfg: SolveConfig | None = None) -> OCBounds:
    """Lower and upper bounds on termination values for counters ``0..N``."""
    cfg = cfg or SolveConfig()
    lo = _solve(unroll(a, N, BoundaryPolicy.LOSING), cfg)
    hi = _solve(unroll(a, N, BoundaryPolicy.WINNING), cfg)
    k = len(a.controls) * (N + 1)
    return OCBounds(a, N, tuple(lo[:k]), tuple(hi[:k]))


def lower_bounds(a: OCAutomaton, N: int, cfg: SolveConfig | None = None) -> OCBounds:
    """Only the pessimistic truncation (upper values are reported as 1)."""
    cfg = cfg or SolveConfig()
    lo = _solve(unroll(a, N, BoundaryPolicy.LOSING), cfg)
    k = len(a.controls) * (N + 1)
    return OCBounds(a, N, tuple(lo[:k]), (1.0,) * k)


@dataclass(frozen=True)
class LimitReport:
    limits: dict
    stabilized: dict
    last_deltas: dict
    caps: tuple
    history: dict

    def rows(self):
        for c, lim in self.limits.items():
            yield c, lim, self.stabilized[c]


def truncation_caps(N_max: int) -> list[int]:
    caps, n = [], 8
    while n <= N_max:
        caps.append(n)
        n *= 2
    if not caps:
        caps = [N_max]
    return caps


def _check_monotone(b: OCBounds):
    for c in b.automaton.names:
        for n in range(1, b.cap):
            if b.lower(c, n + 1) > b.lower(c, n) + MONOTONE_TOL:
                raise InvariantBroken(
                    f"lower bound increases in the counter at {c}: "
                    f"{b.lower(c, n)} -> {b.lower(c, n + 1)} (n={n})"
                )


def limit_values(
    a: OCAutomaton, tol: float, N_max: int, cfg: SolveConfig | None = None, workers: int = 1
) -> LimitReport:
    """Estimate ``lim_n val(c_n)`` per control from doubling truncations.

    For each cap ``N`` in 8, 16, ... up to ``N_max`` the lower bound at counter
    ``N/2`` is sampled. A control is stabilized when its last two samples
    differ by at most ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    cfg = cfg or SolveConfig()
    caps = truncation_caps(N_max)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            bounds = list(pool.map(lambda n: lower_bounds(a, n, cfg), caps))
    else:
        bounds = [lower_bounds(a, n, cfg) for n in caps]
    history = {c: [] for c in a.names}
    for b in bounds:
        _check_monotone(b)
        for c in a.names:
            history[c].append(b.lower(c, max(1, b.cap // 2)))
    limits, stable, deltas = {}, {}, {}
    for c, hist in history.items():
        d = [abs(x - y) for x, y in zip(hist[1:], hist)]
        deltas[c] = tuple(d[-2:])
        limits[c] = min(1.0, max(0.0, hist[-1]))
        stable[c] = bool(d) and d[-1] <= tol
    return LimitReport(limits, stable, deltas, tuple(caps), {c: tuple(h) for c, h in history.items()})


@dataclass(frozen=True)
class CorollaryVerdict:
    holds: bool
    limits: dict
    inconclusive: tuple

    def line(self) -> str:
        tail = f" inconclusive={','.join(self.inconclusive)}" if self.inconclusive else ""
        return f"verdict\t{str(self.holds).lower()}{tail}"


def check_corollary_oc(a: OCAutomaton, tol: float, N_max: int, cfg: SolveConfig | None = None) -> CorollaryVerdict:
    """Whether every stabilized limit estimate is within ``tol`` of 0 or 1.

    Unstabilized controls are listed as inconclusive and do not affect ``holds``.
    """
    report = limit_values(a, tol, N_max, cfg)
    inconclusive = tuple(c for c in a.names if not report.stabilized[c])
    holds = all(
        min(abs(report.limits[c]), abs(1 - report.limits[c])) <= tol
        for c in a.names
        if report.stabilized[c]
    )
    return CorollaryVerdict(holds, dict(report.limits), inconclusive)
