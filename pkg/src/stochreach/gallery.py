"""Builders for the two worked examples and for solvency games."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BadDistribution
from .game import GameGraph, Owner, validate_game
from .ocssg import OCAutomaton, Rule, validate_oc

HALF = Fraction(1, 2)


def fig1_game(N: int) -> GameGraph:
    """Max must keep walking right along r_0, r_1, ... to approach value 1.

    States r_i (Max), s_i and t_i (random) for 0 <= i <= N, target t_0.
    Edges: r_{i-1} -> r_i, r_i -> s_i, s_i -> s_{i-1}, s_i -> t_i and
    t_i -> t_{i-1} for i > 0, plus loops at s_0 and t_0. The truncation
    drops r_N -> r_{N+1}, so r_N must move to s_N.
    """
    if N < 1:
        raise ValueError("depth must be at least 1")
    states = [(f"r_{i}", Owner.MAX) for i in range(N + 1)]
    states += [(f"s_{i}", Owner.RANDOM) for i in range(N + 1)]
    states += [(f"t_{i}", Owner.RANDOM) for i in range(N + 1)]
    edges = [("s_0", "s_0", Fraction(1)), ("t_0", "t_0", Fraction(1))]
    for i in range(N + 1):
        if i < N:
            edges.append((f"r_{i}", f"r_{i + 1}", None))
        if i > 0:
            edges += [
                (f"r_{i}", f"s_{i}", None),
                (f"s_{i}", f"s_{i - 1}", HALF),
                (f"s_{i}", f"t_{i}", HALF),
                (f"t_{i}", f"t_{i - 1}", Fraction(1)),
            ]
    return validate_game(states, edges, ["t_0"])


def fig2_automaton() -> OCAutomaton:
    """Six-control automaton whose termination values accumulate at 1/2.

    Max at ``s`` either keeps gambling (to ``u``) or cashes out (to ``r``).
    Counter changes sit on the rules leaving ``u`` and ``d``, so that the
    unrolled game has these edges at every counter n > 0:

        s_n -> u_n, r_n
        u_n -> s_{n+1}, d_n        (1/2 each)
        d_n -> s_{n-1}, u_n        (1/2 each)
        r_n -> z_n, t_n            (1/2 each)
        z_n -> z_{n-1}
        t_n -> t_{n+1}
    """
    controls = [
        ("s", Owner.MAX),
        ("u", Owner.RANDOM),
        ("d", Owner.RANDOM),
        ("r", Owner.RANDOM),
        ("z", Owner.RANDOM),
        ("t", Owner.RANDOM),
    ]
    rules = [
        Rule("s", 0, "u"),
        Rule("s", 0, "r"),
        Rule("u", +1, "s", HALF),
        Rule("u", 0, "d", HALF),
        Rule("d", -1, "s", HALF),
        Rule("d", 0, "u", HALF),
        Rule("r", 0, "z", HALF),
        Rule("r", 0, "t", HALF),
        Rule("z", -1, "z", Fraction(1)),
        Rule("t", +1, "t", Fraction(1)),
    ]
    return validate_oc(controls, rules)


def solvency_automaton(actions) -> OCAutomaton:
    """One-player automaton for a gambler choosing among wealth-change lotteries.

    ``actions`` is a list of ``{delta: probability}`` maps. The Max control
    ``g`` moves by a 0-rule to action control ``a<k>``, which samples the
    change and returns to ``g``. Changes larger than one unit pass through
    chains of deterministic intermediate controls, one unit per step.
    """
    actions = list(actions)
    if not actions:
        raise BadDistribution("at least one action is required")
    controls = [("g", Owner.MAX)]
    rules = []
    for k, dist in enumerate(actions):
        dist = {int(d): Fraction(p) for d, p in dict(dist).items()}
        if sum(dist.values()) != 1 or any(p <= 0 for p in dist.values()):
            raise BadDistribution(f"action {k} is not a probability distribution")
        act = f"a{k}"
        controls.append((act, Owner.RANDOM))
        rules.append(Rule("g", 0, act))
        for delta, p in sorted(dist.items()):
            if -1 <= delta <= 1:
                rules.append(Rule(act, delta, "g", p))
                continue
            step = 1 if delta > 0 else -1
            hops = [f"{act}_{'p' if step > 0 else 'm'}{abs(delta)}_{j}" for j in range(abs(delta) - 1)]
            controls += [(h, Owner.RANDOM) for h in hops]
            chain = [act] + hops + ["g"]
            for j, (src, dst) in enumerate(zip(chain, chain[1:])):
                rules.append(Rule(src, step, dst, p if j == 0 else Fraction(1)))
    return validate_oc(controls, rules)


DEFAULT_SOLVENCY = (
    {-1: Fraction(2, 3), +1: Fraction(1, 3)},
    {+1: Fraction(1)},
)


@dataclass(frozen=True)
class ExampleSpec:
    kind: str
    depth: int = 10
    actions: tuple = field(default=DEFAULT_SOLVENCY)

    def __post_init__(self):
        if self.kind not in ("fig1", "fig2", "solvency"):
            raise ValueError(f"unknown example {self.kind!r}")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")

    def build(self):
        if self.kind == "fig1":
            return fig1_game(self.depth)
        if self.kind == "fig2":
            return fig2_automaton()
        return solvency_automaton(self.actions)
