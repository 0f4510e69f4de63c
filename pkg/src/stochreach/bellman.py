"""Game values as the least fixed point of the Bellman operator.

``value_iterate`` runs the operator from the all-zero valuation in double
precision. ``solve_chain_exact`` and ``brute_force_value`` work over the
rationals and serve as oracles on small instances.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .chain import solve_absorbing
from .errors import DomainMismatch, IncompleteStrategy, TooLarge
from .game import GameGraph, Owner, Valuation, as_valuation, format_fraction
from .policies import MemorylessStrategy, product_chain

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    tolerance: float = 1e-12
    max_iterations: int = 10_000_000
    mode: str = "float"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.mode not in ("float", "exact-chain"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class SolveResult:
    valuation: Valuation
    iterations: int
    residual: float
    converged: bool

    def rows(self, g: GameGraph):
        for s in g.states:
            yield g.names[s], self.valuation[s], self.residual


def format_value(x) -> str:
    if isinstance(x, Fraction):
        return format_fraction(x)
    return format(float(x), ".17g")


def bellman_apply(g: GameGraph, f) -> Valuation:
    """One application of the Bellman operator (exact if ``f`` is exact)."""
    f = as_valuation(g, f)
    out = []
    for s in g.states:
        if s in g.targets:
            out.append(Fraction(1) if f.exact else 1.0)
            continue
        owner = g.owners[s]
        if owner is Owner.MAX:
            out.append(max(f[d] for d, _ in g.edges[s]))
        elif owner is Owner.MIN:
            out.append(min(f[d] for d, _ in g.edges[s]))
        elif f.exact:
            out.append(sum((w * f[d] for d, w in g.edges[s]), Fraction(0)))
        else:
            out.append(math.fsum(float(w) * f[d] for d, w in g.edges[s]))
    return Valuation(out, exact=f.exact)


class _Operator:
    """Vectorised Bellman operator over a CSR edge layout."""

    def __init__(self, g: GameGraph):
        n = len(g)
        counts = np.array([len(e) for e in g.edges], dtype=np.intp)
        self.starts = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.intp)
        self.dst = np.array([d for es in g.edges for d, _ in es], dtype=np.intp)
        self.w = np.array(
            [float(w) if w is not None else 0.0 for es in g.edges for _, w in es]
        )
        owners = g.owners
        self.is_max = np.array([o is Owner.MAX for o in owners])
        self.is_min = np.array([o is Owner.MIN for o in owners])
        self.is_rand = np.array([o is Owner.RANDOM for o in owners])
        self.target = np.zeros(n, dtype=bool)
        self.target[list(g.targets)] = True

    def __call__(self, f: np.ndarray) -> np.ndarray:
        fd = f[self.dst]
        out = np.add.reduceat(self.w * fd, self.starts)
        if self.is_max.any():
            out = np.where(self.is_max, np.maximum.reduceat(fd, self.starts), out)
        if self.is_min.any():
            out = np.where(self.is_min, np.minimum.reduceat(fd, self.starts), out)
        out[self.target] = 1.0
        return out


def value_iterate(g: GameGraph, cfg: SolveConfig | None = None) -> SolveResult:
    """Iterate the Bellman operator from 0 until the sup-norm change is within tolerance.

    The iterates increase monotonically towards the least fixed point. When
    the iteration cap is hit, the partial result is returned with
    ``converged=False``.
    """
    cfg = cfg or SolveConfig()
    op = _Operator(g)
    f = np.zeros(len(g))
    residual = math.inf
    it = 0
    while it < cfg.max_iterations:
        nf = op(f)
        # Float rounding in the weighted sums must not break monotonicity.
        np.maximum(nf, f, out=nf)
        np.minimum(nf, 1.0, out=nf)
        residual = float(np.max(np.abs(nf - f))) if len(f) else 0.0
        f = nf
        it += 1
        if residual <= cfg.tolerance:
            break
    converged = residual <= cfg.tolerance
    if not converged:
        log.warning("value iteration stopped after %d iterations, residual %.3g", it, residual)
    return SolveResult(Valuation(f.tolist(), exact=False), it, residual, converged)


def solve_chain_exact(g: GameGraph, sigma=None, pi=None) -> Valuation:
    """Exact reachability probabilities of every state under a memoryless strategy pair."""
    if sigma is not None and not isinstance(sigma, MemorylessStrategy):
        raise TypeError("solve_chain_exact takes memoryless strategies; use evaluate_strategy_pair")
    succ = []
    for s in g.states:
        if s in g.targets:
            succ.append([])
            continue
        owner = g.owners[s]
        if owner is Owner.RANDOM:
            succ.append(list(g.edges[s]))
        else:
            strat = sigma if owner is Owner.MAX else pi
            if len(g.edges[s]) == 1 and (strat is None or s not in strat):
                succ.append([(g.edges[s][0][0], Fraction(1))])
                continue
            if strat is None:
                raise IncompleteStrategy(f"no strategy covers {owner.value} state {g.names[s]!r}")
            succ.append(list(strat.distribution(s)))
    terminal = {t: Fraction(1) for t in g.targets}
    return Valuation(solve_absorbing(succ, terminal), exact=True)


def evaluate_from(g: GameGraph, sigma, pi, s) -> Fraction:
    """Exact reachability probability from one start state, for any supported strategy kind."""
    chain = product_chain(g, sigma, pi, g.index(s))
    return solve_absorbing(chain.succ, chain.terminal())[chain.start]


def pure_strategies(g: GameGraph, owner: Owner):
    """All pure memoryless strategies of ``owner``, in lexicographic edge order."""
    states = g.owned_by(owner)
    for picks in itertools.product(*(g.successors(s) for s in states)):
        yield MemorylessStrategy.pure(owner, dict(zip(states, picks)))


def strategy_count(g: GameGraph, owner: Owner) -> int:
    return math.prod(len(g.edges[s]) for s in g.owned_by(owner))


def brute_force_value(g: GameGraph, limit: int = 100_000) -> Valuation:
    """Exact values by enumerating all pure memoryless strategy pairs.

    Computes max-min and min-max per state and checks they agree.
    """
    total = strategy_count(g, Owner.MAX) * strategy_count(g, Owner.MIN)
    if total > limit:
        raise TooLarge(f"{total} strategy pairs exceed the limit {limit}")
    sigmas = list(pure_strategies(g, Owner.MAX))
    pis = list(pure_strategies(g, Owner.MIN))
    table = [[solve_chain_exact(g, sg, p) for p in pis] for sg in sigmas]
    n = len(g)
    maxmin = [max(min(row[j][s] for j in range(len(pis))) for row in table) for s in range(n)]
    minmax = [
        min(max(table[i][j][s] for i in range(len(sigmas))) for j in range(len(pis)))
        for s in range(n)
    ]
    if maxmin != minmax:
        raise AssertionError("max-min differs from min-max on a finite reachability game")
    return Valuation(maxmin, exact=True)


def residual_of(g: GameGraph, v) -> float:
    """Sup-norm distance between ``v`` and its Bellman image."""
    v = as_valuation(g, v)
    w = bellman_apply(g, v)
    if len(v) == 0:
        return 0.0
    return float(max(abs(a - b) for a, b in zip(w, v)))


def check_domain(g: GameGraph, v):
    if len(v) != len(g):
        raise DomainMismatch(f"valuation has {len(v)} entries, game has {len(g)} states")
