"""Strategy synthesis, evaluation, loss diagnostics and threshold queries."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .bellman import SolveConfig, _Operator, format_value, residual_of, value_iterate
from .chain import solve_absorbing
from .errors import (
    HorizonNotFound,
    NoValuePreservingEdge,
    NotConverged,
    NotFixedPoint,
)
from .game import GameGraph, Owner, Valuation, as_valuation, validate_game
from .policies import (
    MemorylessStrategy,
    StageSwitchingStrategy,
    SwitchOnLoss,
    product_chain,
)
from .qualitative import attractor_ranks, safe_states, safe_strategy_min

log = logging.getLogger(__name__)

FLOAT_GAP_TOLERANCE = 1e-9
HORIZON_CAP = 2**20
PRODUCT_WARN_SIZE = 10**7


def gap_tolerance(v: Valuation, tol=None):
    if tol is not None:
        return tol
    return 0 if v.exact else FLOAT_GAP_TOLERANCE


def _require_fixed_point(g, v, tol):
    res = residual_of(g, v)
    if res > (tol if tol else 0):
        raise NotFixedPoint(f"valuation is not a fixed point (residual {res:.3g})")


def extract_min_optimal(g: GameGraph, v, tol=None) -> MemorylessStrategy:
    """Pure Min strategy picking, at each Min state, the first successor of least value."""
    v = as_valuation(g, v)
    tol = gap_tolerance(v, tol)
    _require_fixed_point(g, v, tol)
    picks = {}
    for s in g.owned_by(Owner.MIN):
        succ = g.successors(s)
        best = min(v[d] for d in succ)
        picks[s] = next(d for d in succ if v[d] <= best + tol)
    return MemorylessStrategy.pure(Owner.MIN, picks)


class GreedyChoice(NamedTuple):
    strategy: MemorylessStrategy
    may_stall: bool


def extract_max_greedy(g: GameGraph, v, eps: float, tol=None) -> GreedyChoice:
    """Pure Max strategy picking the first successor of greatest value.

    Greedy choice alone can cycle forever through value-preserving edges and
    never reach the target. ``may_stall`` reports whether that happens here:
    it is set when, with Max fixed to the greedy choice, some positive-value
    state lies outside the positive attractor of the targets.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    v = as_valuation(g, v)
    tol = gap_tolerance(v, tol)
    picks = {}
    for s in g.owned_by(Owner.MAX):
        succ = g.successors(s)
        best = max(v[d] for d in succ)
        picks[s] = next(d for d in succ if v[d] >= best - tol)
    strategy = MemorylessStrategy.pure(Owner.MAX, picks)
    reach = attractor_ranks(g, g.targets, fixed={s: [d] for s, d in picks.items()})
    stall = any(v[s] > tol and s not in reach for s in g.states)
    return GreedyChoice(strategy, stall)


def build_value_preserving_subgame(g: GameGraph, v, tol=None) -> GameGraph:
    """Keep only value-preserving player edges; make value-0 states absorbing.

    Random states with positive value keep all their edges. States keep their
    names and owners, so strategies and valuations carry over by index.
    """
    v = as_valuation(g, v)
    tol = gap_tolerance(v, tol)
    states = list(zip(g.names, g.owners))
    edges = []
    for s in g.states:
        name = g.names[s]
        if s in g.targets:
            edges.extend((name, g.names[d], w) for d, w in g.edges[s])
        elif v[s] <= tol:
            edges.append((name, name, Fraction(1) if g.owners[s] is Owner.RANDOM else None))
        elif g.owners[s] is Owner.RANDOM:
            edges.extend((name, g.names[d], w) for d, w in g.edges[s])
        else:
            kept = [(name, g.names[d], None) for d, _ in g.edges[s] if abs(v[s] - v[d]) <= tol]
            if not kept:
                raise NoValuePreservingEdge(f"state {name!r} has no value-preserving edge")
            edges.extend(kept)
    return validate_game(states, edges, [g.names[t] for t in g.targets])


def _progress_strategy(g: GameGraph, h: GameGraph, v, tol) -> MemorylessStrategy:
    # Value-preserving Max choice that strictly lowers the attractor rank in H.
    rank = attractor_ranks(h, h.targets)
    picks = {}
    for s in g.owned_by(Owner.MAX):
        succ = h.successors(s)
        if v[s] <= tol:
            picks[s] = g.successors(s)[0]
            continue
        if s not in rank:
            raise HorizonNotFound(
                f"positive-value state {g.names[s]!r} cannot progress; valuation not converged?"
            )
        picks[s] = next(d for d in succ if d in rank and rank[d] < rank[s])
    return MemorylessStrategy.pure(Owner.MAX, picks)


def bounded_reach_fixed_max(g: GameGraph, tau: MemorylessStrategy, horizon: int):
    """Yield ``(k, w_k)`` where ``w_k`` is the worst-case (over Min) probability
    of reaching a target within ``k`` steps while Max follows ``tau``."""
    op = _Operator(g)
    chosen = np.zeros(len(g), dtype=np.intp)
    for s in g.owned_by(Owner.MAX):
        chosen[s] = tau.successor(s)
    is_max = op.is_max & ~op.target
    w = op.target.astype(float)
    for k in range(1, horizon + 1):
        nw = op(w)
        nw[is_max] = w[chosen[is_max]]
        w = nw
        yield k, w


def synthesize_max_optimal(g: GameGraph, cfg: SolveConfig | None = None) -> StageSwitchingStrategy:
    """Optimal Max strategy for a finite game, in stage-switching form.

    Values come from ``value_iterate``. Inside the value-preserving subgame,
    Max follows a value-preserving move that makes progress towards the
    targets. For each positive-value state ``s`` the horizon ``n_s`` is the
    first power of two after which the target has been reached with
    probability at least ``v(s)/2`` against every Min strategy.
    """
    cfg = cfg or SolveConfig()
    result = value_iterate(g, cfg)
    if not result.converged:
        raise NotConverged(result)
    v = result.valuation
    tol = FLOAT_GAP_TOLERANCE
    h = build_value_preserving_subgame(g, v, tol)
    tau = _progress_strategy(g, h, v, tol)

    pending = {s for s in g.states if v[s] > tol}
    horizons = {s: 1 for s in g.states if s not in pending}
    checkpoint = 1
    for k, w in bounded_reach_fixed_max(g, tau, HORIZON_CAP):
        if not pending:
            break
        if k == checkpoint:
            for s in list(pending):
                if w[s] >= v[s] / 2 - cfg.tolerance:
                    horizons[s] = k
                    pending.discard(s)
            checkpoint *= 2
    if pending:
        names = ", ".join(g.names[s] for s in sorted(pending)[:5])
        raise HorizonNotFound(f"no horizon up to {HORIZON_CAP} for {names}")
    worst = len(g) * (max(horizons.values(), default=1) + 1) * len(g)
    if worst > PRODUCT_WARN_SIZE:
        log.warning("stage-switching product chain may reach %d states", worst)
    stages = {s: (0, horizons[s]) for s in g.states}
    return StageSwitchingStrategy((tau,), stages)


def evaluate_strategy_pair(g: GameGraph, sigma, pi, s) -> Fraction:
    """Exact probability of reaching a target from ``s`` under ``sigma`` and ``pi``."""
    chain = product_chain(g, sigma, pi, g.index(s))
    return solve_absorbing(chain.succ, chain.terminal())[chain.start]


@dataclass(frozen=True)
class LossStats:
    expected_loss: float | Fraction
    prob_positive_loss: Fraction


def loss_stats(g: GameGraph, v, sigma, pi, s, tol=None) -> LossStats:
    """Expectation and positivity probability of the loss at the first value-decreasing Max move.

    The product chain is cut at every value-decreasing Max edge, which leads to
    a sink carrying the value of the Max state it left; the first-passage
    probabilities into these sinks give both statistics exactly. Float values
    are lifted to the exact rationals they represent, and the expectation is
    returned in the valuation's own mode.
    """
    v = as_valuation(g, v)
    tol = gap_tolerance(v, tol)
    chain = product_chain(g, sigma, pi, g.index(s))
    n = len(chain.nodes)
    succ = [list(x) for x in chain.succ]
    loss_sink: dict[int, int] = {}
    reward: dict[int, Fraction] = {}
    for i, (x, _) in enumerate(chain.nodes):
        if x in g.targets or g.owners[x] is not Owner.MAX:
            continue
        cut = []
        for j, p in succ[i]:
            y = chain.state_of(j)
            if v[x] > v[y] + tol:
                if x not in loss_sink:
                    loss_sink[x] = n + len(loss_sink)
                    reward[loss_sink[x]] = Fraction(v[x])
                cut.append((loss_sink[x], p))
            else:
                cut.append((j, p))
        succ[i] = cut
    succ.extend([] for _ in loss_sink)
    terminal_targets = {i: Fraction(0) for i, (x, _) in enumerate(chain.nodes) if x in g.targets}
    expected = solve_absorbing(succ, {**terminal_targets, **reward})[chain.start]
    positive = solve_absorbing(
        succ, {**terminal_targets, **{k: Fraction(1) for k in reward}}
    )[chain.start]
    return LossStats(expected if v.exact else float(expected), positive)


def value_gap(values, eps: float, tol=None) -> float:
    """Smallest difference between distinct values whose larger side is at least ``eps``.

    Returns ``math.inf`` when no such pair exists.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    vals = list(values)
    exact = all(isinstance(x, (Fraction, int)) for x in vals)
    tol = (0 if exact else FLOAT_GAP_TOLERANCE) if tol is None else tol
    distinct = _cluster(sorted(vals, reverse=True), tol)
    best = math.inf
    for hi, lo in zip(distinct, distinct[1:]):
        if hi >= eps:
            best = min(best, hi - lo)
    return best


def _cluster(desc, tol):
    # Representatives of runs of sorted values closer than tol.
    out = []
    for x in desc:
        if not out or out[-1] - x > tol:
            out.append(x)
    return out


@dataclass(frozen=True)
class StarRow:
    eps: float
    count: int
    gap: float


@dataclass(frozen=True)
class StarReport:
    rows: tuple[StarRow, ...]
    closest_pair: tuple | None

    def count(self, eps):
        return next(r.count for r in self.rows if r.eps == eps)


def check_star_condition(values, eps_grid, cluster_tol=1e-9) -> StarReport:
    """Profile of how many distinct values lie at or above each ``eps``.

    Values closer than ``cluster_tol`` count as one. The closest pair of
    distinct values is reported as a hint of where values accumulate.
    """
    vals = list(values)
    exact = all(isinstance(x, (Fraction, int)) for x in vals)
    tol = Fraction(cluster_tol) if exact else cluster_tol
    distinct = _cluster(sorted(vals, reverse=True), tol)
    rows = []
    for eps in eps_grid:
        above = [x for x in distinct if x >= eps]
        rows.append(StarRow(eps, len(above), value_gap(distinct, eps, 0)))
    pairs = list(zip(distinct, distinct[1:]))
    closest = min(pairs, key=lambda p: p[0] - p[1]) if pairs else None
    return StarReport(tuple(rows), closest)


@dataclass(frozen=True)
class ThresholdQuery:
    state: str | int
    nu: Fraction
    relation: str = "ge"

    def __post_init__(self):
        if self.relation not in ("ge", "gt"):
            raise ValueError("relation must be 'ge' or 'gt'")
        nu = self.nu
        if isinstance(nu, float):
            nu = Fraction(repr(nu))
        nu = Fraction(nu)
        if not 0 <= nu <= 1:
            raise ValueError("threshold must lie in [0, 1]")
        object.__setattr__(self, "nu", nu)


@dataclass(frozen=True)
class ThresholdVerdict:
    winner: str | None
    value: float | Fraction
    nu: Fraction
    relation: str
    witness: object = None
    ambiguous: bool = False

    def line(self) -> str:
        winner = self.winner or "ambiguous"
        return (
            f"winner={winner} value={format_value(self.value)} "
            f"nu={format_value(self.nu)} rel={self.relation}"
        )


def threshold_winner(
    g: GameGraph, q: ThresholdQuery, cfg: SolveConfig | None = None, exact_limit: int = 400
) -> ThresholdVerdict:
    """Decide which player wins ``Pr >= nu`` (or ``Pr > nu``) from a state, with a witness.

    Both optimal strategies are synthesized. When their product chain has at
    most ``exact_limit`` nodes it is solved over the rationals, which gives
    the exact value and settles ties exactly. Otherwise the float value is
    compared with the threshold, and a strict query whose value lies within
    tolerance of ``nu`` is reported as ambiguous.
    """
    cfg = cfg or SolveConfig()
    s = g.index(q.state)
    result = value_iterate(g, cfg)
    if not result.converged:
        raise NotConverged(result)
    v = result.valuation
    sigma = synthesize_max_optimal(g, cfg)
    pi = extract_min_optimal(g, v)
    chain = product_chain(g, sigma, pi, s)
    nu = q.nu
    if len(chain.nodes) <= exact_limit:
        value = solve_absorbing(chain.succ, chain.terminal())[chain.start]
        max_wins = value >= nu if q.relation == "ge" else value > nu
        ambiguous = False
    else:
        value = v[s]
        tol = max(FLOAT_GAP_TOLERANCE, result.residual)
        ambiguous = False
        if q.relation == "ge":
            max_wins = value >= float(nu) - tol
        elif nu == 0 and s in safe_states(g):
            max_wins = False
        elif nu == 1:
            max_wins = False
        elif abs(value - float(nu)) <= tol:
            max_wins, ambiguous = None, True
        else:
            max_wins = value > float(nu)
    if ambiguous:
        return ThresholdVerdict(None, value, nu, q.relation, None, True)
    if max_wins:
        return ThresholdVerdict("max", value, nu, q.relation, sigma)
    if q.relation == "gt" and nu == 0 and value == 0:
        witness = safe_strategy_min(g)
    else:
        witness = pi
    return ThresholdVerdict("min", value, nu, q.relation, witness)


__all__ = [
    "GreedyChoice",
    "LossStats",
    "StarReport",
    "SwitchOnLoss",
    "ThresholdQuery",
    "ThresholdVerdict",
    "build_value_preserving_subgame",
    "bounded_reach_fixed_max",
    "check_star_condition",
    "evaluate_strategy_pair",
    "extract_max_greedy",
    "extract_min_optimal",
    "loss_stats",
    "synthesize_max_optimal",
    "threshold_winner",
    "value_gap",
]
