"""Monte Carlo estimation of reachability probabilities under fixed strategies.

Seed contract: a run driven by key ``k`` uses ``numpy.random.Philox(key=k)``
and consumes one uniform double per step, taking the first successor whose
cumulative probability exceeds it. Replica ``i`` of an estimate seeded
with ``seed`` uses key ``splitmix64(seed ^ i)``, so results do not depend on
execution order or batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .game import GameGraph, Owner, as_valuation
from .policies import product_chain

MASK64 = (1 << 64) - 1
CHUNK = 256
BATCH = 8192


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 output function."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def replica_key(seed: int, i: int) -> int:
    return splitmix64((seed ^ i) & MASK64)


@dataclass(frozen=True)
class SimConfig:
    replicas: int = 10_000
    max_steps: int = 10_000
    seed: int = 0
    confidence: float = 0.99

    def __post_init__(self):
        if self.replicas < 1 or self.max_steps < 1:
            raise ValueError("replicas and max_steps must be at least 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class RunOutcome:
    reached: bool
    steps: int
    truncated: bool
    loss: float = 0.0


class _SamplingTable:
    """Dense successor/cumulative-probability arrays for a product chain."""

    def __init__(self, g: GameGraph, sigma, pi, start: int, values=None, tol=1e-9):
        chain = product_chain(g, sigma, pi, start)
        self.chain = chain
        n = len(chain.nodes)
        width = max(len(s) for s in chain.succ)
        self.succ = np.zeros((n, width), dtype=np.intp)
        self.cum = np.full((n, width), np.inf)
        for i, row in enumerate(chain.succ):
            acc = 0.0
            for k, (j, p) in enumerate(row):
                acc += float(p)
                self.succ[i, k] = j
                self.cum[i, k] = acc
            # The last successor absorbs rounding in the cumulative sums.
            self.cum[i, len(row) - 1] = np.inf
            self.succ[i, len(row):] = self.succ[i, len(row) - 1]
        states = np.array([s for s, _ in chain.nodes], dtype=np.intp)
        self.target = np.array([s in g.targets for s in states.tolist()])
        self.state = states
        self.hopeless = ~self._can_reach(chain)
        self.loss = None
        if values is not None:
            # loss[i, k]: value lost when node i takes its k-th successor, 0 if none.
            self.loss = np.zeros((n, width))
            for i, row in enumerate(chain.succ):
                x = int(states[i])
                if g.owners[x] is not Owner.MAX or x in g.targets:
                    continue
                for k, (j, _) in enumerate(row):
                    y = int(states[j])
                    if values[x] > values[y] + tol:
                        self.loss[i, k] = float(values[x])

    @staticmethod
    def _can_reach(chain):
        pred = [[] for _ in chain.nodes]
        for i, row in enumerate(chain.succ):
            for j, _ in row:
                pred[j].append(i)
        ok = np.zeros(len(chain.nodes), dtype=bool)
        stack = list(chain.terminal())
        ok[stack] = True
        while stack:
            j = stack.pop()
            for i in pred[j]:
                if not ok[i]:
                    ok[i] = True
                    stack.append(i)
        return ok

    def step(self, nodes: np.ndarray, u: np.ndarray):
        k = (u[:, None] >= self.cum[nodes]).sum(axis=1)
        return self.succ[nodes, k], k


def sample_run(
    g: GameGraph, sigma, pi, s, seed: int, max_steps: int, values=None, stop_hopeless=False
) -> RunOutcome:
    """Simulate one run from ``s``; a deterministic function of ``seed``.

    The run stops at a target or after ``max_steps`` steps (then it is
    truncated). With ``stop_hopeless`` it also stops, untruncated, on entering
    a node from which no target is reachable. With ``values`` given, ``loss``
    records the value of the Max state at the first value-decreasing Max move.
    """
    if values is not None:
        values = as_valuation(g, values)
    table = _SamplingTable(g, sigma, pi, g.index(s), values)
    rng = np.random.Generator(np.random.Philox(key=seed))
    node = table.chain.start
    loss = 0.0
    steps = 0
    while steps < max_steps:
        for x in rng.random(min(CHUNK, max_steps - steps)):
            if table.target[node]:
                return RunOutcome(True, steps, False, loss)
            if stop_hopeless and table.hopeless[node]:
                return RunOutcome(False, steps, False, loss)
            k = int(np.searchsorted(table.cum[node], x, side="right"))
            if table.loss is not None and loss == 0.0:
                loss = float(table.loss[node, k])
            node = int(table.succ[node, k])
            steps += 1
    if table.target[node]:
        return RunOutcome(True, steps, False, loss)
    if stop_hopeless and table.hopeless[node]:
        return RunOutcome(False, steps, False, loss)
    return RunOutcome(False, steps, True, loss)


@dataclass(frozen=True)
class ReachEstimate:
    estimate: float
    half_width: float
    replicas: int
    truncated_fraction: float
    seeds: np.ndarray

    def row(self) -> str:
        return (
            f"{self.estimate!r}\t{self.half_width!r}\t{self.replicas}\t{self.truncated_fraction!r}"
        )


class _StreamReader:
    """Draw arbitrary chunks of per-key Philox streams from one reused generator.

    Philox advances its 256-bit counter once per four 64-bit outputs and
    ``Generator.random`` consumes one output per double, so chunk ``j`` of a
    stream starts at counter ``j * CHUNK / 4``. Resetting the state is much
    cheaper than constructing a generator per replica and yields the same
    numbers as reading the stream sequentially.
    """

    def __init__(self):
        self.bits = np.random.Philox(key=0)
        self.gen = np.random.Generator(self.bits)
        self.state = self.bits.state

    def chunk(self, key: int, j: int, width: int) -> np.ndarray:
        st = self.state
        st["state"]["key"] = np.array([key, 0], dtype=np.uint64)
        st["state"]["counter"] = np.array([j * (CHUNK // 4), 0, 0, 0], dtype=np.uint64)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        self.bits.state = st
        return self.gen.random(width)


def _simulate_batch(table: _SamplingTable, keys, max_steps: int):
    m = len(keys)
    reader = _StreamReader()
    node = np.full(m, table.chain.start, dtype=np.intp)
    done = table.target[node] | table.hopeless[node]
    steps = 0
    j = 0
    while steps < max_steps and not done.all():
        width = min(CHUNK, max_steps - steps)
        active = np.flatnonzero(~done)
        u = np.empty((len(active), width))
        for r, i in enumerate(active.tolist()):
            u[r] = reader.chunk(keys[i], j, width)
        cur = node[active]
        fin = np.zeros(len(active), dtype=bool)
        for k in range(width):
            live = np.flatnonzero(~fin)
            if not len(live):
                break
            nxt, _ = table.step(cur[live], u[live, k])
            cur[live] = nxt
            fin[live] = table.target[nxt] | table.hopeless[nxt]
        node[active] = cur
        done[active] = fin
        steps += width
        j += 1
    reached = table.target[node]
    truncated = ~done
    return reached, truncated


def estimate_reach(g: GameGraph, sigma, pi, s, cfg: SimConfig | None = None) -> ReachEstimate:
    """Fraction of replicas reaching a target within ``max_steps``, with a normal interval.

    Replica ``i`` has the same reached flag as
    ``sample_run(..., seed=replica_key(cfg.seed, i))``. Runs that enter a node
    with no path to a target stop early as misses. Runs still undecided after
    ``max_steps`` count as misses too, so the estimate is biased low by at
    most ``truncated_fraction``.
    """
    cfg = cfg or SimConfig()
    table = _SamplingTable(g, sigma, pi, g.index(s))
    keys = [replica_key(cfg.seed, i) for i in range(cfg.replicas)]
    reached = np.zeros(cfg.replicas, dtype=bool)
    truncated = np.zeros(cfg.replicas, dtype=bool)
    for lo in range(0, cfg.replicas, BATCH):
        r, t = _simulate_batch(table, keys[lo : lo + BATCH], cfg.max_steps)
        reached[lo : lo + BATCH] = r
        truncated[lo : lo + BATCH] = t
    n = cfg.replicas
    p = float(reached.mean())
    z = NormalDist().inv_cdf(0.5 + cfg.confidence / 2)
    half = z * math.sqrt(p * (1 - p) / n)
    return ReachEstimate(p, half, n, float(truncated.mean()), np.array(keys, dtype=np.uint64))
