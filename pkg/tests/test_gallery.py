from fractions import Fraction

import pytest

from stochreach.bellman import brute_force_value, value_iterate
from stochreach.errors import BadDistribution
from stochreach.gallery import (
    DEFAULT_SOLVENCY,
    ExampleSpec,
    fig1_game,
    fig2_automaton,
    solvency_automaton,
)
from stochreach.game import Owner
from stochreach.ocssg import check_corollary_oc, limit_values, termination_bounds, unroll


def rule_graph_connected(a):
    succ = {c: {r.dst for r in a.rules_from(c)} for c in a.names}
    for c in a.names:
        seen, stack = {c}, [c]
        while stack:
            for d in succ[stack.pop()]:
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        if seen != set(a.names):
            return False
    return True


def test_fig1_smallest():
    g = fig1_game(1)
    assert set(g.names) == {"r_0", "r_1", "s_0", "s_1", "t_0", "t_1"}
    assert g.targets == {g.index("t_0")}


def test_fig1_edges():
    g = fig1_game(4)
    assert g.successors(g.index("r_0")) == [g.index("r_1")]
    assert g.successors(g.index("r_2")) == [g.index("r_3"), g.index("s_2")]
    assert g.successors(g.index("r_4")) == [g.index("s_4")]
    half = Fraction(1, 2)
    assert g.edges[g.index("s_3")] == ((g.index("s_2"), half), (g.index("t_3"), half))
    with pytest.raises(ValueError):
        fig1_game(0)


@pytest.mark.parametrize("N", [1, 4, 10])
def test_fig1_exact_closed_form(N):
    g = fig1_game(N)
    v = brute_force_value(g)
    for i in range(N + 1):
        assert v[g.index(f"s_{i}")] == 1 - Fraction(1, 2**i)
    assert v[g.index("r_0")] == 1 - Fraction(1, 2**N)


def test_fig1_values_independent_of_depth():
    a = value_iterate(fig1_game(5)).valuation.by_name(fig1_game(5))
    b = value_iterate(fig1_game(15)).valuation.by_name(fig1_game(15))
    for i in range(6):
        assert abs(a[f"s_{i}"] - b[f"s_{i}"]) < 1e-12


def test_fig2_counts():
    a = fig2_automaton()
    assert len(a.controls) == 6 and len(a.rules) == 10
    assert a.owner("s") is Owner.MAX
    assert all(a.owner(c) is Owner.RANDOM for c in "udrzt")
    assert {(r.src, r.delta, r.dst) for r in a.rules} == {
        ("s", 0, "u"), ("s", 0, "r"), ("u", 1, "s"), ("u", 0, "d"), ("d", -1, "s"),
        ("d", 0, "u"), ("r", 0, "z"), ("r", 0, "t"), ("z", -1, "z"), ("t", 1, "t"),
    }


def test_fig2_unroll_three():
    g = unroll(fig2_automaton(), 3)
    assert len(g) == 25
    assert g.successors(g.index("u_1")) == [g.index("s_2"), g.index("d_1")]
    assert g.successors(g.index("d_2")) == [g.index("s_1"), g.index("u_2")]


def test_fig2_s1_tends_to_three_quarters():
    prev = 0
    for N in (8, 16, 32):
        cur = termination_bounds(fig2_automaton(), N).lower("s", 1)
        assert prev <= cur <= 0.75
        prev = cur
    assert abs(prev - 0.75) < 1e-6


def test_solvency_structure():
    a = solvency_automaton(DEFAULT_SOLVENCY)
    assert [c for c, o in a.controls if o is Owner.MAX] == ["g"]
    assert rule_graph_connected(a)


def test_solvency_multi_unit_actions():
    a = solvency_automaton([{-2: Fraction(1, 2), 3: Fraction(1, 2)}])
    assert rule_graph_connected(a)
    assert all(r.delta in (-1, 0, 1) for r in a.rules)
    down = unroll(solvency_automaton([{-2: 1}]), 12)
    v = value_iterate(down).valuation
    assert all(v[down.index(f"g_{n}")] == 1.0 for n in range(12))
    up = unroll(solvency_automaton([{3: 1}]), 12)
    assert value_iterate(up).valuation[up.index("g_4")] == 0.0


def test_solvency_single_actions():
    down = solvency_automaton([{-1: 1}])
    assert limit_values(down, 1e-6, 32).limits["g"] == 1.0
    up = solvency_automaton([{+1: 1}])
    b = termination_bounds(up, 16)
    assert all(b.lower("g", n) == 0.0 for n in range(1, 17))


def test_solvency_two_actions_corollary():
    verdict = check_corollary_oc(solvency_automaton(DEFAULT_SOLVENCY), 1e-6, 128)
    assert verdict.holds and not verdict.inconclusive
    assert all(min(x, 1 - x) <= 1e-6 for x in verdict.limits.values())


def test_solvency_bad_distribution():
    with pytest.raises(BadDistribution):
        solvency_automaton([{-1: Fraction(1, 2)}])
    with pytest.raises(BadDistribution):
        solvency_automaton([])


def test_example_spec():
    assert ExampleSpec("fig1", depth=3).build() == fig1_game(3)
    assert ExampleSpec("fig2").build() == fig2_automaton()
    with pytest.raises(ValueError):
        ExampleSpec("fig3")
    with pytest.raises(ValueError):
        ExampleSpec("fig1", depth=0)
