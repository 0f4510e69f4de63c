from fractions import Fraction

import pytest

from stochreach.chain import solve_absorbing
from stochreach.errors import IncompleteStrategy, ValidationError
from stochreach.gallery import fig1_game
from stochreach.game import Owner, validate_game
from stochreach.policies import (
    MemorylessStrategy,
    StageSwitchingStrategy,
    format_strategy,
    parse_strategy,
    product_chain,
)
from stochreach.strategy import synthesize_max_optimal

H = Fraction(1, 2)


def coin_game():
    return validate_game(
        [("m", "max"), ("n", "min"), ("t", "rand"), ("x", "rand")],
        [("m", "n", None), ("m", "t", None), ("n", "t", None), ("n", "x", None),
         ("x", "x", Fraction(1))],
        ["t"],
    )


def test_memoryless_round_trip():
    g = coin_game()
    sigma = MemorylessStrategy(Owner.MAX, {0: ((1, H), (2, H))})
    text = format_strategy(g, sigma)
    assert text == "choose m n 1/2\nchoose m t 1/2\n"
    assert parse_strategy(g, text) == sigma


def test_stage_round_trip():
    g = fig1_game(6)
    stage = synthesize_max_optimal(g)
    text = format_strategy(g, stage)
    assert "stage r_0 " in text
    back = parse_strategy(g, text)
    assert back == stage
    a = MemorylessStrategy.pure(Owner.MAX, {g.index("r_1"): g.index("r_2")})
    b = MemorylessStrategy.pure(Owner.MAX, {g.index("r_1"): g.index("s_1")})
    two = StageSwitchingStrategy((a, b), {g.index("r_1"): (0, 2), g.index("r_2"): (1, 3)})
    assert parse_strategy(g, format_strategy(g, two)) == two


def test_parse_rejects_bad_lines():
    g = coin_game()
    with pytest.raises(ValidationError) as exc:
        parse_strategy(g, "choose m n\nchoose m q\n")
    assert exc.value.line == 2
    with pytest.raises(ValidationError):
        parse_strategy(g, "choose m x\n")
    with pytest.raises(ValidationError):
        parse_strategy(g, "choose m n 1/3\n")
    with pytest.raises(ValidationError):
        parse_strategy(g, "choose m n\nchoose n t\n")
    with pytest.raises(ValidationError):
        parse_strategy(g, "stage m 0\n")


def test_product_chain_forced_moves_and_gaps():
    g = coin_game()
    sigma = MemorylessStrategy.pure(Owner.MAX, {0: 1})
    with pytest.raises(IncompleteStrategy):
        product_chain(g, sigma, None, 0)
    pi = MemorylessStrategy.pure(Owner.MIN, {1: 3})
    chain = product_chain(g, sigma, pi, 0)
    assert [chain.state_of(i) for i in range(len(chain.nodes))] == [0, 1, 3]


def test_product_chain_tracks_memory():
    g = fig1_game(3)
    a = MemorylessStrategy.pure(Owner.MAX, {1: 2, 2: 3})
    stage = StageSwitchingStrategy((a, a, a), {s: (0, 2) for s in g.states})
    chain = product_chain(g, stage, None, 0)
    assert {m for _, m in chain.nodes} >= {(0, 2), (0, 1)}


def test_solve_absorbing_small_chains():
    # 0 -> 1 (1/2), 0 -> 2 (1/2); 1 is the target; 2 loops.
    assert solve_absorbing([[(1, H), (2, H)], [], [(2, Fraction(1))]], {1: Fraction(1)})[0] == H
    # Gambler's ruin on 0..3 with a fair coin from 1 and 2.
    succ = [[], [(0, H), (2, H)], [(1, H), (3, H)], []]
    assert solve_absorbing(succ, {0: Fraction(1)}) == [1, Fraction(2, 3), Fraction(1, 3), 0]
