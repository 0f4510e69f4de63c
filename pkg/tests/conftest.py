import random
import sys

import pytest
from hypothesis import strategies as st

from randgames import random_game


@st.composite
def games(draw, max_states=6, max_succ=3):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_game(random.Random(seed), max_states=max_states, max_succ=max_succ)


@pytest.fixture(scope="session")
def suite200():
    from randgames import random_games

    return random_games(200)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
