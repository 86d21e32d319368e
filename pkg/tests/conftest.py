from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes `oracles` importable

from lelma.games import BUNDLED_GAMES, GameSpec, load_game


@pytest.fixture(scope="session")
def games() -> "dict[str, GameSpec]":
    return {name: load_game(name) for name in BUNDLED_GAMES}


@pytest.fixture(scope="session")
def pd(games) -> GameSpec:
    return games["pd"]


@pytest.fixture(scope="session")
def sh(games) -> GameSpec:
    return games["sh"]


@pytest.fixture(scope="session")
def hd(games) -> GameSpec:
    return games["hd"]
