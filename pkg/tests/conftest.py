from __future__ import annotations

from pathlib import Path

import pytest

from ecosim.library import load_prelude
from ecosim.simulator import Session

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

FIXTURE_W_TEXT = [
    "There is a bag.",
    "This bag can hold up to 20 kg before bursting.",
    "There are three watermelons.",
]


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture()
def core_em():
    return load_prelude(["core"])


@pytest.fixture()
def market_em():
    return load_prelude(["core", "market"])


@pytest.fixture()
def clothing_em():
    return load_prelude(["core", "clothing"])


def make_market_session() -> Session:
    session = Session(load_prelude(["core", "market"]))
    for line in FIXTURE_W_TEXT:
        record = session.submit(line)
        assert record.failure is None, record.failure
    return session


def make_clothing_session(dressed: bool = True) -> Session:
    session = Session(load_prelude(["core", "clothing"]))
    lines = [
        "There is a person.",
        "There is a white t-shirt.",
        "There is a red t-shirt.",
        "There is a jacket.",
        "There are blue jeans.",
    ]
    if dressed:
        lines.append("He put on a white t-shirt and blue jeans.")
    for line in lines:
        record = session.submit(line)
        assert record.failure is None, record.failure
    return session


@pytest.fixture()
def market_session() -> Session:
    return make_market_session()


@pytest.fixture()
def clothing_session() -> Session:
    return make_clothing_session()
