from __future__ import annotations

import pytest

from cqa.corpus import CONFERENCE_DB_TEXT, Q0, Q1, ROME_A
from cqa.uncertaindb import Fact, parse_database


def fact(relation: str, *values: str, key: int = 1) -> Fact:
    return Fact(relation, values[:key], values[key:])


@pytest.fixture
def conference_db():
    return parse_database(CONFERENCE_DB_TEXT)


@pytest.fixture
def rome_a():
    return ROME_A


@pytest.fixture
def q1():
    return Q1


@pytest.fixture
def q0():
    return Q0
