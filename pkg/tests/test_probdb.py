import random
from fractions import Fraction

import pytest

from cqa.corpus import CONFERENCE_DB_TEXT, Q0, ROME_A, random_acyclic_query, random_bid, random_database
from cqa.errors import DatabaseFormatError, SelfJoin
from cqa.probdb import (
    BIDDatabase,
    certain_blocks_restrict,
    dump_bid,
    is_safe,
    parse_bid,
    prob_bruteforce,
    prob_is_one,
    worlds,
)
from cqa.querylang import parse_query
from cqa.solvers import count_satisfying_repairs
from cqa.uncertaindb import UncertainDatabase, parse_database, repair_count

from conftest import fact


def rules(trace):
    return [s.rule for s in trace.steps]


def test_safety_traces():
    t = is_safe(parse_query("R(x;y)"))
    assert t.safe and rules(t) == ["SE3", "SE4", "SE1"]
    t = is_safe(Q0)
    assert not t.safe and t.steps == []
    t = is_safe(parse_query("R(x;y) & S(x;z)"))
    assert t.safe and rules(t) == ["SE3", "SE2", "SE4", "SE1", "SE4", "SE1"]
    assert str(t.steps[0]) == "SE3 on R(x;y) & S(x;z) [x := c]"


def test_safety_edge_cases():
    assert not is_safe(parse_query("{}")).safe
    t = is_safe(parse_query("R(x,'c';y)"))
    assert t.safe and "x := c1" in str(t.steps[0])
    with pytest.raises(SelfJoin):
        is_safe(parse_query("R(x;y) & R(y;x)"))


def test_conference_uniform(conference_db):
    pdb = BIDDatabase.uniform(conference_db)
    assert prob_bruteforce(pdb, ROME_A) == Fraction(3, 4)
    assert not prob_is_one(pdb, ROME_A)
    assert prob_bruteforce(pdb, parse_query("{}")) == 1


def test_partial_block():
    a, b = fact("R", "a", "1"), fact("S", "b", "1")
    pdb = BIDDatabase(UncertainDatabase.of([a, b]), {a: Fraction(3, 5), b: Fraction(1)})
    q = parse_query("R(x;y) & S(z;y)")
    assert prob_bruteforce(pdb, q) == Fraction(3, 5)
    assert not prob_is_one(pdb, q)
    assert certain_blocks_restrict(pdb).facts == {b}


def test_consistent_database_is_one():
    a, b = fact("R", "a", "1"), fact("S", "b", "1")
    pdb = BIDDatabase(UncertainDatabase.of([a, b]), {a: 1, b: 1})
    assert prob_is_one(pdb, parse_query("R(x;y) & S(z;y)"))


def test_validation():
    a, b = fact("R", "a", "1"), fact("R", "a", "2")
    db = UncertainDatabase.of([a, b])
    with pytest.raises(ValueError):
        BIDDatabase(db, {a: Fraction(2, 3), b: Fraction(2, 3)})
    with pytest.raises(ValueError):
        BIDDatabase(db, {a: 1})
    with pytest.raises(ValueError):
        BIDDatabase(db, {a: Fraction(-1), b: 0})


def test_world_sum_and_uniform():
    rng = random.Random(60)
    for _ in range(60):
        q = random_acyclic_query(rng, max_atoms=3, max_arity=3, max_vars=4)
        pdb = random_bid(rng, q, max_facts=8)
        assert sum(p for _, p in worlds(pdb)) == 1
        db = random_database(rng, q, max_facts=8, domain=3)
        uni = BIDDatabase.uniform(db)
        assert prob_bruteforce(uni, q) == Fraction(count_satisfying_repairs(db, q), repair_count(db))


def test_bridge_matches_enumeration():
    rng = random.Random(61)
    for _ in range(120):
        q = random_acyclic_query(rng, max_atoms=3, max_arity=3, max_vars=4)
        pdb = random_bid(rng, q)
        assert prob_is_one(pdb, q) == (prob_bruteforce(pdb, q) == 1)


def test_bid_text_round_trip():
    text = CONFERENCE_DB_TEXT.replace("C PODS 2016 Paris", "C PODS 2016 Paris : 1/3")
    pdb = parse_bid(text)
    paris = next(f for f in pdb.base if f.nonkey == ("Paris",))
    assert pdb.prob[paris] == Fraction(1, 3)
    rome = next(f for f in pdb.base if f.key == ("PODS", "2016") and f.nonkey == ("Rome",))
    assert pdb.prob[rome] == Fraction(1, 2)
    again = parse_bid(dump_bid(pdb))
    assert again == pdb
    assert parse_database(CONFERENCE_DB_TEXT).facts == pdb.base.facts


def test_bid_text_errors():
    with pytest.raises(DatabaseFormatError):
        parse_bid("@relation R 2 1\nR a b : 3/4\nR a c : 1/2\n")
    with pytest.raises(DatabaseFormatError):
        parse_bid("@relation R 2 1\nR a b : x\n")
