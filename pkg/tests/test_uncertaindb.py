import random

import pytest

from cqa.corpus import CONFERENCE_DB_TEXT, random_acyclic_query, random_database, random_query
from cqa.errors import DatabaseFormatError
from cqa.querylang import Signature, parse_query
from cqa.solvers import certain_bruteforce
from cqa.uncertaindb import (
    Fact,
    Repair,
    UncertainDatabase,
    dump_database,
    find_valuation,
    is_embeddable,
    is_purified,
    load_database,
    parse_database,
    purify,
    purify_trace,
    repair_count,
    repairs,
    satisfies,
    save_database,
)

from conftest import fact


def test_conference_blocks(conference_db):
    db = conference_db
    assert len(db) == 6
    assert [len(b) for b in db.blocks] == [1, 2, 2, 1]
    assert sorted(len(b) for b in db.blocks) == [1, 1, 2, 2]
    assert db.schema == {"C": Signature(3, 2), "R": Signature(2, 1)}
    assert not db.is_consistent()
    assert repair_count(db) == 4
    assert len(list(repairs(db))) == 4


def test_schema_only_and_arity_errors(tmp_path):
    db = parse_database("@relation C 3 2\n")
    assert len(db) == 0 and db.blocks == []
    assert len(list(repairs(db))) == 1
    with pytest.raises(DatabaseFormatError, match="arity"):
        parse_database("@relation C 3 2\nC PODS 2016\n")
    with pytest.raises(DatabaseFormatError, match="unknown relation"):
        parse_database("@relation C 3 2\nD a b c\n")
    with pytest.raises(DatabaseFormatError):
        parse_database("@relation C 3 4\n")
    with pytest.raises(DatabaseFormatError) as info:
        parse_database("# header\n@relation R 2 1\n\nR a\n")
    assert info.value.line == 4


def test_roundtrip(tmp_path, conference_db):
    assert dump_database(conference_db) == CONFERENCE_DB_TEXT
    path = tmp_path / "conf.db"
    save_database(conference_db, path)
    assert path.read_text() == CONFERENCE_DB_TEXT
    assert load_database(path) == conference_db
    messy = "R KDD B   # trailing\n@relation R 2 1\nR KDD A\n"
    assert dump_database(parse_database(messy)) == "@relation R 2 1\nR KDD A\nR KDD B\n"


def test_repairs_are_distinct_consistent_maximal():
    rng = random.Random(1)
    for _ in range(100):
        q = random_acyclic_query(rng, max_atoms=3)
        db = random_database(rng, q, max_facts=10, domain=3)
        seen = set()
        for r in repairs(db):
            assert r.is_repair_of(db)
            seen.add(r.facts)
        assert len(seen) == repair_count(db)


def test_block_partition_ignores_insertion_order():
    facts = [fact("R", "a", "b"), fact("R", "a", "c"), fact("S", "b", "a"), fact("R", "d", "e")]
    a = UncertainDatabase.of(facts)
    b = UncertainDatabase.of(reversed(facts))
    assert a.blocks == b.blocks
    assert a.block(fact("R", "a", "z")) == (fact("R", "a", "b"), fact("R", "a", "c"))


def test_consistent_db_has_one_repair():
    db = UncertainDatabase.of([fact("R", "a", "b"), fact("S", "b", "a")])
    (r,) = list(repairs(db))
    assert r.facts == db.facts
    assert list(repairs(UncertainDatabase.of([])))[0].facts == frozenset()


def test_satisfaction(rome_a):
    world = {
        Fact("C", ("PODS", "2016"), ("Rome",)), Fact("C", ("KDD", "2017"), ("Rome",)),
        fact("R", "PODS", "A"), fact("R", "KDD", "A"),
    }
    assert find_valuation(world, rome_a) in ({"x": "PODS", "y": "2016"}, {"x": "KDD", "y": "2017"})
    assert satisfies(set(), parse_query("{}"))
    falsifier = {
        Fact("C", ("PODS", "2016"), ("Paris",)), Fact("C", ("KDD", "2017"), ("Rome",)),
        fact("R", "PODS", "A"), fact("R", "KDD", "B"),
    }
    assert not satisfies(falsifier, rome_a)
    only_pods = {Fact("C", ("PODS", "2016"), ("Rome",)), fact("R", "PODS", "A")}
    assert find_valuation(only_pods, rome_a) == {"x": "PODS", "y": "2016"}


def test_repeated_variables_and_constants():
    q = parse_query("R(x;x) & S('k';x)")
    assert satisfies({fact("R", "a", "a"), fact("S", "k", "a")}, q)
    assert not satisfies({fact("R", "a", "b"), fact("S", "k", "a")}, q)
    assert not satisfies({fact("R", "a", "a"), fact("S", "j", "a")}, q)


def test_purify_worked_example():
    q = parse_query("R(x;y) & S(y;x)")
    db = UncertainDatabase.of([fact("R", "a", "b"), fact("S", "b", "a"), fact("S", "b", "c")])
    out, removed = purify_trace(db, q)
    assert len(out) == 0
    # S(b;c) goes first, then R(a;b) loses its partner
    assert removed == [fact("S", "b", "c"), fact("R", "a", "b")]


def test_purify_conference(conference_db, rome_a):
    out = purify(conference_db, rome_a)
    # PODS loses Rome with Paris, KDD loses A with B; the rest collapses
    assert len(out) == 0
    assert certain_bruteforce(conference_db, rome_a).certain is False
    assert certain_bruteforce(out, rome_a).certain is False


def test_purify_keeps_purified_input():
    q = parse_query("R(x;y) & S(y;x)")
    db = UncertainDatabase.of([fact("R", "a", "b"), fact("S", "b", "a")])
    assert purify(db, q) == db
    assert is_purified(db, q)


def test_purify_properties():
    rng = random.Random(2)
    for i in range(200):
        q = random_acyclic_query(rng, max_atoms=3) if i % 2 else random_query(rng, max_atoms=3)
        db = random_database(rng, q, max_facts=10, domain=3)
        p = purify(db, q)
        assert is_purified(p, q)
        assert purify(p, q) == p
        assert p.facts <= db.facts
        assert all(len(p.block(b[0])) in (0, len(b)) for b in db.blocks)
        assert certain_bruteforce(db, q).certain == certain_bruteforce(p, q).certain


def test_lifted_falsifier_is_a_repair():
    rng = random.Random(3)
    for _ in range(150):
        q = random_acyclic_query(rng, max_atoms=3)
        db = random_database(rng, q, max_facts=10, domain=3)
        p, removed = purify_trace(db, q)
        ans = certain_bruteforce(p, q)
        if ans.certain:
            continue
        lifted = Repair(ans.witness.facts | frozenset(removed), db)
        assert lifted.is_repair_of(db)
        assert not satisfies(lifted.facts, q)


def test_embeddability():
    q = parse_query("R(x;y) & S(y;x)")
    world = {fact("R", "a", "b"), fact("S", "b", "a"), fact("S", "b", "c")}
    assert is_embeddable(fact("R", "a", "b"), world, q)
    assert not is_embeddable(fact("S", "b", "c"), world, q)
    assert not is_embeddable(fact("T", "b", "c"), world, q)
