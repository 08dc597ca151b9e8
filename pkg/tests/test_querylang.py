import itertools
import random

import pytest

from cqa.corpus import random_acyclic_query
from cqa.errors import QuerySyntaxError, SignatureConflict
from cqa.querylang import (
    FD,
    Atom,
    Query,
    Signature,
    Term,
    attribute_closure,
    fd_set,
    has_self_join,
    key_closure,
    key_closure_plus,
    parse_query,
    render,
)


def fs(*xs):
    return frozenset(xs)


def closure_by_intersection(attrs, fds, universe):
    """Intersection of every FD-closed superset of ``attrs``."""
    attrs = frozenset(attrs)
    universe = sorted(frozenset(universe) | attrs)
    out = frozenset(universe)
    for r in range(len(universe) + 1):
        for extra in itertools.combinations(universe, r):
            s = frozenset(extra) | attrs
            if all(not fd.lhs <= s or fd.rhs <= s for fd in fds):
                out &= s
    return out


def test_parse_q1_signatures(q1):
    assert len(q1) == 4
    assert q1.signatures == {
        "R": Signature(3, 2), "S": Signature(3, 1), "T": Signature(2, 1), "P": Signature(2, 1),
    }
    r = q1.atom("R")
    assert r.key == (Term.var("u"), Term.const("a"))
    assert r.key_vars == fs("u")


def test_parse_errors():
    with pytest.raises(QuerySyntaxError):
        parse_query("R('c';)")
    with pytest.raises(QuerySyntaxError) as info:
        parse_query("R(x;Y)")
    assert info.value.position == 4
    with pytest.raises(QuerySyntaxError):
        parse_query("R(x;y) &")
    with pytest.raises(QuerySyntaxError):
        parse_query("R(x;y) S(y;x)")
    with pytest.raises(SignatureConflict):
        parse_query("R(x;y) & R(x,y)")


def test_self_join_detection(q1):
    assert not has_self_join(q1)
    assert has_self_join(parse_query("R(x;y) & R(y;x)"))
    assert not has_self_join(parse_query("{}"))
    assert not has_self_join(parse_query(""))


def test_constants_and_numerals():
    q = parse_query("R(x, 2016; 'Rome', 'a\\'b')")
    a = q.atom("R")
    assert [t.name for t in a.terms] == ["x", "2016", "Rome", "a'b"]
    assert a.vars == fs("x")
    assert str(a) == "R(x,2016;'Rome','a\\'b')"


def test_render_is_canonical(q1):
    assert render(q1) == "P(x;z) & R(u,'a';x) & S(y;x,z) & T(x;y)"
    assert parse_query(render(q1)) == q1
    assert render(parse_query("{}")) == "{}"


def test_render_parse_roundtrip_random():
    rng = random.Random(11)
    for _ in range(200):
        q = random_acyclic_query(rng, constant_rate=0.2)
        assert parse_query(render(q)) == q
        assert render(parse_query(render(q))) == render(q)


def test_fd_set_examples(q1):
    f = q1.atom("R")
    assert fd_set(q1.without(f)) == {
        FD(fs("y"), fs("x", "y", "z")), FD(fs("x"), fs("x", "y")), FD(fs("x"), fs("x", "z")),
    }
    assert fd_set(Query()) == frozenset()
    assert fd_set(parse_query("R('a','b';x)")) == {FD(fs(), fs("x"))}


def test_attribute_closure_examples(q1):
    h = q1.atom("T")
    assert attribute_closure({"x"}, fd_set(q1.without(h))) == fs("x", "z")
    assert attribute_closure({"x"}, ()) == fs("x")
    assert attribute_closure({"y"}, fd_set(q1)) == fs("x", "y", "z")


def test_key_closures_of_q1(q1):
    F, G, H, I = (q1.atom(r) for r in "RSTP")
    assert key_closure(F, q1) == fs("u")
    assert key_closure(G, q1) == fs("y")
    assert key_closure(H, q1) == fs("x", "z")
    assert key_closure(I, q1) == fs("x", "y", "z")
    assert key_closure_plus(F, q1) == fs("u", "x", "y", "z")
    assert key_closure_plus(G, q1) == fs("x", "y", "z")


def test_key_closure_single_atom():
    q = parse_query("R(x;y)")
    a = q.atom("R")
    assert key_closure(a, q) == fs("x")
    assert key_closure_plus(a, q) == fs("x", "y")
    with pytest.raises(ValueError):
        key_closure(parse_query("S(x;y)").atom("S"), q)


def test_closure_against_intersection_oracle():
    rng = random.Random(3)
    for _ in range(150):
        q = random_acyclic_query(rng)
        fds = fd_set(q)
        for a in q:
            for x in [a.key_vars, frozenset(rng.sample(sorted(q.vars), min(2, len(q.vars))))]:
                assert attribute_closure(x, fds) == closure_by_intersection(x, fds, q.vars)


def test_closure_chain_invariant():
    rng = random.Random(4)
    for _ in range(200):
        q = random_acyclic_query(rng)
        for a in q:
            k, kp = key_closure(a, q), key_closure_plus(a, q)
            assert a.key_vars <= k <= kp <= q.vars


def test_closure_monotone_idempotent_extensive():
    rng = random.Random(5)
    for _ in range(100):
        q = random_acyclic_query(rng)
        fds = list(fd_set(q))
        vs = sorted(q.vars)
        x = frozenset(rng.sample(vs, rng.randint(0, len(vs))))
        y = x | frozenset(rng.sample(vs, rng.randint(0, len(vs))))
        cx = attribute_closure(x, fds)
        assert x <= cx
        assert attribute_closure(cx, fds) == cx
        assert cx <= attribute_closure(y, fds)
        assert attribute_closure(x, fds[: len(fds) // 2]) <= cx


def test_value_types():
    with pytest.raises(ValueError):
        Signature(2, 3)
    with pytest.raises(ValueError):
        Term.var("X")
    with pytest.raises(ValueError):
        Atom("R", ())
    assert Signature(2, 2).all_key
    q = parse_query("R(x;y) & R(x;y)")
    assert len(q) == 1
    assert parse_query("S(y;x) & R(x;y)") == parse_query("R(x;y) & S(y;x)")
    assert q.substitute({"x": "a"}) == parse_query("R('a';y)")
