import random

import pytest

from cqa.corpus import cycle_query, random_acyclic_query, random_query
from cqa.jointree import (
    all_join_trees,
    build_join_tree,
    is_acyclic,
    path_labels,
    satisfies_connectedness,
)
from cqa.querylang import parse_query


def edge_labels(tree):
    return {(str(f), str(g), frozenset(lab)) for f, g, lab in tree.labeled_edges()}


def test_q1_tree(q1):
    t = build_join_tree(q1)
    F, G, H, I = (q1.atom(r) for r in "RSTP")
    assert t.edges == {frozenset((F, G)), frozenset((G, H)), frozenset((G, I))}
    assert t.label(F, G) == {"x"}
    assert path_labels(t, F, H) == [{"x"}, {"x", "y"}]
    assert path_labels(t, F, G) == [{"x"}]
    assert satisfies_connectedness(t)


def test_cycle_queries():
    assert build_join_tree(cycle_query(3, with_all_key=False)) is None
    assert not is_acyclic(cycle_query(3, with_all_key=False))
    assert is_acyclic(cycle_query(2, with_all_key=False))
    ac3 = cycle_query(3)
    t = build_join_tree(ac3)
    s = ac3.atom("S3")
    assert t.neighbors(s) == sorted((a for a in ac3 if a != s), key=lambda a: a.relation)


def test_disconnected_atoms_get_empty_labels():
    q = parse_query("R(x;y) & S(u;v)")
    t = build_join_tree(q)
    (edge,) = t.edges
    f, g = sorted(edge)
    assert t.label(f, g) == frozenset()
    assert satisfies_connectedness(t)


def test_path_label_errors(q1):
    t = build_join_tree(q1)
    with pytest.raises(ValueError):
        path_labels(t, q1.atom("R"), q1.atom("R"))
    with pytest.raises(ValueError):
        t.path(q1.atom("R"), parse_query("Z(x)").atom("Z"))


def test_builder_agrees_with_gyo_check():
    rng = random.Random(9)
    for _ in range(400):
        q = random_query(rng)
        t = build_join_tree(q)
        assert (t is not None) == is_acyclic(q)
        if t is not None:
            assert satisfies_connectedness(t)
            for f, g, lab in t.labeled_edges():
                assert lab == f.vars & g.vars


def test_enumerated_trees_contain_built_tree():
    rng = random.Random(10)
    for _ in range(100):
        q = random_acyclic_query(rng, max_atoms=4)
        trees = all_join_trees(q)
        assert trees
        assert build_join_tree(q).edges in {t.edges for t in trees}
        assert all(satisfies_connectedness(t) for t in trees)


def test_connectedness_rejects_bad_tree(q1):
    t = build_join_tree(q1)
    F, G, H, I = (q1.atom(r) for r in "RSTP")
    from cqa.jointree import JoinTree

    bad = JoinTree(t.atoms, frozenset({frozenset((F, G)), frozenset((F, H)), frozenset((G, I))}))
    assert not satisfies_connectedness(bad)


def test_dot_output(q1):
    dot = build_join_tree(q1).to_dot()
    assert dot.startswith("graph jointree {")
    assert '"R(u,\'a\';x)" -- "S(y;x,z)" [label="{x}"];' in dot
