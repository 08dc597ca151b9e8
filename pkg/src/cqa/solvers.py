"""Deciding whether every repair of a database satisfies a query.

Three deciders share one result type:

* :func:`certain_bruteforce` walks the repairs and is the reference oracle;
* :func:`certain_terminal_weak` handles queries whose attack cycles are all
  weak and terminal;
* :func:`certain_cycle_query` / :func:`certain_ck` handle the key-cycle
  queries with and without their all-key atom.

:func:`solve` picks one of them from the query's shape.
"""

from __future__ import annotations

import itertools
import os
from collections import deque
from dataclasses import dataclass

import networkx as nx

from .attackgraph import (
    CycleShape,
    all_cycles_weak_and_terminal,
    attack_graph,
    match_cycle_query,
    weak_terminal_pairs,
)
from .errors import (
    CyclicQuery,
    PreconditionViolated,
    ResourceLimitExceeded,
    SchemaMismatch,
    SelfJoin,
)
from .jointree import is_acyclic
from .querylang import Atom, Query, Signature, has_self_join
from .uncertaindb import (
    Fact,
    Repair,
    UncertainDatabase,
    _unify,
    lift_repair,
    purify,
    purify_trace,
    repair_count,
    repairs,
    satisfies,
)

DEFAULT_REPAIR_LIMIT = 2**24
DEFAULT_DOMAIN_POWER_LIMIT = 10**7

BRUTEFORCE = "bruteforce"
TERMINAL_WEAK = "terminal_weak"
CYCLE_QUERY = "cycle_query"
METHODS = (BRUTEFORCE, TERMINAL_WEAK, CYCLE_QUERY)


@dataclass(frozen=True)
class CertainAnswer:
    certain: bool
    method: str
    witness: Repair | None = None

    def __bool__(self) -> bool:
        return self.certain


def repair_limit(limit: int | None = None) -> int:
    if limit is not None:
        return limit
    env = os.environ.get("CQA_REPAIR_LIMIT")
    return int(env) if env else DEFAULT_REPAIR_LIMIT


def _guard(db: UncertainDatabase, limit: int | None) -> None:
    bound = repair_limit(limit)
    n = repair_count(db)
    if n > bound:
        raise ResourceLimitExceeded(f"{n} repairs exceed the limit of {bound}")


# --------------------------------------------------------------------------
# brute force


def certain_bruteforce(db: UncertainDatabase, q: Query, limit: int | None = None) -> CertainAnswer:
    """Enumerate repairs; the witness is the first falsifying one in order."""
    _guard(db, limit)
    for r in repairs(db):
        if not satisfies(r.facts, q):
            return CertainAnswer(False, BRUTEFORCE, r)
    return CertainAnswer(True, BRUTEFORCE)


def count_satisfying_repairs(db: UncertainDatabase, q: Query, limit: int | None = None) -> int:
    _guard(db, limit)
    return sum(1 for r in repairs(db) if satisfies(r.facts, q))


# --------------------------------------------------------------------------
# weak, terminal attack cycles


def _check_terminal_weak(q: Query) -> None:
    if has_self_join(q):
        raise PreconditionViolated(f"{q} has a self-join")
    if not is_acyclic(q):
        raise PreconditionViolated(f"{q} is not acyclic")
    if not all_cycles_weak_and_terminal(attack_graph(q)):
        raise PreconditionViolated(f"the attack graph of {q} has a strong or nonterminal cycle")


def _vector(atom: Atom, fact: Fact, variables: tuple[str, ...]) -> tuple[str, ...] | None:
    theta = _unify(atom, fact, {})
    if theta is None:
        return None
    return tuple(theta[v] for v in variables)


def _decide_terminal_weak(db: UncertainDatabase, q: Query, limit: int | None) -> bool:
    db = purify(db, q)
    if not len(q):
        return True
    g = attack_graph(q)
    free = g.unattacked()
    if free:
        f = free[0]
        xs = tuple(sorted(f.key_vars))
        ys = tuple(sorted(f.vars - f.key_vars))
        keys = sorted({v for v in (_vector(f, a, xs) for a in db.facts_of(f.relation)) if v is not None})
        for a_vec in keys:
            q_a = q.substitute(dict(zip(xs, a_vec)))
            db_a = purify(db, q_a)
            if not db_a:
                continue
            f_a = f.substitute(dict(zip(xs, a_vec)))
            rest = q.without(f)
            ok = True
            for fact in db_a.facts_of(f.relation):
                b_vec = _vector(f_a, fact, ys)
                if b_vec is None:
                    continue
                sub = rest.substitute(dict(zip(xs + ys, a_vec + b_vec)))
                if not _decide_terminal_weak(db_a, sub, limit):
                    ok = False
                    break
            if ok:
                return True
        return False
    return _decide_weak_pairs(db, q, g, limit)


def _decide_weak_pairs(db: UncertainDatabase, q: Query, g, limit: int | None) -> bool:
    """Every atom lies on a weak 2-cycle: keep the partitions that are certain
    for their own pair and evaluate q on what is left."""
    pairs = weak_terminal_pairs(g)
    kept: list[Fact] = []
    for i, pair in enumerate(pairs):
        here = frozenset().union(*(a.vars for a in pair))
        elsewhere = frozenset().union(
            frozenset(), *(a.vars for j, p in enumerate(pairs) if j != i for a in p)
        )
        shared = tuple(sorted(here & elsewhere))
        pair_q = Query(pair)
        parts: dict[tuple[str, ...], list[Fact]] = {}
        for atom in pair:
            for fact in db.facts_of(atom.relation):
                vec = _vector(atom, fact, shared)
                if vec is not None:
                    parts.setdefault(vec, []).append(fact)
        for facts in parts.values():
            part = UncertainDatabase.of(facts, db.schema)
            if certain_bruteforce(part, pair_q, limit).certain:
                kept.extend(facts)
    return satisfies(kept, q)


def _falsifying_repair(db: UncertainDatabase, decide) -> frozenset[Fact]:
    """Shrink each block to one fact while ``decide`` keeps saying 'not certain'."""
    current = db
    for block in db.blocks:
        if len(block) == 1:
            continue
        for fact in block:
            trial = current.without_facts(x for x in block if x != fact)
            if not decide(trial):
                current = trial
                break
        else:  # pragma: no cover - would mean the decider is wrong
            raise AssertionError("no falsifying choice for block " + str(block[0].block_id))
    return current.facts


def certain_terminal_weak(db: UncertainDatabase, q: Query, limit: int | None = None,
                          witness: bool = True) -> CertainAnswer:
    """Polynomial decision for queries whose attack cycles are all weak and terminal.

    The partition test inside the base case is a bounded brute force; ``limit``
    bounds the repairs of a single partition.
    """
    _check_terminal_weak(q)
    if _decide_terminal_weak(db, q, limit):
        return CertainAnswer(True, TERMINAL_WEAK)
    if not witness:
        return CertainAnswer(False, TERMINAL_WEAK)
    pure, removed = purify_trace(db, q)
    chosen = _falsifying_repair(pure, lambda d: _decide_terminal_weak(d, q, limit))
    return CertainAnswer(False, TERMINAL_WEAK, Repair(lift_repair(chosen, removed), db))


# --------------------------------------------------------------------------
# key-cycle queries


def _expect_schema(db: UncertainDatabase, expected: dict[str, Signature]) -> None:
    for rel, sig in db.schema.items():
        if rel not in expected:
            raise SchemaMismatch(f"unexpected relation {rel}")
        if sig != expected[rel]:
            raise SchemaMismatch(f"{rel} has signature {sig}, expected {expected[rel]}")


Vertex = tuple[int, str]


def _cycle_graph(db: UncertainDatabase, shape: CycleShape):
    """Position-tagged graph: R_i(a;b) becomes the edge (i,a) -> (i+1,b)."""
    k = shape.k
    g = nx.DiGraph()
    edge_fact: dict[tuple[Vertex, Vertex], Fact] = {}
    for i, rel in enumerate(shape.r_relations):
        for f in db.facts_of(rel):
            u, v = (i, f.key[0]), ((i + 1) % k, f.nonkey[0])
            g.add_edge(u, v)
            edge_fact[(u, v)] = f
    forbidden = set()
    for f in db.facts_of(shape.s_relation):
        cycle = [None] * k
        for col, pos in enumerate(shape.s_positions):
            cycle[pos] = f.key[col]
        forbidden.add(tuple(cycle))
    return g, edge_fact, forbidden


def _k_cycles(g: nx.DiGraph, nodes: set, k: int):
    """Closed walks of length k starting at a tag-0 vertex (all are elementary
    because tags increase by one along every edge)."""
    for start in sorted(v for v in nodes if v[0] == 0):
        stack = [[start]]
        while stack:
            path = stack.pop()
            if len(path) == k:
                if g.has_edge(path[-1], start):
                    yield path
                continue
            for nxt in sorted(g.successors(path[-1]), reverse=True):
                if nxt in nodes:
                    stack.append(path + [nxt])


def _paths(g: nx.DiGraph, nodes: set, length: int):
    """All paths of ``length`` edges inside ``nodes``."""
    for start in sorted(nodes):
        stack = [[start]]
        while stack:
            path = stack.pop()
            if len(path) == length + 1:
                yield path
                continue
            for nxt in sorted(g.successors(path[-1]), reverse=True):
                if nxt in nodes:
                    stack.append(path + [nxt])


def _return_path(g: nx.DiGraph, nodes: set, src, dst, blocked: frozenset):
    """Shortest path src..dst that never leaves a vertex in ``blocked``."""
    parent = {src: None}
    queue = deque([src])
    while queue:
        cur = queue.popleft()
        if cur == dst:
            path = [cur]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1]
        if cur in blocked:
            continue
        for nxt in sorted(g.successors(cur)):
            if nxt in nodes and nxt not in parent:
                parent[nxt] = cur
                queue.append(nxt)
    return None


def _long_cycle(g: nx.DiGraph, nodes: set, k: int):
    seen = set()
    for path in _paths(g, nodes, k):
        head, last = path[0], path[-1]
        if head == last:
            continue
        blocked = frozenset(path[:-1])
        memo = (blocked, last, head)
        if memo in seen:
            continue
        seen.add(memo)
        back = _return_path(g, nodes, last, head, blocked)
        if back is not None:
            return path + back[1:-1]
    return None


def _mark_component(g: nx.DiGraph, nodes: set, k: int, forbidden) -> list | None:
    for cycle in _k_cycles(g, nodes, k):
        if tuple(v[1] for v in cycle) not in forbidden:
            return cycle
    return _long_cycle(g, nodes, k)


def _cycle_query_core(db: UncertainDatabase, shape: CycleShape):
    """Returns None if certain, else a falsifying repair of ``db``'s purification
    together with the purification trace."""
    q = shape.query()
    pure, removed = purify_trace(db, q)
    g, edge_fact, forbidden = _cycle_graph(pure, shape)
    succ: dict[Vertex, Vertex] = {}
    for comp in nx.strongly_connected_components(g):
        if len(comp) == 1:
            continue
        cycle = _mark_component(g, comp, shape.k, forbidden)
        if cycle is None:
            return None
        for u, v in zip(cycle, cycle[1:] + cycle[:1]):
            succ[u] = v
    # every other vertex marks the first edge of a shortest path to a marked one
    rev = g.reverse(copy=False)
    queue = deque(sorted(succ))
    seen = set(succ)
    while queue:
        cur = queue.popleft()
        for prev in sorted(rev.successors(cur)):
            if prev not in seen:
                seen.add(prev)
                succ[prev] = cur
                queue.append(prev)
    if len(succ) != g.number_of_nodes():  # pragma: no cover - purified input
        raise AssertionError("vertex without a path to a marked cycle")
    chosen = [edge_fact[(u, v)] for u, v in succ.items()]
    chosen += pure.facts_of(shape.s_relation)
    return lift_repair(chosen, removed)


def certain_cycle_query(db: UncertainDatabase, k: int, shape: CycleShape | None = None) -> CertainAnswer:
    """Key-cycle query with its all-key atom; relations default to R1..Rk, Sk."""
    shape = shape or CycleShape.standard(k)
    if shape.k != k or shape.s_relation is None:
        raise ValueError("shape does not describe a k-cycle query with all-key atom")
    expected = {r: Signature(2, 1) for r in shape.r_relations}
    expected[shape.s_relation] = Signature(k, k)
    _expect_schema(db, expected)
    found = _cycle_query_core(db, shape)
    if found is None:
        return CertainAnswer(True, CYCLE_QUERY)
    return CertainAnswer(False, CYCLE_QUERY, Repair(found, db))


def _fresh_name(base: str, taken) -> str:
    name, n = base, 0
    while name in taken:
        n += 1
        name = f"{base}_{n}"
    return name


def certain_ck(db: UncertainDatabase, k: int, shape: CycleShape | None = None,
               limit: int | None = None) -> CertainAnswer:
    """Key-cycle query without all-key atom, by adding every all-key fact over
    the active domain and deciding the extended query."""
    base = shape or CycleShape.standard(k, with_all_key=False)
    if base.k != k:
        raise ValueError("shape has the wrong length")
    _expect_schema(db, {r: Signature(2, 1) for r in base.r_relations})
    dom = sorted(db.active_domain())
    bound = limit if limit is not None else DEFAULT_DOMAIN_POWER_LIMIT
    if len(dom) ** k > bound:
        raise ResourceLimitExceeded(f"{len(dom)}^{k} all-key facts exceed the limit of {bound}")
    s_rel = _fresh_name(f"S{k}", set(base.r_relations) | set(db.schema))
    ext = CycleShape(k, base.r_relations, base.variables, s_rel, tuple(range(k)))
    extra = [Fact(s_rel, vals) for vals in itertools.product(dom, repeat=k)]
    big = UncertainDatabase.of(list(db.facts) + extra, {**db.schema, s_rel: Signature(k, k)})
    found = _cycle_query_core(big, ext)
    if found is None:
        return CertainAnswer(True, CYCLE_QUERY)
    return CertainAnswer(False, CYCLE_QUERY, Repair(frozenset(found) & db.facts, db))


# --------------------------------------------------------------------------
# dispatcher


def _route(q: Query) -> tuple[str, CycleShape | None]:
    if has_self_join(q):
        return BRUTEFORCE, None
    if not is_acyclic(q):
        shape = match_cycle_query(q)
        if shape is not None and shape.family == "C":
            return CYCLE_QUERY, shape
        return BRUTEFORCE, None
    if all_cycles_weak_and_terminal(attack_graph(q)):
        return TERMINAL_WEAK, None
    shape = match_cycle_query(q)
    if shape is not None:
        return CYCLE_QUERY, shape
    return BRUTEFORCE, None


def _solve_cycle(db: UncertainDatabase, q: Query, shape: CycleShape) -> CertainAnswer:
    """Run the cycle solver on q's relations and pad the witness with one
    fact per block of the other relations."""
    own = db.restrict(q.relations)
    if shape.family == "AC":
        ans = certain_cycle_query(own, shape.k, shape)
    else:
        ans = certain_ck(own, shape.k, shape)
    if ans.witness is None:
        return ans
    others = [b[0] for b in db.blocks if b[0].relation not in q.relations]
    return CertainAnswer(False, CYCLE_QUERY, Repair(ans.witness.facts | frozenset(others), db))


def solve(db: UncertainDatabase, q: Query, method: str = "auto",
          limit: int | None = None) -> CertainAnswer:
    method = method.replace("-", "_")
    if method == "cycle":
        method = CYCLE_QUERY
    if method == "auto":
        method, shape = _route(q)
    elif method == CYCLE_QUERY:
        shape = match_cycle_query(q)
        if shape is None:
            raise PreconditionViolated(f"{q} is not a key-cycle query")
    elif method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == BRUTEFORCE:
        return certain_bruteforce(db, q, limit)
    if method == TERMINAL_WEAK:
        try:
            return certain_terminal_weak(db, q, limit)
        except (SelfJoin, CyclicQuery) as exc:  # pragma: no cover - checked first
            raise PreconditionViolated(str(exc)) from exc
    return _solve_cycle(db, q, shape)
