"""Attack graphs, weak/strong attacks, cycle analysis and complexity classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import networkx as nx

from .errors import CyclicQuery, SelfJoin
from .jointree import JoinTree, build_join_tree, is_acyclic, path_labels
from .querylang import Atom, Query, has_self_join, key_closure, key_closure_plus


class Strength(str, enum.Enum):
    WEAK = "weak"
    STRONG = "strong"


@dataclass(frozen=True)
class AttackEdge:
    source: Atom
    target: Atom
    strength: Strength

    @property
    def weak(self) -> bool:
        return self.strength is Strength.WEAK


def _order(a: Atom):
    return (a.relation, str(a))


@dataclass(frozen=True)
class AttackGraph:
    query: Query
    edges: frozenset[AttackEdge]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {(e.source, e.target): e for e in self.edges})

    @property
    def atoms(self) -> list[Atom]:
        return sorted(self.query.atoms, key=_order)

    def attacks(self, f: Atom, g: Atom) -> bool:
        return (f, g) in self._index

    def edge(self, f: Atom, g: Atom) -> AttackEdge | None:
        return self._index.get((f, g))

    def successors(self, f: Atom) -> list[Atom]:
        return sorted((e.target for e in self.edges if e.source == f), key=_order)

    def unattacked(self) -> list[Atom]:
        hit = {e.target for e in self.edges}
        return [a for a in self.atoms if a not in hit]

    def edge_set(self) -> set[tuple[str, str, str]]:
        """Edges as (source text, target text, strength) triples; handy in tests."""
        return {(str(e.source), str(e.target), e.strength.value) for e in self.edges}

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.query.atoms)
        for e in self.edges:
            g.add_edge(e.source, e.target, strength=e.strength)
        return g

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.to_networkx())

    def to_dot(self) -> str:
        lines = ["digraph attacks {"]
        for a in self.atoms:
            lines.append(f'  "{a}" [label="{a}"];')
        for e in sorted(self.edges, key=lambda e: (_order(e.source), _order(e.target))):
            style = "" if e.weak else ' [style=bold, color=red]'
            lines.append(f'  "{e.source}" -> "{e.target}"{style};')
        lines.append("}")
        return "\n".join(lines) + "\n"


def attack_graph(q: Query, tree: JoinTree | None = None) -> AttackGraph:
    """F attacks G iff no label on the F..G join-tree path lies inside K(F,q)."""
    if has_self_join(q):
        raise SelfJoin(f"{q} has a self-join")
    if tree is None:
        tree = build_join_tree(q)
        if tree is None:
            raise CyclicQuery(f"{q} has no join tree")
    edges = set()
    for f in q:
        closure = key_closure(f, q)
        closure_plus = None
        for g in q:
            if g == f:
                continue
            if all(not lab <= closure for lab in path_labels(tree, f, g)):
                if closure_plus is None:
                    closure_plus = key_closure_plus(f, q)
                weak = g.key_vars <= closure_plus
                edges.add(AttackEdge(f, g, Strength.WEAK if weak else Strength.STRONG))
    return AttackGraph(q, frozenset(edges))


def find_strong_two_cycle(g: AttackGraph) -> tuple[Atom, Atom] | None:
    """A pair F<->G with at least one strong attack, in relation-name order.

    Any strong cycle implies a strong cycle of length two, so ``None`` means
    the graph has no strong cycle at all.
    """
    atoms = g.atoms
    for i, f in enumerate(atoms):
        for h in atoms[i + 1:]:
            fh, hf = g.edge(f, h), g.edge(h, f)
            if fh and hf and not (fh.weak and hf.weak):
                return f, h
    return None


def _nontrivial_components(g: AttackGraph) -> list[set[Atom]]:
    comps = [c for c in nx.strongly_connected_components(g.to_networkx()) if len(c) > 1]
    return sorted(comps, key=lambda c: min(_order(a) for a in c))


def all_cycles_weak_and_terminal(g: AttackGraph) -> bool:
    """Every attack cycle is weak and has no edge leaving it.

    In an attack graph, terminal cycles all have length two, so it suffices
    that every nontrivial strong component is a weak 2-cycle without exits.
    """
    for comp in _nontrivial_components(g):
        if len(comp) != 2:
            return False
        f, h = comp
        if not (g.edge(f, h).weak and g.edge(h, f).weak):
            return False
        for a in comp:
            if any(t not in comp for t in g.successors(a)):
                return False
    return True


def weak_terminal_pairs(g: AttackGraph) -> list[tuple[Atom, Atom]]:
    """The 2-cycles of a graph satisfying :func:`all_cycles_weak_and_terminal`."""
    return [tuple(sorted(c, key=_order)) for c in _nontrivial_components(g)]


# --------------------------------------------------------------------------
# recognising C_k and AC_k up to renaming


@dataclass(frozen=True)
class CycleShape:
    """How a query matches C_k (``s_relation is None``) or AC_k.

    ``r_relations[i]`` is the relation playing R_{i+1}; ``variables[i]`` plays
    x_{i+1}; column j of the all-key atom holds x_{s_positions[j]+1}.
    """

    k: int
    r_relations: tuple[str, ...]
    variables: tuple[str, ...]
    s_relation: str | None = None
    s_positions: tuple[int, ...] = ()

    @property
    def family(self) -> str:
        return "C" if self.s_relation is None else "AC"

    @classmethod
    def standard(cls, k: int, with_all_key: bool = True) -> CycleShape:
        if k < 2:
            raise ValueError("cycle queries need k >= 2")
        return cls(
            k,
            tuple(f"R{i}" for i in range(1, k + 1)),
            tuple(f"x{i}" for i in range(1, k + 1)),
            f"S{k}" if with_all_key else None,
            tuple(range(k)) if with_all_key else (),
        )

    def query(self) -> Query:
        from .querylang import Term

        xs = [Term.var(v) for v in self.variables]
        atoms = [
            Atom(r, (xs[i],), (xs[(i + 1) % self.k],)) for i, r in enumerate(self.r_relations)
        ]
        if self.s_relation is not None:
            atoms.append(Atom(self.s_relation, tuple(xs[p] for p in self.s_positions)))
        return Query(tuple(atoms))


def match_cycle_query(q: Query) -> CycleShape | None:
    if has_self_join(q) or any(not t.is_var for a in q for t in a.terms):
        return None
    binary = [a for a in q if a.signature.arity == 2 and a.signature.key_length == 1]
    rest = [a for a in q if a not in binary]
    k = len(binary)
    if k < 2 or len(rest) > 1:
        return None
    succ = {}
    by_key = {}
    for a in binary:
        src, dst = a.key[0].name, a.nonkey[0].name
        if src == dst or src in succ:
            return None
        succ[src] = dst
        by_key[src] = a.relation
    if set(succ.values()) != set(succ):
        return None
    first = min(binary, key=_order)
    variables = [first.key[0].name]
    while len(variables) < k:
        nxt = succ[variables[-1]]
        if nxt == variables[0]:
            return None
        variables.append(nxt)
    if succ[variables[-1]] != variables[0]:
        return None
    relations = tuple(by_key[v] for v in variables)
    if not rest:
        return CycleShape(k, relations, tuple(variables))
    s = rest[0]
    cols = [t.name for t in s.key]
    if s.nonkey or len(cols) != k or set(cols) != set(variables):
        return None
    return CycleShape(
        k, relations, tuple(variables), s.relation, tuple(variables.index(c) for c in cols)
    )


# --------------------------------------------------------------------------
# classification


class Complexity(str, enum.Enum):
    FO_REWRITABLE = "FO_REWRITABLE"
    PTIME_TERMINAL_WEAK = "PTIME_TERMINAL_WEAK"
    PTIME_CYCLE_QUERY = "PTIME_CYCLE_QUERY"
    CONP_COMPLETE = "CONP_COMPLETE"
    OPEN_NONTERMINAL_WEAK = "OPEN_NONTERMINAL_WEAK"
    UNSUPPORTED_SELF_JOIN = "UNSUPPORTED_SELF_JOIN"
    UNSUPPORTED_CYCLIC_QUERY = "UNSUPPORTED_CYCLIC_QUERY"


@dataclass
class ComplexityVerdict:
    complexity: Complexity
    evidence: dict[str, Any] = field(default_factory=dict)
    graph: AttackGraph | None = None

    @property
    def tractable(self) -> bool:
        return self.complexity in (
            Complexity.FO_REWRITABLE,
            Complexity.PTIME_TERMINAL_WEAK,
            Complexity.PTIME_CYCLE_QUERY,
        )

    def summary(self) -> str:
        c, ev = self.complexity, self.evidence
        if c is Complexity.FO_REWRITABLE:
            return "FO-rewritable (" + ("empty" if not ev["edges"] else "acyclic") + " attack graph)"
        if c is Complexity.CONP_COMPLETE:
            s, t = ev["strong_edge"]
            return f"coNP-complete (strong 2-cycle: {s.relation}↔{t.relation})"
        if c is Complexity.PTIME_TERMINAL_WEAK:
            return "PTIME (all attack cycles weak and terminal)"
        if c is Complexity.PTIME_CYCLE_QUERY:
            return f"PTIME (cycle query, k={ev['k']})"
        if c is Complexity.OPEN_NONTERMINAL_WEAK:
            return "open (nonterminal weak cycle, no strong cycle)"
        if c is Complexity.UNSUPPORTED_SELF_JOIN:
            return "unsupported (self-join)"
        return "unsupported (cyclic query)"


def classify_complexity(q: Query) -> ComplexityVerdict:
    if has_self_join(q):
        seen, dups = set(), set()
        for a in q:
            (dups if a.relation in seen else seen).add(a.relation)
        return ComplexityVerdict(Complexity.UNSUPPORTED_SELF_JOIN, {"relations": sorted(dups)})
    if not is_acyclic(q):
        shape = match_cycle_query(q)
        if shape is not None and shape.family == "C" and shape.k >= 3:
            return ComplexityVerdict(
                Complexity.PTIME_CYCLE_QUERY, {"family": "C", "k": shape.k, "shape": shape}
            )
        return ComplexityVerdict(Complexity.UNSUPPORTED_CYCLIC_QUERY)
    g = attack_graph(q)
    if g.is_acyclic():
        return ComplexityVerdict(Complexity.FO_REWRITABLE, {"edges": len(g.edges)}, g)
    pair = find_strong_two_cycle(g)
    if pair is not None:
        f, h = pair
        strong = (f, h) if not g.edge(f, h).weak else (h, f)
        return ComplexityVerdict(
            Complexity.CONP_COMPLETE, {"pair": pair, "strong_edge": strong}, g
        )
    if all_cycles_weak_and_terminal(g):
        return ComplexityVerdict(
            Complexity.PTIME_TERMINAL_WEAK, {"cycles": weak_terminal_pairs(g)}, g
        )
    shape = match_cycle_query(q)
    if shape is not None:
        return ComplexityVerdict(
            Complexity.PTIME_CYCLE_QUERY, {"family": shape.family, "k": shape.k, "shape": shape}, g
        )
    comps = [sorted(c, key=_order) for c in _nontrivial_components(g)]
    return ComplexityVerdict(Complexity.OPEN_NONTERMINAL_WEAK, {"components": comps}, g)
