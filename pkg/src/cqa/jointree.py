"""Join trees for acyclic conjunctive queries, built by GYO ear removal."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterator

from .querylang import Atom, Query


def _atom_order(a: Atom):
    return (a.relation, str(a))


@dataclass(frozen=True)
class JoinTree:
    atoms: tuple[Atom, ...]
    edges: frozenset[frozenset[Atom]]

    def label(self, f: Atom, g: Atom) -> frozenset[str]:
        return f.vars & g.vars

    def neighbors(self, atom: Atom) -> list[Atom]:
        out = [next(iter(e - {atom})) for e in self.edges if atom in e]
        return sorted(out, key=_atom_order)

    def labeled_edges(self) -> list[tuple[Atom, Atom, frozenset[str]]]:
        rows = []
        for e in self.edges:
            f, g = sorted(e, key=_atom_order)
            rows.append((f, g, self.label(f, g)))
        return sorted(rows, key=lambda r: (_atom_order(r[0]), _atom_order(r[1])))

    def path(self, f: Atom, g: Atom) -> list[Atom]:
        """Vertices on the unique tree path from ``f`` to ``g``, both included."""
        for a in (f, g):
            if a not in self.atoms:
                raise ValueError(f"{a} is not a node of the join tree")
        parent: dict[Atom, Atom | None] = {f: None}
        queue = deque([f])
        while queue:
            cur = queue.popleft()
            if cur == g:
                break
            for nxt in self.neighbors(cur):
                if nxt not in parent:
                    parent[nxt] = cur
                    queue.append(nxt)
        if g not in parent:
            raise ValueError(f"no path between {f} and {g}")
        path = [g]
        while path[-1] != f:
            path.append(parent[path[-1]])
        return path[::-1]

    def to_dot(self) -> str:
        lines = ["graph jointree {"]
        for a in sorted(self.atoms, key=_atom_order):
            lines.append(f'  "{a}";')
        for f, g, lab in self.labeled_edges():
            text = "{" + ",".join(sorted(lab)) + "}"
            lines.append(f'  "{f}" -- "{g}" [label="{text}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def path_labels(tree: JoinTree, f: Atom, g: Atom) -> list[frozenset[str]]:
    if f == g:
        raise ValueError("path_labels needs two distinct atoms")
    p = tree.path(f, g)
    return [tree.label(a, b) for a, b in zip(p, p[1:])]


def build_join_tree(q: Query) -> JoinTree | None:
    """GYO ear removal; ``None`` when ``q`` is cyclic.

    Ears and witnesses are taken in relation-name order, so the result is
    deterministic.  Atoms sharing no variable with the rest hang off the first
    remaining atom through an empty label.
    """
    remaining = sorted(q.atoms, key=_atom_order)
    edges: set[frozenset[Atom]] = set()
    while len(remaining) > 1:
        for ear in remaining:
            others = [a for a in remaining if a != ear]
            rest_vars = frozenset().union(*(a.vars for a in others))
            shared = ear.vars & rest_vars
            witness = next((w for w in others if shared <= w.vars), None)
            if witness is not None:
                edges.add(frozenset((ear, witness)))
                remaining.remove(ear)
                break
        else:
            return None
    return JoinTree(tuple(q.atoms), frozenset(edges))


def is_acyclic(q: Query) -> bool:
    """Classic hypergraph GYO reduction, independent of :func:`build_join_tree`.

    Alternately drops variables that occur in a single hyperedge and
    hyperedges contained in another one.
    """
    hyper = [set(a.vars) for a in q]
    changed = True
    while changed and len(hyper) > 1:
        changed = False
        for e in hyper:
            lonely = {v for v in e if sum(v in h for h in hyper) == 1}
            if lonely:
                e -= lonely
                changed = True
        for i, e in enumerate(hyper):
            if any(j != i and e <= h for j, h in enumerate(hyper)):
                del hyper[i]
                changed = True
                break
    return len(hyper) <= 1


def satisfies_connectedness(tree: JoinTree) -> bool:
    """Tree shape plus the Connectedness Condition for every variable."""
    n = len(tree.atoms)
    if n and len(tree.edges) != n - 1:
        return False
    if not _connected(set(tree.atoms), tree.edges):
        return False
    all_vars = frozenset().union(*(a.vars for a in tree.atoms)) if n else frozenset()
    for x in all_vars:
        holders = {a for a in tree.atoms if x in a.vars}
        sub = {e for e in tree.edges if e <= holders}
        if not _connected(holders, sub):
            return False
    return True


def _connected(nodes: set[Atom], edges) -> bool:
    if not nodes:
        return True
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        cur = stack.pop()
        for e in edges:
            if cur in e:
                for nxt in e:
                    if nxt in nodes and nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
    return seen == nodes


def _pruefer_trees(n: int) -> Iterator[list[tuple[int, int]]]:
    if n == 1:
        yield []
        return
    if n == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for v in seq:
            degree[v] += 1
        edges = []
        for v in seq:
            leaf = min(i for i in range(n) if degree[i] == 1)
            edges.append((leaf, v))
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = [i for i in range(n) if degree[i] == 1]
        edges.append((u, w))
        yield edges


def all_join_trees(q: Query) -> list[JoinTree]:
    """Every join tree of ``q``, by filtering all labelled spanning trees.

    Exponential; meant for queries with at most six atoms.
    """
    atoms = tuple(q.atoms)
    if not atoms:
        return [JoinTree((), frozenset())]
    out = []
    for edges in _pruefer_trees(len(atoms)):
        t = JoinTree(atoms, frozenset(frozenset((atoms[i], atoms[j])) for i, j in edges))
        if satisfies_connectedness(t):
            out.append(t)
    return out
