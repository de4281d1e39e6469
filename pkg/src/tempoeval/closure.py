"""Temporal closure over interval endpoints.

Each interval relation becomes a conjunction of ``<``/``=`` constraints on the
start (``-``) and end (``+``) points of the two intervals.  Closure is
all-pairs path consistency on the point network; since every input constraint
is a basic point relation, path consistency decides consistency exactly.

Relations are stored as bitsets (LESS=1, EQUAL=2, GREATER=4) so the
composition step vectorizes over a whole row/column with numpy.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .model import INTERVAL_RELATIONS, RelationType, TemporalLink, inverse, natural_key

START, END = 0, 1

_LT, _EQ, _GT = 1, 2, 4
_ALL = _LT | _EQ | _GT


class PointRelation(enum.Enum):
    LESS = _LT
    EQUAL = _EQ
    GREATER = _GT
    UNKNOWN = _ALL

    def converse(self) -> "PointRelation":
        return _POINT_CONVERSE[self]

    @property
    def symbol(self) -> str:
        return {_LT: "<", _EQ: "=", _GT: ">", _ALL: "?"}[self.value]


_POINT_CONVERSE = {
    PointRelation.LESS: PointRelation.GREATER,
    PointRelation.GREATER: PointRelation.LESS,
    PointRelation.EQUAL: PointRelation.EQUAL,
    PointRelation.UNKNOWN: PointRelation.UNKNOWN,
}


def _converse_bits(bits):
    return ((bits & _LT) << 2) | (bits & _EQ) | ((bits & _GT) >> 2)


def _compose_basic(x: int, y: int) -> int:
    if x == _EQ:
        return y
    if y == _EQ:
        return x
    if x == y:
        return x
    return _ALL


def _composition_table() -> np.ndarray:
    table = np.zeros((8, 8), dtype=np.uint8)
    for x in range(8):
        for y in range(8):
            acc = 0
            for bx in (_LT, _EQ, _GT):
                for by in (_LT, _EQ, _GT):
                    if x & bx and y & by:
                        acc |= _compose_basic(bx, by)
            table[x, y] = acc
    return table


COMPOSE = _composition_table()


@dataclass(frozen=True)
class PointConstraint:
    """``left relation right`` where each side is (operand, endpoint), operand "a" or "b"."""

    left: tuple
    relation: PointRelation
    right: tuple

    def __str__(self):
        def name(p):
            return p[0] + ("-" if p[1] == START else "+")
        return f"{name(self.left)} {self.relation.symbol} {name(self.right)}"


def _pc(left, rel, right):
    return PointConstraint(left, rel, right)


_A0, _A1, _B0, _B1 = ("a", START), ("a", END), ("b", START), ("b", END)
_L, _E = PointRelation.LESS, PointRelation.EQUAL
_SAME = (_pc(_A0, _E, _B0), _pc(_A1, _E, _B1))

_DEFINITIONS = {
    RelationType.BEFORE: (_pc(_A1, _L, _B0),),
    RelationType.IBEFORE: (_pc(_A1, _E, _B0),),
    RelationType.INCLUDES: (_pc(_A0, _L, _B0), _pc(_B1, _L, _A1)),
    RelationType.BEGINS: (_pc(_A0, _E, _B0), _pc(_A1, _L, _B1)),
    RelationType.ENDS: (_pc(_A1, _E, _B1), _pc(_B0, _L, _A0)),
    RelationType.SIMULTANEOUS: _SAME,
    RelationType.IDENTITY: _SAME,
    RelationType.DURING: _SAME,
}


def _swap(c: PointConstraint) -> PointConstraint:
    flip = {"a": "b", "b": "a"}
    return PointConstraint((flip[c.left[0]], c.left[1]), c.relation, (flip[c.right[0]], c.right[1]))


def interval_to_points(relation: RelationType) -> tuple:
    """Endpoint constraints that define ``a relation b``."""
    if relation is RelationType.NONE:
        raise ValueError("NONE carries no temporal constraint")
    if relation in _DEFINITIONS:
        return _DEFINITIONS[relation]
    return tuple(_swap(c) for c in _DEFINITIONS[inverse(relation)])


# Labels tried, in order, when naming the relation the closure fixes between two entities.
CANONICAL_RELATIONS = (
    RelationType.BEFORE, RelationType.AFTER, RelationType.IBEFORE, RelationType.IAFTER,
    RelationType.INCLUDES, RelationType.IS_INCLUDED, RelationType.BEGINS, RelationType.BEGUN_BY,
    RelationType.ENDS, RelationType.ENDED_BY, RelationType.SIMULTANEOUS,
)


@dataclass(frozen=True)
class WitnessStep:
    left: str
    relation: PointRelation
    right: str
    lid: Optional[str]  # None for the start < end axiom

    def __str__(self):
        return f"{self.left} {self.relation.symbol} {self.right} [{self.lid or 'axiom'}]"


class InconsistentError(ValueError):
    """The link set admits no assignment of interval endpoints."""

    def __init__(self, witness: list):
        self.witness = witness
        super().__init__("inconsistent: " + "; ".join(str(s) for s in witness))

    @property
    def lids(self) -> list:
        return sorted({s.lid for s in self.witness if s.lid}, key=natural_key)


@dataclass
class PointGraph:
    entities: tuple
    matrix: np.ndarray
    # (left point, relation bits, right point, lid) for every asserted constraint
    constraints: list = field(default_factory=list)
    conflicts: list = field(default_factory=list)

    def __post_init__(self):
        self.index = {e: i for i, e in enumerate(self.entities)}

    @property
    def n_points(self) -> int:
        return 2 * len(self.entities)

    def point(self, entity: str, endpoint: int) -> int:
        return 2 * self.index[entity] + endpoint

    def point_name(self, p: int) -> str:
        return self.entities[p // 2] + ("-" if p % 2 == START else "+")

    def rel(self, p, q) -> PointRelation:
        """Relation between two points, given as indices or (entity, endpoint) pairs."""
        if isinstance(p, tuple):
            p = self.point(*p)
        if isinstance(q, tuple):
            q = self.point(*q)
        bits = int(self.matrix[p, q])
        if bits == 0:
            raise InconsistentError(self.witness() or [])
        return PointRelation(bits) if bits in (_LT, _EQ, _GT, _ALL) else PointRelation.UNKNOWN

    def witness(self) -> Optional[list]:
        """A cycle through at least one strict edge of the asserted constraints, if any."""
        n = self.n_points
        edges = [[] for _ in range(n)]  # (neighbour, strict, lid)
        for i in range(len(self.entities)):
            edges[2 * i].append((2 * i + 1, True, None))
        for p, bits, q, lid in self.constraints:
            if bits == _LT:
                edges[p].append((q, True, lid))
            elif bits == _GT:
                edges[q].append((p, True, lid))
            elif bits == _EQ:
                edges[p].append((q, False, lid))
                edges[q].append((p, False, lid))
        for u in range(n):
            for v, strict, lid in edges[u]:
                if not strict:
                    continue
                path = _find_path(edges, v, u)
                if path is not None:
                    steps = [(u, True, lid, v)] + path
                    return [
                        WitnessStep(self.point_name(a), PointRelation.LESS if s else PointRelation.EQUAL,
                                    self.point_name(b), l)
                        for a, s, l, b in steps
                    ]
        return None


def _find_path(edges, source, target):
    if source == target:
        return []
    parent = {source: None}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v, strict, lid in edges[u]:
            if v in parent:
                continue
            parent[v] = (u, strict, lid)
            if v == target:
                path = []
                while parent[v] is not None:
                    u, s, l = parent[v]
                    path.append((u, s, l, v))
                    v = u
                return path[::-1]
            queue.append(v)
    return None


@dataclass
class ClosedGraph(PointGraph):
    """A point graph at its path-consistent fixpoint."""


def _entity_ids(entities: Iterable) -> tuple:
    ids = []
    seen = set()
    for e in entities:
        ident = getattr(e, "ident", e)
        if ident not in seen:
            seen.add(ident)
            ids.append(ident)
    return tuple(ids)


def build(links: Iterable[TemporalLink], entities: Iterable) -> PointGraph:
    """Point network for ``links`` over ``entities`` (ids or entity objects)."""
    ids = _entity_ids(entities)
    n = 2 * len(ids)
    matrix = np.full((n, n), _ALL, dtype=np.uint8)
    np.fill_diagonal(matrix, _EQ)
    graph = PointGraph(ids, matrix)
    for i in range(len(ids)):
        matrix[2 * i, 2 * i + 1] = _LT
        matrix[2 * i + 1, 2 * i] = _GT
    for link in links:
        if link.relation is RelationType.NONE:
            continue
        for ref in (link.source, link.target):
            if ref not in graph.index:
                raise ValueError(f"link {link.lid} endpoint {ref!r} is not an entity of the graph")
        bind = {"a": link.source, "b": link.target}
        for c in interval_to_points(link.relation):
            p = graph.point(bind[c.left[0]], c.left[1])
            q = graph.point(bind[c.right[0]], c.right[1])
            bits = c.relation.value
            graph.constraints.append((p, bits, q, link.lid))
            new = matrix[p, q] & bits
            if new == 0:
                graph.conflicts.append((graph.point_name(p), graph.point_name(q), link.lid))
            matrix[p, q] = new
            matrix[q, p] = _converse_bits(new)
    return graph


def close(graph: PointGraph) -> ClosedGraph:
    """Propagate compositions to a fixpoint; raises :class:`InconsistentError`."""
    m = graph.matrix.copy()
    n = m.shape[0]
    while True:
        before = m.copy()
        for k in range(n):
            m &= COMPOSE[m[:, k][:, None], m[k, :][None, :]]
        if not m.all():
            break
        if np.array_equal(m, before):
            break
    closed = ClosedGraph(graph.entities, m, list(graph.constraints), list(graph.conflicts))
    if not m.all() or graph.conflicts:
        raise InconsistentError(closed.witness() or [])
    return closed


def closure(links: Iterable[TemporalLink], entities: Iterable) -> ClosedGraph:
    return close(build(links, entities))


def is_consistent(links: Iterable[TemporalLink], entities: Iterable) -> bool:
    try:
        closure(links, entities)
    except InconsistentError:
        return False
    return True


class Entailment(enum.Enum):
    YES = "YES"
    NO_INFO = "NO_INFO"


def holds(closed: ClosedGraph, source: str, relation: RelationType, target: str) -> bool:
    bind = {"a": source, "b": target}
    for c in interval_to_points(relation):
        p = closed.point(bind[c.left[0]], c.left[1])
        q = closed.point(bind[c.right[0]], c.right[1])
        if int(closed.matrix[p, q]) != c.relation.value:
            return False
    return True


def entails(closed: ClosedGraph, link: TemporalLink) -> Entailment:
    if link.relation is RelationType.NONE:
        raise ValueError("NONE links cannot be checked for entailment")
    for ref in (link.source, link.target):
        if ref not in closed.index:
            raise ValueError(f"{ref!r} is not an entity of the graph")
    return Entailment.YES if holds(closed, link.source, link.relation, link.target) else Entailment.NO_INFO


def relation_between(closed: ClosedGraph, source: str, target: str) -> Optional[RelationType]:
    """The interval relation the closure fixes between two entities, if any."""
    for relation in CANONICAL_RELATIONS:
        if holds(closed, source, relation, target):
            return relation
    return None


def link_sort_key(link: TemporalLink):
    return (natural_key(link.source), natural_key(link.target), link.relation.value, natural_key(link.lid))


def _reachable(adj, alive, source, target) -> bool:
    seen = {source}
    stack = [source]
    while stack:
        u = stack.pop()
        if u == target:
            return True
        for v, k in adj[u]:
            if v not in seen and (k is None or alive[k]):
                seen.add(v)
                stack.append(v)
    return False


def reduce(links: Iterable[TemporalLink], entities: Iterable) -> list:
    """Drop every link the remaining ones already entail.

    Links are visited sorted by (source, target, relation); the result has the
    same closure as the input and no member is entailed by the others.
    """
    ids = _entity_ids(entities)
    kept = sorted((l for l in links if l.relation is not RelationType.NONE), key=link_sort_key)
    closure(kept, ids)  # raises on inconsistent input

    # On a consistent network of basic point constraints, p <= q is derivable
    # exactly when q is reachable from p along < and = edges, so a link is
    # redundant when each of its constraints is still reachable without it.
    index = {e: i for i, e in enumerate(_entity_ids(r for l in kept for r in (l.source, l.target)))}
    adj = [[] for _ in range(2 * len(index))]
    for i in range(len(index)):
        adj[2 * i].append((2 * i + 1, None))
    needs = []
    for k, link in enumerate(kept):
        bind = {"a": link.source, "b": link.target}
        pairs = []
        for c in interval_to_points(link.relation):
            p = 2 * index[bind[c.left[0]]] + c.left[1]
            q = 2 * index[bind[c.right[0]]] + c.right[1]
            adj[p].append((q, k))
            pairs.append((p, q))
            if c.relation is PointRelation.EQUAL:
                adj[q].append((p, k))
                pairs.append((q, p))
        needs.append(pairs)

    alive = [True] * len(kept)
    for k in range(len(kept)):
        alive[k] = False
        if not all(_reachable(adj, alive, p, q) for p, q in needs[k]):
            alive[k] = True
    return [l for l, keep in zip(kept, alive) if keep]


def canonical_reduction(closed: ClosedGraph) -> list:
    """A reduction that depends only on the closed point matrix.

    Reducing the raw links can keep different representatives for two
    equivalent inputs; reducing the fully expanded link set cannot.
    """
    return reduce(closed_links(closed), closed.entities)


def closed_links(closed: ClosedGraph, existing: Iterable[TemporalLink] = ()) -> list:
    """Every entity pair whose relation the closure fixes, one link per unordered pair.

    A pair already carried by an entailed link in ``existing`` keeps that link
    (and its lid); the other pairs get fresh ``l<n>`` ids.
    """
    existing = list(existing)
    used = {l.lid for l in existing}
    by_pair = {}
    for link in existing:
        if link.relation is RelationType.NONE:
            continue
        key = frozenset((link.source, link.target))
        if key not in by_pair and holds(closed, link.source, link.relation, link.target):
            by_pair[key] = link
    out = []
    counter = 1
    ents = closed.entities
    for i, a in enumerate(ents):
        for b in ents[i + 1:]:
            key = frozenset((a, b))
            if key in by_pair:
                out.append(by_pair[key])
                continue
            relation = relation_between(closed, a, b)
            if relation is None:
                continue
            while f"l{counter}" in used:
                counter += 1
            used.add(f"l{counter}")
            out.append(TemporalLink(f"l{counter}", a, b, relation))
    return out


__all__ = [
    "PointRelation", "PointConstraint", "PointGraph", "ClosedGraph", "InconsistentError", "WitnessStep",
    "Entailment", "interval_to_points", "build", "close", "closure", "is_consistent", "entails", "holds",
    "relation_between", "reduce", "canonical_reduction", "closed_links", "START", "END", "INTERVAL_RELATIONS", "CANONICAL_RELATIONS",
]
