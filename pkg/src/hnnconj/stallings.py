"""Finitely generated subgroups of free groups as folded (Stallings) graphs.

Edges carry a *provenance*: a word in the subgroup's own generators.  Reading
a closed path at the base and multiplying provenances gives an expression
that evaluates to the path label, which is how membership witnesses are
produced.  Folding keeps that invariant by inserting the detour value
``p1^-1 p2`` on every edge end at the vertex being merged away.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import count
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .fgword import (
    EMPTY,
    Word,
    cyclic_reduce,
    invert,
    multiply,
    reduce,
    rotations,
)


class _FoldGraph:
    """Mutable edge list with union-by-relabel folding.

    An edge is ``[src, gen, dst, prov]`` with ``gen > 0``; reading it
    backwards spells ``-gen`` and contributes ``prov^-1``.
    """

    def __init__(self):
        self.base = 0
        self.vertices = {0}
        self.edges: Dict[int, list] = {}
        self._ids = count()
        self._vids = count(1)
        self._merged: Dict[int, int] = {}

    def find(self, v: int) -> int:
        """Current name of a vertex that may have been folded away."""
        while v in self._merged:
            v = self._merged[v]
        return v

    def new_vertex(self) -> int:
        v = next(self._vids)
        self.vertices.add(v)
        return v

    def add_edge(self, src, letter, dst, prov=EMPTY):
        if letter < 0:
            src, dst, letter, prov = dst, src, -letter, invert(prov)
        self.edges[next(self._ids)] = [src, letter, dst, tuple(prov)]

    def add_path(self, start, word, end=None, first_prov=EMPTY):
        """Attach a fresh path spelling ``word`` from ``start``; returns its end."""
        v = start
        for i, x in enumerate(word):
            last = i == len(word) - 1
            w = end if (last and end is not None) else self.new_vertex()
            self.add_edge(v, x, w, first_prov if i == 0 else EMPTY)
            v = w
        return v

    def _find_fold(self):
        seen: Dict[Tuple[int, int], tuple] = {}
        for eid, (s, g, d, p) in self.edges.items():
            for key, other, prov in (((s, g), d, p), ((d, -g), s, invert(p))):
                if key in seen and seen[key][0] != eid:
                    return seen[key], (eid, other, prov)
                seen.setdefault(key, (eid, other, prov))
        return None

    def fold(self):
        while True:
            hit = self._find_fold()
            if hit is None:
                return
            (e1, w1, p1), (e2, w2, p2) = hit
            if w1 == w2:
                del self.edges[e2]
                continue
            if w2 == self.base:
                (e1, w1, p1), (e2, w2, p2) = (e2, w2, p2), (e1, w1, p1)
            c = multiply(invert(p1), p2)
            if c:
                for edge in self.edges.values():
                    if edge[0] == w2:
                        edge[3] = multiply(c, edge[3])
                    if edge[2] == w2:
                        edge[3] = multiply(edge[3], invert(c))
            del self.edges[e2]
            for edge in self.edges.values():
                if edge[0] == w2:
                    edge[0] = w1
                if edge[2] == w2:
                    edge[2] = w1
            self.vertices.discard(w2)
            self._merged[w2] = w1

    def trim(self):
        """Remove hanging trees so every non-base vertex has degree >= 2."""
        while True:
            deg = {v: 0 for v in self.vertices}
            for s, _, d, _ in self.edges.values():
                deg[s] += 1
                deg[d] += 1
            dead = {v for v, k in deg.items() if k <= 1 and v != self.base}
            if not dead:
                return
            self.vertices -= dead
            self.edges = {e: x for e, x in self.edges.items() if x[0] not in dead and x[2] not in dead}


class SubgroupGraph:
    """Folded core graph of ``<generators>`` in a free group of the given rank.

    Immutable after construction.  Vertex 0 is the base.
    """

    def __init__(self, rank: int, generators: Sequence[Sequence[int]]):
        self.rank = rank
        self.generators: Tuple[Word, ...] = tuple(reduce(g) for g in generators)
        for g in self.generators:
            if any(abs(x) > rank for x in g):
                raise ValueError("generator uses a letter outside the alphabet")
        fg = _FoldGraph()
        for i, g in enumerate(self.generators):
            if g:
                fg.add_path(fg.base, g, end=fg.base, first_prov=(i + 1,))
        fg.fold()
        fg.trim()
        # renumber vertices 0..n-1 in BFS order, generator order a, a^-1, b, ...
        adj: Dict[int, Dict[int, Tuple[int, Word]]] = {v: {} for v in fg.vertices}
        for s, g, d, p in fg.edges.values():
            adj[s][g] = (d, p)
            adj[d][-g] = (s, invert(p))
        order = [fg.base]
        seen = {fg.base}
        parent: Dict[int, Tuple[int, int]] = {}
        q = deque([fg.base])
        letters = [x for i in range(1, rank + 1) for x in (i, -i)]
        while q:
            v = q.popleft()
            for x in letters:
                if x in adj[v] and adj[v][x][0] not in seen:
                    w = adj[v][x][0]
                    seen.add(w)
                    parent[w] = (v, x)
                    order.append(w)
                    q.append(w)
        num = {v: i for i, v in enumerate(order)}
        self.num_vertices = len(order)
        self.out: List[Dict[int, Tuple[int, Word]]] = [dict() for _ in order]
        for v in order:
            for x, (w, p) in adj[v].items():
                self.out[num[v]][x] = (num[w], p)
        self.tree_word: List[Word] = [EMPTY] * len(order)
        self.tree_edges = set()
        for v in order[1:]:
            pv, x = parent[v]
            self.tree_word[num[v]] = self.tree_word[num[pv]] + (x,)
            self.tree_edges.add((num[pv], x))
            self.tree_edges.add((num[v], -x))

    def __repr__(self):
        return f"SubgroupGraph(rank={self.rank}, vertices={self.num_vertices}, edges={self.num_edges})"

    @property
    def num_edges(self) -> int:
        return sum(len(o) for o in self.out) // 2

    def is_trivial(self) -> bool:
        return self.num_edges == 0

    def read(self, w: Sequence[int], start: int = 0) -> Tuple[int, int]:
        """Follow ``w`` from ``start``; returns ``(vertex, letters_read)``."""
        v = start
        for i, x in enumerate(w):
            nxt = self.out[v].get(x)
            if nxt is None:
                return v, i
            v = nxt[0]
        return v, len(w)

    def edge_list(self) -> Iterator[Tuple[int, int, int]]:
        for v, o in enumerate(self.out):
            for x, (w, _) in o.items():
                if x > 0:
                    yield v, x, w

    def basis(self) -> List[Word]:
        """Free basis from the non-tree edges of the BFS spanning tree."""
        out = []
        for v, x, w in self.edge_list():
            if (v, x) not in self.tree_edges:
                out.append(multiply(self.tree_word[v], (x,), invert(self.tree_word[w])))
        return out

    def evaluate(self, expression: Sequence[int]) -> Word:
        parts = [self.generators[i - 1] if i > 0 else invert(self.generators[-i - 1]) for i in expression]
        return multiply(*parts) if parts else EMPTY

    def conjugated(self, g: Sequence[int]) -> "SubgroupGraph":
        """Graph of ``g^-1 H g``."""
        return SubgroupGraph(self.rank, [multiply(invert(g), h, g) for h in self.generators])


def build(rank: int, generators: Sequence[Sequence[int]]) -> SubgroupGraph:
    return SubgroupGraph(rank, generators)


def membership(G: SubgroupGraph, w: Sequence[int]) -> Optional[Word]:
    """Expression of ``w`` in ``G.generators`` (signed 1-based indices), or ``None``."""
    v = 0
    expr: List[Word] = []
    for x in w:
        nxt = G.out[v].get(x)
        if nxt is None:
            return None
        v, p = nxt
        expr.append(p)
    if v != 0:
        return None
    return multiply(*expr) if expr else EMPTY


def contains(G: SubgroupGraph, w: Sequence[int]) -> bool:
    v, n = G.read(w)
    return v == 0 and n == len(w)


def coset_representative(G: SubgroupGraph, w: Sequence[int]) -> Word:
    """Schreier representative of ``G w``: tree path to the end of the longest
    readable prefix, followed by the unread suffix."""
    v, n = G.read(w)
    return G.tree_word[v] + tuple(w[n:])


def conjugates_into(G: SubgroupGraph, g: Sequence[int]) -> Iterator[Tuple[Word, Word]]:
    """All ``(x, a)`` with ``x^-1 g x = a`` in ``G`` found by reading a rotation
    of the cyclic reduction of ``g`` as a closed path at some core vertex."""
    core, c = cyclic_reduce(g)
    if not core:
        yield invert(c) if c else EMPTY, EMPTY
        return
    for v in range(G.num_vertices):
        for i, rot in rotations(core):
            end, n = G.read(rot, v)
            if n == len(rot) and end == v:
                T = G.tree_word[v]
                # rot = P^-1 core P with P = core[:i]; a = T rot T^-1
                x = multiply(invert(c), core[:i], invert(T))
                yield x, multiply(T, rot, invert(T))


def conjugate_into(G: SubgroupGraph, g: Sequence[int]) -> Optional[Tuple[Word, Word]]:
    return next(conjugates_into(G, g), None)


def _product_reach(G1: SubgroupGraph, out2: List[Dict[int, int]], start2: int):
    """BFS over the product of ``G1`` (from its base) and a plain folded graph."""
    start = (0, start2)
    prev = {start: None}
    q = deque([start])
    while q:
        v1, v2 = node = q.popleft()
        for x, (w1, _) in G1.out[v1].items():
            w2 = out2[v2].get(x)
            if w2 is None:
                continue
            nxt = (w1, w2)
            if nxt not in prev:
                prev[nxt] = (node, x)
                q.append(nxt)
    return prev


def _path_label(prev, node) -> Word:
    letters = []
    while prev[node] is not None:
        node, x = prev[node]
        letters.append(x)
    return tuple(reversed(letters))


def intersect(G1: SubgroupGraph, G2: SubgroupGraph) -> SubgroupGraph:
    """Pullback of the two core graphs at their bases."""
    if G1.rank != G2.rank:
        raise ValueError("alphabet mismatch")
    out2 = [{x: w for x, (w, _) in o.items()} for o in G2.out]
    prev = _product_reach(G1, out2, 0)
    nodes = list(prev)
    tree = {}
    for node in nodes:
        if prev[node] is not None:
            parent, x = prev[node]
            tree[(parent, x)] = node
            tree[(node, -x)] = parent
    gens = []
    for node in nodes:
        v1, v2 = node
        for x, (w1, _) in G1.out[v1].items():
            if x < 0:
                continue
            w2 = out2[v2].get(x)
            if w2 is None or (node, x) in tree:
                continue
            gens.append(multiply(_path_label(prev, node), (x,), invert(_path_label(prev, (w1, w2)))))
    return SubgroupGraph(G1.rank, gens)


@dataclass(frozen=True)
class Coset:
    subgroup: SubgroupGraph
    rep: Word


@dataclass(frozen=True)
class CosetUnion:
    """Finite union of right cosets ``H h``."""

    components: Tuple[Coset, ...] = ()

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __add__(self, other: "CosetUnion") -> "CosetUnion":
        return CosetUnion(self.components + other.components)


@dataclass(frozen=True)
class Cardinality:
    tag: str  # "empty" | "finite" | "infinite"
    elements: Tuple[Word, ...] = field(default=())


def coset_intersection(G1: SubgroupGraph, h1: Sequence[int], G2: SubgroupGraph, h2: Sequence[int]) -> CosetUnion:
    """``G1 h1 ∩ G2 h2`` as empty or a single coset ``(G1 ∩ G2) y``.

    ``y = x h1`` where ``x`` lies in ``G1 ∩ G2 h2 h1^-1``; the right coset
    ``G2 u`` is the set of labels of paths from the base of ``G2`` to the end
    of a hair spelling ``u`` glued on and folded in.
    """
    if G1.rank != G2.rank:
        raise ValueError("alphabet mismatch")
    u = multiply(h2, invert(h1))
    fg = _FoldGraph()
    ids = {}
    for v in range(G2.num_vertices):
        ids[v] = 0 if v == 0 else fg.new_vertex()
    for v, x, w in G2.edge_list():
        fg.add_edge(ids[v], x, ids[w])
    end = fg.add_path(0, u) if u else 0
    fg.fold()
    target = fg.find(end)
    out2: Dict[int, Dict[int, int]] = {v: {} for v in fg.vertices}
    for s, g, d, _ in fg.edges.values():
        out2[s][g] = d
        out2[d][-g] = s
    prev = _product_reach(G1, out2, 0)
    goal = (0, target)
    if goal not in prev:
        return CosetUnion()
    x = _path_label(prev, goal)
    y = multiply(x, h1)
    H = intersect(G1, G2)
    return CosetUnion((Coset(H, coset_representative(H, y)),))


def cardinality(U: CosetUnion) -> Cardinality:
    if not U.components:
        return Cardinality("empty")
    if any(not c.subgroup.is_trivial() for c in U.components):
        return Cardinality("infinite")
    seen = []
    for c in U.components:
        if c.rep not in seen:
            seen.append(c.rep)
    return Cardinality("finite", tuple(seen))


def generalized_normalizer_member(A: SubgroupGraph, B: SubgroupGraph, g: Sequence[int]) -> bool:
    """Whether ``C^g ∩ C != 1`` for ``C = A ∪ B``."""
    for X in (A, B):
        Xg = X.conjugated(g)
        for Y in (A, B):
            if not intersect(Xg, Y).is_trivial():
                return True
    return False
