"""HNN-extensions ``G = <H, t | t^-1 A t = B, phi>`` with one stable letter.

The engine talks to the base group only through a :class:`BaseToolkit`; the
shipped implementation, :class:`FreeBaseToolkit`, covers free base groups via
Stallings graphs.  Words of ``G`` use the base alphabet followed by ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from . import stallings
from .fgword import (
    EMPTY,
    Alphabet,
    Word,
    canonical_cyclic,
    free_conjugacy,
    invert,
    multiply,
    reduce,
)
from .stallings import Coset, CosetUnion, SubgroupGraph

Syllable = Tuple[int, Word]


class ResourceLimitError(RuntimeError):
    pass


class SingularElementError(ValueError):
    """Raised when an operation that needs a regular element gets a singular one."""


class BaseToolkit:
    """Oracle bundle for the base group ``H`` and its subgroups ``A``, ``B``.

    Subclasses provide word arithmetic, SMP and CRSP for ``A`` and ``B``,
    CMSP for ``A ∪ B``, the isomorphism ``phi`` on generator expressions, and
    membership in the generalized normalizer.
    """

    rank: int

    def mul(self, *words) -> Word:
        raise NotImplementedError

    def smp(self, which: str, w) -> Optional[Word]:
        raise NotImplementedError

    def crsp(self, which: str, w) -> Word:
        raise NotImplementedError

    def phi(self, expr) -> Word:
        raise NotImplementedError

    def phi_inv(self, expr) -> Word:
        raise NotImplementedError

    def cmsp(self, w) -> Optional[Tuple[Word, Word, str]]:
        raise NotImplementedError

    def normalizer_member(self, w) -> bool:
        raise NotImplementedError

    def base_conjugacy(self, u, v) -> Optional[Word]:
        raise NotImplementedError


class FreeBaseToolkit(BaseToolkit):
    """Toolkit for a free base group ``F(X)`` with f.g. associated subgroups."""

    def __init__(self, rank: int, U: Sequence[Word], V: Sequence[Word]):
        if len(U) != len(V):
            raise ValueError("A and B need the same number of generators")
        self.rank = rank
        self.U = tuple(reduce(u) for u in U)
        self.V = tuple(reduce(v) for v in V)
        self.A = stallings.build(rank, self.U)
        self.B = stallings.build(rank, self.V)

    def graph(self, which: str) -> SubgroupGraph:
        return self.A if which == "A" else self.B

    def mul(self, *words) -> Word:
        return multiply(*words)

    def contains(self, which, w) -> bool:
        return stallings.contains(self.graph(which), w)

    def smp(self, which, w):
        return stallings.membership(self.graph(which), w)

    def crsp(self, which, w):
        return stallings.coset_representative(self.graph(which), w)

    def _evaluate(self, images, expr):
        return multiply(*[images[i - 1] if i > 0 else invert(images[-i - 1]) for i in expr]) if expr else EMPTY

    def phi(self, expr):
        return self._evaluate(self.V, expr)

    def phi_inv(self, expr):
        return self._evaluate(self.U, expr)

    def apply_phi(self, a: Word) -> Word:
        expr = self.smp("A", a)
        if expr is None:
            raise ValueError("phi applied outside A")
        return self.phi(expr)

    def apply_phi_inv(self, b: Word) -> Word:
        expr = self.smp("B", b)
        if expr is None:
            raise ValueError("phi^-1 applied outside B")
        return self.phi_inv(expr)

    def cmsp(self, w):
        for which in ("A", "B"):
            hit = stallings.conjugate_into(self.graph(which), w)
            if hit is not None:
                return hit[0], hit[1], which
        return None

    def conjugates_into(self, which, w):
        return stallings.conjugates_into(self.graph(which), w)

    def normalizer_member(self, w):
        return stallings.generalized_normalizer_member(self.A, self.B, w)

    def base_conjugacy(self, u, v):
        return free_conjugacy(u, v)


class HnnPresentation:
    """``<X, t | t^-1 U_i t = V_i>`` over a free base group on ``X``."""

    def __init__(self, base_names: Sequence[str], stable: str, U: Sequence, V: Sequence):
        if stable in base_names:
            raise ValueError("stable letter clashes with a base generator")
        self.base = Alphabet(base_names)
        self.alphabet = Alphabet(list(base_names) + [stable])
        self.t = len(base_names) + 1
        U = [self.base.parse(u) if isinstance(u, str) else tuple(u) for u in U]
        V = [self.base.parse(v) if isinstance(v, str) else tuple(v) for v in V]
        self.toolkit = FreeBaseToolkit(self.base.rank, U, V)

    def parse(self, text: str) -> Word:
        return self.alphabet.parse(text)

    def format(self, w) -> str:
        return self.alphabet.format(w)

    def relators(self) -> List[Word]:
        tk = self.toolkit
        return [multiply((-self.t,), u, (self.t,), invert(v)) for u, v in zip(tk.U, tk.V)]


@dataclass(frozen=True)
class HnnNormalForm:
    h0: Word
    syllables: Tuple[Syllable, ...] = ()
    reduced: bool = True
    normal: bool = False
    cyclically_reduced: bool = False

    @property
    def length(self) -> int:
        return len(self.syllables)

    def word(self, t: int) -> Word:
        out = list(self.h0)
        for e, h in self.syllables:
            out.append(e * t)
            out.extend(h)
        return tuple(out)

    def key(self):
        return self.h0, self.syllables

    def format(self, P: HnnPresentation) -> str:
        return P.format(self.word(P.t))


def _split(P: HnnPresentation, w: Sequence[int]) -> Tuple[Word, List[Syllable]]:
    chunks: List[List[int]] = [[]]
    signs = []
    for x in w:
        if abs(x) == P.t:
            signs.append(1 if x > 0 else -1)
            chunks.append([])
        else:
            chunks[-1].append(x)
    return reduce(chunks[0]), [(e, reduce(c)) for e, c in zip(signs, chunks[1:])]


def _as_word(P, w) -> Word:
    if isinstance(w, HnnNormalForm):
        return w.word(P.t)
    if isinstance(w, str):
        return P.parse(w)
    return reduce(w)


def reduce_form(P: HnnPresentation, w) -> HnnNormalForm:
    """Britton reduction, removing pinches left to right."""
    tk = P.toolkit
    h0, rest = _split(P, _as_word(P, w))
    stack: List[List] = []  # [eps, h]
    last = h0
    for eps, h in rest:
        if stack:
            e_prev = stack[-1][0]
            pinched = None
            if e_prev == -1 and eps == 1:
                expr = tk.smp("A", last)
                if expr is not None:
                    pinched = tk.phi(expr)
            elif e_prev == 1 and eps == -1:
                expr = tk.smp("B", last)
                if expr is not None:
                    pinched = tk.phi_inv(expr)
            if pinched is not None:
                stack.pop()
                before = stack[-1][1] if stack else h0
                last = multiply(before, pinched, h)
                if stack:
                    stack[-1][1] = last
                else:
                    h0 = last
                continue
        stack.append([eps, h])
        last = h
    return HnnNormalForm(h0, tuple((e, h) for e, h in stack), reduced=True)


def normal_form(P: HnnPresentation, w) -> HnnNormalForm:
    """Normal form with ``h_i`` in the Schreier transversals, rewriting right to left."""
    tk = P.toolkit
    h0, rest = _split(P, _as_word(P, w))
    stack: List[Syllable] = []  # rightmost syllable first
    carry = rest[-1][1] if rest else h0
    for i in range(len(rest) - 1, -1, -1):
        eps = rest[i][0]
        left = rest[i - 1][1] if i > 0 else h0
        which = "A" if eps == -1 else "B"
        s = tk.crsp(which, carry)
        expr = tk.smp(which, multiply(carry, invert(s)))
        moved = tk.phi(expr) if eps == -1 else tk.phi_inv(expr)
        if not s and stack and stack[-1][0] == -eps:
            # t^eps c t^-eps collapses into the base group
            _, s_next = stack.pop()
            carry = multiply(left, moved, s_next)
        else:
            stack.append((eps, s))
            carry = multiply(left, moved)
    return HnnNormalForm(carry, tuple(reversed(stack)), reduced=True, normal=True)


def _end_pinch(P, nf: HnnNormalForm) -> bool:
    k = nf.length
    if k < 2 or nf.syllables[0][0] == nf.syllables[-1][0]:
        return False
    eps_k, s_k = nf.syllables[-1]
    return P.toolkit.contains("A" if eps_k == -1 else "B", multiply(s_k, nf.h0))


def cyc_reduce(P: HnnPresentation, w) -> Tuple[HnnNormalForm, Word]:
    """Cyclically reduced normal form of a conjugate: returns ``(nf, x)`` with
    ``x^-1 w x`` equal to ``nf``."""
    tk = P.toolkit
    nf = normal_form(P, w)
    conj: Word = EMPTY
    while True:
        if nf.length == 0:
            h = nf.h0
            if not (tk.contains("A", h) or tk.contains("B", h)):
                hit = tk.cmsp(h)
                if hit is not None:
                    x, _, _ = hit
                    conj = multiply(conj, x)
                    nf = normal_form(P, multiply(invert(x), h, x))
            break
        if not _end_pinch(P, nf):
            break
        x = multiply(nf.h0, (nf.syllables[0][0] * P.t,))
        conj = multiply(conj, x)
        nf = normal_form(P, multiply(invert(x), nf.word(P.t), x))
    return (
        HnnNormalForm(nf.h0, nf.syllables, reduced=True, normal=True, cyclically_reduced=True),
        conj,
    )


def is_cyclically_reduced(P, nf: HnnNormalForm) -> bool:
    if nf.length == 0:
        tk = P.toolkit
        h = nf.h0
        return tk.contains("A", h) or tk.contains("B", h) or tk.cmsp(h) is None
    return not _end_pinch(P, nf)


def cyclic_permutation(P: HnnPresentation, nf: HnnNormalForm, i: int) -> Tuple[HnnNormalForm, Word]:
    """The ``i``-cyclic permutation (1-based): the rotation of ``g`` starting
    right after its ``i``-th stable letter.

    Returns ``(normal form, prefix)`` with the permutation equal to
    ``prefix^-1 g prefix``; ``prefix = h0 t^e1 s1 ... s_{i-1} t^e_i``.  When the
    last syllable is trivial, ``i = k`` gives ``g`` back.
    """
    k = nf.length
    if k == 0:
        raise ValueError("cyclic permutation of a length-0 element")
    if not 1 <= i <= k:
        raise IndexError(f"permutation index {i} outside 1..{k}")
    prefix = list(nf.h0)
    for e, h in nf.syllables[:i - 1]:
        prefix.append(e * P.t)
        prefix.extend(h)
    prefix.append(nf.syllables[i - 1][0] * P.t)
    prefix = reduce(prefix)
    g = nf.word(P.t)
    out = normal_form(P, multiply(invert(prefix), g, prefix))
    return HnnNormalForm(out.h0, out.syllables, True, True, True), prefix


@dataclass(frozen=True)
class PrincipalSystem:
    """Constants of ``p_k c = c_1 p'_k, ..., p_1 c_{k-1} = c_k p'_1``."""

    h: Word
    p: Tuple[Syllable, ...]
    h2: Word
    p2: Tuple[Syllable, ...]

    @property
    def k(self) -> int:
        return len(self.p)


def principal_system(g: HnnNormalForm, g2: HnnNormalForm) -> PrincipalSystem:
    if g.length != g2.length:
        raise ValueError("principal system needs equal lengths")
    if g.length == 0:
        raise ValueError("principal system needs length >= 1")
    return PrincipalSystem(g.h0, g.syllables, g2.h0, g2.syllables)


@dataclass
class _Branch:
    """A coset of feasible values of the current variable ``c_j``, with the
    steps needed to pull it back to the first variable ``c``."""

    coset: Coset
    steps: list = field(default_factory=list)


def _map_subgroup(rank, gens, f) -> SubgroupGraph:
    return SubgroupGraph(rank, [f(x) for x in gens])


def _forward(P, branches: List[_Branch], syl, syl2) -> List[_Branch]:
    tk: FreeBaseToolkit = P.toolkit
    eps, s = syl
    eps2, s2 = syl2
    if eps != eps2:
        return []
    D, psi = ("A", tk.apply_phi) if eps == -1 else ("B", tk.apply_phi_inv)
    out = []
    for br in branches:
        L, y = br.coset.subgroup, br.coset.rep
        shifted = L.conjugated(invert(s))
        U = stallings.coset_intersection(shifted, multiply(s, y, invert(s2)), tk.graph(D), EMPTY)
        for comp in U:
            M, z = comp.subgroup, comp.rep
            image = _map_subgroup(tk.rank, M.basis(), psi)
            z_img = psi(z)
            for X in ("A", "B"):
                for c in stallings.coset_intersection(image, z_img, tk.graph(X), EMPTY):
                    out.append(_Branch(c, br.steps + [(eps, s, s2)]))
    return out


def _pull_back(P, coset: Coset, steps) -> Coset:
    tk: FreeBaseToolkit = P.toolkit
    gens = coset.subgroup.basis()
    rep = coset.rep
    for eps, s, s2 in reversed(steps):
        back = tk.apply_phi_inv if eps == -1 else tk.apply_phi
        gens = [multiply(invert(s), back(x), s) for x in gens]
        rep = multiply(invert(s), back(rep), s2)
    H = SubgroupGraph(tk.rank, gens)
    return Coset(H, stallings.coset_representative(H, rep))


def push_forward(P, system: PrincipalSystem, c: Word) -> Optional[Word]:
    """Follow a candidate ``c`` through the system; ``c_k`` or ``None``."""
    tk: FreeBaseToolkit = P.toolkit
    if not (tk.contains("A", c) or tk.contains("B", c)):
        return None
    cur = c
    for (eps, s), (eps2, s2) in zip(reversed(system.p), reversed(system.p2)):
        if eps != eps2:
            return None
        x = multiply(s, cur, invert(s2))
        D = "A" if eps == -1 else "B"
        if not tk.contains(D, x):
            return None
        cur = tk.apply_phi(x) if eps == -1 else tk.apply_phi_inv(x)
        if not (tk.contains("A", cur) or tk.contains("B", cur)):
            return None
    return cur


def _solve_branches(P, system: PrincipalSystem, branch_cap: int) -> List[_Branch]:
    if system.k > branch_cap:
        raise ResourceLimitError(f"principal system of length {system.k} exceeds branch cap {branch_cap}")
    tk: FreeBaseToolkit = P.toolkit
    branches = [_Branch(Coset(tk.A, EMPTY)), _Branch(Coset(tk.B, EMPTY))]
    for syl, syl2 in zip(reversed(system.p), reversed(system.p2)):
        branches = _forward(P, branches, syl, syl2)
        if not branches:
            break
    return branches


def solution_set_E(P: HnnPresentation, system: PrincipalSystem, branch_cap: int = 16) -> CosetUnion:
    """All ``c`` in ``C = A ∪ B`` for which the principal system is solvable."""
    branches = _solve_branches(P, system, branch_cap)
    return CosetUnion(tuple(_pull_back(P, b.coset, b.steps) for b in branches))


def closing_candidates(P: HnnPresentation, system: PrincipalSystem, branch_cap: int = 16) -> List[Word]:
    """Values ``c = h c_k h'^-1`` in ``A ∪ B`` with ``c_k`` a feasible final
    variable; for regular ``g`` each branch contributes at most one."""
    tk: FreeBaseToolkit = P.toolkit
    h, h2 = system.h, system.h2
    shift = multiply(invert(h), h2)
    out = []
    for br in _solve_branches(P, system, branch_cap):
        L, y = br.coset.subgroup, br.coset.rep
        for X in ("A", "B"):
            for comp in stallings.coset_intersection(L, y, tk.graph(X).conjugated(h), shift):
                if not comp.subgroup.is_trivial():
                    raise SingularElementError("closing equation has infinitely many solutions")
                c = multiply(h, comp.rep, invert(h2))
                if c not in out:
                    out.append(c)
    return out


def is_regular(P: HnnPresentation, g, branch_cap: int = 16) -> bool:
    """Whether ``g`` lies outside the generalized normalizer of ``A ∪ B``."""
    tk: FreeBaseToolkit = P.toolkit
    nf = normal_form(P, g)
    if nf.length == 0:
        return not tk.normalizer_member(nf.h0)
    system = principal_system(nf, nf)
    h = nf.h0
    for br in _solve_branches(P, system, branch_cap):
        L, y = br.coset.subgroup, br.coset.rep
        for X in ("A", "B"):
            for comp in stallings.coset_intersection(L, y, tk.graph(X).conjugated(h), EMPTY):
                if not comp.subgroup.is_trivial() or comp.rep:
                    return False
    return True


@dataclass(frozen=True)
class ConjugacyOutcome:
    verdict: str  # "conjugate" | "not_conjugate" | "unknown"
    conjugator: Optional[Word] = None
    reason: str = ""
    trace: Tuple[str, ...] = ()


def is_conjugate_by(P, g, u, x) -> bool:
    """Word-problem check of ``x^-1 g x = u``."""
    g, u, x = _as_word(P, g), _as_word(P, u), _as_word(P, x)
    return normal_form(P, multiply(invert(x), g, x)).key() == normal_form(P, u).key()


def _in_C(tk, h) -> bool:
    return tk.contains("A", h) or tk.contains("B", h)


def default_horizon(g: Word, u: Word) -> int:
    return 2 * (len(g) + len(u))


def collins_case2_bounded(P: HnnPresentation, g, g2, max_chain: Optional[int] = None) -> ConjugacyOutcome:
    """Breadth-first search for a chain ``g = c_0, ..., c_l ~ g2`` in ``A ∪ B``
    where consecutive terms are conjugate by some ``h t^±1``.

    ``not_conjugate`` once every reachable conjugacy class has been visited,
    ``unknown`` when the horizon cuts the search short.
    """
    tk: FreeBaseToolkit = P.toolkit
    g, g2 = _as_word(P, g), _as_word(P, g2)
    if max_chain is None:
        max_chain = default_horizon(g, g2)
    frontier = [(g, EMPTY)]
    seen = {canonical_cyclic(g)}
    for depth in range(max_chain + 1):
        nxt = []
        for c, X in frontier:
            y = tk.base_conjugacy(c, g2)
            if y is not None:
                return ConjugacyOutcome("conjugate", multiply(X, y), trace=(f"collins-2 chain length {depth}",))
            if depth == max_chain:
                continue
            for which, stable, move in (("A", P.t, tk.apply_phi), ("B", -P.t, tk.apply_phi_inv)):
                for x, a in tk.conjugates_into(which, c):
                    image = move(a)
                    key = canonical_cyclic(image)
                    if key in seen:
                        continue
                    seen.add(key)
                    nxt.append((image, multiply(X, x, (stable,))))
        if depth == max_chain:
            break
        frontier = nxt
        if not frontier:
            # every reachable base conjugacy class was visited
            return ConjugacyOutcome("not_conjugate", reason=f"chain search exhausted at depth {depth + 1}")
    return ConjugacyOutcome("unknown", reason=f"horizon {max_chain} reached")


def _regular_rotation(P, nf: HnnNormalForm, branch_cap):
    """First regular cyclic permutation."""
    for i in range(1, nf.length + 1):
        perm, prefix = cyclic_permutation(P, nf, i)
        if is_regular(P, perm, branch_cap):
            return perm, prefix
    return None


def conjugacy_search_regular(P: HnnPresentation, g, u, branch_cap: int = 16,
                             max_chain: Optional[int] = None) -> ConjugacyOutcome:
    """Decide whether ``u`` is conjugate to ``g`` and find ``x`` with ``x^-1 g x = u``.

    ``g`` must have a regular cyclically reduced form, or be conjugate into
    ``A ∪ B`` (then only the bounded chain search is available).
    """
    tk: FreeBaseToolkit = P.toolkit
    g, u = _as_word(P, g), _as_word(P, u)
    g1, X = cyc_reduce(P, g)
    u1, Y = cyc_reduce(P, u)
    trace = [f"l(g)={g1.length}", f"l(u)={u1.length}"]

    if g1.length == 0 and _in_C(tk, g1.h0):
        if u1.length or not _in_C(tk, u1.h0):
            return ConjugacyOutcome("not_conjugate", reason="collins case 2: u not in A∪B", trace=tuple(trace))
        res = collins_case2_bounded(P, g1.h0, u1.h0, max_chain)
        if res.verdict == "conjugate":
            x = multiply(X, res.conjugator, invert(Y))
            return ConjugacyOutcome("conjugate", x, trace=tuple(trace) + res.trace)
        return ConjugacyOutcome(res.verdict, reason=res.reason, trace=tuple(trace))

    if g1.length == 0:
        if not is_regular(P, g1, branch_cap):
            raise SingularElementError("g is singular")
        if u1.length or _in_C(tk, u1.h0):
            return ConjugacyOutcome("not_conjugate", reason="collins case 1 fails", trace=tuple(trace))
        y = tk.base_conjugacy(g1.h0, u1.h0)
        if y is None:
            return ConjugacyOutcome("not_conjugate", reason="not conjugate in the base group", trace=tuple(trace))
        return ConjugacyOutcome("conjugate", multiply(X, y, invert(Y)), trace=tuple(trace + ["collins-1"]))

    found = _regular_rotation(P, g1, branch_cap)
    if found is None:
        raise SingularElementError("no cyclic permutation of g is regular")
    g2, R = found
    if u1.length != g2.length:
        return ConjugacyOutcome("not_conjugate", reason="cyclically reduced lengths differ", trace=tuple(trace))
    seq = [e for e, _ in g2.syllables]
    for i in range(1, u1.length + 1):
        perm, Q = cyclic_permutation(P, u1, i)
        if [e for e, _ in perm.syllables] != seq:
            continue
        for c in closing_candidates(P, principal_system(g2, perm), branch_cap):
            if is_conjugate_by(P, g2, perm, c):
                # u = (Y Q c^-1 R^-1 X^-1) g (X R c Q^-1 Y^-1)
                x = multiply(X, R, c, invert(Q), invert(Y))
                return ConjugacyOutcome("conjugate", x, trace=tuple(trace + [f"collins-3 permutation {i}"]))
    return ConjugacyOutcome("not_conjugate", reason="no cyclic permutation matches", trace=tuple(trace))
