"""Miller's groups ``G(H)`` built from a finite presentation of ``H``.

``G(H)`` is the HNN-extension of ``K = F(T, D) x F(S)`` by the stable letter
``q`` with

    t_i^-1 q t_i = q R_i,    d_j^-1 q d_j = s_j^-1 q s_j,
    t_i^-1 s_j t_i = s_j,    d_k^-1 s_j d_k = s_j.

The associated subgroups are graphs of homomorphisms:
``A = {(w, rhoBar(w))}`` and ``B = {(w, rhoBarPrime(w))}`` with
``rhoBar: t_i -> 1, d_j -> s_j^-1`` and ``rhoBarPrime: t_i -> R_i^-1, d_j -> s_j^-1``.

All words use one alphabet ``q, s_1..s_n, t_1..t_m, d_1..d_n`` so that
K-components and F(S, q)-words multiply without re-indexing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .fgword import (
    ALL_INTEGERS,
    EMPTY,
    NO_SOLUTION,
    Alphabet,
    PowerSolution,
    Word,
    apply_homomorphism,
    free_conjugacy,
    invert,
    maximal_root,
    multiply,
    power,
    reduce,
    solve_power_equation,
)

Q = 1

CONJUGATE = "Conjugate"
NOT_CONJUGATE = "NotConjugate"
OUTSIDE_SCOPE = "OutsideScope"

WEAKLY_REGULAR = "WeaklyRegular"
STRONGLY_SINGULAR = "StronglySingular"

_RESERVED = re.compile(r"^(q|t\d+|d\d+)$")


@dataclass(frozen=True)
class KElement:
    """``(u, s)`` in ``F(T, D) x F(S)``."""

    u: Word = EMPTY
    s: Word = EMPTY

    def __mul__(self, other: "KElement") -> "KElement":
        return KElement(multiply(self.u, other.u), multiply(self.s, other.s))

    def inverse(self) -> "KElement":
        return KElement(invert(self.u), invert(self.s))

    def word(self) -> Word:
        return self.u + self.s


class MillerGroup:
    def __init__(self, names: Sequence[str], relators: Sequence[Word]):
        names = list(names)
        if not names:
            raise ValueError("H needs at least one generator")
        if not relators:
            raise ValueError("H needs at least one relator")
        for name in names:
            if _RESERVED.match(name):
                raise ValueError(f"generator name {name!r} is reserved")
        self.n = n = len(names)
        self.m = m = len(relators)
        self.alphabet = Alphabet(["q"] + names + [f"t{i}" for i in range(1, m + 1)]
                                 + [f"d{j}" for j in range(1, n + 1)])
        rels = []
        for R in relators:
            R = reduce(R)
            if not R:
                raise ValueError("empty relator")
            if any(not self.is_s(x) for x in R):
                raise ValueError("relators must be words over the generators of H")
            rels.append(R)
        self.relators: Tuple[Word, ...] = tuple(rels)
        self.C_R = max(len(R) for R in rels)
        self.rho_bar = {}
        self.rho_bar_prime = {}
        for i in range(1, m + 1):
            self.rho_bar[self.t(i)] = EMPTY
            self.rho_bar_prime[self.t(i)] = invert(rels[i - 1])
        for j in range(1, n + 1):
            self.rho_bar[self.d(j)] = (-self.s(j),)
            self.rho_bar_prime[self.d(j)] = (-self.s(j),)

    # letter indices
    def s(self, j: int) -> int:
        return 1 + j

    def t(self, i: int) -> int:
        return 1 + self.n + i

    def d(self, j: int) -> int:
        return 1 + self.n + self.m + j

    def is_s(self, x: int) -> bool:
        return 2 <= abs(x) <= self.n + 1

    def is_td(self, x: int) -> bool:
        return abs(x) > self.n + 1

    def parse(self, text: str) -> Word:
        return self.alphabet.parse(text)

    def format(self, w) -> str:
        return self.alphabet.format(w)

    def rhoBar(self, u: Sequence[int]) -> Word:
        return apply_homomorphism(self.rho_bar, u)

    def rhoBarPrime(self, u: Sequence[int]) -> Word:
        return apply_homomorphism(self.rho_bar_prime, u)

    def A_generators(self) -> List[Word]:
        return [(self.t(i),) for i in range(1, self.m + 1)] + \
               [(self.s(j), -self.d(j)) for j in range(1, self.n + 1)]

    def B_generators(self) -> List[Word]:
        return [multiply((self.t(i),), invert(R)) for i, R in enumerate(self.relators, 1)] + \
               [(self.s(j), -self.d(j)) for j in range(1, self.n + 1)]

    def defining_relators(self) -> List[Word]:
        """Relators of ``G(H)`` over the standard generators."""
        out = []
        for i, R in enumerate(self.relators, 1):
            t = self.t(i)
            out.append(multiply((-t, Q, t), invert(R), (-Q,)))
            for j in range(1, self.n + 1):
                out.append((-t, self.s(j), t, -self.s(j)))
        for j in range(1, self.n + 1):
            d, s = self.d(j), self.s(j)
            out.append((-d, Q, d, -s, -Q, s))
            for k in range(1, self.n + 1):
                out.append((-d, self.s(k), d, -self.s(k)))
        return out


def build_miller(names: Sequence[str], relators: Sequence) -> MillerGroup:
    """Build ``G(H)`` for ``H = <names | relators>``; relators may be strings."""
    h = Alphabet(names)
    words = [h.parse(r) if isinstance(r, str) else tuple(r) for r in relators]
    # shift H-indices (1..n) to the s-block of the Miller alphabet
    return MillerGroup(names, [tuple(x + 1 if x > 0 else x - 1 for x in w) for w in words])


def _as_word(G: MillerGroup, w) -> Word:
    if isinstance(w, MillerNormalForm):
        return w.word()
    if isinstance(w, str):
        return G.parse(w)
    return reduce(w)


def project_K(G: MillerGroup, x: Sequence[int]) -> KElement:
    if any(abs(a) == Q for a in x):
        raise ValueError("q is not in K")
    return KElement(reduce(a for a in x if G.is_td(a)), reduce(a for a in x if G.is_s(a)))


def decompose_K(G: MillerGroup, x):
    """``x = u s = a s_a = b s_b`` with ``a`` in A, ``b`` in B and the rest in F(S).

    Returns ``(KElement(u, s), (a, s_a), (b, s_b))`` with ``a``, ``b`` as KElements.
    """
    k = x if isinstance(x, KElement) else project_K(G, _as_word(G, x))
    ra, rb = G.rhoBar(k.u), G.rhoBarPrime(k.u)
    a = KElement(k.u, ra)
    b = KElement(k.u, rb)
    return k, (a, multiply(invert(ra), k.s)), (b, multiply(invert(rb), k.s))


def _expression(G: MillerGroup, u: Word) -> Word:
    # t_i -> generator i, d_j -> inverse of generator m + j (which is s_j d_j^-1)
    out = []
    for x in u:
        if 1 + G.n < abs(x) <= 1 + G.n + G.m:
            i = abs(x) - 1 - G.n
            out.append(i if x > 0 else -i)
        else:
            j = abs(x) - 1 - G.n - G.m
            out.append(-(G.m + j) if x > 0 else G.m + j)
    return tuple(out)


def membership_A(G: MillerGroup, x: KElement) -> Optional[Word]:
    """Expression of ``x`` over ``t_1..t_m, s_1 d_1^-1..s_n d_n^-1``, or ``None``."""
    if x.s != G.rhoBar(x.u):
        return None
    return _expression(G, x.u)


def membership_B(G: MillerGroup, x: KElement) -> Optional[Word]:
    """Expression over ``t_i R_i^-1, s_j d_j^-1``, or ``None``."""
    if x.s != G.rhoBarPrime(x.u):
        return None
    return _expression(G, x.u)


def theta(G: MillerGroup, a: KElement) -> KElement:
    if a.s != G.rhoBar(a.u):
        raise ValueError("theta is only defined on A")
    return KElement(a.u, G.rhoBarPrime(a.u))


def theta_inv(G: MillerGroup, b: KElement) -> KElement:
    if b.s != G.rhoBarPrime(b.u):
        raise ValueError("theta^-1 is only defined on B")
    return KElement(b.u, G.rhoBar(b.u))


@dataclass(frozen=True)
class MillerNormalForm:
    """``u s0 q^e1 s1 ... q^ek sk`` with ``u`` over T∪D and ``s_i`` over S."""

    u: Word
    s0: Word
    syllables: Tuple[Tuple[int, Word], ...] = ()
    reduced: bool = True
    cyclically_reduced: bool = False

    @property
    def length(self) -> int:
        return len(self.syllables)

    @property
    def epsilons(self) -> Tuple[int, ...]:
        return tuple(e for e, _ in self.syllables)

    def f_part(self) -> Word:
        out = list(self.s0)
        for e, s in self.syllables:
            out.append(e * Q)
            out.extend(s)
        return tuple(out)

    def word(self) -> Word:
        return self.u + self.f_part()

    def key(self):
        return self.u, self.s0, self.syllables

    def format(self, G: MillerGroup) -> str:
        return G.format(self.word())


class _Carry:
    """K-element together with its images under rhoBar and rhoBarPrime."""

    __slots__ = ("u", "s", "ra", "rb")

    def __init__(self, u, s, ra, rb):
        self.u, self.s, self.ra, self.rb = u, s, ra, rb

    @classmethod
    def of(cls, G, k: KElement):
        return cls(k.u, k.s, G.rhoBar(k.u), G.rhoBarPrime(k.u))

    def times(self, other):
        return _Carry(multiply(self.u, other.u), multiply(self.s, other.s),
                      multiply(self.ra, other.ra), multiply(self.rb, other.rb))


def _segments(G: MillerGroup, w: Word):
    segs: List[List[int]] = [[]]
    eps = []
    for x in w:
        if abs(x) == Q:
            eps.append(1 if x > 0 else -1)
            segs.append([])
        else:
            segs[-1].append(x)
    return eps, [project_K(G, s) for s in segs]


def normal_form_miller(G: MillerGroup, w) -> MillerNormalForm:
    """Right-to-left rewriting: at ``q^-1`` split the carry as ``a s_a`` and pass
    ``theta(a)`` to the left, at ``q`` use ``b s_b`` and ``theta^-1``."""
    eps, segs = _segments(G, _as_word(G, w))
    carry = _Carry.of(G, segs[-1])
    stack: List[Tuple[int, Word]] = []
    for i in range(len(eps) - 1, -1, -1):
        e = eps[i]
        left = _Carry.of(G, segs[i])
        if e == -1:
            rest = multiply(invert(carry.ra), carry.s)
            moved = _Carry(carry.u, carry.rb, carry.ra, carry.rb)
        else:
            rest = multiply(invert(carry.rb), carry.s)
            moved = _Carry(carry.u, carry.ra, carry.ra, carry.rb)
        if not rest and stack and stack[-1][0] == -e:
            _, s_next = stack.pop()
            carry = left.times(moved).times(_Carry(EMPTY, s_next, EMPTY, EMPTY))
        else:
            stack.append((e, rest))
            carry = left.times(moved)
    return MillerNormalForm(carry.u, carry.s, tuple(reversed(stack)))


def in_A(G, k: KElement) -> bool:
    return k.s == G.rhoBar(k.u)


def in_B(G, k: KElement) -> bool:
    return k.s == G.rhoBarPrime(k.u)


def cyc_reduce_miller(G: MillerGroup, w) -> Tuple[MillerNormalForm, Word]:
    """Cyclically reduced normal form ``nf`` and ``x`` with ``x^-1 w x = nf``."""
    nf = normal_form_miller(G, w)
    conj: Word = EMPTY
    while True:
        if nf.length == 0:
            k = KElement(nf.u, nf.s0)
            if not (in_A(G, k) or in_B(G, k)):
                for target in (G.rhoBar(nf.u), G.rhoBarPrime(nf.u)):
                    r = free_conjugacy(nf.s0, target)
                    if r is not None:
                        conj = multiply(conj, r)
                        nf = MillerNormalForm(nf.u, target)
                        break
            break
        e1, ek = nf.syllables[0][0], nf.syllables[-1][0]
        if nf.length < 2 or e1 != -ek:
            break
        wrap = multiply(nf.syllables[-1][1], nf.s0)
        if wrap != (G.rhoBar(nf.u) if ek == -1 else G.rhoBarPrime(nf.u)):
            break
        x = multiply(nf.u, nf.s0, (e1 * Q,))
        conj = multiply(conj, x)
        nf = normal_form_miller(G, multiply(invert(x), nf.word(), x))
    return MillerNormalForm(nf.u, nf.s0, nf.syllables, True, True), conj


def classify(G: MillerGroup, w) -> str:
    nf, _ = cyc_reduce_miller(G, w)
    return STRONGLY_SINGULAR if not nf.u else WEAKLY_REGULAR


def rewrite_conjugate_by_FTD(G: MillerGroup, f: Sequence[int], v: Sequence[int]) -> Word:
    """``v^-1 f v`` as a word over ``S ∪ {q}``, one letter of ``v`` at a time."""
    f = reduce(f)
    for x in v:
        if G.is_s(x) or abs(x) == Q:
            raise ValueError("conjugator must be a word over T and D")
        idx = abs(x)
        if idx <= 1 + G.n + G.m:
            R = G.relators[idx - 2 - G.n]
            img = multiply((Q,), R) if x > 0 else multiply((Q,), invert(R))
        else:
            s = G.s(idx - 1 - G.n - G.m)
            img = (-s, Q, s) if x > 0 else (s, Q, -s)
        out = []
        for y in f:
            piece = (y,) if abs(y) != Q else (img if y > 0 else invert(img))
            for z in piece:
                if out and out[-1] == -z:
                    out.pop()
                else:
                    out.append(z)
        f = tuple(out)
    return f


@dataclass(frozen=True)
class ConjugacyCertificate:
    verdict: str
    conjugator: Optional[Word] = None
    trace: Tuple[str, ...] = ()
    permutation_index: Optional[int] = None
    exponent: Optional[int] = None
    reason: str = ""


def is_conjugate_by(G: MillerGroup, g, g2, x) -> bool:
    g, g2, x = _as_word(G, g), _as_word(G, g2), _as_word(G, x)
    return normal_form_miller(G, multiply(invert(x), g, x)).key() == normal_form_miller(G, g2).key()


def verify_certificate(G: MillerGroup, g, g2, cert: ConjugacyCertificate) -> bool:
    if cert.verdict != CONJUGATE or cert.conjugator is None:
        return False
    return is_conjugate_by(G, g, g2, cert.conjugator)


def cyclic_permutation_miller(G: MillerGroup, nf: MillerNormalForm, i: int) -> Tuple[MillerNormalForm, Word]:
    """The rotation starting after the ``i``-th ``q``-letter (1-based), with its prefix."""
    if not 1 <= i <= nf.length:
        raise IndexError(f"permutation index {i} outside 1..{nf.length}")
    prefix = list(nf.u + nf.s0)
    for e, s in nf.syllables[:i - 1]:
        prefix.append(e * Q)
        prefix.extend(s)
    prefix.append(nf.syllables[i - 1][0] * Q)
    prefix = reduce(prefix)
    return normal_form_miller(G, multiply(invert(prefix), nf.word(), prefix)), prefix


def _meet(sols: List[PowerSolution]) -> PowerSolution:
    l = None
    for sol in sols:
        if sol.tag == "none":
            return NO_SOLUTION
        if sol.tag == "unique":
            if l is not None and l != sol.l:
                return NO_SOLUTION
            l = sol.l
    return ALL_INTEGERS if l is None else PowerSolution("unique", l)


def _exponent_for(nf: MillerNormalForm, target: MillerNormalForm, y: Word, c: Word, outer: Word) -> PowerSolution:
    """``l`` with ``z_l^-1 g z_l = target`` where conjugation by ``z_l`` sends
    ``q -> outer^-l (y^l q c^-l) outer^l`` and ``s -> outer^-l s outer^l``.

    Every syllable then satisfies ``s* = P^l s Q^l``, i.e.
    ``P^l (s Q s^-1)^l = s* s^-1``.
    """
    eps = nf.epsilons
    k = len(eps)
    right = {1: invert(c), -1: invert(y)}  # factor following q^e
    left = {1: y, -1: c}  # factor preceding q^e
    words = [nf.s0] + [s for _, s in nf.syllables]
    targets = [target.s0] + [s for _, s in target.syllables]
    sols = []
    for i in range(k + 1):
        P = invert(outer) if i == 0 else right[eps[i - 1]]
        Qf = outer if i == k else left[eps[i]]
        s, s2 = words[i], targets[i]
        sols.append(solve_power_equation(P, multiply(s, Qf, invert(s)), multiply(s2, invert(s))))
        if sols[-1].tag == "none":
            return NO_SOLUTION
    return _meet(sols)


def conjugacy_search_miller(G: MillerGroup, g, g2) -> ConjugacyCertificate:
    """Find ``x`` with ``x^-1 g x = g2``, or show there is none.

    Complete whenever ``g`` or ``g2`` is weakly regular; two strongly
    singular inputs give ``OutsideScope``.
    """
    g, g2 = _as_word(G, g), _as_word(G, g2)
    g1, X = cyc_reduce_miller(G, g)
    h1, Y = cyc_reduce_miller(G, g2)
    trace = []

    # case (i): images in F(T, D) must be conjugate
    v = free_conjugacy(g1.u, h1.u)
    if v is None:
        return ConjugacyCertificate(NOT_CONJUGATE, trace=("i",), reason="u-parts not conjugate in F(T,D)")
    if not g1.u:
        return ConjugacyCertificate(OUTSIDE_SCOPE, trace=("i",), reason="strongly singular")
    trace.append("i")
    # h2 = v h1 v^-1 has the same u-part as g1
    f2 = rewrite_conjugate_by_FTD(G, h1.f_part(), invert(v))
    h2, W = cyc_reduce_miller(G, multiply(g1.u, f2))
    # h2 = W^-1 v h1 v^-1 W, so a conjugator z from g1 to h2 gives X z W^-1 v Y^-1
    tail = multiply(invert(W), v, invert(Y))

    def done(z, tags, i=None, l=None):
        x = multiply(X, z, tail)
        return ConjugacyCertificate(CONJUGATE, x, tuple(trace + tags), i, l)

    if g1.length != h2.length:
        return ConjugacyCertificate(NOT_CONJUGATE, trace=tuple(trace), reason="cyclically reduced lengths differ")

    if g1.length == 0:
        k1, k2 = KElement(g1.u, g1.s0), KElement(h2.u, h2.s0)
        g_in = (in_A(G, k1), in_B(G, k1))
        h_in = (in_A(G, k2), in_B(G, k2))
        if any(g_in) != any(h_in):
            return ConjugacyCertificate(NOT_CONJUGATE, trace=tuple(trace), reason="only one element lies in A ∪ B")
        if not any(g_in):
            w = free_conjugacy(g1.s0, h2.s0)
            if w is None:
                return ConjugacyCertificate(NOT_CONJUGATE, trace=tuple(trace + ["ii"]),
                                            reason="S-parts not conjugate in F(S)")
            return done(w, ["ii"])
        if k1 == k2:
            return done(EMPTY, ["iii"])
        if g_in[0] and h_in[1]:
            return done((Q,), ["iii"])
        return done((-Q,), ["iii"])

    # compare rotations that end in a q-letter on both sides
    g1, R = cyclic_permutation_miller(G, g1, g1.length)
    X = multiply(X, R)
    u0, _ = maximal_root(g1.u)
    y, c = G.rhoBar(u0), G.rhoBarPrime(u0)
    order = ("A", "B") if g1.syllables[-1][0] == -1 else ("B", "A")
    for i in range(1, h2.length + 1):
        target, prefix = cyclic_permutation_miller(G, h2, i)
        if target.epsilons != g1.epsilons or target.u != g1.u:
            continue
        for which in order:
            outer = y if which == "A" else c
            sol = _exponent_for(g1, target, y, c, outer)
            if sol.tag == "none":
                continue
            l = 0 if sol.tag == "all" else sol.l
            z = multiply(power(u0, l), power(outer, l))
            if is_conjugate_by(G, g1.word(), target.word(), z):
                # target = prefix^-1 h2 prefix = z^-1 g1 z
                x = multiply(X, z, invert(prefix), tail)
                return ConjugacyCertificate(CONJUGATE, x, tuple(trace + ["iv", f"z in {which}"]), i, l)
    return ConjugacyCertificate(NOT_CONJUGATE, trace=tuple(trace + ["iv"]), reason="no cyclic permutation matches")
