"""Words in free groups.

A word is a tuple of nonzero ints: the letter ``+i`` is the ``i``-th generator
(1-based) of an :class:`Alphabet` and ``-i`` its inverse.  Every function
here returns freely reduced words; inputs are assumed reduced unless the
function is :func:`reduce`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Tuple

Word = Tuple[int, ...]

EMPTY: Word = ()

_NAME_RE = re.compile(r"^[A-Za-z0-9_]+$")
_TOKEN_RE = re.compile(r"^([A-Za-z0-9_]+)(?:\^(-?\d+))?$")


class ParseError(ValueError):
    """Malformed word or presentation text; carries a 1-based position."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class Alphabet:
    """Ordered list of generator names with word parsing and printing."""

    def __init__(self, names: Sequence[str]):
        names = list(names)
        if not names:
            raise ValueError("an alphabet needs at least one generator")
        for name in names:
            if not _NAME_RE.match(name):
                raise ValueError(f"invalid generator name {name!r}")
        if len(set(names)) != len(names):
            raise ValueError("generator names must be distinct")
        self.names = tuple(names)
        self._index = {name: i + 1 for i, name in enumerate(names)}

    @property
    def rank(self) -> int:
        return len(self.names)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"Alphabet({list(self.names)!r})"

    def __contains__(self, name):
        return name in self._index

    def letter(self, name: str, sign: int = 1) -> int:
        return sign * self._index[name]

    def gen(self, name: str) -> Word:
        return (self._index[name],)

    def parse(self, text: str, line: int = 1, column: int = 1) -> Word:
        """Parse ``"s1 s2^-1 q"``; ``"1"`` (or blank) is the empty word.

        Integer exponents ``x^k`` are accepted as shorthand for ``k`` copies.
        """
        letters = []
        for m in re.finditer(r"\S+", text):
            tok = m.group(0)
            col = column + m.start()
            if tok == "1":
                continue
            tm = _TOKEN_RE.match(tok)
            if not tm:
                raise ParseError(f"bad token {tok!r}", line, col)
            name, exp = tm.group(1), tm.group(2)
            if name not in self._index:
                raise ParseError(f"unknown generator {name!r}", line, col)
            k = 1 if exp is None else int(exp)
            if k == 0:
                continue
            g = self._index[name] if k > 0 else -self._index[name]
            letters.extend([g] * abs(k))
        return reduce(letters)

    def format(self, w: Sequence[int]) -> str:
        if not w:
            return "1"
        return " ".join(self.names[x - 1] if x > 0 else self.names[-x - 1] + "^-1" for x in w)


def reduce(letters: Iterable[int]) -> Word:
    """Free reduction by a single left-to-right stack pass."""
    out = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def multiply(*words: Sequence[int]) -> Word:
    out = []
    for w in words:
        for x in w:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
    return tuple(out)


def invert(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def conjugate(g: Sequence[int], x: Sequence[int]) -> Word:
    """``x^-1 g x``."""
    return multiply(invert(x), g, x)


def power(w: Sequence[int], n: int) -> Word:
    if n < 0:
        w, n = invert(w), -n
    core, c = cyclic_reduce(tuple(w))
    # c^-1 core^n c; core^n is reduced because core is cyclically reduced
    return multiply(invert(c), core * n, c)


def is_cyclically_reduced(w: Sequence[int]) -> bool:
    return len(w) < 2 or w[0] != -w[-1]


def cyclic_reduce(w: Sequence[int]) -> Tuple[Word, Word]:
    """Return ``(core, c)`` with ``w = c^-1 core c`` and ``core`` cyclically reduced."""
    w = tuple(w)
    n = len(w)
    i = 0
    while i < n - 1 - i and w[i] == -w[n - 1 - i]:
        i += 1
    return w[i:n - i], w[n - i:]


def rotations(w: Word):
    for i in range(len(w)):
        yield i, w[i:] + w[:i]


def _sort_key(x: int):
    return (abs(x), 0 if x > 0 else 1)


def canonical_cyclic(w: Sequence[int]) -> Word:
    """Least rotation of the cyclic reduction, generator order ``a < a^-1 < b ...``."""
    core, _ = cyclic_reduce(w)
    if not core:
        return EMPTY
    return min((r for _, r in rotations(core)), key=lambda r: [_sort_key(x) for x in r])


def free_conjugacy(u: Sequence[int], v: Sequence[int]) -> Optional[Word]:
    """Find ``x`` with ``x^-1 u x = v``, or ``None`` if ``u`` and ``v`` are not conjugate."""
    cu, pu = cyclic_reduce(u)
    cv, pv = cyclic_reduce(v)
    if len(cu) != len(cv):
        return None
    if not cu:
        return multiply(invert(pu), pv)
    # u = pu^-1 cu pu, v = pv^-1 cv pv; need cv = P^-1 cu P with cu = P Q
    doubled = cu + cu
    n = len(cu)
    for i in range(n):
        if doubled[i:i + n] == cv:
            return multiply(invert(pu), cu[:i], pv)
    return None


def maximal_root(w: Sequence[int]) -> Tuple[Word, int]:
    """Return ``(u0, e)`` with ``w = u0^e`` and ``u0`` not a proper power."""
    if not w:
        raise ValueError("the identity has no maximal root")
    core, c = cyclic_reduce(w)
    n = len(core)
    for p in range(1, n + 1):
        if n % p == 0 and core[:p] * (n // p) == core:
            return multiply(invert(c), core[:p], c), n // p
    raise AssertionError("unreachable")


def apply_homomorphism(images: Mapping[int, Sequence[int]], w: Sequence[int]) -> Word:
    """Substitute ``images[i]`` for generator ``i`` (inverse for ``-i``) and reduce."""
    out = []
    for x in w:
        try:
            img = images[x] if x > 0 else invert(images[-x])
        except KeyError:
            raise KeyError(f"no image for generator {abs(x)}") from None
        for y in img:
            if out and out[-1] == -y:
                out.pop()
            else:
                out.append(y)
    return tuple(out)


@dataclass(frozen=True)
class PowerSolution:
    """Solution set of ``a^l b^l = d`` over the integers."""

    tag: str  # "none" | "unique" | "all"
    l: Optional[int] = None

    def __str__(self):
        if self.tag == "unique":
            return f"l = {self.l}"
        return {"none": "no solution", "all": "every integer l"}[self.tag]


NO_SOLUTION = PowerSolution("none")
ALL_INTEGERS = PowerSolution("all")


def power_equation_window(a, b, d) -> int:
    """Brute-force cross-check window ``|d| + 2(|a| + |b| + 1)``."""
    return len(d) + 2 * (len(a) + len(b) + 1)


def _lhs(a, b, l):
    return multiply(power(a, l), power(b, l))


def _positive_solution(a: Word, b: Word, d: Word) -> Optional[int]:
    """Unique ``l >= 1`` with ``a^l b^l = d`` for non-commuting ``a, b``.

    With ``a = ca^-1 A ca`` and ``b = cb^-1 B cb`` (``A``, ``B`` cyclically
    reduced), ``a^l b^l = ca^-1 A^l m B^l cb`` for the fixed word
    ``m = ca cb^-1``.  Because ``A`` and ``B^-1`` have no common power, the
    cancellation inside ``A^l m B^l`` is bounded by ``|m| + |A| + |B|``.
    Past ``l0`` the length of ``a^l b^l`` is therefore affine in ``l`` with
    slope ``|A| + |B|``, so ``|d|`` pins down the only candidate.
    """
    A, _ = cyclic_reduce(a)
    B, _ = cyclic_reduce(b)
    l0 = 2 * (len(a) + len(b)) + 2
    for l in range(1, l0 + 1):
        if _lhs(a, b, l) == d:
            return l
    base = len(_lhs(a, b, l0))
    slope = len(A) + len(B)
    extra, rem = divmod(len(d) - base, slope)
    if rem or extra <= 0:
        return None
    l = l0 + extra
    return l if _lhs(a, b, l) == d else None


def solve_power_equation(a: Sequence[int], b: Sequence[int], d: Sequence[int]) -> PowerSolution:
    """Solve ``a^l b^l = d`` for the integer ``l`` in a free group."""
    a, b, d = tuple(a), tuple(b), tuple(d)
    ab = multiply(a, b)
    if multiply(ab, invert(a), invert(b)) == EMPTY:
        # commuting case: (ab)^l = d
        if not ab:
            return ALL_INTEGERS if not d else NO_SOLUTION
        if not d:
            return PowerSolution("unique", 0)
        r, e = maximal_root(ab)
        rd, f = maximal_root(d)
        if rd == r:
            j = f
        elif rd == invert(r):
            j = -f
        else:
            return NO_SOLUTION
        if j % e:
            return NO_SOLUTION
        return PowerSolution("unique", j // e)
    if not d:
        return PowerSolution("unique", 0)
    # a^-l b^-l = (a^-1)^l (b^-1)^l handles the negative half
    for sign, (x, y) in ((1, (a, b)), (-1, (invert(a), invert(b)))):
        l = _positive_solution(x, y, d)
        if l is not None:
            return PowerSolution("unique", sign * l)
    return NO_SOLUTION


def solve_power_equation_brute(a, b, d, window: Optional[int] = None) -> PowerSolution:
    """Reference solver scanning ``l`` in ``[-B, B]``."""
    a, b, d = tuple(a), tuple(b), tuple(d)
    if not d and multiply(a, b) == EMPTY:
        return ALL_INTEGERS
    B = power_equation_window(a, b, d) if window is None else window
    hits = [l for l in range(-B, B + 1) if _lhs(a, b, l) == d]
    if not hits:
        return NO_SOLUTION
    if len(hits) > 1:
        raise AssertionError(f"multiple solutions {hits} for a non-degenerate equation")
    return PowerSolution("unique", hits[0])
