"""Random words, their measures, and exact strong-black-hole frequencies.

Words are drawn by a non-backtracking walk that stops with probability ``s``
before each step, so ``P(|w| = k) = s (1 - s)^k`` and words of equal length
are equally likely.  All densities are exact ``Fraction``s; floats appear
only in Monte-Carlo summaries.

Parallel runs derive worker seeds as ``seed + worker_index``.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

from .fgword import Word
from .miller import KElement, MillerGroup, Q

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class MeasureParams:
    m: int
    s: Number
    seed: Optional[int] = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("rank must be at least 1")
        if not 0 < self.s <= 1:
            raise ValueError("stopping probability must lie in (0, 1]")

    @property
    def t(self) -> Fraction:
        """Adjusted single-letter mass ``(1 - s) / (2m - 1)``."""
        return (1 - Fraction(self.s)) / (2 * self.m - 1)

    @property
    def mean_length(self) -> Fraction:
        return 1 / Fraction(self.s) - 1


def _walk(rng: random.Random, m: int, s: float) -> List[int]:
    out: List[int] = []
    while rng.random() >= s:
        while True:
            x = rng.randint(1, m) * (1 if rng.random() < 0.5 else -1)
            if not out or x != -out[-1]:
                break
        out.append(x)
    return out


def sample_word(p: MeasureParams, rng: Optional[random.Random] = None) -> Word:
    """Freely reduced word over letters ``±1..±m`` with geometric length."""
    rng = rng if rng is not None else random.Random(p.seed)
    return tuple(_walk(rng, p.m, float(p.s)))


def sphere_size(m: int, k: int) -> int:
    if k < 0:
        raise ValueError("k must be non-negative")
    return 1 if k == 0 else 2 * m * (2 * m - 1) ** (k - 1)


def mu_s(p: MeasureParams, w: Sequence[int]) -> Fraction:
    s = Fraction(p.s)
    k = len(w)
    return s * (1 - s) ** k / sphere_size(p.m, k)


def mu_star(p: MeasureParams, w: Sequence[int]) -> Fraction:
    if not w:
        return Fraction(2 * p.m, 2 * p.m - 1) / Fraction(p.s) * mu_s(p, w)
    return p.t ** len(w)


def lambda_star(m: int, w: Sequence[int]) -> Fraction:
    return Fraction(1, (2 * m - 1) ** len(w))


def exact_fk_sbh(n: int, m: int, k: int) -> Fraction:
    """Fraction of normal forms ``u f`` with ``|u| + |f| = k`` that have ``u = 1``.

    ``u`` ranges over ``F(T, D)`` (rank ``n + m``) and ``f`` over ``F(S, q)``
    (rank ``n + 1``).
    """
    if n < 1 or m < 1 or k < 1:
        raise ValueError("need n, m, k >= 1")
    total = sum(sphere_size(n + m, k - j) * sphere_size(n + 1, j) for j in range(k + 1))
    return Fraction(sphere_size(n + 1, k), total)


def sbh_bound(n: int, m: int, k: int) -> Fraction:
    return Fraction(n + 1, n + m) ** (k - 1)


def bound_margin(n: int, m: int, k: int) -> Tuple[Fraction, Fraction, bool]:
    if m <= 1:
        raise ValueError("m > 1 required")
    f = exact_fk_sbh(n, m, k)
    b = sbh_bound(n, m, k)
    return f, b, f < b


def density_table(n: int, m: int, kmax: int) -> List[Tuple[int, Fraction, Fraction, bool]]:
    """Rows ``(k, f_k, bound, holds)`` for ``k = 1..kmax``; the bound is strict for ``k > 1``."""
    if m <= 1:
        raise ValueError("m > 1 required")
    rows = []
    sp = [sphere_size(n + m, j) for j in range(kmax + 1)]
    sb = [sphere_size(n + 1, j) for j in range(kmax + 1)]
    for k in range(1, kmax + 1):
        f = Fraction(sb[k], sum(sp[k - j] * sb[j] for j in range(k + 1)))
        b = sbh_bound(n, m, k)
        rows.append((k, f, b, f < b if k > 1 else f <= b))
    return rows


def decimal_str(x: Fraction, digits: int = 12) -> str:
    with localcontext() as ctx:
        ctx.prec = digits
        return format(Decimal(x.numerator) / Decimal(x.denominator), f".{digits - 1}E")


def fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def cesaro_partial(fs: Union[Sequence[Fraction], Callable[[int], Fraction]], n_max: int) -> Fraction:
    """``(f_1 + ... + f_n) / n`` for ``n = n_max``; ``fs`` is 1-based if callable."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    vals = [fs(k) for k in range(1, n_max + 1)] if callable(fs) else list(fs)[:n_max]
    if len(vals) < n_max:
        raise ValueError("not enough terms")
    return sum((Fraction(v) for v in vals), Fraction(0)) / n_max


def wilson_interval(hits: int, n: int, z: float = 1.96) -> Tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    p = hits / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _td_letter(G: MillerGroup, x: int) -> int:
    # 1..m -> t_i, m+1..m+n -> d_j
    i = abs(x)
    idx = G.t(i) if i <= G.m else G.d(i - G.m)
    return idx if x > 0 else -idx


def _s_letter(G: MillerGroup, x: int) -> int:
    return G.s(x) if x > 0 else -G.s(-x)


def _f_letter(G: MillerGroup, x: int) -> int:
    # 1 -> q, 2..n+1 -> s_1..s_n
    i = abs(x)
    idx = Q if i == 1 else G.s(i - 1)
    return idx if x > 0 else -idx


def sample_K(G: MillerGroup, sigma1: float, sigma2: float, rng: Union[int, random.Random, None] = None) -> KElement:
    """``(u, s)`` with independent ``u ~ mu_sigma1`` on F(T, D) and ``s ~ mu_sigma2`` on F(S)."""
    rng = rng if isinstance(rng, random.Random) else random.Random(rng)
    u = _walk(rng, G.n + G.m, sigma1)
    s = _walk(rng, G.n, sigma2)
    return KElement(tuple(_td_letter(G, x) for x in u), tuple(_s_letter(G, x) for x in s))


def sample_G(G: MillerGroup, sigma1: float, sigma2: float, rng: Union[int, random.Random, None] = None) -> Word:
    """Raw word ``u f`` with ``u ~ mu_sigma1`` on F(T, D) and ``f ~ mu_sigma2`` on F(S, q)."""
    rng = rng if isinstance(rng, random.Random) else random.Random(rng)
    u = _walk(rng, G.n + G.m, sigma1)
    f = _walk(rng, G.n + 1, sigma2)
    return tuple(_td_letter(G, x) for x in u) + tuple(_f_letter(G, x) for x in f)


def _count_hits(args):
    predicate, sampler, n, seed = args
    rng = random.Random(seed)
    return sum(1 for _ in range(n) if predicate(sampler(rng)))


def estimate_density(predicate: Callable, sampler: Callable[[random.Random], object], N: int,
                     seed: int = 0, workers: int = 1) -> Tuple[float, Tuple[float, float]]:
    """Hit fraction of ``predicate`` over ``N`` draws with a 95% Wilson interval.

    Worker ``i`` gets ``ceil``-balanced share of ``N`` and seed ``seed + i``;
    results depend on ``workers`` but not on scheduling.
    """
    if N < 1:
        raise ValueError("N must be positive")
    workers = max(1, min(workers, N))
    shares = [N // workers + (1 if i < N % workers else 0) for i in range(workers)]
    jobs = [(predicate, sampler, shares[i], seed + i) for i in range(workers)]
    if workers == 1:
        hits = _count_hits(jobs[0])
    else:
        with ProcessPoolExecutor(workers) as ex:
            hits = sum(ex.map(_count_hits, jobs))
    return hits / N, wilson_interval(hits, N)


def enumerate_reduced(m: int, k: int) -> Iterable[Word]:
    """All reduced words of length ``k`` over ``±1..±m``."""
    letters = [x for i in range(1, m + 1) for x in (i, -i)]

    def grow(prefix):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for x in letters:
            if not prefix or x != -prefix[-1]:
                prefix.append(x)
                yield from grow(prefix)
                prefix.pop()

    return grow([])
