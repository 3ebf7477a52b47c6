import random

import pytest
from hypothesis import given, settings, strategies as st

from hnnconj.fgword import (
    ALL_INTEGERS,
    NO_SOLUTION,
    Alphabet,
    ParseError,
    PowerSolution,
    apply_homomorphism,
    canonical_cyclic,
    conjugate,
    cyclic_reduce,
    free_conjugacy,
    invert,
    is_cyclically_reduced,
    maximal_root,
    multiply,
    power,
    reduce,
    solve_power_equation,
    solve_power_equation_brute,
)

letters = st.integers(min_value=-3, max_value=3).filter(bool)
words = st.lists(letters, max_size=14).map(reduce)
nonempty = words.filter(bool)


def test_parse_and_format():
    ab = Alphabet(["a", "b"])
    assert ab.parse("a b^-1 a^3") == (1, -2, 1, 1, 1)
    assert ab.parse("1") == ()
    assert ab.parse("a a^-1") == ()
    assert ab.format((1, -2)) == "a b^-1"
    assert ab.format(()) == "1"


def test_parse_error_position():
    ab = Alphabet(["a", "b"])
    with pytest.raises(ParseError) as e:
        ab.parse("a  c", line=3, column=5)
    assert (e.value.line, e.value.column) == (3, 8)
    with pytest.raises(ParseError):
        ab.parse("a^x")


def test_alphabet_rejects_duplicates():
    with pytest.raises(ValueError):
        Alphabet(["a", "a"])


@given(words, words)
def test_multiply_inverse(u, v):
    assert multiply(u, v, invert(v), invert(u)) == ()
    assert invert(invert(u)) == u


@given(words)
def test_cyclic_reduce(w):
    core, c = cyclic_reduce(w)
    assert is_cyclically_reduced(core)
    assert multiply(invert(c), core, c) == w


@given(words, words)
def test_free_conjugacy_finds_conjugator(g, x):
    u = conjugate(g, x)
    y = free_conjugacy(g, u)
    assert y is not None
    assert conjugate(g, y) == u
    assert canonical_cyclic(g) == canonical_cyclic(u)


@given(words, words)
def test_free_conjugacy_agrees_with_canonical_form(u, v):
    y = free_conjugacy(u, v)
    assert (y is not None) == (canonical_cyclic(u) == canonical_cyclic(v))
    if y is not None:
        assert conjugate(u, y) == v


@given(nonempty, st.integers(min_value=-4, max_value=4))
def test_power_matches_repeated_product(w, n):
    expected = multiply(*([w] * n)) if n >= 0 else multiply(*([invert(w)] * -n))
    assert power(w, n) == expected


@given(nonempty, st.integers(min_value=1, max_value=4))
def test_maximal_root(w, e):
    r, k = maximal_root(power(w, e))
    assert power(r, k) == power(w, e)
    r2, k2 = maximal_root(r)
    assert k2 == 1 and r2 == r


def test_maximal_root_examples():
    assert maximal_root((1, 2, 1, 2)) == ((1, 2), 2)
    assert maximal_root((-2, 1, 1, 2)) == ((-2, 1, 2), 2)
    with pytest.raises(ValueError):
        maximal_root(())


def test_apply_homomorphism():
    assert apply_homomorphism({1: (2, 2), 2: (1,)}, (1, -2)) == (2, 2, -1)
    with pytest.raises(KeyError):
        apply_homomorphism({1: ()}, (2,))


def test_power_equation_examples():
    x, y = (1,), (2,)
    assert solve_power_equation(x, invert(x), ()) == ALL_INTEGERS
    assert solve_power_equation(x, y, (1, 1, 2, 2)) == PowerSolution("unique", 2)
    assert solve_power_equation(x, y, (1, 2, 2)) == NO_SOLUTION
    assert solve_power_equation(x, y, (-1, -1, -1, -2, -2, -2)) == PowerSolution("unique", -3)
    assert solve_power_equation(x, y, ()) == PowerSolution("unique", 0)
    # commuting, non-inverse
    assert solve_power_equation(x, x, (1,) * 6) == PowerSolution("unique", 3)
    assert solve_power_equation(x, x, (1,) * 5) == NO_SOLUTION


@settings(max_examples=300, deadline=None)
@given(words, words, st.integers(min_value=-8, max_value=8))
def test_power_equation_against_brute_force(a, b, l):
    d = multiply(power(a, l), power(b, l)) if a or b else ()
    sol = solve_power_equation(a, b, d)
    assert sol == solve_power_equation_brute(a, b, d)
    if sol.tag == "unique":
        assert multiply(power(a, sol.l), power(b, sol.l)) == d
    else:
        assert sol.tag == "all" and multiply(a, b) == ()


@settings(max_examples=200, deadline=None)
@given(words, words, words)
def test_power_equation_random_rhs(a, b, d):
    assert solve_power_equation(a, b, d) == solve_power_equation_brute(a, b, d)


def test_power_equation_full_cancellation():
    # b close to a^-1 so that a^l b^l cancels heavily
    rng = random.Random(4)
    for _ in range(300):
        a = reduce(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 5)))
        if not a:
            continue
        c = reduce(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(0, 2)))
        b = multiply(invert(c), invert(a), c)
        for l in range(-6, 7):
            d = multiply(power(a, l), power(b, l))
            assert solve_power_equation(a, b, d) == solve_power_equation_brute(a, b, d)
