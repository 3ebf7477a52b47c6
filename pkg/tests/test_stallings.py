import pytest

from hnnconj import stallings
from hnnconj.fgword import conjugate, invert, multiply
from hnnconj.stallings import SubgroupGraph, cardinality, coset_intersection

from oracles import reduced_words, subgroup_ball

a, b = (1,), (2,)

SUBGROUPS = [
    [(1, 1), (1, 2)],
    [(1,), (2, 1, -2)],
    [(1, 1, 1), (2, 2)],
    [(1, 2, -1, -2)],
]

WORDS6 = list(reduced_words(2, 6))


def test_membership_examples():
    G = stallings.build(2, [(1, 1), (1, 2)])
    expr = stallings.membership(G, (1, 1, 1, 2))
    assert expr is not None and G.evaluate(expr) == (1, 1, 1, 2)
    assert stallings.membership(G, a) is None


def test_coset_representative_example():
    G = stallings.build(2, [a])
    assert stallings.coset_representative(G, (1, 1, 1, 2)) == b


def test_conjugate_into_example():
    # x^-1 g x lands in <a> for g = b^-1 a b
    G = stallings.build(2, [a])
    x, h = stallings.conjugate_into(G, (-2, 1, 2))
    assert h == a and conjugate((-2, 1, 2), x) == a


def test_intersection_example():
    H = stallings.intersect(stallings.build(2, [a, (2, 2)]), stallings.build(2, [b]))
    assert H.basis() == [(2, 2)]


def test_coset_intersection_examples():
    A, B = stallings.build(2, [a]), stallings.build(2, [b])
    # a lies in <a> and in <b> a
    U = coset_intersection(A, (), B, a)
    assert cardinality(U).tag == "finite" and cardinality(U).elements == (a,)
    assert cardinality(coset_intersection(A, (), B, (1, 2))).tag == "empty"
    U = coset_intersection(A, b, stallings.build(2, [(1, 1)]), b)
    assert cardinality(U).tag == "infinite"


@pytest.mark.parametrize("gens", SUBGROUPS)
def test_membership_exhaustive(gens):
    G = stallings.build(2, gens)
    ball = subgroup_ball(gens, 6)
    for w in WORDS6:
        expr = stallings.membership(G, w)
        if expr is not None:
            assert G.evaluate(expr) == w
        assert (expr is not None) == (w in ball), w


@pytest.mark.parametrize("gens", SUBGROUPS)
def test_basis_generates_same_subgroup(gens):
    G = stallings.build(2, gens)
    H = SubgroupGraph(2, G.basis())
    for g in gens:
        assert stallings.contains(H, g)
    for h in G.basis():
        assert stallings.contains(G, h)


@pytest.mark.parametrize("gens", SUBGROUPS)
def test_coset_representatives_exhaustive(gens):
    G = stallings.build(2, gens)
    words = list(reduced_words(2, 4))
    reps = {w: stallings.coset_representative(G, w) for w in words}
    for w, r in reps.items():
        assert stallings.contains(G, multiply(w, invert(r)))
    for u in words:
        for v in words:
            same = stallings.contains(G, multiply(u, invert(v)))
            assert same == (reps[u] == reps[v])


@pytest.mark.parametrize("gens", SUBGROUPS)
def test_conjugate_into_exhaustive(gens):
    G = stallings.build(2, gens)
    xs = list(reduced_words(2, 4))
    for g in reduced_words(2, 5):
        hit = stallings.conjugate_into(G, g)
        brute = next((x for x in xs if stallings.contains(G, conjugate(g, x))), None)
        if hit is not None:
            x, h = hit
            assert conjugate(g, x) == h and stallings.contains(G, h)
        if brute is not None:
            assert hit is not None, g


@pytest.mark.parametrize("g1,g2", [(0, 1), (0, 2), (1, 2), (2, 3), (1, 3)])
def test_intersection_exhaustive(g1, g2):
    G1, G2 = stallings.build(2, SUBGROUPS[g1]), stallings.build(2, SUBGROUPS[g2])
    H = stallings.intersect(G1, G2)
    for w in WORDS6:
        both = stallings.contains(G1, w) and stallings.contains(G2, w)
        assert stallings.contains(H, w) == both


@pytest.mark.parametrize("h1,h2", [((), ()), ((1,), (2,)), ((2,), (2, 1)), ((1, 2), (-2, 1))])
def test_coset_intersection_exhaustive(h1, h2):
    G1, G2 = stallings.build(2, SUBGROUPS[0]), stallings.build(2, SUBGROUPS[2])
    U = coset_intersection(G1, h1, G2, h2)

    def in_union(w):
        return any(stallings.contains(c.subgroup, multiply(w, invert(c.rep))) for c in U)

    for w in WORDS6:
        both = stallings.contains(G1, multiply(w, invert(h1))) and stallings.contains(G2, multiply(w, invert(h2)))
        assert in_union(w) == both


def test_generalized_normalizer():
    A, B = stallings.build(2, [a]), stallings.build(2, [(1, 1)])
    assert not stallings.generalized_normalizer_member(A, B, b)
    assert stallings.generalized_normalizer_member(A, B, a)
    assert stallings.generalized_normalizer_member(A, B, (1, 1, 1))


def test_conjugated_graph():
    G = stallings.build(2, [a])
    Gb = G.conjugated(b)
    assert stallings.contains(Gb, (-2, 1, 2))
    assert not stallings.contains(Gb, a)
