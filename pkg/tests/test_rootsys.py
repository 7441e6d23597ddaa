import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from flagmorse.rootsys import (
    ConfigurationError,
    RootSystem,
    WeylGroup,
    act,
    as_weyl_group,
    bruhat_leq,
    build_root_system,
    dot,
    longest_element,
    parse_word,
    reduced_words,
    reflect,
)

# degrees of the basic invariants; the Poincare polynomial of W is prod [d_i]_t
DEGREES = {
    ("A", 1): (2,),
    ("A", 2): (2, 3),
    ("A", 3): (2, 3, 4),
    ("B", 2): (2, 4),
    ("B", 3): (2, 4, 6),
    ("C", 3): (2, 4, 6),
    ("D", 4): (2, 4, 4, 6),
    ("G", 2): (2, 6),
}


def _poly_from_degrees(degrees):
    p = [1]
    for d in degrees:
        q = [0] * (len(p) + d - 1)
        for i, a in enumerate(p):
            for j in range(d):
                q[i + j] += a
        p = q
    return p


def _length_counts(wg):
    out = [0] * (longest_element(wg).length + 1)
    for w in wg.elements:
        out[w.length] += 1
    return out


@pytest.mark.parametrize("kind,rank", sorted(DEGREES))
def test_length_distribution_matches_degrees(kind, rank):
    wg = as_weyl_group(build_root_system(kind, rank))
    assert _length_counts(wg) == _poly_from_degrees(DEGREES[(kind, rank)])


@pytest.mark.parametrize("kind,rank", sorted(DEGREES))
def test_roots_closed_under_reflections(kind, rank):
    rs = build_root_system(kind, rank)
    roots = set(rs.roots)
    for a in rs.roots:
        for b in rs.roots:
            assert reflect(b, a) in roots
    assert len(rs.roots) == 2 * rs.num_positive
    assert all(rs.is_positive(k) for k in range(rs.num_positive))


def test_cartan_matrices():
    assert build_root_system("A", 2).cartan == ((2, -1), (-1, 2))
    g2 = build_root_system("G", 2).cartan
    assert sorted([g2[0][1], g2[1][0]]) == [-3, -1]


@pytest.mark.parametrize("kind,rank", [("A", 3), ("B", 3), ("G", 2)])
def test_length_is_number_of_inverted_positive_roots(kind, rank):
    wg = as_weyl_group(build_root_system(kind, rank))
    rs = wg.rs
    for w in wg.elements:
        inverted = sum(1 for k in range(rs.num_positive) if not rs.is_positive(w.perm[k]))
        assert inverted == w.length == len(w.word)


def test_type_a_lengths_are_inversions():
    from collections import Counter

    wg = as_weyl_group(build_root_system("A", 3))
    inv = Counter(sum(1 for i, j in itertools.combinations(range(4), 2) if p[i] > p[j])
                  for p in itertools.permutations(range(4)))
    assert Counter(w.length for w in wg.elements) == inv


@pytest.mark.parametrize("kind,rank", [("A", 2), ("A", 3), ("B", 2), ("G", 2)])
def test_bruhat_against_subword_oracle(kind, rank):
    wg = as_weyl_group(build_root_system(kind, rank))
    for w in wg.elements:
        word = w.word
        below = {wg.from_word(word[k] for k in range(len(word)) if m >> k & 1) for m in range(1 << len(word))}
        for u in wg.elements:
            assert bruhat_leq(wg, u, w) == (u in below)


def test_reduced_words_of_longest_a3():
    wg = as_weyl_group(build_root_system("A", 3))
    words = reduced_words(wg, longest_element(wg))
    assert len(words) == 16  # standard Young tableaux of staircase shape (3, 2, 1)
    assert all(wg.from_word(x) == longest_element(wg) for x in words)


def test_longest_element_sends_positive_to_negative():
    for kind, rank in DEGREES:
        wg = as_weyl_group(build_root_system(kind, rank))
        w0 = longest_element(wg)
        assert all(not wg.rs.is_positive(w0.perm[k]) for k in range(wg.rs.num_positive))


def test_act_preserves_inner_product():
    wg = as_weyl_group(build_root_system("B", 3))
    v = (Fraction(1), Fraction(2, 3), Fraction(-5))
    for w in wg.elements[:20]:
        assert dot(act(wg, w, v), act(wg, w, v)) == dot(v, v)


def test_json_round_trip():
    rs = build_root_system("C", 3)
    assert RootSystem.from_json(rs.to_json()) == rs


def test_as_weyl_group_caches():
    rs = build_root_system("A", 2)
    assert as_weyl_group(rs) is as_weyl_group(rs)
    wg = WeylGroup(rs)
    assert as_weyl_group(wg) is wg


@pytest.mark.parametrize("kind,rank", [("E", 6), ("A", 0), ("G", 3), ("D", 2), ("B", 1)])
def test_bad_labels(kind, rank):
    with pytest.raises(ConfigurationError):
        build_root_system(kind, rank)


def test_parse_word():
    assert parse_word("s1s2s1") == (0, 1, 0)
    assert parse_word("1") == ()
    assert parse_word("2,3") == (1, 2)
    with pytest.raises(ConfigurationError):
        parse_word("sx")


WG_B3 = as_weyl_group(build_root_system("B", 3))
words = st.lists(st.integers(0, 2), max_size=12)


@settings(max_examples=200, deadline=None)
@given(words, words, words)
def test_multiplication_is_associative(a, b, c):
    x, y, z = (WG_B3.from_word(t) for t in (a, b, c))
    m = WG_B3.multiply
    assert m(m(x, y), z) == m(x, m(y, z))


@settings(max_examples=200, deadline=None)
@given(words)
def test_length_properties(a):
    w = WG_B3.from_word(a)
    assert w.length <= len(a)
    assert w.length % 2 == len(a) % 2
    assert WG_B3.inverse(w).length == w.length
    assert WG_B3.multiply(w, WG_B3.inverse(w)) == WG_B3.identity
    assert bruhat_leq(WG_B3, WG_B3.identity, w)
    assert bruhat_leq(WG_B3, w, longest_element(WG_B3))
