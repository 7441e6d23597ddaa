import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from flagmorse import parabolic as pb
from flagmorse.rootsys import ConfigurationError, as_weyl_group, build_root_system

TYPES = [("A", 2), ("A", 3), ("B", 3), ("G", 2)]


def subsets(r):
    for k in range(r + 1):
        yield from (frozenset(c) for c in itertools.combinations(range(r), k))


def generated(wg, gens):
    """Subgroup generated by simple reflections, by closure."""
    out = {wg.identity}
    frontier = [wg.identity]
    while frontier:
        nxt = []
        for x in frontier:
            for i in gens:
                y = wg.multiply(x, wg.generators[i])
                if y not in out:
                    out.add(y)
                    nxt.append(y)
        frontier = nxt
    return out


@pytest.mark.parametrize("kind,rank", TYPES)
def test_double_cosets_match_brute_force(kind, rank):
    wg = as_weyl_group(build_root_system(kind, rank))
    for th, t in itertools.product(subsets(rank), repeat=2):
        H = pb.ChamberElement.with_zeros(wg.rs, th)
        left, right = generated(wg, th), generated(wg, t)
        oracle = {frozenset(wg.multiply(wg.multiply(a, w), b) for a in left for b in right) for w in wg.elements}
        cosets = pb.double_cosets(wg, H, t)
        assert {c.members for c in cosets} == oracle
        for c in cosets:
            assert c.rep == min(c.members, key=lambda x: (x.length, x.word))
            w = c.rep
            conj = {wg.multiply(wg.multiply(w, b), wg.inverse(w)) for b in right}
            assert c.size * len(left & conj) == len(left) * len(right)


@pytest.mark.parametrize("kind,rank", TYPES)
def test_profile_sums_to_flag_dimension(kind, rank):
    wg = as_weyl_group(build_root_system(kind, rank))
    for th, t in itertools.product(subsets(rank), repeat=2):
        H = pb.ChamberElement.with_zeros(wg.rs, th)
        dim = pb.flag_dimension(wg.rs, t)
        for row in pb.dimension_table(wg, H, t):
            p = row.profile
            assert p.n_plus + p.n_zero + p.n_minus == dim
            assert len(p.classified) == dim


def test_regular_profile_is_length():
    wg = as_weyl_group(build_root_system("A", 3))
    H = pb.ChamberElement.regular(wg.rs)
    for w in wg.elements:
        p = pb.sign_profile(wg, H, (), w)
        assert (p.n_plus, p.n_zero) == (w.length, 0)


def test_attractor_and_repeller():
    wg = as_weyl_group(build_root_system("A", 3))
    H = pb.ChamberElement.with_zeros(wg.rs, {1})
    rows = pb.dimension_table(wg, H, ())
    assert rows[0].coset.rep == wg.identity and rows[0].profile.n_plus == 0
    rep = [r for r in rows if wg.elements[wg.longest] in r.coset][0]
    assert rep.profile.n_minus == 0


def test_flag_type_parsing():
    rs = build_root_system("A", 3)
    assert pb.flag_type(rs, ["a1", "alpha3", 2]) == {0, 1, 2}
    assert pb.type_names({2, 0}) == ["a1", "a3"]
    for bad in (["a4"], ["b1"], ["a0"]):
        with pytest.raises(ConfigurationError):
            pb.flag_type(rs, bad)


def test_chamber_validation():
    rs = build_root_system("A", 2)
    with pytest.raises(ConfigurationError):
        pb.ChamberElement.from_values(rs, [1, -1])
    with pytest.raises(ConfigurationError):
        pb.ChamberElement.from_values(rs, [1])
    H = pb.ChamberElement.from_values(rs, [Fraction(1, 2), 0])
    assert H.theta_h == {1} and not H.is_regular
    for i, a in enumerate(rs.simple_roots):
        assert H.root_value(a) == H.values[i]


def test_fix_type_identity_inside_levi():
    wg = as_weyl_group(build_root_system("A", 3))
    H = pb.ChamberElement.with_zeros(wg.rs, {0, 1})
    fx = pb.fix_flag_type(wg, H, {0}, wg.identity)
    assert fx.delta == {0, 1} and fx.inner_type == {0}
    assert pb.subsystem_flag_dimension(wg.rs, fx.delta, fx.inner_type) == 2


def test_table_serialisations():
    wg = as_weyl_group(build_root_system("A", 2))
    rows = pb.dimension_table(wg, pb.ChamberElement.with_zeros(wg.rs, {0}), ())
    recs = json.loads(pb.table_to_json(rows))
    assert [r["rep"] for r in recs] == ["1", "s2", "s2s1"]
    assert [r["n_plus"] for r in recs] == [0, 1, 2]
    csv_text = pb.table_to_csv(rows)
    assert csv_text.splitlines()[0].split(",") == list(pb.TABLE_COLUMNS)


WG_A3 = as_weyl_group(build_root_system("A", 3))
WG_B3 = as_weyl_group(build_root_system("B", 3))


@settings(max_examples=150, deadline=None)
@given(
    st.sampled_from([WG_A3, WG_B3]),
    st.lists(st.integers(0, 3), min_size=3, max_size=3),
    st.sets(st.integers(0, 2)),
    st.integers(0, 47),
    st.data(),
)
def test_profile_constant_on_double_cosets(wg, vals, theta, k, data):
    H = pb.ChamberElement.from_values(wg.rs, vals)
    w = wg.elements[k % len(wg)]
    left = sorted(pb.weyl_subgroup(wg, H.theta_h), key=lambda x: x.word)
    right = sorted(pb.weyl_subgroup(wg, theta), key=lambda x: x.word)
    a = data.draw(st.sampled_from(left))
    b = data.draw(st.sampled_from(right))
    p = pb.sign_profile(wg, H, theta, w)
    q = pb.sign_profile(wg, H, theta, wg.multiply(wg.multiply(a, w), b))
    assert (p.n_plus, p.n_zero, p.n_minus) == (q.n_plus, q.n_zero, q.n_minus)
