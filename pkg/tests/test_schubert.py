import itertools
import json

import pytest

from flagmorse import parabolic as pb
from flagmorse.rootsys import ConfigurationError, as_weyl_group, build_root_system, longest_element, reduced_words
from flagmorse.schubert import (
    CellSet,
    attraction_domain,
    closure_bruhat,
    closure_gamma,
    closure_reports,
    gamma,
    reports_to_json,
    stable_cells,
)


def subsets(r):
    for k in range(r + 1):
        yield from (frozenset(c) for c in itertools.combinations(range(r), k))


def subword_below(wg):
    below = {}
    for w in wg.elements:
        word = w.word
        below[w] = {wg.from_word(word[k] for k in range(len(word)) if m >> k & 1) for m in range(1 << len(word))}
    return below


@pytest.mark.parametrize("kind,rank", [("A", 2), ("A", 3), ("B", 2), ("B", 3), ("G", 2)])
def test_gamma_closure_equals_bruhat_closure(kind, rank):
    wg = as_weyl_group(build_root_system(kind, rank))
    w0 = longest_element(wg)
    below = subword_below(wg)
    for th in subsets(rank):
        H = pb.ChamberElement.with_zeros(wg.rs, th)
        cosets = pb.double_cosets(wg, H, ())
        for c in cosets:
            oracle = set()
            for d in cosets:
                if any(c.rep in below[s] for s in d.members):
                    oracle |= d.members
            ref = closure_bruhat(wg, H, c.rep)
            assert ref.members == oracle
            words = reduced_words(wg, wg.multiply(w0, c.rep))
            for word in words[:6]:
                assert closure_gamma(wg, H, c.rep, word).members == oracle


def test_attractor_and_repeller_closures():
    wg = as_weyl_group(build_root_system("A", 3))
    H = pb.ChamberElement.with_zeros(wg.rs, {1})
    assert len(closure_bruhat(wg, H, wg.identity)) == len(wg)
    w0 = longest_element(wg)
    assert closure_bruhat(wg, H, w0).members == stable_cells(wg, H, w0).members
    assert attraction_domain(wg, H, wg.identity).members == frozenset(wg.elements)


def test_closures_are_saturated_and_monotone():
    wg = as_weyl_group(build_root_system("A", 3))
    for th in subsets(3):
        H = pb.ChamberElement.with_zeros(wg.rs, th)
        reps = [c.rep for c in pb.double_cosets(wg, H, ())]
        closures = {w: closure_bruhat(wg, H, w) for w in reps}
        for u, v in itertools.product(reps, repeat=2):
            assert closures[u].is_saturated()
            if v in closures[u]:
                assert closures[v] <= closures[u]


def test_stable_cells_are_left_cosets():
    wg = as_weyl_group(build_root_system("A", 2))
    H = pb.ChamberElement.with_zeros(wg.rs, {0})
    cells = stable_cells(wg, H, wg.generators[1])
    assert cells.words() == ["s2", "s1s2"]
    assert cells.project({1}) == ["1", "s1"]


def test_gamma_rejects_bad_index_and_word():
    wg = as_weyl_group(build_root_system("A", 2))
    H = pb.ChamberElement.regular(wg.rs)
    with pytest.raises(ConfigurationError):
        gamma(5, CellSet(frozenset([wg.identity]), wg))
    with pytest.raises(ConfigurationError):
        closure_gamma(wg, H, wg.identity, (0, 0, 1))
    other = as_weyl_group(build_root_system("A", 3))
    with pytest.raises(ConfigurationError):
        closure_bruhat(wg, H, other.generators[2])


def test_gamma_is_monotone_and_idempotent():
    wg = as_weyl_group(build_root_system("A", 3))
    S = CellSet(frozenset([wg.from_word((0, 2))]), wg)
    for i in range(3):
        g = gamma(i, S)
        assert S <= g and gamma(i, g).members == g.members


def test_reports_json():
    wg = as_weyl_group(build_root_system("A", 2))
    reps = closure_reports(wg, pb.ChamberElement.regular(wg.rs))
    data = json.loads(reports_to_json(reps))
    assert len(data) == 6 and all(d["equal"] for d in data)
    assert data[0]["gamma_word"] == "s1s2s1"
