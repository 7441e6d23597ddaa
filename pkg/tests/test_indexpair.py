import pytest

from flagmorse.flowlab.flags import SplitElement
from flagmorse.flowlab.indexpair import RadiusError, index_pair
from flagmorse.rootsys import ConfigurationError


@pytest.mark.parametrize("k", [0, 1])
def test_plane_components(k):
    H = SplitElement.regular(2)
    w = H.weyl_group().elements[k]
    rep = index_pair(H, (), w, samples=200)
    assert rep.passed, rep.to_dict()
    assert {c.name for c in rep.conditions} == {"isolating", "exit_set_immediate", "exits_through_b0"}
    assert rep.model_error < 1e-9 and rep.injectivity_error < 1e-12


def test_saddle_in_three_dimensions():
    H = SplitElement.regular(3)
    w = H.weyl_group().generators[0]
    rep = index_pair(H, (), w, samples=150, seed=3)
    assert rep.passed and rep.n_plus == 1 and rep.n_minus == 2
    assert rep.decay_violations == 0
    d = rep.to_dict()
    assert d["passed"] and d["seed"] == 3


def test_partial_flag_points():
    H = SplitElement.regular(3)
    wg = H.weyl_group()
    rep = index_pair(H, {0}, wg.generators[1], samples=100)
    assert rep.passed


def test_non_point_component_is_rejected():
    H = SplitElement.with_zeros(3, {0})
    with pytest.raises(ConfigurationError):
        index_pair(H, (), H.weyl_group().identity)


def test_huge_radius_is_rejected():
    H = SplitElement.regular(3)
    with pytest.raises(RadiusError):
        index_pair(H, (), H.weyl_group().generators[0], radius=1e4, samples=60)
