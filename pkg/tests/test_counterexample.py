import itertools

import numpy as np
from hypothesis import given, settings, strategies as st

from flagmorse.flowlab.counterexample import bracket, isotropy_invariance, sl3_counterexample, unit


def test_reproduction():
    rep = sl3_counterexample()
    assert rep.ok and bool(rep)
    assert rep.values["w_inverse_H"] == [-1, 2, -1]
    assert rep.values["alpha_plus_beta_of_w_inverse_H"] == 3
    assert np.array_equal(np.array(rep.values["bracket"]), unit(3, 2, 3))
    assert rep.to_dict()["ok"]


def test_bracket_of_units():
    for n in (3, 4):
        for i, j, k, l in itertools.product(range(1, n + 1), repeat=4):
            expected = (j == k) * unit(n, i, l) - (l == i) * unit(n, k, j)
            assert np.array_equal(bracket(unit(n, i, j), unit(n, k, l)), expected)


@settings(max_examples=100, deadline=None)
@given(st.permutations(range(4)))
def test_regular_h_is_always_invariant(perm):
    assert isotropy_invariance([3, 1, -1, -3], perm)


@settings(max_examples=100, deadline=None)
@given(st.sets(st.integers(0, 2)), st.data())
def test_identity_with_theta_in_theta_h(theta_h, data):
    h = [0.0]
    for i in range(3):
        h.append(h[-1] - (0.0 if i in theta_h else 1.0))
    theta = data.draw(st.sets(st.sampled_from(sorted(theta_h)))) if theta_h else set()
    assert isotropy_invariance(h, (0, 1, 2, 3), theta)


def test_failure_has_witnesses():
    rep = isotropy_invariance([-1, -1, 2], (0, 2, 1))
    assert not rep
    assert ((0, 2), (1, 0)) in rep.witnesses
