import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flagmorse import parabolic as pb
from flagmorse.flowlab.flags import Flag, SplitElement, classify, distance, flow, flow_frames
from flagmorse.flowlab.linearization import (
    chart_coordinates,
    lin_chart,
    linearized_eigenvalues,
    psi,
    psi_frames,
    transport,
)
from flagmorse.rootsys import ConfigurationError

H4 = SplitElement.with_zeros(4, {1})
WG4 = H4.weyl_group()


def block_rotation(H, rng):
    g = np.zeros((H.n, H.n))
    for block in H.blocks:
        q, _ = np.linalg.qr(rng.standard_normal((len(block), len(block))))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1
        g[np.ix_(block, block)] = q
    return g


def test_chart_matches_sign_profile_and_exact_rates():
    Hc = H4.chamber()
    rs = WG4.rs
    for theta in (frozenset(), frozenset({0}), frozenset({2})):
        for w in WG4.elements:
            ch = lin_chart(H4, theta, w)
            p = pb.sign_profile(WG4, Hc, theta, w)
            assert (ch.n_plus, len(ch.fixed), ch.n_minus) == (p.n_plus, p.n_zero, p.n_minus)
            exact = sorted(float(Hc.root_value(rs.roots[w.perm[k]])) for k, s in p.classified if s)
            assert np.allclose(sorted(ch.rates), exact)
            assert (ch.rates[: ch.n_minus] < 0).all() and (ch.rates[ch.n_minus:] > 0).all()


def test_repeller_chart_in_the_plane():
    H = SplitElement.regular(2)
    ch = lin_chart(H, (), H.weyl_group().generators[0])
    f = Flag((1,), psi_frames(ch, [[0.3]])[0])
    v = np.array([0.3, 1.0]) / np.hypot(0.3, 1.0)
    assert abs(abs(f.frame[:, 0] @ v) - 1) < 1e-14


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 23), st.sampled_from([(), (0,), (2,), (0, 2)]), st.data())
def test_chart_round_trip_and_exact_linearity(k, theta, data):
    w = WG4.elements[k]
    ch = lin_chart(H4, theta, w)
    m = len(ch.chart_indices)
    c = np.array(data.draw(st.lists(st.floats(-0.5, 0.5), min_size=m, max_size=m)))
    frames = psi_frames(ch, c[None])
    assert np.allclose(chart_coordinates(ch, frames)[0], c, atol=1e-12)
    t = data.draw(st.floats(-0.5, 0.5))
    moved = chart_coordinates(ch, flow_frames(H4, t, frames))[0]
    assert np.allclose(moved, c * np.exp(t * ch.rates), atol=1e-10)


def test_stable_directions_lie_in_the_stable_set():
    rng = np.random.default_rng(0)
    for theta in ((), (0,)):
        for w in WG4.elements:
            ch = lin_chart(H4, theta, w)
            c = np.zeros((20, len(ch.chart_indices)))
            c[:, : ch.n_minus] = rng.uniform(-0.3, 0.3, (20, ch.n_minus))
            frames = psi_frames(ch, c)
            for fr in frames:
                assert w in classify(H4, theta, Flag(ch.signature, fr))


def test_outside_big_cell_is_nan():
    H = SplitElement.regular(2)
    ch = lin_chart(H, (), H.weyl_group().identity)
    out = chart_coordinates(ch, np.array([[[0.0, 1.0], [1.0, 0.0]]]))
    assert np.isnan(out).all()


def test_transport_and_equivariance():
    rng = np.random.default_rng(11)
    theta = frozenset({0})
    for w in WG4.elements[:12]:
        ch = lin_chart(H4, theta, w)
        assert np.allclose(transport(ch, ch.base_point()), np.eye(4))
        g0 = block_rotation(H4, rng)
        point = Flag(ch.signature, g0 @ ch.base_frame)
        g = transport(ch, point)
        hb = H4.block_index()
        assert np.abs(g[hb[:, None] != hb[None, :]]).max() == 0.0
        assert np.allclose(g.T @ g, np.eye(4))
        assert all(np.linalg.det(g[np.ix_(b, b)]) > 0 for b in H4.blocks)
        assert distance(Flag(ch.signature, g @ ch.base_frame), point) < 1e-12
        c = rng.uniform(-0.2, 0.2, len(ch.chart_indices))
        for t in (0.3, -0.4):
            lhs = flow(H4, t, psi(ch, point, c, g))
            rhs = psi(ch, point, c * np.exp(t * ch.rates), g)
            assert distance(lhs, rhs) < 1e-10


def test_psi_rejects_wrong_inputs():
    ch = lin_chart(H4, (), WG4.generators[0])
    other = lin_chart(H4, (), WG4.generators[1])
    with pytest.raises(ConfigurationError):
        transport(ch, other.base_point())
    with pytest.raises(ConfigurationError):
        psi(ch, ch.base_point(), np.zeros(2))
    with pytest.raises(ConfigurationError):
        psi(ch, ch.base_point(), np.zeros(len(ch.chart_indices)), g=np.eye(4)[::-1].copy())


@pytest.mark.parametrize("theta_h", [(), (0,), (1,), (0, 1)])
def test_linearized_eigenvalues_n3(theta_h):
    H = SplitElement.with_zeros(3, theta_h) if theta_h else SplitElement.regular(3)
    wg = H.weyl_group()
    for theta in ((), (0,), (1,)):
        for w in wg.elements:
            rep = linearized_eigenvalues(H, theta, w)
            prof = pb.sign_profile(wg, H.chamber(), theta, w)
            assert rep.max_error < 1e-6
            assert (rep.n_plus, rep.n_zero, rep.n_minus) == (prof.n_plus, prof.n_zero, prof.n_minus)
            assert rep.multiset == rep.measured
