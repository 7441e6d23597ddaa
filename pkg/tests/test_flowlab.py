import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flagmorse.flowlab import _kernels
from flagmorse.flowlab.flags import (
    Flag,
    FlowDegenerationError,
    FlowTimeoutError,
    SplitElement,
    UnclassifiableFlagError,
    classify,
    classify_frames,
    component_of,
    coordinate_flag,
    cosets_for,
    distance,
    embed_in_s,
    fixed_residual,
    flow,
    flow_frames,
    flow_frames_each,
    flow_to_limit,
    flow_to_limit_frames,
    random_frames,
    signature_of,
    stable_set_frames,
    theta_of,
    trace_trajectory,
)
from flagmorse.rootsys import ConfigurationError


def test_split_element_validation():
    for bad in ((-1.0, 1.0), (1.0, 0.5), (1.0, float("nan"), -1.0)):
        with pytest.raises(ConfigurationError):
            SplitElement(bad)
    H = SplitElement.from_root_values([2.0, 0.0, 1.0])
    assert np.allclose(H.root_values, [2.0, 0.0, 1.0])
    assert H.theta_h == {1} and H.blocks == ((0,), (1, 2), (3,))
    assert H.spectral_gap == pytest.approx(1.0)
    assert SplitElement.with_zeros(3, {0}).multiplicities == (2, 1)


def test_signature_round_trip():
    for n in (2, 3, 5):
        for mask in range(1 << (n - 1)):
            theta = frozenset(i for i in range(n - 1) if mask >> i & 1)
            assert theta_of(n, signature_of(n, theta)) == theta


def test_flag_validation_and_serialisation():
    rng = np.random.default_rng(1)
    f = Flag.random(4, (1, 3), rng)
    g = Flag.from_dict(f.to_dict())
    assert np.array_equal(f.frame, g.frame) and g.signature == (1, 3)
    with pytest.raises(ConfigurationError):
        Flag((1,), np.ones((2, 2)))
    with pytest.raises(ConfigurationError):
        Flag.from_matrix(np.zeros((3, 3)), (1, 2))
    with pytest.raises(ConfigurationError):
        Flag((2, 1), np.eye(3))
    with pytest.raises(ValueError):
        f.frame[0, 0] = 2.0


def test_two_dimensional_closed_form():
    """exp(tH) on lines in R^2: tan(angle to e1) scales by exp(-2t)."""
    H = SplitElement((1.0, -1.0))
    a = 1.1
    f = Flag.from_matrix(np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]]), (1,))
    for t in (0.0, 0.5, 2.0, 5.0, 40.0):
        expected = math.atan(math.exp(-2 * t) * math.tan(a))
        assert distance(flow(H, t, f), Flag.standard(2, (1,))) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
def test_flow_is_a_group_action(s, t, seed):
    H = SplitElement((0.7, 0.2, -0.1, -0.8))
    f = Flag.random(4, (1, 2, 3), np.random.default_rng(seed))
    assert distance(flow(H, s, flow(H, t, f)), flow(H, s + t, f)) < 1e-8


def test_large_times_and_bad_times():
    H = SplitElement.regular(3)
    frames = random_frames(3, 10, np.random.default_rng(0))
    out = flow_frames(H, 500.0, frames)
    assert np.allclose(np.abs(out[:, :, 0]), np.eye(3)[:, 0], atol=1e-12)
    with pytest.raises(FlowDegenerationError):
        flow_frames(H, float("inf"), frames)


def test_per_sample_times_match_scalar_flow():
    H = SplitElement.regular(4)
    frames = random_frames(4, 6, np.random.default_rng(2))
    times = np.linspace(-1.0, 3.0, 6)
    each = flow_frames_each(H, times, frames)
    for k, t in enumerate(times):
        ref = flow_frames(H, float(t), frames[k:k + 1])[0]
        assert np.allclose(each[k], ref, atol=1e-10)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba unavailable")
def test_backends_agree():
    rng = np.random.default_rng(3)
    frames = random_frames(5, 50, rng)
    factors = np.exp(np.linspace(0.5, -0.5, 5))
    a, ra = _kernels.scale_orthonormalize(frames, factors, 7, backend="numba")
    b, rb = _kernels.scale_orthonormalize(frames, factors, 7, backend="numpy")
    assert np.allclose(a, b, atol=1e-12) and np.allclose(ra, rb, atol=1e-12)
    m = rng.standard_normal((20, 4, 4))
    assert np.allclose(_kernels.orthonormalize(m, "numba")[0], _kernels.orthonormalize(m, "numpy")[0], atol=1e-12)
    with pytest.raises(ValueError):
        _kernels.orthonormalize(m, "cuda")


def test_environment_flag_disables_numba():
    env = dict(os.environ, FLAGMORSE_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c", "from flagmorse.flowlab import active_backend; print(active_backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"


@pytest.mark.parametrize("n,theta_h", [(3, ()), (3, (0,)), (4, ()), (4, (1,)), (4, (0, 2))])
def test_coordinate_flags_are_fixed(n, theta_h):
    H = SplitElement.with_zeros(n, theta_h)
    theta = frozenset({0}) if n == 4 else frozenset()
    wg = H.weyl_group()
    for w in wg.elements:
        f = coordinate_flag(H, w, theta)
        assert fixed_residual(H, f) < 1e-14
        assert w in component_of(H, theta, f)
        assert w in classify(H, theta, f)


@pytest.mark.parametrize("n,theta_h,theta", [(3, (), ()), (3, (1,), (0,)), (4, (), (1,)), (4, (0,), ())])
def test_classification_matches_limits(n, theta_h, theta):
    H = SplitElement.with_zeros(n, theta_h)
    rng = np.random.default_rng(7)
    cosets = cosets_for(H, theta)
    generic = random_frames(n, 200, rng)
    pred = classify_frames(H, theta, generic)
    _, limit = flow_to_limit_frames(H, theta, generic)
    assert (pred >= 0).all() and (pred == limit).all()

    # samples drawn from each stable set classify into it exactly; their
    # forward limits are only reliable up to roundoff amplified by the
    # unstable rates, so a small miss rate is tolerated there
    strat = np.concatenate([stable_set_frames(H, c.rep, 40, rng) for c in cosets])
    own = np.repeat(np.arange(len(cosets)), 40)
    assert (classify_frames(H, theta, strat) == own).all()
    _, limit = flow_to_limit_frames(H, theta, strat, tol=1e-3)
    assert (limit == own).mean() >= 0.99


def test_ambiguous_rank_is_unclassifiable():
    H = SplitElement.regular(2)
    eps = 1e-10
    v = np.array([eps, 1.0]) / math.hypot(eps, 1.0)
    f = Flag((1,), np.array([[v[0], -v[1]], [v[1], v[0]]]))
    assert classify_frames(H, (), f.frame[None])[0] == -1
    with pytest.raises(UnclassifiableFlagError):
        classify(H, (), f)
    exact = Flag((1,), np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert classify(H, (), exact).rep.word_str() == "s1"


def test_trajectory_record():
    H = SplitElement.regular(3)
    f = Flag.random(3, (1, 2), np.random.default_rng(5))
    limit, rec = trace_trajectory(H, (), f, tol=1e-9)
    assert rec.converged and rec.coset == "1" and rec.residuals[-1] < 1e-9
    assert rec.distances[-1] < 1e-12 and rec.steps == len(rec.times) - 1
    assert "wall_seconds" not in rec.to_dict()
    lim2, coset = flow_to_limit(H, (), f)
    assert coset.rep.word_str() == "1" and distance(lim2, Flag.standard(3, (1, 2))) < 1e-8
    with pytest.raises(FlowTimeoutError) as info:
        trace_trajectory(H, (), f, tol=1e-9, t_max=0.5)
    assert not info.value.trajectory.converged


def test_distance_is_a_metric_on_samples():
    rng = np.random.default_rng(9)
    fs = [Flag.random(4, (2,), rng) for _ in range(6)]
    for a in fs:
        assert distance(a, a) < 1e-7
        for b in fs:
            assert distance(a, b) == pytest.approx(distance(b, a), abs=1e-12)
            for c in fs:
                assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12
    # change of basis inside V_2 does not move the flag
    a = fs[0]
    rot = np.eye(4)
    rot[:2, :2] = [[0.6, -0.8], [0.8, 0.6]]
    assert distance(a, Flag((2,), a.frame @ rot)) < 1e-7


def test_embedding_in_symmetric_matrices():
    H = SplitElement.with_zeros(4, {1})
    f = Flag.random(4, signature_of(4, H.theta_h), np.random.default_rng(4))
    s = embed_in_s(H, f)
    assert np.allclose(s, s.T)
    assert np.allclose(np.sort(np.linalg.eigvalsh(s)), np.sort(H.array))
    with pytest.raises(ConfigurationError):
        embed_in_s(H, Flag.random(4, (1, 2, 3), np.random.default_rng(4)))
