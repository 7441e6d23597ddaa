import json

import numpy as np
import pytest

from flagmorse.bundlelab import (
    BaseSystem,
    BundlePoint,
    Cocycle,
    Scenario,
    UnsupportedCocycleError,
    adversarial_cocycle,
    bundle_flow,
    bundle_flow_frames,
    conformal_cocycle,
    constant_cocycle,
    in_levi,
    morse_components,
    run_scenario,
    verify_stable_sets,
    whitney_split_check,
)
from flagmorse.flowlab.flags import Flag, SplitElement, component_frames, coordinate_flag, distance, flow
from flagmorse.rootsys import ConfigurationError

H = SplitElement.with_zeros(3, {0})


def test_base_systems():
    c = BaseSystem.cycle(5)
    assert list(c.step(c.states)) == [1, 2, 3, 4, 0] and c.chain_transitive()
    r = BaseSystem.rotation(samples=200)
    assert not r.discrete and r.chain_transitive()
    assert not BaseSystem.rotation(0.5, 50).chain_transitive()
    with pytest.raises(ConfigurationError):
        BaseSystem("torus", 3)
    with pytest.raises(ConfigurationError):
        BaseSystem.cycle(0)
    assert BaseSystem.from_dict(r.to_dict()) == r


def test_levi_membership():
    rng = np.random.default_rng(0)
    coc = conformal_cocycle(H, BaseSystem.cycle(4), rng)
    assert all(in_levi(H, g) for g in coc.values)
    assert in_levi(H, np.diag(np.exp(0.7 * H.array)))
    flip = np.diag([-1.0, 1.0, 1.0]) @ np.diag(np.exp(H.array))
    assert not in_levi(H, flip)
    assert not in_levi(H, np.diag([2.0, 1.0, 0.5]))
    mixed = np.diag(np.exp(H.array))
    mixed[0, 2] = 0.1
    assert not in_levi(H, mixed)
    with pytest.raises(ConfigurationError):
        Cocycle("conformal", H, (mixed,))


def test_time_modes_are_not_mixed():
    rot = BaseSystem.rotation()
    rng = np.random.default_rng(0)
    with pytest.raises(UnsupportedCocycleError):
        conformal_cocycle(H, rot, rng)
    coc = conformal_cocycle(H, BaseSystem.cycle(rot.size), rng)
    with pytest.raises(UnsupportedCocycleError):
        morse_components(rot, coc, ())
    with pytest.raises(ConfigurationError):
        bundle_flow_frames(BaseSystem.cycle(3), coc, 1, np.zeros(1), np.eye(3)[None])
    with pytest.raises(ConfigurationError):
        bundle_flow_frames(BaseSystem.cycle(3), constant_cocycle(H), 0.5, np.zeros(1), np.eye(3)[None])


def test_components_of_product_bundles():
    base = BaseSystem.cycle(5)
    comps = morse_components(base, constant_cocycle(H), ())
    assert [c.rep for c in comps] == ["1", "s2", "s2s1"]
    assert comps[0].attractor and comps[-1].repeller
    assert all(c.fiber_dimension == 1 for c in comps)
    for c in comps:
        pt = BundlePoint(2, coordinate_flag(H, c.coset.rep, ()))
        assert c.contains(pt)
        assert sum(d.contains(pt) for d in comps) == 1
    reg = morse_components(base, constant_cocycle(SplitElement.regular(3)), ())
    assert len(reg) == 6 and all(c.is_section for c in reg)
    with pytest.raises(UnsupportedCocycleError):
        morse_components(base, adversarial_cocycle(H, base, np.random.default_rng(0)), ())


def test_constant_cocycle_is_the_flow():
    f = Flag.random(3, (1, 2), np.random.default_rng(1))
    out = bundle_flow(BaseSystem.cycle(4), constant_cocycle(H, dt=0.5), 3, BundlePoint(1, f))
    assert out.base_state == 0
    assert distance(out.flag, flow(H, 1.5, f)) < 1e-12
    rot = BaseSystem.rotation(0.25 ** 0.5 / 3, 40)
    out = bundle_flow(rot, constant_cocycle(H), 0.7, BundlePoint(0.1, f))
    assert out.base_state == pytest.approx((0.1 + 0.7 * rot.angle) % 1.0)
    assert distance(out.flag, flow(H, 0.7, f)) < 1e-12


def test_period_two_monodromy_fixes_components():
    rng = np.random.default_rng(5)
    base = BaseSystem.cycle(2)
    coc = conformal_cocycle(H, base, rng)
    comps = morse_components(base, coc, ())
    for k, c in enumerate(comps):
        # points of the fixed component: L_H images of the coordinate flag
        f = coordinate_flag(H, c.coset.rep, ())
        q, _ = np.linalg.qr(coc.values[1] @ f.frame)
        frames = np.stack([f.frame, q])
        _, moved = bundle_flow_frames(base, coc, 2, np.array([0, 1]), frames)
        assert (component_frames(H, (), frames, tol=1e-6) == k).all()
        assert (component_frames(H, (), moved, tol=1e-6) == k).all()


def test_stable_sets_over_bases():
    rng = np.random.default_rng(2)
    base = BaseSystem.cycle(3)
    rep = verify_stable_sets(base, conformal_cocycle(H, base, rng), (), samples=200, seed=4)
    assert rep.passed and rep.agreement == 1.0 and rep.not_converged == 0
    assert sum(rep.per_component.values()) == 200
    rot = verify_stable_sets(BaseSystem.rotation(), constant_cocycle(H, 0.5), {1}, samples=150, seed=1)
    assert rot.passed
    assert rot.to_dict()["passed"]


def test_whitney_split():
    rng = np.random.default_rng(3)
    base = BaseSystem.cycle(5)
    theta = ()
    coc = conformal_cocycle(H, base, rng)
    reps = [c.coset.rep for c in morse_components(base, coc, theta)]
    for w in reps:
        r = whitney_split_check(base, coc, theta, w)
        assert r.passed and r.max_mixing < 1e-8
    adv = adversarial_cocycle(H, base, rng)
    reports = [whitney_split_check(base, adv, theta, w) for w in reps]
    assert any(r.mixing_detected for r in reports)
    assert not all(r.passed for r in reports)
    with pytest.raises(UnsupportedCocycleError):
        whitney_split_check(BaseSystem.rotation(), constant_cocycle(H), theta, reps[0])


def test_scenarios_round_trip_and_run():
    rng = np.random.default_rng(6)
    base = BaseSystem.cycle(3)
    sc = Scenario(base, conformal_cocycle(H, base, rng), frozenset(), seed=2, samples=120)
    again = Scenario.from_json(sc.to_json())
    assert again.to_dict() == sc.to_dict()
    assert all(np.allclose(a, b) for a, b in zip(sc.cocycle.values, again.cocycle.values))
    out = run_scenario(again)
    assert out["passed"] and len(out["components"]) == 3
    adv = Scenario.from_dict({
        "base": {"kind": "cycle", "size": 5},
        "cocycle": {"kind": "adversarial", "H": list(H.diag)},
        "theta": [],
        "seed": 1,
    })
    res = run_scenario(adv)
    assert res["mixing_detected"] and not res["passed"]
    json.dumps(res)
