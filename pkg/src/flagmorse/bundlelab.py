"""Product flag bundles X x F_Theta over small base systems.

The base is either a finite cycle (discrete time) or an irrational rotation
sampled on finitely many angles (continuous time, constant cocycle only).
A cocycle assigns to each base state an element of SL(n, R) acting on the
fiber.  Constant cocycles exp(H dt) and conformal ones with values in
L_H = K_H x exp(R H) keep the characteristic element equal to the declared H,
so the Morse components are X x fix(H, w) and the stable sets are the
fiberwise stable sets.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import parabolic as pb
from .flowlab import _kernels
from .flowlab.flags import (
    Flag,
    SplitElement,
    classify_frames,
    component_frames,
    cosets_for,
    fixed_residual_frames,
    flow_frames,
    random_frames,
    signature_of,
    stable_set_frames,
)
from .flowlab.linearization import lin_chart
from .rootsys import ConfigurationError


class UnsupportedCocycleError(ConfigurationError):
    pass


# --- base systems -----------------------------------------------------------

@dataclass(frozen=True)
class BaseSystem:
    """``cycle``: states 0..p-1 with x -> x+1; ``rotation``: angles k*angle mod 1."""

    kind: str
    size: int
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cycle", "rotation"):
            raise ConfigurationError(f"unknown base kind {self.kind!r}")
        if self.size < 1:
            raise ConfigurationError("base needs at least one state")
        if self.kind == "rotation" and not 0 < self.angle < 1:
            raise ConfigurationError("rotation angle is a fraction of the circle in (0, 1)")

    @classmethod
    def cycle(cls, p: int) -> "BaseSystem":
        return cls("cycle", p)

    @classmethod
    def point(cls) -> "BaseSystem":
        return cls("cycle", 1)

    @classmethod
    def rotation(cls, angle: float = (math.sqrt(5) - 1) / 2, samples: int = 64) -> "BaseSystem":
        return cls("rotation", samples, angle)

    @property
    def discrete(self) -> bool:
        return self.kind == "cycle"

    @property
    def states(self) -> np.ndarray:
        if self.kind == "cycle":
            return np.arange(self.size)
        return np.mod(np.arange(self.size) * self.angle, 1.0)

    def step(self, x, t=1):
        """Advance base states by t (steps for a cycle, time for a rotation)."""
        if self.kind == "cycle":
            return np.mod(np.asarray(x) + int(t), self.size)
        return np.mod(np.asarray(x, dtype=float) + t * self.angle, 1.0)

    def chain_transitive(self, resolution: float | None = None) -> bool:
        """A cycle is a single orbit; a rotation must fill the circle to ``resolution``."""
        if self.kind == "cycle":
            return True
        s = np.sort(self.states)
        gaps = np.diff(np.concatenate([s, [s[0] + 1.0]]))
        return bool(gaps.max() <= (resolution if resolution is not None else 3.0 / self.size))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "size": self.size}
        if self.kind == "rotation":
            d["angle"] = self.angle
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BaseSystem":
        return cls(d["kind"], int(d["size"]), float(d.get("angle", 0.0)))


# --- cocycles ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Cocycle:
    """Per-state fiber maps; ``kind`` is constant, conformal or adversarial.

    ``values[x]`` is the matrix applied on one step from state x (cycles).
    A constant cocycle acts by exp(tH) for any real t.
    """

    kind: str
    H: SplitElement
    values: tuple[np.ndarray, ...] = ()
    dt: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "conformal", "adversarial"):
            raise ConfigurationError(f"unknown cocycle kind {self.kind!r}")
        if self.kind == "conformal":
            for g in self.values:
                if not in_levi(self.H, g):
                    raise ConfigurationError("conformal cocycle value is not in L_H (block orthogonal times exp(cH))")

    def value(self, x: int) -> np.ndarray:
        if self.kind == "constant":
            return np.diag(np.exp(self.dt * self.H.array))
        return self.values[int(x) % len(self.values)]

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "H": list(self.H.diag), "dt": self.dt}
        if self.values:
            d["values"] = [np.asarray(v).reshape(-1).tolist() for v in self.values]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Cocycle":
        H = SplitElement(tuple(d["H"]))
        n = H.n
        vals = tuple(np.asarray(v, dtype=float).reshape(n, n) for v in d.get("values", ()))
        return cls(d["kind"], H, vals, float(d.get("dt", 1.0)))


def in_levi(H: SplitElement, g: np.ndarray, tol: float = 1e-9) -> bool:
    """g = k exp(cH) with k block orthogonal and c > 0 real."""
    g = np.asarray(g, dtype=float)
    hb = H.block_index()
    off = hb[:, None] != hb[None, :]
    if np.abs(g[off]).max(initial=0.0) > tol:
        return False
    scales = []
    for block in H.blocks:
        sub = g[np.ix_(block, block)]
        gram = sub.T @ sub
        s2 = gram[0, 0]
        if s2 <= 0 or np.abs(gram - s2 * np.eye(len(block))).max() > tol * max(1.0, s2):
            return False
        if np.linalg.det(sub) <= 0:
            return False
        scales.append((math.log(s2) / 2, H.diag[block[0]]))
    logs = np.array([a for a, _ in scales])
    hs = np.array([b for _, b in scales])
    if len(scales) == 1:
        return abs(logs[0]) < tol
    c = float(np.dot(logs, hs) / np.dot(hs, hs))
    return c > 0 and np.abs(logs - c * hs).max() < 1e-7


def _block_rotation(H: SplitElement, rng: np.random.Generator) -> np.ndarray:
    n = H.n
    k = np.zeros((n, n))
    for block in H.blocks:
        q, r = np.linalg.qr(rng.standard_normal((len(block), len(block))))
        q = q * np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1
        k[np.ix_(block, block)] = q
    return k


def constant_cocycle(H: SplitElement, dt: float = 1.0) -> Cocycle:
    return Cocycle("constant", H, (), dt)


def conformal_cocycle(H: SplitElement, base: BaseSystem, rng: np.random.Generator,
                      scale: tuple[float, float] = (0.5, 1.5)) -> Cocycle:
    """Random values k_x exp(c_x H), k_x in SO of each H-block, c_x uniform in ``scale``."""
    if not base.discrete:
        raise UnsupportedCocycleError("conformal cocycles need a discrete-time base")
    vals = []
    for _ in range(base.size):
        c = rng.uniform(*scale)
        vals.append(_block_rotation(H, rng) @ np.diag(np.exp(c * H.array)))
    return Cocycle("conformal", H, tuple(vals))


def adversarial_cocycle(H: SplitElement, base: BaseSystem, rng: np.random.Generator, eps: float = 0.5) -> Cocycle:
    """exp(H) times a unipotent coupling between distinct H-blocks (not in L_H)."""
    if not base.discrete:
        raise UnsupportedCocycleError("adversarial cocycles need a discrete-time base")
    hb = H.block_index()
    couple = (hb[:, None] < hb[None, :]).astype(float)
    if not couple.any():
        raise ConfigurationError("H has a single block; there is nothing to couple")
    vals = []
    for _ in range(base.size):
        u = np.eye(H.n) + eps * couple * rng.uniform(0.5, 1.0, (H.n, H.n))
        vals.append(np.diag(np.exp(H.array)) @ u)
    return Cocycle("adversarial", H, tuple(vals))


# --- flow -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BundlePoint:
    base_state: float
    flag: Flag


def _check_modes(base: BaseSystem, coc: Cocycle) -> None:
    if not base.discrete and coc.kind != "constant":
        raise UnsupportedCocycleError("continuous-time bases accept only the constant cocycle")
    if base.discrete and coc.kind != "constant" and len(coc.values) != base.size:
        raise ConfigurationError(f"cocycle has {len(coc.values)} values for {base.size} base states")


def bundle_flow_frames(base: BaseSystem, coc: Cocycle, t, states: np.ndarray, frames: np.ndarray):
    """Advance a batch of bundle points; returns (states, frames)."""
    _check_modes(base, coc)
    states = np.asarray(states)
    frames = np.array(frames, dtype=float)
    if not base.discrete:
        return base.step(states, t), flow_frames(coc.H, coc.dt * float(t), frames)
    steps = int(t)
    if steps != t or steps < 0:
        raise ConfigurationError("discrete-time bases advance by a nonnegative whole number of steps")
    if coc.kind == "constant":
        return base.step(states, steps), flow_frames(coc.H, coc.dt * steps, frames)
    states = states.astype(int)
    for _ in range(steps):
        frames = _apply_values(coc, states, frames)
        states = base.step(states, 1)
    return states, frames


def _apply_values(coc: Cocycle, states: np.ndarray, frames: np.ndarray) -> np.ndarray:
    out = np.empty_like(frames)
    for x in np.unique(states):
        sel = states == x
        q, rmin = _kernels.orthonormalize(coc.value(x)[None] @ frames[sel])
        if not (rmin > 1e-13).all():
            raise ArithmeticError(f"fiber map at state {x} lost rank; rescale the cocycle")
        out[sel] = q
    return out


def bundle_flow(base: BaseSystem, coc: Cocycle, t, pt: BundlePoint) -> BundlePoint:
    s, f = bundle_flow_frames(base, coc, t, np.array([pt.base_state]), pt.flag.frame[None])
    return BundlePoint(s[0].item(), Flag(pt.flag.signature, f[0]))


# --- Morse components -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MorseComponent:
    rep: str
    coset: pb.DoubleCoset
    index: int
    fiber_dimension: int
    attractor: bool
    repeller: bool
    contains: Callable[[BundlePoint], bool] = field(repr=False)

    @property
    def is_section(self) -> bool:
        return self.fiber_dimension == 0

    def to_dict(self) -> dict:
        return {
            "rep": self.rep,
            "fiber_dimension": self.fiber_dimension,
            "attractor": self.attractor,
            "repeller": self.repeller,
            "section": self.is_section,
        }


def _supported(coc: Cocycle) -> None:
    if coc.kind not in ("constant", "conformal"):
        raise UnsupportedCocycleError(f"Morse components need a constant or conformal cocycle, not {coc.kind!r}")


def morse_components(base: BaseSystem, coc: Cocycle, theta: Iterable[int]) -> list[MorseComponent]:
    """The components X x fix(H, w), one per double coset."""
    _supported(coc)
    _check_modes(base, coc)
    theta = frozenset(theta)
    H = coc.H
    wg = H.weyl_group()
    cosets = cosets_for(H, theta)
    w0 = wg.elements[wg.longest]
    out = []
    for k, c in enumerate(cosets):
        prof = pb.sign_profile(wg, H.chamber(), theta, c.rep)

        def member(pt: BundlePoint, k=k) -> bool:
            return int(component_frames(H, theta, pt.flag.frame[None], tol=1e-6)[0]) == k

        out.append(MorseComponent(
            c.rep.word_str(), c, k, prof.n_zero, c.rep == wg.identity, w0 in c, member,
        ))
    return out


# --- stable sets ------------------------------------------------------------

@dataclass
class StableSetReport:
    samples: int
    classifiable: int
    agreed: int
    unclassifiable: int
    not_converged: int
    per_component: dict[str, int]
    failures: list[dict]
    seed: int
    horizon: int

    @property
    def agreement(self) -> float:
        return self.agreed / self.classifiable if self.classifiable else 1.0

    @property
    def passed(self) -> bool:
        return self.classifiable > 0 and self.agreed == self.classifiable

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "classifiable": self.classifiable,
            "agreed": self.agreed,
            "agreement": self.agreement,
            "unclassifiable": self.unclassifiable,
            "not_converged": self.not_converged,
            "per_component": self.per_component,
            "failures": self.failures,
            "seed": self.seed,
            "horizon": self.horizon,
            "passed": self.passed,
        }


def sample_bundle(base: BaseSystem, H: SplitElement, theta: Iterable[int], count: int,
                  rng: np.random.Generator, stratified: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Base states and frames: Haar flags mixed with flags drawn from each stable set."""
    theta = frozenset(theta)
    states = rng.choice(base.states, size=count)
    n_strat = int(round(stratified * count))
    frames = [random_frames(H.n, count - n_strat, rng)]
    cosets = cosets_for(H, theta)
    picks = rng.integers(0, len(cosets), n_strat)
    for k in range(len(cosets)):
        m = int((picks == k).sum())
        if m:
            frames.append(stable_set_frames(H, cosets[k].rep, m, rng))
    return states, np.concatenate(frames)


def verify_stable_sets(
    base: BaseSystem,
    coc: Cocycle,
    theta: Iterable[int],
    samples: int = 500,
    horizon: int = 400,
    seed: int = 0,
    tol: float = 1e-5,
) -> StableSetReport:
    """Forward limit component of sampled bundle points against the fiberwise predictor.

    Each sample is frozen as soon as it is within ``tol`` of a fixed flag,
    before roundoff can push a point on a lower stable set off it.
    """
    _supported(coc)
    _check_modes(base, coc)
    theta = frozenset(theta)
    H = coc.H
    rng = np.random.default_rng(seed)
    states, frames = sample_bundle(base, H, theta, samples, rng)
    sig = signature_of(H.n, theta)
    predicted = classify_frames(H, theta, frames)
    active = fixed_residual_frames(H, sig, frames) >= tol
    step = 1 if base.discrete else 1.0
    for _ in range(horizon):
        idx = np.nonzero(active)[0]
        if not len(idx):
            break
        s, f = bundle_flow_frames(base, coc, step, states[idx], frames[idx])
        states[idx], frames[idx] = s, f
        active[idx] = fixed_residual_frames(H, sig, f) >= tol
    limit = component_frames(H, theta, frames)
    limit[active] = -1
    cosets = cosets_for(H, theta)
    ok = predicted >= 0
    agreed = ok & (limit == predicted)
    fails = np.nonzero(ok & ~agreed)[0]
    per = {c.rep.word_str(): int((limit == k).sum()) for k, c in enumerate(cosets)}
    failures = [
        {
            "sample": int(i),
            "predicted": cosets[predicted[i]].rep.word_str(),
            "limit": cosets[limit[i]].rep.word_str() if limit[i] >= 0 else None,
        }
        for i in fails[:20]
    ]
    return StableSetReport(
        samples, int(ok.sum()), int(agreed.sum()), int((~ok).sum()), int(active.sum()), per, failures, seed, horizon,
    )


# --- Whitney split ----------------------------------------------------------

@dataclass
class WhitneyReport:
    w: str
    kind: str
    steps: int
    max_mixing: float
    stable_rate_ok: bool
    unstable_rate_ok: bool
    mixing_tol: float = 1e-8

    @property
    def mixing_detected(self) -> bool:
        return not self.max_mixing < self.mixing_tol

    @property
    def passed(self) -> bool:
        return not self.mixing_detected and self.stable_rate_ok and self.unstable_rate_ok

    def to_dict(self) -> dict:
        return {
            "w": self.w,
            "cocycle": self.kind,
            "steps": self.steps,
            "max_mixing": self.max_mixing,
            "mixing_detected": self.mixing_detected,
            "stable_rate_ok": self.stable_rate_ok,
            "unstable_rate_ok": self.unstable_rate_ok,
            "passed": self.passed,
        }


def whitney_split_check(base: BaseSystem, coc: Cocycle, theta: Iterable[int], w, steps: int | None = None) -> WhitneyReport:
    """Evolve the chart vectors of V^- and V^+ by Ad of the cocycle and measure leakage.

    Stable vectors must stay in n^-_H and unstable ones in n^+_H; the
    per-step leakage (relative Frobenius norm) is the mixing.  Per-step norm
    ratios are compared with exp(-c a_s) and exp(c a_u), where c is the
    H-exponent of the step and a_s, a_u the smallest stable/unstable rates.
    """
    _check_modes(base, coc)
    if not base.discrete:
        raise UnsupportedCocycleError("the Whitney check runs on discrete-time bases")
    H = coc.H
    chart = lin_chart(H, theta, w)
    n = H.n
    hb = H.block_index()
    lower = hb[:, None] > hb[None, :]
    upper = hb[:, None] < hb[None, :]
    steps = steps if steps is not None else max(20, 4 * base.size)
    a_s = float(np.abs(chart.rates[: chart.n_minus]).min()) if chart.n_minus else 0.0
    a_u = float(chart.rates[chart.n_minus:].min()) if chart.n_plus else 0.0
    vecs = [(chart.coords[k].matrix(n), lower, "s") for k in chart.stable]
    vecs += [(chart.coords[k].matrix(n), upper, "u") for k in chart.unstable]
    mixing = 0.0
    s_ok = u_ok = True
    for y0, mask, side in vecs:
        y = y0
        x = 0
        for _ in range(steps):
            g = coc.value(x)
            c = _h_exponent(H, g)
            z = g @ y @ np.linalg.inv(g)
            nz = np.linalg.norm(z)
            leak = np.linalg.norm(np.where(mask, 0.0, z)) / nz
            mixing = max(mixing, float(leak))
            ratio = np.linalg.norm(np.where(mask, z, 0.0)) / np.linalg.norm(y)
            if c is not None:
                if side == "s" and ratio > math.exp(-c * a_s) * (1 + 1e-9):
                    s_ok = False
                if side == "u" and ratio < math.exp(c * a_u) * (1 - 1e-9):
                    u_ok = False
            y = np.where(mask, z, 0.0)
            y /= np.linalg.norm(y)
            x = int(base.step(x, 1))
    return WhitneyReport(w.word_str(), coc.kind, steps, mixing, s_ok, u_ok)


def _h_exponent(H: SplitElement, g: np.ndarray) -> float | None:
    """c with g = k exp(cH), from the block scales; None when g is not of that form."""
    if not in_levi(H, g):
        return None
    logs, hs = [], []
    for block in H.blocks:
        sub = g[np.ix_(block, block)]
        logs.append(math.log(np.linalg.norm(sub[:, 0])))
        hs.append(H.diag[block[0]])
    hs = np.array(hs)
    return float(np.dot(logs, hs) / np.dot(hs, hs))


# --- scenarios --------------------------------------------------------------

@dataclass
class Scenario:
    base: BaseSystem
    cocycle: Cocycle
    theta: frozenset
    seed: int = 0
    samples: int = 500
    horizon: int = 400

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "cocycle": self.cocycle.to_dict(),
            "theta": pb.type_names(self.theta),
            "seed": self.seed,
            "samples": self.samples,
            "horizon": self.horizon,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        base = BaseSystem.from_dict(d["base"])
        coc_d = dict(d["cocycle"])
        H = SplitElement(tuple(coc_d["H"]))
        seed = int(d.get("seed", 0))
        if coc_d["kind"] in ("conformal", "adversarial") and "values" not in coc_d:
            rng = np.random.default_rng(seed)
            coc = (conformal_cocycle if coc_d["kind"] == "conformal" else adversarial_cocycle)(H, base, rng)
        else:
            coc = Cocycle.from_dict(coc_d)
        theta = pb.flag_type(H.root_system(), d.get("theta", []))
        return cls(base, coc, theta, seed, int(d.get("samples", 500)), int(d.get("horizon", 400)))

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


def run_scenario(sc: Scenario) -> dict:
    """Components, stable-set agreement and Whitney checks for one scenario."""
    out: dict = {"scenario": sc.to_dict()}
    H = sc.cocycle.H
    if sc.cocycle.kind == "adversarial":
        reps = [c.rep for c in cosets_for(H, sc.theta)]
        checks = [whitney_split_check(sc.base, sc.cocycle, sc.theta, w) for w in reps]
        out["whitney"] = [r.to_dict() for r in checks]
        out["mixing_detected"] = any(r.mixing_detected for r in checks)
        out["passed"] = False
        return out
    comps = morse_components(sc.base, sc.cocycle, sc.theta)
    out["components"] = [c.to_dict() for c in comps]
    stable = verify_stable_sets(sc.base, sc.cocycle, sc.theta, sc.samples, sc.horizon, sc.seed)
    out["stable_sets"] = stable.to_dict()
    passed = stable.passed
    if sc.base.discrete:
        checks = [whitney_split_check(sc.base, sc.cocycle, sc.theta, c.coset.rep) for c in comps]
        out["whitney"] = [r.to_dict() for r in checks]
        passed = passed and all(r.passed for r in checks)
    out["passed"] = passed
    return out
