"""Sampled verification of index pairs around isolated fixed flags.

B1 is the image under psi of the box {|v_s| <= r, |v_u| <= r} in chart
coordinates, B0 the part with |v_u| = r.  Trajectories are integrated with
the actual flow on frames and read back through the inverse chart, so the
checks exercise the numerics rather than the closed-form linear flow.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from ..rootsys import ConfigurationError, WeylElement
from .flags import SplitElement, flow_frames, flow_frames_each
from .linearization import LinChart, chart_coordinates, lin_chart, psi_frames

EDGE_TOL = 1e-9
EXIT_PROBE = 1e-3


class RadiusError(ConfigurationError):
    """psi is not injective on the sampled block at this radius."""


@dataclass
class ConditionResult:
    name: str
    passed: bool
    checked: int
    violations: int
    detail: str = ""


@dataclass
class IndexPairReport:
    w: str
    n_plus: int
    n_minus: int
    radius: float
    samples: int
    horizon: float
    seed: int
    conditions: list[ConditionResult] = field(default_factory=list)
    injectivity_error: float = 0.0
    model_error: float = 0.0
    decay_rate: float | None = None
    decay_violations: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _ball(rng, count: int, dim: int, r: float, surface: bool = False) -> np.ndarray:
    if dim == 0:
        return np.zeros((count, 0))
    v = rng.standard_normal((count, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rad = np.full(count, r) if surface else r * rng.random(count) ** (1.0 / dim)
    return v * rad[:, None]


def _norms(chart: LinChart, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vs, vu = chart.split(c)
    return np.linalg.norm(vs, axis=-1), np.linalg.norm(vu, axis=-1)


def _inside(chart: LinChart, c: np.ndarray, r: float) -> np.ndarray:
    ns, nu = _norms(chart, c)
    ok = (ns <= r * (1 + EDGE_TOL)) & (nu <= r * (1 + EDGE_TOL))
    return ok & ~np.isnan(c).any(axis=-1)


def _simulate(chart: LinChart, c0: np.ndarray, r: float, horizon: float, dt: float, sign: float):
    """First exit step (or -1), frames just before exit, model error while inside."""
    frames = psi_frames(chart, c0)
    count = c0.shape[0]
    exit_step = np.full(count, -1)
    last_in = frames.copy()
    model_err = 0.0
    rates = chart.rates
    steps = int(math.ceil(horizon / dt))
    active = np.ones(count, dtype=bool)
    for k in range(1, steps + 1):
        idx = np.nonzero(active)[0]
        if not len(idx):
            break
        nxt = flow_frames(chart.H, sign * dt, frames[idx])
        c = chart_coordinates(chart, nxt)
        inside = _inside(chart, c, r)
        exact = c0[idx] * np.exp(sign * k * dt * rates)[None, :]
        if inside.any():
            model_err = max(model_err, float(np.abs(c[inside] - exact[inside]).max(initial=0.0)))
        out = idx[~inside]
        exit_step[out] = k
        last_in[out] = frames[out]
        frames[idx] = nxt
        active[out] = False
    return exit_step, last_in, frames, model_err


def index_pair(
    H: SplitElement,
    theta: Iterable[int],
    w: WeylElement,
    radius: float = 0.1,
    samples: int = 500,
    horizon: float = 20.0,
    seed: int = 0,
    dt: float = 0.05,
) -> IndexPairReport:
    """Check the three index-pair conditions for (B1, B0) by simulation.

    (1) isolation: sampled points of B1 whose orbits stay in B1 both forward
        and backward over the horizon lie within r exp(-a T) of the component;
    (2) points of B0 leave B1 immediately in forward time;
    (3) points of B1 that leave do so through B0 (exit times found by bisection).

    Only components that are single points are supported.
    """
    theta = frozenset(theta)
    chart = lin_chart(H, theta, w)
    if chart.fixed:
        raise ConfigurationError(
            "index pairs are implemented for point components only; "
            f"this component has dimension {len(chart.fixed)}"
        )
    rng = np.random.default_rng(seed)
    ks, ku = chart.n_minus, chart.n_plus
    rep = IndexPairReport(w.word_str(), ku, ks, radius, samples, horizon, seed)

    # interior samples: generic, on the stable fiber, on the unstable fiber
    if ks and ku:
        thirds = [samples - 2 * (samples // 3), samples // 3, samples // 3]
    else:
        thirds = [samples, 0, 0]
    parts = []
    for kind, m in zip(("generic", "stable", "unstable"), thirds):
        vs = _ball(rng, m, ks, radius) if kind != "unstable" else np.zeros((m, ks))
        vu = _ball(rng, m, ku, radius) if kind != "stable" else np.zeros((m, ku))
        parts.append(np.hstack([vs, vu]))
    interior = np.vstack(parts)

    back = chart_coordinates(chart, psi_frames(chart, interior))
    rep.injectivity_error = float(np.abs(back - interior).max(initial=0.0))
    if not rep.injectivity_error < 1e-9:
        raise RadiusError(f"chart does not invert on the block of radius {radius} (error {rep.injectivity_error:.2e})")

    fwd_exit, fwd_last, fwd_final, err_f = _simulate(chart, interior, radius, horizon, dt, 1.0)
    bwd_exit, _, _, err_b = _simulate(chart, interior, radius, horizon, dt, -1.0)
    rep.model_error = max(err_f, err_b)

    # (1) isolation
    rates = np.abs(chart.rates)
    alpha = float(rates.min()) if len(rates) else 0.0
    near = radius * math.sqrt(2) * math.exp(-alpha * horizon) * (1 + 1e-6) + 1e-12
    stays = (fwd_exit < 0) & (bwd_exit < 0)
    far = np.linalg.norm(interior, axis=1) > near
    v1 = int((stays & far).sum())
    rep.conditions.append(ConditionResult(
        "isolating", v1 == 0, samples, v1,
        f"{int(stays.sum())} orbits stayed in B1 both ways; allowed distance {near:.3e}",
    ))

    # (2) B0 exits immediately
    if ku == 0:
        rep.conditions.append(ConditionResult("exit_set_immediate", True, 0, 0, "B0 is empty"))
    else:
        b0 = np.hstack([_ball(rng, samples, ks, radius), _ball(rng, samples, ku, radius, surface=True)])
        moved = chart_coordinates(chart, flow_frames(H, EXIT_PROBE, psi_frames(chart, b0)))
        _, nu = _norms(chart, moved)
        v2 = int((~(nu > radius)).sum())
        rep.conditions.append(ConditionResult(
            "exit_set_immediate", v2 == 0, samples, v2, f"probe time {EXIT_PROBE}",
        ))

    # (3) exits pass through B0
    leaving = np.nonzero(fwd_exit > 0)[0]
    v3 = 0
    if len(leaving):
        lo = np.zeros(len(leaving))
        hi = np.full(len(leaving), dt)
        base = fwd_last[leaving]
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            c = chart_coordinates(chart, flow_frames_each(H, mid, base))
            ins = _inside(chart, c, radius)
            lo = np.where(ins, mid, lo)
            hi = np.where(ins, hi, mid)
        c = chart_coordinates(chart, flow_frames_each(H, lo, base))
        ns, nu = _norms(chart, c)
        in_b0 = (np.abs(nu - radius) <= 1e-6 * radius) & (ns <= radius * (1 + EDGE_TOL))
        v3 = int((~in_b0).sum())
    rep.conditions.append(ConditionResult(
        "exits_through_b0", v3 == 0, int(len(leaving)), v3,
        "no sampled orbit left B1" if not len(leaving) else "exit times bisected to 2^-48 of a step",
    ))

    # decay of the stable part in the chart norm
    if ks:
        rep.decay_rate = alpha_s = float(np.abs(chart.rates[:ks]).min())
        c0 = interior[thirds[0]: thirds[0] + thirds[1]] if thirds[1] else interior
        frames = psi_frames(chart, c0)
        ns0 = np.linalg.norm(c0[:, :ks], axis=1)
        for k in range(1, int(horizon / 1.0) + 1):
            frames = flow_frames(H, 1.0, frames)
            ns = np.linalg.norm(chart_coordinates(chart, frames)[:, :ks], axis=1)
            rep.decay_violations += int((ns > 1.05 * math.exp(-alpha_s * k) * ns0 + 1e-300).sum())
    return rep
