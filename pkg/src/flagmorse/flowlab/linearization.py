"""Charts around fixed flags in which the flow is linear.

Near w b_Theta every flag is exp(X) w b_Theta for a unique X in w n^-_Theta.
Since exp(tH) fixes w b_Theta, the flow acts on X by Ad(exp tH), scaling the
root vector E_pq by exp(t (h_p - h_q)).  Restricting X to root vectors with
nonzero rate gives the chart psi of the stable and unstable fibers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .. import parabolic as pb
from ..rootsys import ConfigurationError, WeylElement
from . import _kernels
from .flags import (
    Flag,
    SplitElement,
    component_of,
    distance,
    flow_frames,
    perm_of,
    permutation_matrix,
    signature_of,
    _flag_blocks,
)


class ChartError(ArithmeticError):
    """A flag lies outside the big cell of the chart, or a chart solve is ill conditioned."""


@dataclass(frozen=True)
class ChartCoordinate:
    """One root vector E_pq = w g_beta of the chart, beta = e_i - e_j negative."""

    i: int
    j: int
    row: int
    col: int
    rate: float

    def matrix(self, n: int) -> np.ndarray:
        m = np.zeros((n, n))
        m[self.row, self.col] = 1.0
        return m


@dataclass(frozen=True, eq=False)
class LinChart:
    H: SplitElement
    theta: frozenset
    base_w: WeylElement
    perm: tuple[int, ...]
    coords: tuple[ChartCoordinate, ...]  # every root of w n^-_Theta
    stable: tuple[int, ...]  # indices into coords
    unstable: tuple[int, ...]
    fixed: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.H.n

    @property
    def signature(self) -> tuple[int, ...]:
        return signature_of(self.n, self.theta)

    @property
    def chart_indices(self) -> tuple[int, ...]:
        """Coordinates of psi: stable ones first, then unstable."""
        return self.stable + self.unstable

    @property
    def basis(self) -> list[np.ndarray]:
        return [self.coords[k].matrix(self.n) for k in self.chart_indices]

    @property
    def rates(self) -> np.ndarray:
        return np.array([self.coords[k].rate for k in self.chart_indices])

    @property
    def n_plus(self) -> int:
        return len(self.unstable)

    @property
    def n_minus(self) -> int:
        return len(self.stable)

    @property
    def base_frame(self) -> np.ndarray:
        return permutation_matrix(self.perm)

    def base_point(self) -> Flag:
        return Flag(self.signature, self.base_frame)

    def split(self, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split chart coefficients (..., n_minus + n_plus) into stable and unstable parts."""
        c = np.asarray(c)
        return c[..., : self.n_minus], c[..., self.n_minus :]


def lin_chart(H: SplitElement, theta: Iterable[int], w: WeylElement) -> LinChart:
    """Chart at w b_Theta with root vectors sorted by the sign of their rate."""
    theta = frozenset(theta)
    wg = H.weyl_group()
    rs = wg.rs
    perm = perm_of(wg, w)
    prof = pb.sign_profile(wg, H.chamber(), theta, w)
    h = H.array
    coords, stable, unstable, fixed = [], [], [], []
    for k, sgn in prof.classified:
        v = rs.roots[k]
        i = next(a for a, x in enumerate(v) if x == 1)
        j = next(a for a, x in enumerate(v) if x == -1)
        p, q = perm[i], perm[j]
        coords.append(ChartCoordinate(i, j, p, q, float(h[p] - h[q])))
        {1: unstable, 0: fixed, -1: stable}[sgn].append(len(coords) - 1)
    return LinChart(H, theta, w, perm, tuple(coords), tuple(stable), tuple(unstable), tuple(fixed))


def _exp_nilpotent(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    out = np.broadcast_to(np.eye(n), x.shape).copy()
    term = out.copy()
    for k in range(1, n):
        term = term @ x / k
        out = out + term
    return out


def _log_unipotent(u: np.ndarray) -> np.ndarray:
    n = u.shape[-1]
    nil = u - np.eye(n)
    out = np.zeros_like(u)
    term = np.broadcast_to(np.eye(n), u.shape).copy()
    for k in range(1, n):
        term = term @ nil
        out = out + ((-1) ** (k + 1) / k) * term
    return out


def _pulled_back(chart: LinChart, coeffs: np.ndarray, which: Sequence[int]) -> np.ndarray:
    """Y in n^-_Theta with the given coefficients on the selected coordinates."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    y = np.zeros((coeffs.shape[0], chart.n, chart.n))
    for col, k in enumerate(which):
        c = chart.coords[k]
        y[:, c.i, c.j] = coeffs[:, col]
    return y


def psi_frames(chart: LinChart, coeffs, g: np.ndarray | None = None, full: bool = False) -> np.ndarray:
    """Frames of g exp(X) w b_Theta for a batch of coefficient vectors.

    ``coeffs`` index the chart basis, or every coordinate of w n^-_Theta when
    ``full`` is set.
    """
    which = tuple(range(len(chart.coords))) if full else chart.chart_indices
    y = _pulled_back(chart, coeffs, which)
    # exp(P Y P^T) P = P exp(Y)
    m = chart.base_frame @ _exp_nilpotent(y)
    if g is not None:
        m = g @ m
    q, _ = _kernels.orthonormalize(m)
    return q


def transport(chart: LinChart, point: Flag, tol: float = 1e-8) -> np.ndarray:
    """An element g of L_H, block orthogonal with unit determinants, with g w b_Theta = point.

    Each H-eigenspace gets an orthonormal basis adapted to the flag; it is
    matched with the coordinate vectors entering w b_Theta at the same step.
    """
    H = chart.H
    if point.signature != chart.signature or point.n != H.n:
        raise ConfigurationError("point has the wrong flag type")
    comp = component_of(H, chart.theta, point, tol=max(tol, 1e-6) * 1e3)
    if chart.base_w not in comp:
        raise ConfigurationError(
            f"point lies in the component of {comp.rep.word_str()}, not that of {chart.base_w.word_str()}"
        )
    n = H.n
    g = np.zeros((n, n))
    q = point.frame
    for block in H.blocks:
        rows = list(block)
        assigned: list[int] = []
        vecs: list[np.ndarray] = []
        for lo, hi in _flag_blocks(n, chart.signature):
            cols = [chart.perm[i] for i in range(lo, hi) if chart.perm[i] in block]
            if not cols:
                continue
            proj = np.zeros((n, hi - lo))
            proj[rows] = q[rows, lo:hi]
            u, s, _ = np.linalg.svd(proj, full_matrices=False)
            new = u[:, : len(cols)]
            for v in vecs:
                new = new - np.outer(v, v @ new)
            nq, _ = np.linalg.qr(new)
            for k, c in enumerate(cols):
                v = nq[:, k]
                # orient along the matching axis so the base point gets g = 1
                if v[c] < 0:
                    v = -v
                assigned.append(c)
                vecs.append(v)
        for c, v in zip(assigned, vecs):
            g[:, c] = v
        sub = g[np.ix_(rows, rows)]
        if np.linalg.det(sub) < 0:
            g[:, assigned[-1]] *= -1
    hb = H.block_index()
    g[hb[:, None] != hb[None, :]] = 0.0  # SVD leaves rounding noise off the blocks
    if np.abs(g.T @ g - np.eye(n)).max() > 1e-8:
        raise ChartError("transport matrix is not orthogonal; point is not a fixed flag")
    return g


def psi(chart: LinChart, point: Flag, coeffs, g: np.ndarray | None = None) -> Flag:
    """exp(sum c_k Ad(g) X_k) point, with g in L_H carrying w b_Theta to ``point``.

    ``g`` is computed by :func:`transport` when not supplied.
    """
    if g is None:
        g = transport(chart, point)
    elif distance(Flag(chart.signature, _orth(g @ chart.base_frame)), point) > 1e-8:
        raise ConfigurationError("g does not carry the base point of the chart to the given point")
    c = np.asarray(coeffs, dtype=float).reshape(1, -1)
    if c.shape[1] != len(chart.chart_indices):
        raise ConfigurationError(f"expected {len(chart.chart_indices)} coefficients, got {c.shape[1]}")
    return Flag(chart.signature, psi_frames(chart, c, g)[0])


def _orth(m):
    q, _ = _kernels.orthonormalize(np.asarray(m, dtype=float)[None])
    return q[0]


def chart_coordinates(chart: LinChart, frames: np.ndarray, full: bool = False, cond_max: float = 1e10) -> np.ndarray:
    """Inverse of psi at the base point: coefficients of X with flag = exp(X) w b_Theta.

    Rows for flags outside the big cell (or too close to its boundary) are NaN.
    """
    frames = np.asarray(frames, dtype=float)
    single = frames.ndim == 2
    if single:
        frames = frames[None]
    n = chart.n
    m = np.swapaxes(chart.base_frame, -1, -2) @ frames
    lower = np.zeros_like(m)
    bad = np.zeros(m.shape[0], dtype=bool)
    for lo, hi in _flag_blocks(n, chart.signature):
        if hi == n:
            lower[:, :, lo:hi] = np.eye(n)[:, lo:hi]
            continue
        lead = m[:, :hi, :hi]
        cond = np.linalg.cond(lead)
        bad |= ~(cond < cond_max)
        lead = np.where(bad[:, None, None], np.eye(hi), lead)
        # rows of m[:, :, :hi] @ inv(lead), via a transposed solve
        t = np.swapaxes(np.linalg.solve(np.swapaxes(lead, -1, -2), np.swapaxes(m[:, :, :hi], -1, -2)), -1, -2)
        lower[:, :, lo:hi] = t[:, :, lo:hi]
    y = _log_unipotent(lower)
    which = range(len(chart.coords)) if full else chart.chart_indices
    out = np.zeros((m.shape[0], len(which)))
    for col, k in enumerate(which):
        out[:, col] = y[:, chart.coords[k].i, chart.coords[k].j]
    out[bad] = np.nan
    return out[0] if single else out


@dataclass(frozen=True)
class LinearizationReport:
    w: str
    logs: tuple[float, ...]  # log |eigenvalue| over every coordinate of w n^-_Theta
    predicted: tuple[float, ...]  # nonzero (w beta)(H), sorted
    measured: tuple[float, ...]  # nonzero log moduli, sorted
    n_plus: int
    n_zero: int
    n_minus: int
    max_error: float

    @property
    def multiset(self) -> tuple[float, ...]:
        return self.measured


def linearized_eigenvalues(
    H: SplitElement, theta: Iterable[int], w: WeylElement, step: float = 1e-6, zero_tol: float = 1e-5
) -> LinearizationReport:
    """Log-moduli of the eigenvalues of the time-1 map at w b_Theta, by finite differences."""
    chart = lin_chart(H, theta, w)
    k = len(chart.coords)
    if k == 0:
        return LinearizationReport(w.word_str(), (), (), (), 0, 0, 0, 0.0)
    probes = np.concatenate([step * np.eye(k), -step * np.eye(k)])
    frames = psi_frames(chart, probes, full=True)
    moved = flow_frames(H, 1.0, frames)
    coords = chart_coordinates(chart, moved, full=True)
    if np.isnan(coords).any():
        raise ChartError(f"finite-difference probes left the chart at step {step}; reduce the step")
    jac = (coords[:k] - coords[k:]).T / (2 * step)
    cond = np.linalg.cond(jac)
    if not np.isfinite(cond) or cond > 1e12:
        raise ChartError(f"Jacobian of the time-1 map is ill conditioned (cond {cond:.2e})")
    logs = np.log(np.abs(np.linalg.eigvals(jac)))
    nonzero = np.sort(logs[np.abs(logs) > zero_tol])
    predicted = np.sort(chart.rates)
    if len(nonzero) != len(predicted):
        err = float("inf")
    else:
        err = float(np.max(np.abs(nonzero - predicted), initial=0.0))
    return LinearizationReport(
        w.word_str(),
        tuple(float(x) for x in np.sort(logs)),
        tuple(float(x) for x in predicted),
        tuple(float(x) for x in nonzero),
        int((nonzero > 0).sum()),
        int((np.abs(logs) <= zero_tol).sum()),
        int((nonzero < 0).sum()),
        err,
    )
