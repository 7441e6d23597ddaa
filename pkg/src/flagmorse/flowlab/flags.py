"""Flags of R^n as orthonormal frames and the flow of exp(tH) on them.

Conventions: H is a traceless diagonal with nonincreasing entries, n^+ is
strictly upper triangular and the standard coordinate flag is the attractor.
The root e_i - e_j corresponds to the matrix unit E_ij, and a Weyl group
element w acts through the permutation sigma with w(e_i) = e_sigma(i); its
fixed flag w b_Theta has frame columns e_sigma(0), e_sigma(1), ...
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .. import parabolic as pb
from ..rootsys import ConfigurationError, WeylElement, WeylGroup, act, as_weyl_group, build_root_system
from . import _kernels

ORTHO_TOL = 1e-10
RANK_ZERO_TOL = 1e-12
RANK_AMBIGUOUS_TOL = 1e-8
EQUAL_TOL = 1e-12
MAX_STEP_FACTOR = 1e6


class FlowDegenerationError(ArithmeticError):
    def __init__(self, t: float, detail: str):
        super().__init__(f"flow degenerated at t={t!r}: {detail}")
        self.t = t


class UnclassifiableFlagError(ValueError):
    """The rank matrix has a singular value inside the ambiguity band."""


class FlowTimeoutError(RuntimeError):
    def __init__(self, message: str, trajectory: "TrajectoryRecord"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class SplitElement:
    """Traceless nonincreasing diagonal H in the closed positive chamber of sl(n)."""

    diag: tuple[float, ...]

    def __post_init__(self):
        d = tuple(float(x) for x in self.diag)
        object.__setattr__(self, "diag", d)
        if len(d) < 2:
            raise ConfigurationError("H needs at least two diagonal entries")
        if any(not math.isfinite(x) for x in d):
            raise ConfigurationError("H entries must be finite")
        if any(d[i] < d[i + 1] - EQUAL_TOL for i in range(len(d) - 1)):
            raise ConfigurationError(f"H must be nonincreasing, got {d}")
        if abs(sum(d)) > 1e-12 * max(1.0, max(abs(x) for x in d)) * len(d):
            raise ConfigurationError(f"H must be traceless, entries sum to {sum(d)}")

    @classmethod
    def regular(cls, n: int) -> "SplitElement":
        """Evenly spaced entries from 1 down to -1."""
        return cls(tuple(np.linspace(1.0, -1.0, n)))

    @classmethod
    def from_root_values(cls, values: Sequence[float]) -> "SplitElement":
        """The H with alpha_i(H) = values[i], centered to trace zero."""
        d = np.concatenate([[0.0], -np.cumsum(np.asarray(values, dtype=float))])
        return cls(tuple(d - d.mean()))

    @classmethod
    def with_zeros(cls, n: int, theta_h: Iterable[int]) -> "SplitElement":
        z = set(theta_h)
        return cls.from_root_values([0.0 if i in z else 1.0 for i in range(n - 1)])

    @property
    def n(self) -> int:
        return len(self.diag)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.diag)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    @property
    def root_values(self) -> tuple[float, ...]:
        return tuple(self.diag[i] - self.diag[i + 1] for i in range(self.n - 1))

    @property
    def theta_h(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.root_values) if v <= EQUAL_TOL)

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        """Index sets of equal diagonal entries, top to bottom."""
        out, cur = [], [0]
        for i in range(1, self.n):
            if i - 1 in self.theta_h:
                cur.append(i)
            else:
                out.append(tuple(cur))
                cur = [i]
        out.append(tuple(cur))
        return tuple(out)

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def spectral_gap(self) -> float:
        """Smallest nonzero |h_i - h_j|, the slowest transverse rate."""
        v = [x for x in self.root_values if x > EQUAL_TOL]
        return min(v) if v else 0.0

    def block_index(self) -> np.ndarray:
        out = np.empty(self.n, dtype=int)
        for b, idx in enumerate(self.blocks):
            out[list(idx)] = b
        return out

    def root_system(self):
        return build_root_system("A", self.n - 1)

    def weyl_group(self) -> WeylGroup:
        return as_weyl_group(self.root_system())

    def chamber(self) -> pb.ChamberElement:
        rs = self.root_system()
        vals = [Fraction(0) if i in self.theta_h else Fraction(v) for i, v in enumerate(self.root_values)]
        return pb.ChamberElement.from_values(rs, vals)


def signature_of(n: int, theta: Iterable[int]) -> tuple[int, ...]:
    """Subspace dimensions of a flag of type Theta: d with alpha_d not in Theta (1-based)."""
    t = set(theta)
    return tuple(i + 1 for i in range(n - 1) if i not in t)


def theta_of(n: int, signature: Sequence[int]) -> frozenset[int]:
    s = set(signature)
    return frozenset(i for i in range(n - 1) if i + 1 not in s)


def _check_signature(n: int, signature: Sequence[int]) -> tuple[int, ...]:
    sig = tuple(int(d) for d in signature)
    if any(not 0 < d < n for d in sig) or any(a >= b for a, b in zip(sig, sig[1:])):
        raise ConfigurationError(f"signature must be strictly increasing inside (0, {n}), got {sig}")
    return sig


@dataclass(frozen=True, eq=False)
class Flag:
    """Nested subspaces V_1 < ... < V_k; V_j is spanned by the first signature[j] columns."""

    signature: tuple[int, ...]
    frame: np.ndarray = field(repr=False)

    def __post_init__(self):
        fr = np.array(self.frame, dtype=float)
        if fr.ndim != 2 or fr.shape[0] != fr.shape[1]:
            raise ConfigurationError("frame must be a square matrix")
        object.__setattr__(self, "signature", _check_signature(fr.shape[0], self.signature))
        err = np.abs(fr.T @ fr - np.eye(fr.shape[0])).max()
        if not err <= ORTHO_TOL:
            raise ConfigurationError(f"frame is not orthonormal (error {err:.2e})")
        fr.setflags(write=False)
        object.__setattr__(self, "frame", fr)

    @property
    def n(self) -> int:
        return self.frame.shape[0]

    @property
    def theta(self) -> frozenset[int]:
        return theta_of(self.n, self.signature)

    def subspace(self, j: int) -> np.ndarray:
        return self.frame[:, : self.signature[j]]

    @classmethod
    def from_matrix(cls, m, signature: Sequence[int]) -> "Flag":
        """Flag spanned by the leading columns of an invertible matrix."""
        q, rmin = _kernels.orthonormalize(np.asarray(m, dtype=float)[None])
        if not rmin[0] > 1e-13 * max(1.0, np.abs(m).max()):
            raise ConfigurationError("matrix is singular; its columns do not determine a flag")
        return cls(tuple(signature), q[0])

    @classmethod
    def standard(cls, n: int, signature: Sequence[int]) -> "Flag":
        return cls(tuple(signature), np.eye(n))

    @classmethod
    def coordinate(cls, perm: Sequence[int], signature: Sequence[int]) -> "Flag":
        return cls(tuple(signature), permutation_matrix(perm))

    @classmethod
    def random(cls, n: int, signature: Sequence[int], rng: np.random.Generator) -> "Flag":
        return cls.from_matrix(rng.standard_normal((n, n)), signature)

    def to_dict(self) -> dict:
        return {"signature": list(self.signature), "frame": self.frame.reshape(-1).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Flag":
        sig = d["signature"]
        fr = np.asarray(d["frame"], dtype=float)
        n = int(round(math.sqrt(fr.size)))
        return cls(tuple(sig), fr.reshape(n, n))


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """P with P e_i = e_perm[i]."""
    n = len(perm)
    p = np.zeros((n, n))
    p[list(perm), list(range(n))] = 1.0
    return p


def perm_of(wg: WeylGroup, w: WeylElement) -> tuple[int, ...]:
    """The coordinate permutation of a type-A Weyl group element."""
    n = wg.rs.dim
    out = []
    for i in range(n):
        e = [Fraction(0)] * n
        e[i] = Fraction(1)
        img = act(wg, w, e)
        out.append(next(k for k, x in enumerate(img) if x == 1))
    return tuple(out)


def element_of_perm(wg: WeylGroup, perm: Sequence[int]) -> WeylElement:
    return _perm_lookup(wg.rs.dim)[tuple(perm)]


@lru_cache(maxsize=None)
def _perm_lookup(n: int) -> dict:
    wg = as_weyl_group(build_root_system("A", n - 1))
    return {perm_of(wg, w): w for w in wg.elements}


def coordinate_flag(H: SplitElement, w: WeylElement, theta: Iterable[int]) -> Flag:
    """The fixed point w b_Theta."""
    wg = H.weyl_group()
    return Flag.coordinate(perm_of(wg, w), signature_of(H.n, theta))


# --- flow -------------------------------------------------------------------

def _flow_plan(H: SplitElement, t: float) -> tuple[np.ndarray, int]:
    h = H.array
    spread = h[0] - h[-1]
    if t == 0 or spread == 0:
        return np.ones(H.n), 0
    steps = max(1, math.ceil(abs(t) * spread / math.log(MAX_STEP_FACTOR)))
    e = (t / steps) * h
    return np.exp(e - e.max()), steps


def flow_frames(H: SplitElement, t: float, frames: np.ndarray, backend: str | None = None) -> np.ndarray:
    """exp(tH) applied to a stack (batch, n, n) of frames, re-orthonormalized."""
    if not math.isfinite(t):
        raise FlowDegenerationError(t, "time is not finite")
    factors, steps = _flow_plan(H, t)
    if steps == 0:
        return np.array(frames, dtype=float)
    out, rmin = _kernels.scale_orthonormalize(frames, factors, steps, backend)
    bad = ~(rmin > 1e-13) | ~np.isfinite(out).all(axis=(1, 2))
    if bad.any():
        raise FlowDegenerationError(t, f"{int(bad.sum())} frame(s) lost rank (min pivot {rmin.min():.2e})")
    return out


def flow_frames_each(H: SplitElement, times: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """Like :func:`flow_frames` but with one time per frame."""
    times = np.asarray(times, dtype=float)
    h = H.array
    spread = h[0] - h[-1]
    if not len(times) or spread == 0:
        return np.array(frames, dtype=float)
    steps = max(1, math.ceil(np.abs(times).max() * spread / math.log(MAX_STEP_FACTOR)))
    e = (times / steps)[:, None] * h[None, :]
    factors = np.exp(e - e.max(axis=1, keepdims=True))
    q = np.asarray(frames, dtype=float)
    for _ in range(steps):
        q, _ = _kernels._qr_positive_numpy(factors[:, :, None] * q)
    return q


def flow(H: SplitElement, t: float, f: Flag) -> Flag:
    """The flag exp(tH) f."""
    if f.n != H.n:
        raise ConfigurationError("flag and H have different sizes")
    return Flag(f.signature, flow_frames(H, t, f.frame[None])[0])


# --- distances --------------------------------------------------------------

def _principal_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Largest principal angle between equal-dimensional column spans (batched)."""
    m = np.swapaxes(a, -1, -2) @ b
    c = np.linalg.svd(m, compute_uv=False)[..., -1]
    resid = a - b @ np.swapaxes(m, -1, -2)
    s = np.linalg.svd(resid, compute_uv=False)[..., 0]
    return np.arctan2(s, c)


def distance_frames(sig: Sequence[int], fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast_shapes(fa.shape, fb.shape)[:-2])
    for d in sig:
        out = np.maximum(out, _principal_angle(fa[..., :d], fb[..., :d]))
    return out


def distance(f: Flag, g: Flag) -> float:
    """Maximum principal angle over corresponding subspaces."""
    if f.signature != g.signature:
        raise ConfigurationError("flags of different types")
    return float(distance_frames(f.signature, f.frame, g.frame))


def fixed_residual_frames(H: SplitElement, sig: Sequence[int], frames: np.ndarray) -> np.ndarray:
    """Scaled failure of H-invariance, roughly the angle to the nearest fixed flag."""
    gap = H.spectral_gap
    out = np.zeros(frames.shape[:-2])
    if gap == 0:
        return out
    h = H.array
    for d in sig:
        v = frames[..., :d]
        hv = h[:, None] * v
        r = hv - v @ (np.swapaxes(v, -1, -2) @ hv)
        out = np.maximum(out, np.linalg.norm(r, ord=2, axis=(-2, -1)) / gap)
    return out


def fixed_residual(H: SplitElement, f: Flag) -> float:
    return float(fixed_residual_frames(H, f.signature, f.frame))


# --- classification ---------------------------------------------------------

@dataclass(frozen=True)
class _Context:
    n: int
    theta_h: frozenset
    theta: frozenset
    wg: WeylGroup
    cosets: tuple
    signature: tuple
    tail_dims: tuple  # m with E'_m = span of the last m coordinates
    rank_lookup: dict
    table_lookup: dict
    perms: dict


def _flag_blocks(n: int, sig: Sequence[int]) -> list[tuple[int, int]]:
    bounds = [0, *sig, n]
    return list(zip(bounds[:-1], bounds[1:]))


@lru_cache(maxsize=None)
def _context(n: int, theta_h: frozenset, theta: frozenset) -> _Context:
    rs = build_root_system("A", n - 1)
    wg = as_weyl_group(rs)
    chamber = pb.ChamberElement.with_zeros(rs, theta_h)
    cosets = tuple(pb.double_cosets(wg, chamber, theta))
    sig = signature_of(n, theta)
    tail = tuple(n - (i + 1) for i in range(n - 1) if i not in theta_h)
    hblock = SplitElement.with_zeros(n, theta_h).block_index()
    nb = hblock.max() + 1
    rank_lookup, table_lookup, perms = {}, {}, {}
    for k, c in enumerate(cosets):
        for w in c.members:
            p = perm_of(wg, w)
            perms[w] = p
            rank_lookup.setdefault(_coordinate_ranks(p, sig, tail), k)
            table_lookup.setdefault(_coordinate_table(p, sig, hblock, nb), k)
    return _Context(n, theta_h, theta, wg, cosets, sig, tail, rank_lookup, table_lookup, perms)


def _coordinate_ranks(p, sig, tail) -> tuple:
    n = len(p)
    return tuple(tuple(sum(1 for i in range(d) if p[i] >= n - m) for m in tail) for d in sig)


def _coordinate_table(p, sig, hblock, nb) -> tuple:
    n = len(p)
    rows = []
    for a, b in _flag_blocks(n, sig):
        counts = [0] * nb
        for i in range(a, b):
            counts[hblock[p[i]]] += 1
        rows.append(tuple(counts))
    return tuple(rows)


def _resolve_theta(theta, f_sig: tuple, n: int) -> frozenset:
    if theta is None:
        return theta_of(n, f_sig)
    t = frozenset(theta)
    if signature_of(n, t) != f_sig:
        raise ConfigurationError(f"flag signature {f_sig} does not match flag type {sorted(t)}")
    return t


def rank_matrix_frames(ctx: _Context, frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """dim(V_j cap E'_m) for every sample, plus a per-sample ambiguity flag."""
    b = frames.shape[0]
    ranks = np.zeros((b, len(ctx.signature), len(ctx.tail_dims)), dtype=int)
    ambiguous = np.zeros(b, dtype=bool)
    n = ctx.n
    for a, d in enumerate(ctx.signature):
        for c, m in enumerate(ctx.tail_dims):
            block = frames[:, : n - m, :d]
            sv = np.linalg.svd(block, compute_uv=False)
            ambiguous |= ((sv > RANK_ZERO_TOL) & (sv <= RANK_AMBIGUOUS_TOL)).any(axis=-1)
            ranks[:, a, c] = d - (sv > RANK_AMBIGUOUS_TOL).sum(axis=-1)
    return ranks, ambiguous


def classify_frames(H: SplitElement, theta: Iterable[int], frames: np.ndarray) -> np.ndarray:
    """Coset index (into the double-coset list) of each frame's stable set; -1 if ambiguous."""
    ctx = _context(H.n, H.theta_h, frozenset(theta))
    frames = np.asarray(frames, dtype=float)
    if not ctx.tail_dims or not ctx.signature:
        return np.zeros(frames.shape[0], dtype=int)
    ranks, amb = rank_matrix_frames(ctx, frames)
    out = np.full(frames.shape[0], -1, dtype=int)
    for s in range(frames.shape[0]):
        if amb[s]:
            continue
        key = tuple(tuple(int(x) for x in row) for row in ranks[s])
        out[s] = ctx.rank_lookup.get(key, -1)
    return out


def cosets_for(H: SplitElement, theta: Iterable[int]) -> tuple:
    return _context(H.n, H.theta_h, frozenset(theta)).cosets


def classify(H: SplitElement, theta, f: Flag) -> pb.DoubleCoset:
    """The Morse component whose stable set contains ``f``."""
    t = _resolve_theta(theta, f.signature, H.n)
    k = int(classify_frames(H, t, f.frame[None])[0])
    if k < 0:
        raise UnclassifiableFlagError("rank of V_j cap E'_m is ambiguous within tolerance 1e-8")
    return cosets_for(H, t)[k]


def component_frames(H: SplitElement, theta: Iterable[int], frames: np.ndarray, tol: float = 0.05) -> np.ndarray:
    """Fixed component containing each (near-)fixed frame; -1 if not near a fixed flag."""
    theta = frozenset(theta)
    ctx = _context(H.n, H.theta_h, theta)
    frames = np.asarray(frames, dtype=float)
    res = fixed_residual_frames(H, ctx.signature, frames)
    hblock = H.block_index()
    nb = hblock.max() + 1
    table = np.zeros((frames.shape[0], len(ctx.signature) + 1, nb))
    for a, (lo, hi) in enumerate(_flag_blocks(H.n, ctx.signature)):
        for b in range(nb):
            rows = hblock == b
            table[:, a, b] = (frames[:, rows, lo:hi] ** 2).sum(axis=(1, 2))
    rounded = np.rint(table).astype(int)
    out = np.full(frames.shape[0], -1, dtype=int)
    ok = (res < tol) & (np.abs(table - rounded).max(axis=(1, 2)) < 0.25)
    for s in np.nonzero(ok)[0]:
        key = tuple(tuple(int(x) for x in row) for row in rounded[s])
        out[s] = ctx.table_lookup.get(key, -1)
    return out


def component_of(H: SplitElement, theta, f: Flag, tol: float = 0.05) -> pb.DoubleCoset:
    t = _resolve_theta(theta, f.signature, H.n)
    k = int(component_frames(H, t, f.frame[None], tol)[0])
    if k < 0:
        raise UnclassifiableFlagError(f"flag is not within {tol} of a fixed component")
    return cosets_for(H, t)[k]


# --- limits -----------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    initial: Flag
    times: list[float]
    residuals: list[float]
    distances: list[float] = field(default_factory=list)
    coset: str | None = None
    converged: bool = False
    wall_seconds: float = 0.0
    steps: int = 0

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "initial": self.initial.to_dict(),
            "times": self.times,
            "residuals": self.residuals,
            "distances_to_limit": self.distances,
            "coset": self.coset,
            "converged": self.converged,
            "steps": self.steps,
        }
        if timing:
            d["wall_seconds"] = self.wall_seconds
        return d


def _step_size(H: SplitElement) -> float:
    gap = H.spectral_gap
    return 1.0 / gap if gap > 0 else 1.0


def trace_trajectory(
    H: SplitElement, theta, f: Flag, tol: float = 1e-8, t_max: float = 200.0
) -> tuple[Flag, TrajectoryRecord]:
    """Flow forward until the flag is within ``tol`` of a fixed flag.

    The step doubles while the fixed-point residual keeps shrinking faster
    than a factor of two per step, up to eight base steps.
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    t_set = _resolve_theta(theta, f.signature, H.n)
    start = time.perf_counter()
    base = _step_size(H)
    dt, t, cur = base, 0.0, f
    rec = TrajectoryRecord(f, [0.0], [fixed_residual(H, f)])
    path = [f]
    while rec.residuals[-1] >= tol:
        if t >= t_max:
            rec.wall_seconds = time.perf_counter() - start
            raise FlowTimeoutError(f"no convergence to tol={tol} by t_max={t_max}", rec)
        step = min(dt, t_max - t)
        cur = flow(H, step, cur)
        t += step
        r = fixed_residual(H, cur)
        if r < 0.5 * rec.residuals[-1]:
            dt = min(2 * dt, 8 * base)
        rec.times.append(t)
        rec.residuals.append(r)
        path.append(cur)
    rec.steps = len(rec.times) - 1
    rec.distances = [distance(p, cur) for p in path]
    rec.coset = component_of(H, t_set, cur).rep.word_str()
    rec.converged = True
    rec.wall_seconds = time.perf_counter() - start
    return cur, rec


def flow_to_limit(H: SplitElement, theta, f: Flag, tol: float = 1e-8, t_max: float = 200.0):
    """(limit flag, coset of the fixed component containing it)."""
    limit, rec = trace_trajectory(H, theta, f, tol, t_max)
    return limit, component_of(H, _resolve_theta(theta, f.signature, H.n), limit)


def flow_to_limit_frames(
    H: SplitElement, theta, frames: np.ndarray, tol: float = 1e-8, t_max: float = 200.0, backend: str | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Batched forward limits: (final frames, component index or -1 when not converged)."""
    theta = frozenset(theta)
    sig = signature_of(H.n, theta)
    cur = np.array(frames, dtype=float)
    dt = _step_size(H)
    active = fixed_residual_frames(H, sig, cur) >= tol
    t = 0.0
    while active.any() and t < t_max:
        idx = np.nonzero(active)[0]
        cur[idx] = flow_frames(H, dt, cur[idx], backend)
        t += dt
        active[idx] = fixed_residual_frames(H, sig, cur[idx]) >= tol
    comp = component_frames(H, theta, cur)
    comp[active] = -1
    return cur, comp


# --- samplers ---------------------------------------------------------------

def random_frames(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthonormal frames (Gaussian matrices, QR)."""
    q, _ = _kernels.orthonormalize(rng.standard_normal((count, n, n)))
    return q


def stable_set_frames(H: SplitElement, w: WeylElement, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random frames in the stable set of the component through w.

    The stable set is the orbit of w b under the block lower triangular
    group P_H^-, sampled here with Gaussian entries.
    """
    n = H.n
    hb = H.block_index()
    mask = (hb[:, None] >= hb[None, :]).astype(float)
    g = rng.standard_normal((count, n, n)) * mask
    p = permutation_matrix(perm_of(H.weyl_group(), w))
    q, _ = _kernels.orthonormalize(g @ p)
    return q


# --- symmetric embedding ----------------------------------------------------

def embed_in_s(H: SplitElement, f: Flag) -> np.ndarray:
    """k H k^T for a frame k of a flag of type Theta(H)."""
    if f.n != H.n:
        raise ConfigurationError("flag and H have different sizes")
    if f.signature != signature_of(H.n, H.theta_h):
        raise ConfigurationError(
            f"flag signature {f.signature} is not the block structure {signature_of(H.n, H.theta_h)} of H"
        )
    k = f.frame
    return (k * H.array[None, :]) @ k.T
