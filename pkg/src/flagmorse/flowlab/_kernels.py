"""Batched orthonormalization kernels.

The Monte Carlo loops push thousands of small frames through
``diag(exp(t h)) @ Q`` followed by re-orthonormalization.  With numba
available the inner loop is a compiled modified Gram-Schmidt; otherwise (or
when ``FLAGMORSE_NUMBA=0``) stacked ``numpy.linalg.qr`` is used.  Both
return frames whose triangular factor has a positive diagonal, so results
agree to rounding.
"""
from __future__ import annotations

import os

import numpy as np

_WANT_NUMBA = os.environ.get("FLAGMORSE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    if not _WANT_NUMBA:
        raise ImportError("disabled by FLAGMORSE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _qr_positive_numpy(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(mats)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    s = np.where(d < 0, -1.0, 1.0)
    return q * s[..., None, :], np.abs(d)


def _scale_orthonormalize_numpy(frames: np.ndarray, factors: np.ndarray, steps: int):
    q = frames
    rmin = np.full(frames.shape[0], np.inf)
    for _ in range(steps):
        q, d = _qr_positive_numpy(factors[None, :, None] * q)
        rmin = np.minimum(rmin, d.min(axis=1))
    return q, rmin


if HAVE_NUMBA:

    @njit(cache=True)
    def _mgs_inplace(a, rdiag):
        # two passes of modified Gram-Schmidt, columns in order
        n, m = a.shape
        for j in range(m):
            for _ in range(2):
                for k in range(j):
                    dot = 0.0
                    for i in range(n):
                        dot += a[i, k] * a[i, j]
                    for i in range(n):
                        a[i, j] -= dot * a[i, k]
            nrm = 0.0
            for i in range(n):
                nrm += a[i, j] * a[i, j]
            nrm = np.sqrt(nrm)
            rdiag[j] = nrm
            if nrm > 0.0:
                for i in range(n):
                    a[i, j] /= nrm

    @njit(cache=True)
    def _scale_orthonormalize_numba(frames, factors, steps):
        b, n, m = frames.shape
        out = frames.copy()
        rmin = np.full(b, np.inf)
        rdiag = np.empty(m)
        for s in range(b):
            a = out[s]
            for _ in range(steps):
                for i in range(n):
                    for j in range(m):
                        a[i, j] *= factors[i]
                _mgs_inplace(a, rdiag)
                for j in range(m):
                    if rdiag[j] < rmin[s]:
                        rmin[s] = rdiag[j]
        return out, rmin

    @njit(cache=True)
    def _orthonormalize_numba(mats):
        b, n, m = mats.shape
        out = mats.copy()
        rmin = np.full(b, np.inf)
        rdiag = np.empty(m)
        for s in range(b):
            _mgs_inplace(out[s], rdiag)
            for j in range(m):
                if rdiag[j] < rmin[s]:
                    rmin[s] = rdiag[j]
        return out, rmin


def scale_orthonormalize(frames: np.ndarray, factors: np.ndarray, steps: int = 1, backend: str | None = None):
    """Apply ``diag(factors)`` ``steps`` times, re-orthonormalizing after each.

    ``frames`` has shape (batch, n, n).  Returns the new frames and, per
    sample, the smallest diagonal entry of the triangular factors seen.
    """
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    factors = np.ascontiguousarray(factors, dtype=np.float64)
    if _use_numba(backend):
        return _scale_orthonormalize_numba(frames, factors, int(steps))
    return _scale_orthonormalize_numpy(frames, factors, int(steps))


def orthonormalize(mats: np.ndarray, backend: str | None = None):
    """Q factors (positive R diagonal) of a stack of square matrices, plus min |R_jj|."""
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    if _use_numba(backend):
        return _orthonormalize_numba(mats)
    q, d = _qr_positive_numpy(mats)
    return q, d.min(axis=1)


def _use_numba(backend: str | None) -> bool:
    if backend is None:
        return HAVE_NUMBA
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable or disabled")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}")


def active_backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
