"""Failure of isotropy invariance of the linearization space for singular H.

For H regular, or for w = 1 with Theta inside Theta(H), the space
l_{wb} = w n^-_Theta cap (n^-_H + n^+_H) is invariant under the isotropy
Z_H cap P^w.  For singular H and w != 1 it need not be; the sl(3) data below
exhibits a bracket leaving l_{wb}.  Work is done in the frame pulled back by
w, where rates are evaluated on w^{-1} H.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


def unit(n: int, i: int, j: int) -> np.ndarray:
    """Integer matrix unit E_ij (1-based indices)."""
    m = np.zeros((n, n), dtype=np.int64)
    m[i - 1, j - 1] = 1
    return m


def bracket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _root_of(m: np.ndarray) -> tuple[int, int] | None:
    """(i, j) if m is a nonzero multiple of a single E_ij, i != j; 0-based."""
    nz = np.argwhere(m != 0)
    if len(nz) != 1 or nz[0][0] == nz[0][1]:
        return None
    return int(nz[0][0]), int(nz[0][1])


def _in_theta_span(i: int, j: int, theta: frozenset) -> bool:
    lo, hi = min(i, j), max(i, j)
    return all(k in theta for k in range(lo, hi))


@dataclass
class InvarianceReport:
    invariant: bool
    witnesses: list[tuple[tuple[int, int], tuple[int, int]]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.invariant


def isotropy_invariance(h: Sequence, perm: Sequence[int], theta: Iterable[int] = ()) -> InvarianceReport:
    """Is l_{wb} stable under brackets with the Lie algebra of Z_H cap P^w?

    ``h`` is the diagonal of H (any order), ``perm`` the permutation of w
    (0-based, w e_i = e_perm[i]).  Pulling back by w, the rates are those of
    h' = w^{-1} H, l' is spanned by E_ij with i > j, (i, j) outside
    <Theta>, and h'_i != h'_j, and the isotropy by E_ij with h'_i = h'_j
    that lie in the parabolic p_Theta (i < j or inside <Theta>).
    Witness pairs are 0-based (isotropy root, l root).
    """
    theta = frozenset(theta)
    n = len(h)
    hp = [h[perm[i]] for i in range(n)]
    ell = {(i, j) for i in range(n) for j in range(n)
           if i > j and not _in_theta_span(i, j, theta) and hp[i] != hp[j]}
    iso = {(i, j) for i in range(n) for j in range(n)
           if i != j and hp[i] == hp[j] and (i < j or _in_theta_span(i, j, theta))}
    witnesses = []
    for a in sorted(iso):
        for b in sorted(ell):
            r = _root_of(bracket(unit(n, a[0] + 1, a[1] + 1), unit(n, b[0] + 1, b[1] + 1)))
            if r is not None and r not in ell:
                witnesses.append((a, b))
    return InvarianceReport(not witnesses, witnesses)


@dataclass
class CounterexampleReport:
    checks: dict[str, bool]
    values: dict[str, object]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": self.checks, "values": self.values}


def sl3_counterexample() -> CounterexampleReport:
    """sl(3), H = diag(-1, -1, 2), w = (23), X_alpha = E_21, X_beta = E_13.

    All arithmetic is on integer matrices.
    """
    n = 3
    H = np.diag([-1, -1, 2]).astype(np.int64)
    perm = (0, 2, 1)  # the transposition (23)
    w = np.zeros((n, n), dtype=np.int64)
    w[list(perm), range(n)] = 1
    w_inv = w.T
    h_pulled = w_inv @ H @ w  # w^{-1} H, as the diagonal matrix w^{-1} H w
    x_alpha = unit(n, 2, 1)
    x_beta = unit(n, 1, 3)

    def value(root: tuple[int, int]) -> int:
        i, j = root
        return int(h_pulled[i, i] - h_pulled[j, j])

    alpha, beta = _root_of(x_alpha), _root_of(x_beta)
    br = bracket(x_alpha, x_beta)
    sum_root = _root_of(br)
    l_pulled = {(i, j) for i in range(n) for j in range(n) if i > j and value((i, j)) != 0}
    inv = isotropy_invariance(np.diag(H).tolist(), perm)

    checks = {
        "bracket_nonzero": bool(br.any()),
        "bracket_is_E23": bool(np.array_equal(br, unit(n, 2, 3))),
        "alpha_value_3": value(alpha) == 3,
        "beta_value_0": value(beta) == 0,
        "alpha_plus_beta_is_alpha23": sum_root == (1, 2),
        "alpha_plus_beta_positive": sum_root is not None and sum_root[0] < sum_root[1],
        "alpha_plus_beta_value_3": sum_root is not None and value(sum_root) == 3,
        "x_alpha_in_l": alpha in l_pulled,
        "x_beta_in_isotropy": value(beta) == 0 and beta[0] < beta[1],
        "bracket_leaves_l": sum_root not in l_pulled,
        "invariance_fails": not inv.invariant,
    }
    values = {
        "H": np.diag(H).tolist(),
        "w_inverse_H": np.diag(h_pulled).tolist(),
        "bracket": br.tolist(),
        "alpha_of_w_inverse_H": value(alpha),
        "beta_of_w_inverse_H": value(beta),
        "alpha_plus_beta_of_w_inverse_H": value(sum_root) if sum_root else None,
    }
    return CounterexampleReport(checks, values)


paper_counterexample = sl3_counterexample  # name used by the acceptance criteria
