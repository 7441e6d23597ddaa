"""Z_2 Poincare polynomials, Conley-index polynomials and Morse equations.

Betti numbers of (real) flag manifolds with Z_2 coefficients are the numbers
of Bruhat cells in each dimension, so everything reduces to counting minimal
coset representatives by length.  The base space is a point unless the
caller multiplies by an explicit P(t, X).
"""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .parabolic import ChamberElement, dimension_table, fix_flag_type, sign_profile, type_names
from .rootsys import WeylElement, WeylGroup, as_weyl_group

COEFFICIENTS = "Z2"


class IntPolynomial:
    """Integer polynomial in t, coefficients listed lowest degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[int] = ()):
        c = [int(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)

    @classmethod
    def monomial(cls, degree: int, coeff: int = 1) -> "IntPolynomial":
        return cls([0] * degree + [coeff])

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, t):
        return sum(c * t**k for k, c in enumerate(self.coeffs))

    def __eq__(self, other) -> bool:
        if isinstance(other, IntPolynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, int):
            return self.coeffs == IntPolynomial([other]).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return IntPolynomial(x + y for x, y in zip(a, b))

    def __neg__(self) -> "IntPolynomial":
        return IntPolynomial(-x for x in self.coeffs)

    def __sub__(self, other: "IntPolynomial") -> "IntPolynomial":
        return self + (-other)

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        if not self.coeffs or not other.coeffs:
            return IntPolynomial()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return IntPolynomial(out)

    def shift(self, k: int) -> "IntPolynomial":
        """Multiply by t**k."""
        if not self.coeffs:
            return self
        return IntPolynomial((0,) * k + self.coeffs)

    def divmod_one_plus_t(self) -> tuple["IntPolynomial", int]:
        """Divide by (1 + t); the remainder is the value at t = -1."""
        c = list(self.coeffs)
        if not c:
            return IntPolynomial(), 0
        # synthetic division from the top degree down
        q = [0] * len(c)
        for k in range(len(c) - 1, 0, -1):
            q[k - 1] = c[k] - q[k]
        rem = c[0] - q[0]
        q.pop()
        return IntPolynomial(q), rem

    def nonnegative(self) -> bool:
        return all(x >= 0 for x in self.coeffs)

    def __repr__(self) -> str:
        return f"IntPolynomial({list(self.coeffs)})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
            if k == 0:
                terms.append(str(c))
            elif c == 1:
                terms.append(mono)
            else:
                terms.append(f"{c}{mono}")
        return " + ".join(terms).replace("+ -", "- ")


ONE_PLUS_T = IntPolynomial([1, 1])


def _coset_length_poincare(wg: WeylGroup, ambient: frozenset, sub: frozenset) -> IntPolynomial:
    """Count minimal-length representatives of W_ambient / W_sub by length."""
    from .parabolic import weyl_subgroup

    big = weyl_subgroup(wg, ambient)
    small = weyl_subgroup(wg, sub)
    seen: set[WeylElement] = set()
    counts: Counter[int] = Counter()
    for w in sorted(big, key=lambda x: (x.length, x.word)):
        if w in seen:
            continue
        coset = {wg.multiply(w, v) for v in small}
        seen |= coset
        counts[min(x.length for x in coset)] += 1
    top = max(counts) if counts else 0
    return IntPolynomial(counts.get(k, 0) for k in range(top + 1))


def flag_poincare(wg: WeylGroup, theta: Iterable[int]) -> IntPolynomial:
    """Z_2 Poincare polynomial of F_Theta from its Bruhat cells."""
    wg = as_weyl_group(wg)
    return _coset_length_poincare(wg, frozenset(range(wg.rs.rank)), frozenset(theta))


def fix_poincare(wg: WeylGroup, H: ChamberElement, theta: Iterable[int], w: WeylElement) -> IntPolynomial:
    """Poincare polynomial of fix_Theta(H, w), a flag manifold of the Delta-subsystem."""
    wg = as_weyl_group(wg)
    ft = fix_flag_type(wg, H, theta, w)
    return _coset_length_poincare(wg, ft.delta, ft.inner_type)


def conley_poincare(wg: WeylGroup, H: ChamberElement, theta: Iterable[int], w: WeylElement) -> IntPolynomial:
    """t**n_w times the fixed-component polynomial (Thom isomorphism shift)."""
    wg = as_weyl_group(wg)
    n_w = sign_profile(wg, H, theta, w).n_plus
    return fix_poincare(wg, H, theta, w).shift(n_w)


class MorseEquationError(ArithmeticError):
    """Sum of Conley polynomials minus P(t, E) is not (1+t) times a nonnegative polynomial."""

    def __init__(self, difference: IntPolynomial, reason: str):
        super().__init__(f"{reason}: D(t) = {difference}")
        self.difference = difference
        self.reason = reason


def morse_residual(
    wg: WeylGroup,
    H: ChamberElement,
    theta: Iterable[int],
    base_poincare: IntPolynomial | None = None,
) -> IntPolynomial:
    """R(t) with sum CP(t, M_w) = P(t, E) + (1+t) R(t).

    ``base_poincare`` multiplies both the component and total-space
    polynomials (product bundle over a base with that Poincare polynomial).

    Raises :class:`MorseEquationError` when the difference is not divisible
    by 1+t or the quotient has a negative coefficient.
    """
    wg = as_weyl_group(wg)
    theta = frozenset(theta)
    base = base_poincare if base_poincare is not None else IntPolynomial([1])
    total = IntPolynomial()
    for row in dimension_table(wg, H, theta):
        total = total + conley_poincare(wg, H, theta, row.coset.rep)
    diff = total * base - flag_poincare(wg, theta) * base
    q, rem = diff.divmod_one_plus_t()
    if rem != 0:
        raise MorseEquationError(diff, "not divisible by 1+t")
    if not q.nonnegative():
        raise MorseEquationError(diff, "quotient has negative coefficients")
    return q


@dataclass(frozen=True)
class MorseRow:
    rep: str
    coset_size: int
    n_w: int
    fix_poly: IntPolynomial
    conley_poly: IntPolynomial
    delta: tuple[str, ...]
    inner_type: tuple[str, ...]


@dataclass(frozen=True)
class MorseTable:
    label: str
    h_values: tuple[str, ...]
    theta: tuple[str, ...]
    rows: tuple[MorseRow, ...]
    total_space_poly: IntPolynomial
    conley_sum: IntPolynomial
    residual: IntPolynomial | None
    failure: str | None = None
    coefficients: str = COEFFICIENTS

    @property
    def ok(self) -> bool:
        return self.residual is not None

    def to_dict(self) -> dict:
        return {
            "root_system": self.label,
            "h": list(self.h_values),
            "theta": list(self.theta),
            "coefficients": self.coefficients,
            "components": [
                {
                    "rep": r.rep,
                    "coset_size": r.coset_size,
                    "n_w": r.n_w,
                    "fix_poly": list(r.fix_poly.coeffs),
                    "conley_poly": list(r.conley_poly.coeffs),
                    "delta": list(r.delta),
                    "inner_type": list(r.inner_type),
                }
                for r in self.rows
            ],
            "total_space_poly": list(self.total_space_poly.coeffs),
            "conley_sum": list(self.conley_sum.coeffs),
            "residual": None if self.residual is None else list(self.residual.coeffs),
            "failure": self.failure,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["rep", "coset_size", "n_w", "fix_poly", "conley_poly", "delta", "inner_type"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([
                r.rep, r.coset_size, r.n_w,
                " ".join(map(str, r.fix_poly.coeffs)),
                " ".join(map(str, r.conley_poly.coeffs)),
                " ".join(r.delta), " ".join(r.inner_type),
            ])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [
            f"**{self.label}**, H = ({', '.join(self.h_values)}), Theta = {{{', '.join(self.theta)}}}, "
            f"coefficients {self.coefficients}",
            "",
            "| rep | size | n_w | P(fix) | CP | Delta | inner type |",
            "|---|---|---|---|---|---|---|",
        ]
        for r in self.rows:
            lines.append(
                f"| {r.rep} | {r.coset_size} | {r.n_w} | {r.fix_poly} | {r.conley_poly} "
                f"| {', '.join(r.delta) or '-'} | {', '.join(r.inner_type) or '-'} |"
            )
        lines += ["", f"- sum CP = {self.conley_sum}", f"- P(F) = {self.total_space_poly}"]
        lines.append(f"- R(t) = {self.residual}" if self.residual is not None else f"- R(t): FAILED ({self.failure})")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = ["rep", "size", "n_w", "P(fix)", "CP", "Delta", "inner"]
        body = [
            [r.rep, str(r.coset_size), str(r.n_w), str(r.fix_poly), str(r.conley_poly),
             ",".join(r.delta) or "-", ",".join(r.inner_type) or "-"]
            for r in self.rows
        ]
        widths = [max(len(x) for x in col) for col in zip(header, *body)]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        lines = [
            f"{self.label}  H=({', '.join(self.h_values)})  Theta={{{', '.join(self.theta)}}}  [{self.coefficients}]",
            fmt.format(*header),
            fmt.format(*("-" * w for w in widths)),
        ]
        lines += [fmt.format(*row) for row in body]
        lines.append(f"sum CP   = {self.conley_sum}")
        lines.append(f"P(F)     = {self.total_space_poly}")
        if self.residual is not None:
            lines.append(f"R(t)     = {self.residual}")
        else:
            lines.append(f"R(t)     : FAILED ({self.failure})")
        return "\n".join(lines) + "\n"


def morse_table(wg: WeylGroup, H: ChamberElement, theta: Iterable[int]) -> MorseTable:
    wg = as_weyl_group(wg)
    theta = frozenset(theta)
    rows = []
    total = IntPolynomial()
    for row in dimension_table(wg, H, theta):
        fp = fix_poincare(wg, H, theta, row.coset.rep)
        cp = fp.shift(row.profile.n_plus)
        total = total + cp
        rows.append(MorseRow(
            row.coset.rep.word_str(), row.coset.size, row.profile.n_plus, fp, cp,
            tuple(type_names(row.fix.delta)), tuple(type_names(row.fix.inner_type)),
        ))
    residual, failure = None, None
    try:
        residual = morse_residual(wg, H, theta)
    except MorseEquationError as exc:
        failure = str(exc)
    return MorseTable(
        label=wg.rs.label,
        h_values=tuple(str(v) for v in H.values),
        theta=tuple(type_names(theta)),
        rows=tuple(rows),
        total_space_poly=flag_poincare(wg, theta),
        conley_sum=total,
        residual=residual,
        failure=failure,
    )
