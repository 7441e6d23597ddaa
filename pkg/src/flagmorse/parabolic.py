"""Parabolic subgroups, double cosets and the sign-profile dimension calculus.

Everything here is indexed by a chamber element H (through its simple-root
values), a flag type Theta (a subset of simple-root indices) and a Weyl group
element w.  Simple roots are referred to by 0-based index internally and by
the names ``a1, a2, ...`` at the user boundary.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .rootsys import (
    ConfigurationError,
    RootSystem,
    Vector,
    WeylElement,
    WeylGroup,
    act,
    dot,
    reflect,
    solve_rational,
)

FlagType = frozenset  # frozenset[int] of simple-root indices


def flag_type(rs: RootSystem, names: Iterable) -> frozenset[int]:
    """Parse simple-root names (``"a2"``, ``"alpha2"``, ``2``) into a flag type."""
    out = set()
    for name in names:
        s = str(name).strip().lower()
        for prefix in ("alpha", "a"):
            if s.startswith(prefix):
                s = s[len(prefix):]
                break
        try:
            i = int(s) - 1
        except ValueError as exc:
            raise ConfigurationError(f"malformed simple-root name {name!r}") from exc
        if not 0 <= i < rs.rank:
            raise ConfigurationError(f"simple root {name!r} out of range for {rs.label}")
        out.add(i)
    return frozenset(out)


def type_names(theta: Iterable[int]) -> list[str]:
    return [f"a{i + 1}" for i in sorted(theta)]


@dataclass(frozen=True)
class ChamberElement:
    """H in the closed positive chamber, given by its simple-root values."""

    values: tuple[Fraction, ...]
    vector: Vector

    @classmethod
    def from_values(cls, rs: RootSystem, values: Sequence) -> "ChamberElement":
        vals = tuple(Fraction(v) for v in values)
        if len(vals) != rs.rank:
            raise ConfigurationError(f"H needs {rs.rank} simple-root values, got {len(vals)}")
        if any(v < 0 for v in vals):
            raise ConfigurationError("H must lie in the closed positive chamber (all values >= 0)")
        return cls(vals, rs.coweight_vector(vals))

    @classmethod
    def regular(cls, rs: RootSystem) -> "ChamberElement":
        return cls.from_values(rs, [1] * rs.rank)

    @classmethod
    def with_zeros(cls, rs: RootSystem, theta_h: Iterable[int]) -> "ChamberElement":
        """The element with value 0 on ``theta_h`` and 1 on the other simple roots."""
        z = set(theta_h)
        return cls.from_values(rs, [0 if i in z else 1 for i in range(rs.rank)])

    @property
    def theta_h(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.values) if v == 0)

    @property
    def is_regular(self) -> bool:
        return not self.theta_h

    def root_value(self, root: Sequence) -> Fraction:
        return dot(root, self.vector)


def theta_span(rs: RootSystem, theta: Iterable[int]) -> frozenset[int]:
    """Indices of the roots in <Theta>, the roots spanned by Theta."""
    t = frozenset(theta)
    return frozenset(k for k in range(len(rs.roots)) if rs.support(k) <= t)


def weyl_subgroup(wg: WeylGroup, theta: Iterable[int]) -> frozenset[WeylElement]:
    """The subgroup W_Theta generated by the simple reflections in ``theta``."""
    gens = [wg.generators[i] for i in sorted(set(theta))]
    seen = {wg.identity}
    frontier = [wg.identity]
    while frontier:
        nxt = []
        for u in frontier:
            for s in gens:
                us = wg.multiply(u, s)
                if us not in seen:
                    seen.add(us)
                    nxt.append(us)
        frontier = nxt
    return frozenset(seen)


def _word_key(w: WeylElement):
    return (w.length, w.word)


@dataclass(frozen=True)
class DoubleCoset:
    rep: WeylElement
    members: frozenset[WeylElement]
    left: frozenset[WeylElement]
    right: frozenset[WeylElement]

    def __contains__(self, w) -> bool:
        return w in self.members

    @property
    def size(self) -> int:
        return len(self.members)


def double_cosets(wg: WeylGroup, H: ChamberElement, theta: Iterable[int]) -> list[DoubleCoset]:
    """The double cosets W_H \\ W / W_Theta, ordered by representative (length, word)."""
    left = weyl_subgroup(wg, H.theta_h)
    right = weyl_subgroup(wg, theta)
    assigned: set[WeylElement] = set()
    out = []
    for w in sorted(wg.elements, key=_word_key):
        if w in assigned:
            continue
        members = frozenset(wg.multiply(wg.multiply(u, w), v) for u in left for v in right)
        assigned |= members
        rep = min(members, key=_word_key)
        out.append(DoubleCoset(rep, members, left, right))
    out.sort(key=lambda c: _word_key(c.rep))
    return out


def coset_of(cosets: Sequence[DoubleCoset], w: WeylElement) -> DoubleCoset:
    for c in cosets:
        if w in c.members:
            return c
    raise KeyError(w)


@dataclass(frozen=True)
class SignProfile:
    """Root counts of the unstable, fixed and stable directions at w b_Theta.

    ``classified`` maps the index of each negative root beta outside <Theta>
    to the sign of (w beta)(H).
    """

    n_plus: int
    n_zero: int
    n_minus: int
    classified: tuple[tuple[int, int], ...]

    @property
    def total(self) -> int:
        return self.n_plus + self.n_zero + self.n_minus


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def sign_profile(
    wg: WeylGroup, H: ChamberElement, theta: Iterable[int], w: WeylElement
) -> SignProfile:
    """Classify every beta in Pi^- minus <Theta> by the sign of (w beta)(H).

    ``n_plus`` is the unstable dimension n_w (the Conley-index shift),
    ``n_zero`` the dimension of the fixed component and ``n_minus`` the stable
    fiber dimension.
    """
    rs = wg.rs
    span = theta_span(rs, theta)
    classified = []
    counts = {1: 0, 0: 0, -1: 0}
    for k in range(rs.num_positive, len(rs.roots)):
        if k in span:
            continue
        image = rs.roots[w.perm[k]]
        sgn = _sign(H.root_value(image))
        counts[sgn] += 1
        classified.append((k, sgn))
    return SignProfile(counts[1], counts[0], counts[-1], tuple(classified))


def flag_dimension(rs: RootSystem, theta: Iterable[int]) -> int:
    """dim F_Theta = |Pi^- minus <Theta>|."""
    return rs.num_positive - sum(1 for k in theta_span(rs, theta) if rs.is_positive(k))


def fundamental_coweight_sum(rs: RootSystem, theta: Iterable[int]) -> Vector:
    """Canonical H_Theta: the sum of the fundamental coweights of the roots not in Theta."""
    t = set(theta)
    return rs.coweight_vector([0 if i in t else 1 for i in range(rs.rank)])


def project_onto_span(gens: Sequence[Vector], v: Vector) -> Vector:
    """Orthogonal projection of ``v`` onto span(gens), exactly, via the Gram system."""
    if not gens:
        return tuple(Fraction(0) for _ in v)
    gram = [[dot(a, b) for b in gens] for a in gens]
    coeffs = solve_rational(gram, [dot(a, v) for a in gens])
    out = [Fraction(0)] * len(v)
    for c, a in zip(coeffs, gens):
        out = [x + c * y for x, y in zip(out, a)]
    return tuple(out)


def dominant_in_subsystem(rs: RootSystem, delta: Iterable[int], v: Vector) -> Vector:
    """Conjugate ``v`` by W(Delta) into the closed positive chamber of the Delta-subsystem."""
    d = sorted(delta)
    out = v
    changed = True
    while changed:
        changed = False
        for i in d:
            a = rs.simple_roots[i]
            if dot(a, out) < 0:
                out = reflect(out, a)
                changed = True
    return out


@dataclass(frozen=True)
class FixType:
    """The fixed component as the flag manifold of the Delta-subsystem of type ``inner_type``.

    ``h0`` is the orthogonal projection of w H_Theta onto a(Delta); the flag
    type is read off after moving ``h0`` into the positive chamber of the
    subsystem, since the manifold only depends on its W(Delta)-orbit.
    """

    delta: frozenset[int]
    h0: Vector
    inner_type: frozenset[int]


def fix_flag_type(
    wg: WeylGroup, H: ChamberElement, theta: Iterable[int], w: WeylElement
) -> FixType:
    rs = wg.rs
    delta = H.theta_h
    h_theta = fundamental_coweight_sum(rs, theta)
    wh = act(wg, w, h_theta)
    h0 = project_onto_span([rs.simple_roots[i] for i in sorted(delta)], wh)
    dom = dominant_in_subsystem(rs, delta, h0)
    inner = frozenset(i for i in delta if dot(rs.simple_roots[i], dom) == 0)
    return FixType(delta, h0, inner)


def subsystem_flag_dimension(rs: RootSystem, delta: Iterable[int], inner: Iterable[int]) -> int:
    """Dimension of the flag manifold of type ``inner`` of the Delta-subsystem."""
    d = frozenset(delta)
    pos_delta = sum(1 for k in range(rs.num_positive) if rs.support(k) <= d)
    pos_inner = sum(1 for k in range(rs.num_positive) if rs.support(k) <= frozenset(inner))
    return pos_delta - pos_inner


@dataclass(frozen=True)
class TableRow:
    coset: DoubleCoset
    profile: SignProfile
    fix: FixType


def dimension_table(wg: WeylGroup, H: ChamberElement, theta: Iterable[int]) -> list[TableRow]:
    """One row per Morse component (double coset) with its sign profile and fixed-component type."""
    theta = frozenset(theta)
    rows = []
    for c in double_cosets(wg, H, theta):
        rows.append(TableRow(c, sign_profile(wg, H, theta, c.rep), fix_flag_type(wg, H, theta, c.rep)))
    return rows


TABLE_COLUMNS = ("rep", "coset_size", "n_plus", "n_zero", "n_minus", "delta", "inner_type")


def table_records(rows: Sequence[TableRow]) -> list[dict]:
    return [
        {
            "rep": r.coset.rep.word_str(),
            "coset_size": r.coset.size,
            "n_plus": r.profile.n_plus,
            "n_zero": r.profile.n_zero,
            "n_minus": r.profile.n_minus,
            "delta": type_names(r.fix.delta),
            "inner_type": type_names(r.fix.inner_type),
        }
        for r in rows
    ]


def table_to_json(rows: Sequence[TableRow]) -> str:
    return json.dumps(table_records(rows), indent=2)


def table_to_csv(rows: Sequence[TableRow]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rec in table_records(rows):
        rec = dict(rec, delta=" ".join(rec["delta"]), inner_type=" ".join(rec["inner_type"]))
        writer.writerow(rec)
    return buf.getvalue()
