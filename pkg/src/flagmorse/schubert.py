"""Closures of stable sets in the Bruhat-cell model of the maximal flag manifold.

Cells of F are indexed by W.  For H in the closed chamber, the stable set of
the Morse component through w b is the union of the cells in the left coset
W_H w.  Closures are computed twice: as Bruhat upper sets and by iterated
fiber saturation (the gamma operators), starting from the repeller.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .parabolic import ChamberElement, double_cosets, weyl_subgroup
from .rootsys import ConfigurationError, WeylElement, WeylGroup, as_weyl_group, bruhat_leq, longest_element


@dataclass(frozen=True)
class CellSet:
    """A set of Bruhat cells of the maximal flag manifold."""

    members: frozenset[WeylElement]
    group: WeylGroup = field(repr=False, compare=False)
    h_zero: frozenset[int] = frozenset()

    def __contains__(self, w) -> bool:
        return w in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members, key=lambda w: (w.length, w.word)))

    def __le__(self, other: "CellSet") -> bool:
        return self.members <= other.members

    def words(self) -> list[str]:
        return [w.word_str() for w in self]

    def is_saturated(self) -> bool:
        """True when W_H . members = members."""
        wg = self.group
        left = weyl_subgroup(wg, self.h_zero)
        return all(wg.multiply(u, w) in self.members for u in left for w in self.members)

    def project(self, theta: Iterable[int]) -> list[str]:
        """Images in W / W_Theta, as minimal coset representatives."""
        wg = self.group
        right = weyl_subgroup(wg, theta)
        reps = {min((wg.multiply(w, v) for v in right), key=lambda x: (x.length, x.word)) for w in self.members}
        return [w.word_str() for w in sorted(reps, key=lambda x: (x.length, x.word))]


def _check_rep(wg: WeylGroup, H: ChamberElement, w: WeylElement) -> None:
    if w not in wg:
        raise ConfigurationError(f"{w!r} is not an element of the Weyl group of {wg.rs.label}")


def stable_cells(wg, H: ChamberElement, w: WeylElement) -> CellSet:
    """Cells of the stable set of the component through w: the coset W_H w."""
    wg = as_weyl_group(wg)
    left = weyl_subgroup(wg, H.theta_h)
    return CellSet(frozenset(wg.multiply(u, w) for u in left), wg, H.theta_h)


def closure_bruhat(wg, H: ChamberElement, w: WeylElement) -> CellSet:
    """Union of the cosets W_H s that contain some s >= w in the Bruhat order."""
    wg = as_weyl_group(wg)
    _check_rep(wg, H, w)
    out: set[WeylElement] = set()
    for c in double_cosets(wg, H, ()):
        if any(bruhat_leq(wg, w, s) for s in c.members):
            out |= c.members
    return CellSet(frozenset(out), wg, H.theta_h)


def gamma(i: int, S: CellSet) -> CellSet:
    """Fiber saturation for the projection onto F_{a_i}: S together with S s_i."""
    wg = S.group
    if not 0 <= i < wg.rs.rank:
        raise ConfigurationError(f"simple-root index {i} out of range for {wg.rs.label}")
    s = wg.generators[i]
    return CellSet(S.members | frozenset(wg.multiply(x, s) for x in S.members), wg, S.h_zero)


def closure_gamma(wg, H: ChamberElement, w: WeylElement, word: Sequence[int] | None = None) -> CellSet:
    """Closure of the stable set from the repeller by gamma operators.

    ``word`` is a reduced word (0-based letters, left to right) of w0 w, where
    w0 is the longest element; the first letter's gamma is applied first.
    Defaults to the stored lexicographically smallest reduced word.
    """
    wg = as_weyl_group(wg)
    _check_rep(wg, H, w)
    w0 = longest_element(wg)
    target = wg.multiply(w0, w)
    if word is None:
        word = target.word
    word = tuple(word)
    if len(word) != target.length or wg.from_word(word) != target:
        raise ConfigurationError(f"{word} is not a reduced word of w0 w = {target.word_str()}")
    S = stable_cells(wg, H, w0)
    for i in word:
        S = gamma(i, S)
    return S


def attraction_domain(wg, H: ChamberElement, w: WeylElement) -> CellSet:
    """At a point base the domain of attraction of the component is the stable-set closure."""
    return closure_bruhat(wg, H, w)


@dataclass(frozen=True)
class ClosureReport:
    rep: str
    bruhat: CellSet
    gamma: CellSet
    word: tuple[int, ...]

    @property
    def equal(self) -> bool:
        return self.bruhat.members == self.gamma.members

    def to_dict(self) -> dict:
        return {
            "rep": self.rep,
            "gamma_word": "".join(f"s{i + 1}" for i in self.word) or "1",
            "closure_bruhat": self.bruhat.words(),
            "closure_gamma": self.gamma.words(),
            "equal": self.equal,
        }


def closure_report(wg, H: ChamberElement, w: WeylElement, word: Sequence[int] | None = None) -> ClosureReport:
    wg = as_weyl_group(wg)
    g = closure_gamma(wg, H, w, word)
    used = tuple(word) if word is not None else wg.multiply(longest_element(wg), w).word
    return ClosureReport(w.word_str(), closure_bruhat(wg, H, w), g, used)


def closure_reports(wg, H: ChamberElement) -> list[ClosureReport]:
    """One report per Morse component (double coset with Theta empty)."""
    wg = as_weyl_group(wg)
    return [closure_report(wg, H, c.rep) for c in double_cosets(wg, H, ())]


def reports_to_json(reports: Sequence[ClosureReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)
