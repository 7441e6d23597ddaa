"""Finite crystallographic root systems and their Weyl groups.

All combinatorics is exact: ambient vectors are tuples of
:class:`fractions.Fraction`.  Type A_r lives in the sum-zero hyperplane of
Q^(r+1) so that the sl(n) numerics in :mod:`flagmorse.flowlab` share its
coordinates.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

Vector = tuple[Fraction, ...]

SUPPORTED_TYPES = ("A", "B", "C", "D", "G")
JSON_FORMAT = "flagmorse.rootsystem"
JSON_VERSION = 1


class ConfigurationError(ValueError):
    """Invalid root-system label, rank, or user-supplied parameter."""


def vec(values: Iterable) -> Vector:
    return tuple(Fraction(v) for v in values)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def add(u: Vector, v: Vector) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def scale(c, u: Vector) -> Vector:
    return tuple(c * a for a in u)


def neg(u: Vector) -> Vector:
    return tuple(-a for a in u)


def reflect(v: Vector, alpha: Vector) -> Vector:
    """Reflection of ``v`` through the hyperplane orthogonal to ``alpha``."""
    c = 2 * dot(v, alpha) / dot(alpha, alpha)
    return tuple(a - c * b for a, b in zip(v, alpha))


def solve_rational(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Vector:
    """Solve a nonsingular square system exactly by Gauss-Jordan elimination."""
    n = len(matrix)
    aug = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(row[-1] for row in aug)


def _unit(n: int, i: int) -> list[int]:
    e = [0] * n
    e[i] = 1
    return e


def _simple_roots(kind: str, rank: int) -> list[list[int]]:
    if kind == "A":
        n = rank + 1
        return [[a - b for a, b in zip(_unit(n, i), _unit(n, i + 1))] for i in range(rank)]
    if kind in "BCD":
        n = rank
        chain = [[a - b for a, b in zip(_unit(n, i), _unit(n, i + 1))] for i in range(rank - 1)]
        if kind == "B":
            last = _unit(n, n - 1)
        elif kind == "C":
            last = [2 * x for x in _unit(n, n - 1)]
        else:
            last = [a + b for a, b in zip(_unit(n, n - 2), _unit(n, n - 1))]
        return chain + [last]
    # G2 inside the sum-zero plane of Q^3: short root first.
    return [[1, -1, 0], [-2, 1, 1]]


def _check_label(kind: str, rank: int) -> None:
    if kind not in SUPPORTED_TYPES:
        raise ConfigurationError(f"unsupported root system type {kind!r}")
    if not isinstance(rank, int) or rank < 1:
        raise ConfigurationError(f"rank must be a positive integer, got {rank!r}")
    minimal = {"A": 1, "B": 2, "C": 2, "D": 3, "G": 2}[kind]
    if rank < minimal or (kind == "G" and rank != 2):
        raise ConfigurationError(f"invalid rank {rank} for type {kind}")


@dataclass(frozen=True)
class RootSystem:
    """A root system with a chosen base.

    ``roots`` lists the positive roots first (sorted by height, then
    lexicographically in simple-root coordinates) followed by their negatives
    in the same order, so ``roots[i + len(positives)] == -roots[i]``.
    """

    kind: str
    rank: int
    simple_roots: tuple[Vector, ...]
    roots: tuple[Vector, ...]
    cartan: tuple[tuple[int, ...], ...]

    @property
    def label(self) -> str:
        return f"{self.kind}{self.rank}"

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return len(self.simple_roots[0])

    @property
    def num_positive(self) -> int:
        return len(self.roots) // 2

    @property
    def positives(self) -> tuple[Vector, ...]:
        return self.roots[: self.num_positive]

    @property
    def negatives(self) -> tuple[Vector, ...]:
        return self.roots[self.num_positive:]

    @property
    def coroots(self) -> tuple[Vector, ...]:
        """Coroots H_a with inner(H_a, H) = a(H), identified through the inner form."""
        return self.simple_roots

    def inner(self, u: Sequence, v: Sequence) -> Fraction:
        return dot(u, v)

    @cached_property
    def index(self) -> dict[Vector, int]:
        return {r: i for i, r in enumerate(self.roots)}

    @cached_property
    def gram(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(dot(a, b) for b in self.simple_roots) for a in self.simple_roots)

    def simple_coordinates(self, v: Sequence) -> Vector:
        """Coordinates of ``v`` (in the span of the roots) in the basis of simple roots."""
        rhs = [dot(a, v) for a in self.simple_roots]
        return solve_rational(self.gram, rhs)

    @cached_property
    def root_coordinates(self) -> tuple[Vector, ...]:
        return tuple(self.simple_coordinates(r) for r in self.roots)

    def is_positive(self, root_index: int) -> bool:
        return root_index < self.num_positive

    def height(self, root_index: int) -> int:
        return int(sum(self.root_coordinates[root_index]))

    def support(self, root_index: int) -> frozenset[int]:
        """Simple roots occurring with nonzero coefficient."""
        return frozenset(i for i, c in enumerate(self.root_coordinates[root_index]) if c != 0)

    def coweight_vector(self, values: Sequence) -> Vector:
        """The vector H in the span of the roots with a_i(H) = values[i]."""
        if len(values) != self.rank:
            raise ConfigurationError(f"expected {self.rank} simple-root values, got {len(values)}")
        coeffs = solve_rational(self.gram, [Fraction(v) for v in values])
        out = [Fraction(0)] * self.dim
        for c, a in zip(coeffs, self.simple_roots):
            out = [x + c * y for x, y in zip(out, a)]
        return tuple(out)

    def root_name(self, i: int) -> str:
        return f"a{i + 1}"

    def to_json(self) -> str:
        def pairs(v):
            return [[x.numerator, x.denominator] for x in v]

        doc = {
            "format": JSON_FORMAT,
            "version": JSON_VERSION,
            "label": self.kind,
            "rank": self.rank,
            "cartan": [list(r) for r in self.cartan],
            "simple_roots": [pairs(a) for a in self.simple_roots],
            "roots": [pairs(r) for r in self.roots],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RootSystem":
        doc = json.loads(text)
        if doc.get("format") != JSON_FORMAT or doc.get("version") != JSON_VERSION:
            raise ConfigurationError("not a version-1 flagmorse root system document")
        rs = build_root_system(doc["label"], doc["rank"])
        stored = tuple(tuple(Fraction(n, d) for n, d in r) for r in doc["roots"])
        if stored != rs.roots or [list(r) for r in rs.cartan] != doc["cartan"]:
            raise ConfigurationError("root data does not match the standard realization")
        return rs


def build_root_system(kind: str, rank: int) -> RootSystem:
    """Build the root system of type ``kind`` and given rank.

    Roots are obtained by closing the simple roots under the simple
    reflections.
    """
    kind = str(kind).upper()
    _check_label(kind, rank)
    simple = tuple(vec(a) for a in _simple_roots(kind, rank))

    found = set(simple)
    frontier = list(simple)
    while frontier:
        nxt = []
        for r in frontier:
            for a in simple:
                s = reflect(r, a)
                if s not in found:
                    found.add(s)
                    nxt.append(s)
        frontier = nxt

    gram = [[dot(a, b) for b in simple] for a in simple]
    positives = []
    for r in found:
        coords = solve_rational(gram, [dot(a, r) for a in simple])
        if all(c >= 0 for c in coords):
            positives.append((sum(coords), tuple(coords), r))
    positives.sort()
    pos = tuple(p[2] for p in positives)
    roots = pos + tuple(neg(r) for r in pos)
    if set(roots) != found:
        raise AssertionError("root closure is not symmetric")
    cartan = tuple(
        tuple(int(2 * dot(a, b) / dot(b, b)) for b in simple) for a in simple
    )
    return RootSystem(kind=kind, rank=rank, simple_roots=simple, roots=roots, cartan=cartan)


@dataclass(frozen=True)
class WeylElement:
    """Element of a Weyl group.

    Identity is the permutation of the root list (``perm[i]`` is the index of
    ``w(roots[i])``); ``word`` is the lexicographically smallest reduced word,
    with 0-based simple-reflection indices and ``w = s[word[0]] ... s[word[-1]]``.
    """

    perm: tuple[int, ...]
    word: tuple[int, ...] = field(compare=False)

    @property
    def length(self) -> int:
        return len(self.word)

    def word_str(self) -> str:
        return "".join(f"s{i + 1}" for i in self.word) or "1"

    def __repr__(self) -> str:
        return f"WeylElement({self.word_str()})"


class WeylGroup:
    """Full enumeration of a finite Weyl group.

    Elements are generated breadth-first by right multiplication with simple
    reflections, scanning letters in increasing order; the first word found
    for each element is then its lexicographically smallest reduced word.
    """

    def __init__(self, rs: RootSystem):
        self.rs = rs
        n_roots = len(rs.roots)
        self._simple_perms = []
        for a in rs.simple_roots:
            self._simple_perms.append(tuple(rs.index[reflect(r, a)] for r in rs.roots))

        identity = tuple(range(n_roots))
        elements = [WeylElement(identity, ())]
        lookup = {identity: 0}
        level = [0]
        while level:
            nxt = []
            for idx in level:
                u = elements[idx]
                for i, sp in enumerate(self._simple_perms):
                    p = tuple(u.perm[sp[k]] for k in range(n_roots))
                    if p not in lookup:
                        lookup[p] = len(elements)
                        elements.append(WeylElement(p, u.word + (i,)))
                        nxt.append(lookup[p])
            level = nxt
        self.elements: list[WeylElement] = elements
        self._lookup = lookup
        self.generators = [self.from_perm(sp) for sp in self._simple_perms]
        self.identity = elements[0]
        self.longest = max(range(len(elements)), key=lambda k: elements[k].length)
        self._interval_cache: dict[tuple[int, ...], frozenset] = {}

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, w) -> bool:
        return isinstance(w, WeylElement) and w.perm in self._lookup

    def from_perm(self, perm: Sequence[int]) -> WeylElement:
        return self.elements[self._lookup[tuple(perm)]]

    def position(self, w: WeylElement) -> int:
        return self._lookup[w.perm]

    def multiply(self, u: WeylElement, v: WeylElement) -> WeylElement:
        """The product u*v (apply v first)."""
        return self.from_perm(tuple(u.perm[k] for k in v.perm))

    def inverse(self, w: WeylElement) -> WeylElement:
        inv = [0] * len(w.perm)
        for k, j in enumerate(w.perm):
            inv[j] = k
        return self.from_perm(inv)

    def from_word(self, word: Iterable[int]) -> WeylElement:
        w = self.identity
        for i in word:
            if not 0 <= i < self.rs.rank:
                raise ConfigurationError(f"simple reflection index {i + 1} out of range")
            w = self.multiply(w, self.generators[i])
        return w

    def reflection(self, i: int) -> WeylElement:
        return self.generators[i]

    def inversion_count(self, w: WeylElement) -> int:
        """Number of positive roots sent to negative roots."""
        npos = self.rs.num_positive
        return sum(1 for k in range(npos) if w.perm[k] >= npos)

    def lower_interval(self, w: WeylElement) -> frozenset[WeylElement]:
        """All u with u <= w, read off subwords of the stored reduced word of w."""
        cached = self._interval_cache.get(w.perm)
        if cached is not None:
            return cached
        reached = {self.identity}
        for i in w.word:
            s = self.generators[i]
            step = set()
            for u in reached:
                us = self.multiply(u, s)
                if us.length == u.length + 1:
                    step.add(us)
            reached |= step
        out = frozenset(reached)
        self._interval_cache[w.perm] = out
        return out

    def descents_right(self, w: WeylElement) -> list[int]:
        return [i for i, s in enumerate(self.generators) if self.multiply(w, s).length < w.length]


def generate_weyl(rs: RootSystem) -> WeylGroup:
    return WeylGroup(rs)


_GROUPS: dict[RootSystem, WeylGroup] = {}


def as_weyl_group(obj) -> WeylGroup:
    """Accept a WeylGroup or a RootSystem; groups built from root systems are cached."""
    if isinstance(obj, WeylGroup):
        return obj
    if obj not in _GROUPS:
        _GROUPS[obj] = WeylGroup(obj)
    return _GROUPS[obj]


def bruhat_leq(wg: WeylGroup, u: WeylElement, w: WeylElement) -> bool:
    """Bruhat-Chevalley order: u <= w iff a subword of a reduced word of w is reduced for u."""
    if u.length > w.length:
        return False
    return u in wg.lower_interval(w)


def longest_element(wg: WeylGroup) -> WeylElement:
    return wg.elements[wg.longest]


def act(wg: WeylGroup, w: WeylElement, v: Sequence) -> Vector:
    """Apply w to an ambient vector by composing the reflections of its word."""
    out = vec(v)
    for i in reversed(w.word):
        out = reflect(out, wg.rs.simple_roots[i])
    return out


def reduced_words(wg: WeylGroup, w: WeylElement) -> list[tuple[int, ...]]:
    """Every reduced word of ``w`` in lexicographic order."""
    memo: dict[tuple[int, ...], list[tuple[int, ...]]] = {}

    def rec(x: WeylElement) -> list[tuple[int, ...]]:
        if x.length == 0:
            return [()]
        if x.perm in memo:
            return memo[x.perm]
        out = []
        for i in wg.descents_right(x):
            out.extend(word + (i,) for word in rec(wg.multiply(x, wg.generators[i])))
        memo[x.perm] = sorted(out)
        return memo[x.perm]

    return rec(w)


def parse_word(text: str) -> tuple[int, ...]:
    """Parse ``"s1s2s1"``, ``"1 2 1"`` or ``"1,2,1"``; ``"1"``, ``"e"`` and ``""`` are the identity."""
    t = text.strip().lower()
    if t in ("", "1", "e", "id"):
        return ()
    parts = t.replace("s", " ").replace(",", " ").split()
    try:
        return tuple(int(x) - 1 for x in parts)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse Weyl word {text!r}") from exc
