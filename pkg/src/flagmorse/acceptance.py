"""The acceptance suite: nine criteria with runtime budgets.

Each criterion returns a :class:`CriterionResult`; ``run_suite`` runs a
selection in order.  Results carry timings, but ``to_dict(timing=False)``
drops them so that summaries of identical runs are byte-identical.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import parabolic as pb
from .cohomology import (
    IntPolynomial,
    MorseEquationError,
    fix_poincare,
    flag_poincare,
    morse_residual,
)
from .rootsys import (
    WeylGroup,
    as_weyl_group,
    bruhat_leq,
    build_root_system,
    longest_element,
    reduced_words,
)
from .schubert import closure_bruhat, closure_gamma


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    budget: float
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return self.seconds < self.budget

    @property
    def ok(self) -> bool:
        return self.passed and self.within_budget

    def line(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        extra = "" if self.within_budget else f" (over budget {self.budget:g}s)"
        return f"{verdict} criterion {self.number}: {self.name} [{self.seconds:.2f}s]{extra}"

    def to_dict(self, timing: bool = False) -> dict:
        d = {"criterion": self.number, "name": self.name, "passed": self.passed, "detail": self.detail}
        if timing:
            d["seconds"] = round(self.seconds, 3)
            d["budget"] = self.budget
            d["ok"] = self.ok
        return d


def _all_subsets(r: int):
    for k in range(r + 1):
        yield from (frozenset(c) for c in itertools.combinations(range(r), k))


def _chamber(rs, theta_h) -> pb.ChamberElement:
    return pb.ChamberElement.with_zeros(rs, theta_h)


# --- 1 ----------------------------------------------------------------------

def regular_morse_equation() -> tuple[bool, dict]:
    checked, bad = 0, []
    for r in (1, 2, 3):
        wg = as_weyl_group(build_root_system("A", r))
        H = pb.ChamberElement.regular(wg.rs)
        for theta in _all_subsets(r):
            total = IntPolynomial()
            for c in pb.double_cosets(wg, H, theta):
                total = total + IntPolynomial.monomial(pb.sign_profile(wg, H, theta, c.rep).n_plus)
            checked += 1
            if total != flag_poincare(wg, theta):
                bad.append(f"A{r} Theta={pb.type_names(theta)}")
    return not bad, {"cases": checked, "failures": bad}


# --- 2 ----------------------------------------------------------------------

def nonregular_morse_equation() -> tuple[bool, dict]:
    checked, bad = 0, []
    for r in (2, 3):
        wg = as_weyl_group(build_root_system("A", r))
        for theta_h in _all_subsets(r):
            H = _chamber(wg.rs, theta_h)
            for theta in _all_subsets(r):
                checked += 1
                try:
                    R = morse_residual(wg, H, theta)
                except MorseEquationError as exc:
                    bad.append(f"A{r} Theta(H)={pb.type_names(theta_h)} Theta={pb.type_names(theta)}: {exc}")
                    continue
                if not R.nonnegative():
                    bad.append(f"A{r} Theta(H)={pb.type_names(theta_h)} Theta={pb.type_names(theta)}: R={R}")
    # the named case
    wg = as_weyl_group(build_root_system("A", 2))
    H = _chamber(wg.rs, {0})
    R = morse_residual(wg, H, ())
    cp = IntPolynomial()
    for c in pb.double_cosets(wg, H, ()):
        cp = cp + fix_poincare(wg, H, (), c.rep).shift(pb.sign_profile(wg, H, (), c.rep).n_plus)
    expected = IntPolynomial((1, 1)) * IntPolynomial((1, 1, 1))
    named = R.is_zero() and cp == expected
    if not named:
        bad.append(f"A2 Theta(H)=[a1]: R={R}, sum CP={cp}")
    return not bad, {"cases": checked, "a2_named_case": {"R": str(R), "sum_cp": str(cp)}, "failures": bad}


# --- 3 ----------------------------------------------------------------------

def closure_equivalence() -> tuple[bool, dict]:
    checked, bad = 0, []
    for r in (2, 3):
        wg = as_weyl_group(build_root_system("A", r))
        w0 = longest_element(wg)
        for theta_h in _all_subsets(r):
            H = _chamber(wg.rs, theta_h)
            for c in pb.double_cosets(wg, H, ()):
                ref = closure_bruhat(wg, H, c.rep)
                for word in reduced_words(wg, wg.multiply(w0, c.rep)):
                    checked += 1
                    if closure_gamma(wg, H, c.rep, word).members != ref.members:
                        bad.append(f"A{r} Theta(H)={pb.type_names(theta_h)} w={c.rep.word_str()} word={word}")
    return not bad, {"cases": checked, "failures": bad}


# --- 4 ----------------------------------------------------------------------

def dimension_vs_numerics(tol: float = 1e-5) -> tuple[bool, dict]:
    from .flowlab.flags import SplitElement
    from .flowlab.linearization import linearized_eigenvalues

    checked, worst, bad = 0, 0.0, []
    for n in (2, 3, 4):
        r = n - 1
        for theta_h in _all_subsets(r):
            Hs = SplitElement.with_zeros(n, theta_h) if theta_h else SplitElement.regular(n)
            wg = Hs.weyl_group()
            rs = wg.rs
            Hc = Hs.chamber()
            for theta in _all_subsets(r):
                span = pb.theta_span(rs, theta)
                for w in wg.elements:
                    checked += 1
                    exact = sorted(
                        float(Hc.root_value(rs.roots[w.perm[k]]))
                        for k in range(rs.num_positive, len(rs.roots))
                        if k not in span and Hc.root_value(rs.roots[w.perm[k]]) != 0
                    )
                    rep = linearized_eigenvalues(Hs, theta, w)
                    prof = pb.sign_profile(wg, Hc, theta, w)
                    if len(rep.measured) != len(exact):
                        bad.append(f"n={n} Theta(H)={pb.type_names(theta_h)} Theta={pb.type_names(theta)} w={w.word_str()}: size")
                        continue
                    err = max((abs(a - b) for a, b in zip(rep.measured, exact)), default=0.0)
                    worst = max(worst, err)
                    counts = (rep.n_plus, rep.n_zero, rep.n_minus) == (prof.n_plus, prof.n_zero, prof.n_minus)
                    if not err < tol or not counts:
                        bad.append(
                            f"n={n} Theta(H)={pb.type_names(theta_h)} Theta={pb.type_names(theta)} w={w.word_str()}: "
                            f"err={err:.2e} counts={(rep.n_plus, rep.n_zero, rep.n_minus)} "
                            f"profile={(prof.n_plus, prof.n_zero, prof.n_minus)}"
                        )
    return not bad, {"cases": checked, "max_error": f"{worst:.1e}", "failures": bad[:20], "failure_count": len(bad)}


# --- 5 ----------------------------------------------------------------------

def stable_set_classification(samples: int = 1000, seed: int = 0) -> tuple[bool, dict]:
    from .flowlab.flags import SplitElement, classify_frames, flow_to_limit_frames, random_frames

    rng = np.random.default_rng(seed)
    scenarios = []
    ok = True
    for theta_h in (frozenset(), frozenset({0})):
        H = SplitElement.with_zeros(3, theta_h) if theta_h else SplitElement.regular(3)
        for theta in (frozenset(), frozenset({0}), frozenset({1})):
            frames = random_frames(3, samples, rng)
            pred = classify_frames(H, theta, frames)
            _, limit = flow_to_limit_frames(H, theta, frames)
            classifiable = pred >= 0
            agree = int((classifiable & (pred == limit)).sum())
            n_cls = int(classifiable.sum())
            unclassifiable = samples - n_cls
            good = agree >= math.ceil(0.999 * n_cls) and unclassifiable <= samples / 1000
            ok &= good
            scenarios.append({
                "theta_h": pb.type_names(theta_h),
                "theta": pb.type_names(theta),
                "classifiable": n_cls,
                "agreed": agree,
                "unclassifiable": unclassifiable,
                "passed": bool(good),
            })
    return bool(ok), {"seed": seed, "samples": samples, "scenarios": scenarios}


# --- 6 ----------------------------------------------------------------------

def index_pairs(radius: float = 0.1, samples: int = 500, horizon: float = 20.0, seed: int = 0) -> tuple[bool, dict]:
    from .flowlab.flags import SplitElement
    from .flowlab.indexpair import index_pair

    cases = []
    H2 = SplitElement.regular(2)
    wg2 = H2.weyl_group()
    for w in wg2.elements:
        cases.append((H2, w))
    H3 = SplitElement.regular(3)
    wg3 = H3.weyl_group()
    for word in ((), (0,), longest_element(wg3).word):
        cases.append((H3, wg3.from_word(word)))
    out, ok = [], True
    for H, w in cases:
        rep = index_pair(H, (), w, radius=radius, samples=samples, horizon=horizon, seed=seed)
        ok &= rep.passed
        out.append({
            "n": H.n,
            "w": rep.w,
            "passed": rep.passed,
            "conditions": {c.name: c.passed for c in rep.conditions},
        })
    return bool(ok), {"radius": radius, "samples": samples, "horizon": horizon, "cases": out}


# --- 7 ----------------------------------------------------------------------

def counterexample() -> tuple[bool, dict]:
    from .flowlab.counterexample import paper_counterexample

    rep = paper_counterexample()
    v = rep.values
    exact = (
        v["H"] == [-1, -1, 2]
        and v["alpha_plus_beta_of_w_inverse_H"] == 3
        and v["alpha_of_w_inverse_H"] == 3
        and v["beta_of_w_inverse_H"] == 0
    )
    return bool(rep) and exact, rep.to_dict()


# --- 9 ----------------------------------------------------------------------

SMALL_TYPES = (("A", 1), ("A", 2), ("A", 3), ("B", 2), ("B", 3), ("C", 3), ("G", 2))


def _subword_oracle(wg: WeylGroup) -> dict:
    """Elements below w: products of subwords of one reduced word of w."""
    below = {}
    for w in wg.elements:
        word = w.word
        found = set()
        for mask in range(1 << len(word)):
            found.add(wg.from_word(word[k] for k in range(len(word)) if mask >> k & 1))
        below[w] = found
    return below


def combinatorial_invariants() -> tuple[bool, dict]:
    counts = {"sign_profile": 0, "dimension_sum": 0, "bruhat_pairs": 0, "fix_degree": 0, "regular_length": 0}
    bad = []
    for kind, r in SMALL_TYPES:
        wg = as_weyl_group(build_root_system(kind, r))
        rs = wg.rs
        label = rs.label
        # Bruhat order against the subword oracle, and the order axioms
        below = _subword_oracle(wg)
        elems = wg.elements
        leq = {(u, w): bruhat_leq(wg, u, w) for u in elems for w in elems}
        for (u, w), v in leq.items():
            counts["bruhat_pairs"] += 1
            if v != (u in below[w]):
                bad.append(f"{label} bruhat {u.word_str()} <= {w.word_str()}")
            if v and u != w and (leq[(w, u)] or u.length >= w.length):
                bad.append(f"{label} antisymmetry/length {u.word_str()} {w.word_str()}")
        for u, v, w in itertools.product(elems, repeat=3):
            if leq[(u, v)] and leq[(v, w)] and not leq[(u, w)]:
                bad.append(f"{label} transitivity {u.word_str()} {v.word_str()} {w.word_str()}")
                break
        w0 = longest_element(wg)
        if not all(leq[(wg.identity, w)] and leq[(w, w0)] for w in elems):
            bad.append(f"{label} identity/w0 bounds")
        # regular H: n_w is the length
        Hreg = pb.ChamberElement.regular(rs)
        for w in elems:
            counts["regular_length"] += 1
            if pb.sign_profile(wg, Hreg, (), w).n_plus != w.length:
                bad.append(f"{label} regular n_w != length at {w.word_str()}")
        for theta_h in _all_subsets(r):
            H = _chamber(rs, theta_h)
            for theta in _all_subsets(r):
                dim = pb.flag_dimension(rs, theta)
                for c in pb.double_cosets(wg, H, theta):
                    ref = pb.sign_profile(wg, H, theta, c.rep)
                    ref_key = (ref.n_plus, ref.n_zero, ref.n_minus)
                    for m in c.members:
                        counts["sign_profile"] += 1
                        p = pb.sign_profile(wg, H, theta, m)
                        if (p.n_plus, p.n_zero, p.n_minus) != ref_key:
                            bad.append(f"{label} sign profile varies on coset of {c.rep.word_str()}")
                            break
                    counts["dimension_sum"] += 1
                    if sum(ref_key) != dim:
                        bad.append(f"{label} dimension sum at {c.rep.word_str()}")
                    counts["fix_degree"] += 1
                    if fix_poincare(wg, H, theta, c.rep).degree() != ref.n_zero:
                        bad.append(f"{label} fix_poincare degree at {c.rep.word_str()}")
    return not bad, {"types": [f"{k}{r}" for k, r in SMALL_TYPES], "checks": counts, "failures": bad[:20]}


# --- 8 ----------------------------------------------------------------------

def bundle_harness(samples: int = 500, seed: int = 0) -> tuple[bool, dict]:
    from .bundlelab import (
        BaseSystem,
        adversarial_cocycle,
        conformal_cocycle,
        constant_cocycle,
        morse_components,
        verify_stable_sets,
        whitney_split_check,
    )
    from .flowlab.flags import SplitElement

    H = SplitElement.with_zeros(3, {0})
    base = BaseSystem.cycle(5)
    rng = np.random.default_rng(seed)
    theta = frozenset()
    out, ok = {}, True
    for coc in (constant_cocycle(H), conformal_cocycle(H, base, rng)):
        comps = morse_components(base, coc, theta)
        st = verify_stable_sets(base, coc, theta, samples=samples, seed=seed)
        wh = [whitney_split_check(base, coc, theta, c.coset.rep) for c in comps]
        mixing = max(r.max_mixing for r in wh)
        good = len(comps) == 3 and st.passed and all(r.passed for r in wh)
        ok &= good
        out[coc.kind] = {
            "components": len(comps),
            "agreement": st.agreement,
            "classifiable": st.classifiable,
            "unclassifiable": st.unclassifiable,
            "max_mixing": f"{mixing:.1e}",
            "passed": bool(good),
        }
    adv = adversarial_cocycle(H, base, rng)
    comps = morse_components(base, constant_cocycle(H), theta)
    detected = any(whitney_split_check(base, adv, theta, c.coset.rep).mixing_detected for c in comps)
    ok &= detected
    out["adversarial_detected"] = detected
    return bool(ok), out


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    budget: float
    run: Callable[[], tuple[bool, dict]]
    combinatorial: bool


CRITERIA: tuple[Criterion, ...] = (
    Criterion(1, "regular Morse equation", 1.0, regular_morse_equation, True),
    Criterion(2, "non-regular Morse equation", 5.0, nonregular_morse_equation, True),
    Criterion(3, "closure equivalence", 10.0, closure_equivalence, True),
    Criterion(4, "dimension calculus vs numerics", 60.0, dimension_vs_numerics, False),
    Criterion(5, "stable-set classification", 120.0, stable_set_classification, False),
    Criterion(6, "index pairs", 120.0, index_pairs, False),
    Criterion(7, "isotropy counterexample", 1.0, counterexample, True),
    Criterion(8, "bundle harness", 120.0, bundle_harness, False),
    Criterion(9, "combinatorial invariants", 10.0, combinatorial_invariants, True),
)


def run_criterion(c: Criterion) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        passed, detail = c.run()
    except Exception as exc:  # a crash is a failure of that criterion, not of the suite
        passed, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
    return CriterionResult(c.number, c.name, bool(passed), c.budget, time.perf_counter() - t0, detail)


def select(only: str | None = None) -> list[Criterion]:
    if only in (None, "all"):
        return list(CRITERIA)
    if only == "combinatorics":
        return [c for c in CRITERIA if c.combinatorial]
    try:
        wanted = {int(x) for x in only.split(",")}
    except ValueError:
        raise ValueError(f"unknown criterion selection {only!r}") from None
    return [c for c in CRITERIA if c.number in wanted]


def run_suite(only: str | None = None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for c in select(only):
        res = run_criterion(c)
        if echo:
            echo(res.line())
        results.append(res)
    return results
