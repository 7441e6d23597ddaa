"""Command line entry point: ``flagmorse {morse-table,closure,simulate,verify}``.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
Options may come from a JSON file (``--config``); flags given on the command
line override it.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import io
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from unittest import mock

from . import parabolic as pb
from .rootsys import ConfigurationError, as_weyl_group, build_root_system, parse_word, reduced_words

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FORMATS = ("json", "csv", "md")
SIM_MODES = ("flow", "bundle", "adversarial", "counterexample")


@dataclass
class RunConfig:
    type: str = "A"
    rank: int = 2
    h: list[str] | None = None  # simple-root values; None means all ones
    theta: list[str] = field(default_factory=list)
    seed: int = 0
    samples: int = 500
    tol: float = 1e-8
    horizon: float = 20.0
    radius: float = 0.1
    format: str = "json"
    out: str | None = None
    w: str | None = None
    all_words: bool = False
    mode: str = "flow"
    base: str = "cycle:5"
    scenario: str | None = None
    only: str = "all"
    mutate: str | None = None

    def validate(self) -> "RunConfig":
        if self.format not in FORMATS:
            raise ConfigurationError(f"unknown format {self.format!r}")
        if self.mode not in SIM_MODES:
            raise ConfigurationError(f"unknown simulate mode {self.mode!r}")
        for name in ("tol", "horizon", "radius"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.samples < 1:
            raise ConfigurationError("samples must be positive")
        if self.mutate not in (None, "sign-flip"):
            raise ConfigurationError(f"unknown mutation {self.mutate!r}")
        self.root_system()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.rank = int(cfg.rank)
        cfg.seed = int(cfg.seed)
        cfg.samples = int(cfg.samples)
        cfg.tol, cfg.horizon, cfg.radius = float(cfg.tol), float(cfg.horizon), float(cfg.radius)
        if cfg.h is not None:
            cfg.h = [str(x) for x in cfg.h]
        cfg.theta = [str(x) for x in cfg.theta]
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    # derived objects
    def root_system(self):
        kind, rank = self.type.strip().upper(), self.rank
        m = re.fullmatch(r"([A-Z])(\d+)", kind)
        if m:
            kind, rank = m.group(1), int(m.group(2))
        return build_root_system(kind, rank)

    def chamber(self, rs) -> pb.ChamberElement:
        if self.h is None:
            return pb.ChamberElement.regular(rs)
        try:
            vals = [Fraction(x) for x in self.h]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigurationError(f"bad H values {self.h!r}") from exc
        return pb.ChamberElement.from_values(rs, vals)

    def flag_type(self, rs) -> frozenset:
        return pb.flag_type(rs, self.theta)


# --- output -----------------------------------------------------------------

def _flatten(d, prefix=""):
    if isinstance(d, dict):
        for k, v in d.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(d, list) and any(isinstance(x, (dict, list)) for x in d):
        for i, v in enumerate(d):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, d


def _render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    pairs = list(_flatten(report))
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["key", "value"])
        for k, v in pairs:
            wr.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])
        return buf.getvalue()
    lines = ["| key | value |", "|---|---|"]
    lines += [f"| {k} | {json.dumps(v) if isinstance(v, (list, dict)) else v} |" for k, v in pairs]
    return "\n".join(lines) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------

def cmd_morse_table(cfg: RunConfig) -> int:
    from .cohomology import morse_table

    rs = cfg.root_system()
    table = morse_table(as_weyl_group(rs), cfg.chamber(rs), cfg.flag_type(rs))
    text = {"json": lambda: table.to_json() + "\n", "csv": table.to_csv, "md": table.to_markdown}[cfg.format]()
    _emit(cfg, text)
    if not table.ok:
        print(f"Morse equation failed: {table.failure}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_closure(cfg: RunConfig) -> int:
    from .schubert import closure_report

    rs = cfg.root_system()
    wg = as_weyl_group(rs)
    H = cfg.chamber(rs)
    cosets = pb.double_cosets(wg, H, ())
    if cfg.w is not None:
        word = parse_word(cfg.w)
        if any(not 0 <= i < rs.rank for i in word):
            raise ConfigurationError(f"{cfg.w!r} is not a word in the simple reflections of {rs.label}")
        reps = [pb.coset_of(cosets, wg.from_word(word)).rep]
    else:
        reps = [c.rep for c in cosets]
    w0 = wg.elements[wg.longest]
    reports = []
    for rep in reps:
        words = reduced_words(wg, wg.multiply(w0, rep)) if cfg.all_words else [None]
        reports += [closure_report(wg, H, rep, word) for word in words]
    equal = all(r.equal for r in reports)
    if cfg.format == "json":
        text = json.dumps({
            "root_system": rs.label,
            "h": [str(v) for v in H.values],
            "all_equal": equal,
            "reports": [r.to_dict() for r in reports],
        }, indent=2, sort_keys=True) + "\n"
    else:
        rows = [(r.rep, r.to_dict()["gamma_word"], " ".join(r.bruhat.words()), " ".join(r.gamma.words()), r.equal)
                for r in reports]
        header = ("rep", "gamma_word", "closure_bruhat", "closure_gamma", "equal")
        if cfg.format == "csv":
            buf = io.StringIO()
            wr = csv.writer(buf, lineterminator="\n")
            wr.writerow(header)
            wr.writerows(rows)
            text = buf.getvalue()
        else:
            text = "\n".join(
                ["| " + " | ".join(header) + " |", "|---|---|---|---|---|"]
                + ["| " + " | ".join(str(x) for x in row) + " |" for row in rows]
            ) + f"\n\nall equal: {equal}\n"
    _emit(cfg, text)
    return EXIT_OK if equal else EXIT_FAIL


def _simulate_flow(cfg: RunConfig) -> tuple[dict, bool]:
    import numpy as np

    from .flowlab.flags import SplitElement, classify_frames, flow_to_limit_frames, random_frames
    from .flowlab.indexpair import index_pair
    from .flowlab.linearization import lin_chart, linearized_eigenvalues

    rs = cfg.root_system()
    if rs.kind != "A":
        raise ConfigurationError("flow simulation is implemented for type A (sl(n, R))")
    n = rs.rank + 1
    Hc = cfg.chamber(rs)
    H = SplitElement.from_root_values([float(v) for v in Hc.values])
    theta = cfg.flag_type(rs)
    rng = np.random.default_rng(cfg.seed)

    frames = random_frames(n, cfg.samples, rng)
    pred = classify_frames(H, theta, frames)
    _, limit = flow_to_limit_frames(H, theta, frames, tol=cfg.tol)
    cls = pred >= 0
    agreed = int((cls & (pred == limit)).sum())
    agreement = agreed / max(1, int(cls.sum()))

    wg = H.weyl_group()
    eig_err, eig_counts_ok = 0.0, True
    for w in wg.elements:
        rep = linearized_eigenvalues(H, theta, w)
        prof = pb.sign_profile(wg, Hc, theta, w)
        eig_err = max(eig_err, rep.max_error)
        eig_counts_ok &= (rep.n_plus, rep.n_zero, rep.n_minus) == (prof.n_plus, prof.n_zero, prof.n_minus)

    pairs = []
    for c in pb.double_cosets(wg, Hc, theta):
        if lin_chart(H, theta, c.rep).fixed:
            pairs.append({"w": c.rep.word_str(), "verdict": "skipped (component is not a point)"})
            continue
        ip = index_pair(H, theta, c.rep, radius=cfg.radius, samples=cfg.samples, horizon=cfg.horizon, seed=cfg.seed)
        pairs.append({"w": ip.w, "verdict": "PASS" if ip.passed else "FAIL",
                      "conditions": {x.name: x.passed for x in ip.conditions}})

    ok = (
        agreed >= 0.999 * cls.sum()
        and (~cls).sum() <= cfg.samples / 1000
        and eig_err < 1e-5
        and eig_counts_ok
        and all(p["verdict"] != "FAIL" for p in pairs)
    )
    report = {
        "mode": "flow",
        "n": n,
        "h": [float(x) for x in H.diag],
        "theta": pb.type_names(theta),
        "seed": cfg.seed,
        "samples": cfg.samples,
        "classification": {
            "classifiable": int(cls.sum()),
            "agreed": agreed,
            "agreement": agreement,
            "unclassifiable": int((~cls).sum()),
            "not_converged": int((limit < 0).sum()),
        },
        "eigenvalues": {"max_residual": f"{eig_err:.1e}", "counts_match_sign_profile": bool(eig_counts_ok)},
        "index_pairs": pairs,
        "passed": bool(ok),
    }
    return report, bool(ok)


def _parse_base(text: str):
    from .bundlelab import BaseSystem

    kind, _, arg = text.partition(":")
    try:
        if kind == "cycle":
            return BaseSystem.cycle(int(arg or 5))
        if kind == "point":
            return BaseSystem.point()
        if kind == "rotation":
            return BaseSystem.rotation(samples=int(arg or 64))
    except ValueError as exc:
        raise ConfigurationError(f"bad base {text!r}") from exc
    raise ConfigurationError(f"unknown base {text!r}; use cycle:P, point or rotation:N")


def _simulate_bundle(cfg: RunConfig, kind: str) -> tuple[dict, bool]:
    import numpy as np

    from .bundlelab import Scenario, adversarial_cocycle, conformal_cocycle, constant_cocycle, run_scenario
    from .flowlab.flags import SplitElement

    if cfg.scenario:
        with open(cfg.scenario) as fh:
            sc = Scenario.from_json(fh.read())
    else:
        rs = cfg.root_system()
        if rs.kind != "A":
            raise ConfigurationError("bundle simulation is implemented for type A (sl(n, R))")
        h_values = cfg.h if cfg.h is not None else ["0"] + ["1"] * (rs.rank - 1)
        Hc = pb.ChamberElement.from_values(rs, [Fraction(x) for x in h_values])
        H = SplitElement.from_root_values([float(v) for v in Hc.values])
        base = _parse_base(cfg.base)
        rng = np.random.default_rng(cfg.seed)
        if kind == "adversarial":
            coc = adversarial_cocycle(H, base, rng)
        elif base.discrete:
            coc = conformal_cocycle(H, base, rng)
        else:
            coc = constant_cocycle(H)
        sc = Scenario(base, coc, cfg.flag_type(rs), cfg.seed, cfg.samples)
    report = run_scenario(sc)
    report["mode"] = kind
    return report, bool(report["passed"])


def cmd_simulate(cfg: RunConfig) -> int:
    from .flowlab.flags import FlowDegenerationError, FlowTimeoutError

    try:
        if cfg.mode == "counterexample":
            from .flowlab.counterexample import sl3_counterexample

            rep = sl3_counterexample()
            report, ok = {"mode": "counterexample", **rep.to_dict()}, rep.ok
        elif cfg.mode == "flow":
            report, ok = _simulate_flow(cfg)
        else:
            report, ok = _simulate_bundle(cfg, cfg.mode)
    except (FlowDegenerationError, FlowTimeoutError, OverflowError, ArithmeticError) as exc:
        print(f"simulation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(cfg, _render(report, cfg.format))
    if cfg.mode == "adversarial":
        print("adversarial scenario: mixing detected, exit 1 is the expected outcome", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def _sign_flip():
    original = pb._sign
    return mock.patch.object(pb, "_sign", lambda x: -original(x))


def cmd_verify(cfg: RunConfig) -> int:
    from .acceptance import run_suite

    try:
        ctx = _sign_flip() if cfg.mutate == "sign-flip" else contextlib.nullcontext()
        with ctx:
            results = run_suite(cfg.only, echo=lambda line: print(line, file=sys.stderr))
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    failed = [r for r in results if not r.ok]
    summary = {
        "selection": cfg.only,
        "mutation": cfg.mutate,
        "passed": not failed,
        "first_failure": None if not failed else f"criterion {failed[0].number}: {failed[0].name}",
        "criteria": [{**r.to_dict(), "passed": r.ok} for r in results],
    }
    _emit(cfg, _render(summary, cfg.format))
    if failed:
        print(f"FAILED: {summary['first_failure']}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {
    "morse-table": cmd_morse_table,
    "closure": cmd_closure,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


# --- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file of options; flags override it")
    common.add_argument("--type", help="root system type letter (A, B, C, D, G) or label like A3")
    common.add_argument("--rank", type=int)
    common.add_argument("--h", type=lambda s: [x for x in re.split(r"[,\s]+", s) if x],
                        help="simple-root values of H, e.g. 0,1 (default: all 1)")
    common.add_argument("--theta", type=lambda s: [x for x in re.split(r"[,\s]+", s) if x],
                        help="flag type as simple-root names, e.g. a1,a3")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--out", help="write the report here instead of stdout")

    p = _Parser(prog="flagmorse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("morse-table", parents=[common], argument_default=argparse.SUPPRESS, help="Morse components, Conley polynomials, residual")
    c = sub.add_parser("closure", parents=[common], argument_default=argparse.SUPPRESS, help="stable-set closures by Bruhat order and gamma operators")
    c.add_argument("--w", help="a Weyl word such as s1s2; its component is used")
    c.add_argument("--all-words", action="store_true", default=argparse.SUPPRESS,
                   help="check every reduced word of w0 w")
    s = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS, help="numerical flow and bundle checks")
    s.add_argument("--mode", choices=SIM_MODES)
    s.add_argument("--horizon", type=float)
    s.add_argument("--radius", type=float)
    s.add_argument("--base", help="cycle:P, point or rotation:N (bundle modes)")
    s.add_argument("--scenario", help="bundle scenario JSON file")
    v = sub.add_parser("verify", parents=[common], argument_default=argparse.SUPPRESS, help="run the acceptance suite")
    v.add_argument("--only", help="all, combinatorics, or a comma list of criterion numbers")
    v.add_argument("--mutate", choices=("sign-flip",), help="inject a known bug; the suite must fail")
    return p


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    base: dict = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {ns.config}: {exc}") from exc
    base.update(given)
    return RunConfig.from_dict(base).validate()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(ns)
        return COMMANDS[ns.command](cfg)
    except ConfigurationError as exc:
        print(f"flagmorse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
