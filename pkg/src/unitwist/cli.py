"""Command line: problem files in, twist reports out.

Exit codes: 0 when every requested verification passes, 2 when a
verification (or a pipeline stage) fails, 1 on input errors.
"""
from __future__ import annotations

import copy
import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Mapping, Optional

import click

from . import matrices as mx
from .algebra import TensorElement
from .pbw import (PRESETS, PresentationError, preset_data, presentation_from_dict,
                  representation_from_dict)
from .rtt import RMatrix, RTTError, check_unitarity, check_ybe, classical_r
from .scalar import format_scalar, parse_scalar
from .twist import (Problem, TwistError, TwistResult, assemble_twist, graded_from_naive,
                    recognize_closed_form, rep_check, verify_twist)

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2
REQUIRED_KEYS = ("generators", "representation", "dual", "rmatrix")


class ProblemError(ValueError):
    """Invalid problem description; carries every validation message."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# -- problem files -----------------------------------------------------------------

@dataclass
class ProblemSpec:
    data: dict
    source: Optional[Path] = None

    @property
    def name(self) -> str:
        return self.data.get("name", "problem")

    @property
    def order(self) -> int:
        return int(self.data.get("order", 6))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, ensure_ascii=False) + "\n"

    def digest(self, order: int) -> str:
        canon = json.dumps(self.data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        return hashlib.sha256(f"{canon}|{order}".encode()).hexdigest()

    @classmethod
    def from_preset(cls, name: str) -> "ProblemSpec":
        return cls(validate_problem(preset_data(name)))


def _rmatrix_entries(rm: Mapping, errors: List[str]) -> Optional[list]:
    entries = rm.get("entries")
    pars = rm.get("parities")
    if not isinstance(entries, list) or not isinstance(pars, list):
        errors.append("rmatrix needs 'entries' and 'parities' lists")
        return None
    n = len(pars)
    if entries and all(isinstance(r, list) for r in entries):
        if len(entries) != n * n or any(len(r) != n * n for r in entries):
            errors.append("R must be square of size dim²")
            return None
        flat = [x for r in entries for x in r]
    else:
        flat = entries
        if len(flat) != n ** 4:
            errors.append("R must be square of size dim²")
            return None
    return flat


def validate_problem(data) -> dict:
    """Check a problem dict; raise ProblemError listing every problem found."""
    errors: List[str] = []
    if not isinstance(data, dict):
        raise ProblemError(["problem must be a JSON object"])
    for k in REQUIRED_KEYS:
        if k not in data:
            errors.append(f"missing key {k!r}")
    gens = data.get("generators", [])
    names = [g.get("name") for g in gens if isinstance(g, dict)]
    known = set(names)

    def check_name(n, where):
        if n not in known:
            errors.append(f"unknown generator name {n!r} in {where}")

    for r in data.get("relations", []):
        for n in r.get("bracket", []):
            check_name(n, "relations")
    for n in data.get("coproducts", {}):
        check_name(n, "coproducts")
    rep = data.get("representation", {})
    for n in rep.get("matrices", {}):
        check_name(n, "representation")
    for g in data.get("dual", {}).get("generators", []):
        check_name(g.get("partner"), "dual")
    rm = data.get("rmatrix")
    flat = None
    if isinstance(rm, dict):
        flat = _rmatrix_entries(rm, errors)
        if flat is not None:
            for x in flat:
                try:
                    parse_scalar(str(x)) if not isinstance(x, (int,)) else None
                except Exception as exc:  # parser errors carry the offending text
                    errors.append(f"bad R-matrix entry {x!r}: {exc}")
                    break
        if rep.get("parities") is not None and rm.get("parities") != rep.get("parities"):
            errors.append("R-matrix parities differ from the representation's")
    mode = data.get("mode", "unitary")
    if mode != "unitary" and not (isinstance(mode, dict) and "twisted" in mode):
        errors.append(f"unknown mode {mode!r}")
    if not errors:
        try:
            pres = presentation_from_dict(data)
            representation_from_dict(pres, rep)
        except (PresentationError, ValueError, KeyError) as exc:
            errors.append(str(exc))
    if errors:
        raise ProblemError(errors)
    out = dict(data)
    if flat is not None and flat is not rm.get("entries"):
        out["rmatrix"] = dict(rm, entries=[str(x) for x in flat])
    return out


def parse_problem(path) -> ProblemSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProblemError([f"malformed JSON: {exc}"]) from None
    except OSError as exc:
        raise ProblemError([f"cannot read {path}: {exc.strerror}"]) from None
    return ProblemSpec(validate_problem(data), path)


# -- serialization helpers -----------------------------------------------------------

def _mono_list(m) -> list:
    return [int(e) for e in m]


def series_to_json(F: TensorElement) -> list:
    keys = sorted(F.terms, key=lambda k: (F.weight_of(k), k))
    return [[_mono_list(k[0]), _mono_list(k[1]), format_scalar(F.terms[k])] for k in keys]


def series_from_json(rows, H) -> TensorElement:
    terms = {}
    for r, s, c in rows:
        terms[(tuple(r), tuple(s))] = parse_scalar(c)
    return TensorElement((H, H), terms)


def _matrix_json(M) -> list:
    return mx.to_strings(M)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- the pipeline ------------------------------------------------------------------------

@dataclass
class TwistReport:
    data: dict
    timing: dict = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        v = self.data.get("verify") or {}
        keys = ("cocycle", "counit", "coassociativity", "rep_check")
        return not self.errors and bool(v) and all(v.get(k) for k in keys)


def _rchecks(R: RMatrix) -> dict:
    out = {"ybe": check_ybe(R)["holds"], "unitarity": check_unitarity(R)["holds"]}
    try:
        cr = classical_r(R)
        out["quasiclassical"] = True
        out["classical_r"] = _matrix_json(cr["r"])
        out["antisymmetric"] = cr["antisymmetric"]
    except RTTError:
        out["quasiclassical"] = False
    return out


def _rules_json(problem: Problem) -> list:
    rs = problem.rules
    names = rs.names()
    out = []
    for key in sorted(rs.rules, key=lambda p: (-p[0], p[1])):
        r = rs.rules[key]
        out.append({
            "pair": [names[key[0]], names[key[1]]],
            "rule": r.describe(names),
            "correction": str(r.correction),
            "closed_form": r.closed_form,
        })
    return out


def _cache_path(spec: ProblemSpec, order: int) -> Path:
    base = spec.source.parent if spec.source else Path.cwd()
    return base / ".twistcache" / f"{spec.digest(order)}.json"


def run_pipeline(spec: ProblemSpec, order: int | None = None, use_cache: bool = True) -> TwistReport:
    """checks -> T -> exchange rules -> constants -> F -> verification."""
    N = spec.order if order is None else int(order)
    t0 = time.perf_counter()
    report = TwistReport({})
    d = report.data
    problem = Problem(spec.data, N)
    d["problem"] = {"name": spec.name, "order": N, "mode": spec.data.get("mode", "unitary"),
                    "parameter": problem.param,
                    "generators": [g.name for g in problem.H.gens]}
    d["rchecks"] = _rchecks(problem.R)
    report.timing["rchecks"] = time.perf_counter() - t0
    cache = _cache_path(spec, N) if use_cache else None
    cached = None
    if cache is not None and cache.exists():
        try:
            cached = json.loads(cache.read_text())
        except (OSError, json.JSONDecodeError):
            cached = None
    try:
        if cached is not None:
            d["rules"] = cached["rules"]
            F = series_from_json(cached["constants"], problem.H)
            result = TwistResult(F, graded_from_naive(F, problem), recognize_closed_form(F, N))
        else:
            d["rules"] = _rules_json(problem)
            report.timing["rules"] = time.perf_counter() - t0
            result = assemble_twist(problem, N)
            if cache is not None:
                _atomic_write(cache, json.dumps({"rules": d["rules"],
                                                 "constants": series_to_json(result.series)},
                                                ensure_ascii=False, indent=1))
    except (RTTError, TwistError) as exc:
        report.errors.append(f"rules: {exc}")
        d["errors"] = report.errors
        return report
    table = series_to_json(result.series)
    d["constants"] = {
        "count": len(table),
        "digest": hashlib.sha256(json.dumps(table, ensure_ascii=False).encode()).hexdigest(),
    }
    d["twist"] = {"series": table, "closed_form": result.closed_form}
    report.timing["twist"] = time.perf_counter() - t0
    try:
        v = verify_twist(result.graded, N, [problem.param])
        rc = rep_check(result.graded, problem)
        v["rep_check"] = rc["holds"]
        v["rep_matrix"] = _matrix_json(rc["matrix"])
        d["verify"] = v
    except (TwistError, ValueError) as exc:
        report.errors.append(f"verify: {exc}")
    report.timing["verify"] = time.perf_counter() - t0
    d["errors"] = report.errors
    return report


def verify_series(spec: ProblemSpec, rows, order: int | None = None) -> TwistReport:
    N = spec.order if order is None else int(order)
    problem = Problem(spec.data, N)
    F = series_from_json(rows, problem.H)
    G = graded_from_naive(F, problem)
    report = TwistReport({"problem": {"name": spec.name, "order": N,
                                      "mode": spec.data.get("mode", "unitary"),
                                      "parameter": problem.param,
                                      "generators": [g.name for g in problem.H.gens]}})
    v = verify_twist(G, N, [problem.param])
    rc = rep_check(G, problem)
    v["rep_check"] = rc["holds"]
    v["rep_matrix"] = _matrix_json(rc["matrix"])
    report.data["verify"] = v
    report.data["errors"] = []
    return report


# -- output --------------------------------------------------------------------------------

def report_json(report: TwistReport) -> str:
    return json.dumps(report.data, indent=2, ensure_ascii=False) + "\n"


def _check_line(name: str, ok: bool, fail, N: int) -> str:
    if ok:
        return f"{name}: OK to order {N}"
    return f"{name}: FAILED at parameter degree {fail}"


def report_text(report: TwistReport) -> str:
    d = report.data
    lines = []
    p = d.get("problem", {})
    lines.append(f"problem: {p.get('name')}  order {p.get('order')}  mode {json.dumps(p.get('mode'))}")
    rc = d.get("rchecks")
    if rc:
        lines.append(f"Yang-Baxter: {'holds' if rc['ybe'] else 'fails'}")
        lines.append(f"unitarity: {'holds' if rc['unitarity'] else 'fails'}")
        if rc.get("quasiclassical"):
            lines.append(f"classical r antisymmetric: {'yes' if rc['antisymmetric'] else 'no'}")
        else:
            lines.append("not quasiclassical around identity")
    if d.get("rules"):
        lines.append("exchange rules:")
        for r in d["rules"]:
            lines.append(f"  {r['rule']}")
    tw = d.get("twist")
    if tw:
        gens = p.get("generators", [])
        lines.append("twist series:")
        rows = []
        for r, s, c in tw["series"]:
            left = _fmt_multi(r, gens)
            right = _fmt_multi(s, gens)
            rows.append((c, left, right))
        wc = max((len(c) for c, _, _ in rows), default=0)
        wl = max((len(l) for _, l, _ in rows), default=0)
        for c, l, r in rows:
            lines.append(f"  {c.rjust(wc)}  {l.ljust(wl)} ⊗ {r}")
        lines.append(f"closed form: {tw['closed_form'] or 'not recognized'}")
    v = d.get("verify")
    if v:
        N = p.get("order")
        lines.append(_check_line("cocycle", v["cocycle"], v["cocycle_first_failure"], N))
        lines.append(_check_line("counit", v["counit"], v["counit_first_failure"], N))
        lines.append(_check_line("coassociativity", v["coassociativity"],
                                 v["coassociativity_first_failure"], N))
        lines.append(f"representation check: {'OK' if v['rep_check'] else 'FAILED'}")
        lines.append(f"(identities checked to parameter degree {v['order']})")
    for e in d.get("errors", []):
        lines.append(f"error: {e}")
    if report.timing:
        lines.append(f"time: {max(report.timing.values()):.2f} s")
    return "\n".join(lines) + "\n"


def _fmt_multi(m, gens) -> str:
    parts = []
    for e, g in zip(m, gens):
        if e == 1:
            parts.append(g)
        elif e:
            parts.append(f"{g}^{e}")
    return " ".join(parts) if parts else "1"


def emit_report(report: TwistReport, fmt: str = "text", path: Optional[Path] = None) -> str:
    text = report_json(report) if fmt == "json" else report_text(report)
    if path is None:
        click.echo(text, nl=False)
    else:
        try:
            _atomic_write(Path(path), text)
        except OSError as exc:
            raise click.ClickException(f"cannot write report: {exc}")
    return text


# -- click commands ------------------------------------------------------------------------

def _load_spec(spec_path, preset) -> ProblemSpec:
    if spec_path and preset:
        raise ProblemError(["give either a problem file or --preset, not both"])
    if preset:
        return ProblemSpec.from_preset(preset)
    if not spec_path:
        raise ProblemError(["no problem given: pass a problem file or --preset"])
    return parse_problem(spec_path)


def _input_error(exc: ProblemError):
    for e in exc.errors:
        click.echo(f"input error: {e}", err=True)
    raise SystemExit(EXIT_INPUT)


_preset_opt = click.option("--preset", type=click.Choice(PRESETS), default=None,
                           help="Use a bundled example instead of a problem file.")
_order_opt = click.option("--order", "order", type=click.IntRange(1, 40), default=None,
                          help="Truncation order N (default: the problem's, else 6).")
_format_opt = click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
_output_opt = click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
                           help="Write the report to a file.")


@click.group()
def main():
    """Reconstruct universal twists from constant R-matrices."""


@main.command()
@click.argument("spec_path", required=False, type=click.Path(exists=True, dir_okay=False))
@_preset_opt
@_order_opt
@_format_opt
@_output_opt
@click.option("--no-cache", is_flag=True, help="Recompute instead of replaying .twistcache.")
def compute(spec_path, preset, order, fmt, output, no_cache):
    """Run the full pipeline and report the twist."""
    try:
        spec = _load_spec(spec_path, preset)
    except ProblemError as exc:
        _input_error(exc)
    report = run_pipeline(spec, order, use_cache=not no_cache)
    emit_report(report, fmt, output)
    raise SystemExit(EXIT_OK if report.passed else EXIT_VERIFY)


@main.command("check-r")
@click.argument("spec_path", required=False, type=click.Path(exists=True, dir_okay=False))
@_preset_opt
@_format_opt
def check_r(spec_path, preset, fmt):
    """Yang-Baxter, unitarity and classical limit of the R-matrix only."""
    try:
        spec = _load_spec(spec_path, preset)
    except ProblemError as exc:
        _input_error(exc)
    R = RMatrix.from_dict(spec.data["rmatrix"])
    report = TwistReport({"problem": {"name": spec.name, "order": spec.order,
                                      "mode": spec.data.get("mode", "unitary")},
                          "rchecks": _rchecks(R)})
    emit_report(report, fmt)
    ok = report.data["rchecks"]["ybe"]
    raise SystemExit(EXIT_OK if ok else EXIT_VERIFY)


@main.command()
@click.argument("series_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("spec_path", required=False, type=click.Path(exists=True, dir_okay=False))
@_preset_opt
@_order_opt
@_format_opt
def verify(series_path, spec_path, preset, order, fmt):
    """Check a twist series file (a report or {"series": [...]}) against a problem."""
    try:
        spec = _load_spec(spec_path, preset)
        try:
            payload = json.loads(Path(series_path).read_text())
        except json.JSONDecodeError as exc:
            raise ProblemError([f"malformed JSON: {exc}"]) from None
        rows = payload.get("twist", payload).get("series") if isinstance(payload, dict) else None
        if rows is None:
            raise ProblemError(["series file has no 'series' list"])
    except ProblemError as exc:
        _input_error(exc)
    try:
        report = verify_series(spec, rows, order)
    except (ValueError, IndexError, TwistError) as exc:
        _input_error(ProblemError([f"bad series: {exc}"]))
    emit_report(report, fmt)
    raise SystemExit(EXIT_OK if report.passed else EXIT_VERIFY)


if __name__ == "__main__":
    main()
