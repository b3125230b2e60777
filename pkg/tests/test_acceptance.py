"""Acceptance criteria AC-1 .. AC-7, each reported as one pass/fail line.

Run under pytest (the lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import itertools
import json
import sys
import time
from fractions import Fraction
from math import factorial
from pathlib import Path

import sympy as sp
from click.testing import CliRunner

sys.path.insert(0, str(Path(__file__).parent))

from unitwist.algebra import TensorElement  # noqa: E402
from unitwist.cli import main  # noqa: E402
from unitwist.dual import DualAlgebra, pair  # noqa: E402
from unitwist.pbw import load_preset, load_representation, preset_data  # noqa: E402
from unitwist.rtt import RMatrix, check_unitarity, check_ybe  # noqa: E402
from unitwist.scalar import ONE, ZERO, S, parse_scalar  # noqa: E402
from unitwist.twist import (Problem, assemble_twist, jordanian_constant_oracle,  # noqa: E402
                            quantum_composite, represent_tensor, unit_constant, verify_twist)

from oracles import (gl11_composite, matrix_to_sympy, random_diagonal, to_sympy,  # noqa: E402
                     unitarity_oracle, ybe_oracle)

PRESETS = ("jordanian", "triangular", "sb2", "glqq11")
RESULTS: dict = {}
XI = parse_scalar("xi")


class Check:
    """Collects failed sub-checks so one line can summarise a criterion."""

    def __init__(self):
        self.failures = []

    def __call__(self, ok, what):
        if not ok:
            self.failures.append(what)
        return ok


def _record(ac, title, check, seconds, limit=None):
    ok = not check.failures
    if limit is not None and seconds >= limit:
        ok = False
        check.failures.append(f"runtime {seconds:.1f} s >= {limit} s")
    RESULTS[ac] = (ok, title, seconds, list(check.failures))
    assert ok, f"{ac} {title}: " + "; ".join(check.failures)


def _compute(preset):
    t0 = time.perf_counter()
    r = CliRunner().invoke(main, ["compute", "--preset", preset, "--order", "6",
                                  "--format", "json", "--no-cache"])
    return r.exit_code, json.loads(r.output), time.perf_counter() - t0


def _series(report):
    return {(tuple(r), tuple(s)): parse_scalar(c) for r, s, c in report["twist"]["series"]}


def _matrix(rows):
    return [[parse_scalar(x) for x in row] for row in rows]


def _stirling_row(m):
    poly = [Fraction(1)]
    for t in range(m):
        nxt = [Fraction(0)] * (len(poly) + 1)
        for d, c in enumerate(poly):
            nxt[d + 1] += c
            nxt[d] -= t * c
        poly = nxt
    return poly


# -- AC-1 -----------------------------------------------------------------------------------

def test_ac1_jordanian():
    chk = Check()
    code, rep, dt = _compute("jordanian")
    chk(code == 0, f"exit code {code}")
    expect = {}
    for m in range(7):
        for k, c in enumerate(_stirling_row(m)):
            if c and m + k <= 6:
                expect[((0, m), (k, 0))] = (S(-2) * XI) ** m * S(c / factorial(m))
    chk(_series(rep) == expect, "series differs from Σ (−2ξx)^m/m! ⊗ (h)_m")
    chk(rep["twist"]["closed_form"] == "exp(ln(1 - 2*xi*x)⊗h)", "closed form")
    paper = _matrix([["1", "-xi", "xi", "xi^2"], ["0", "1", "0", "-xi"],
                     ["0", "0", "1", "xi"], ["0", "0", "0", "1"]])
    chk(rep["verify"]["rep_check"] and _matrix(rep["verify"]["rep_matrix"]) == paper,
        "(ρ⊗ρ)(F21 F⁻¹) differs from the displayed matrix")
    _record("AC-1", "jordanian twist, closed form, 4x4 matrix", chk, dt, 30)


# -- AC-2 -----------------------------------------------------------------------------------

def test_ac2_triangular():
    chk = Check()
    code, rep, dt = _compute("triangular")
    chk(code == 0, f"exit code {code}")
    expect = {((0, 0, p), (0, p, 0)): XI ** p * S(Fraction(1, factorial(p))) for p in range(4)}
    chk(_series(rep) == expect, "series differs from Σ ξ^p/p! c^p ⊗ x^p")
    chk(rep["twist"]["closed_form"] == "exp(xi*c⊗x)", "closed form")
    b1 = _matrix([["1", "-xi", "xi", "-xi^2"], ["0", "1", "0", "xi"],
                  ["0", "0", "1", "-xi"], ["0", "0", "0", "1"]])
    chk(rep["verify"]["rep_check"] and _matrix(rep["verify"]["rep_matrix"]) == b1,
        "representation does not reproduce the triangular R-matrix")
    _record("AC-2", "triangular twist exp(ξ c⊗x), R reproduced", chk, dt, 30)


# -- AC-3 -----------------------------------------------------------------------------------

MR3 = [["1", "eta", "-eta", "0"], ["0", "1", "0", "-eta"], ["0", "0", "1", "-eta"], ["0", "0", "0", "1"]]


def test_ac3_sb2():
    chk = Check()
    code, rep, dt = _compute("sb2")
    chk(code == 0, f"exit code {code}")
    expect = {((0, 0), (0, 0)): ONE, ((0, 1), (1, 0)): parse_scalar("-2*eta")}
    chk(_series(rep) == expect, "twist is not 1⊗1 − 2η x⊗h")
    P = Problem(preset_data("sb2"), 6)
    H = P.H
    one, x, h = H.parse("1"), H.gen("x"), H.gen("h")
    R3 = TensorElement.pure(one, one) + (TensorElement.pure(x, h) - TensorElement.pure(h, x)) \
        .scale(parse_scalar("-2*eta"))
    chk(represent_tensor(R3, P.rho_H) == _matrix(MR3), "(ρ⊗ρ)(R3) differs from mR3")
    chk(rep["verify"]["rep_check"] and _matrix(rep["verify"]["rep_matrix"]) == _matrix(MR3),
        "(ρ⊗ρ)(F21 F⁻¹) differs from mR3")
    _record("AC-3", "sb2 twist 1 − 2η x⊗h, mR3 reproduced", chk, dt, 10)


# -- AC-4 -----------------------------------------------------------------------------------

def test_ac4_gl11():
    chk = Check()
    t0 = time.perf_counter()
    code, rep, _ = _compute("glqq11")
    chk(code == 0, f"exit code {code}")
    P = Problem(preset_data("glqq11"), 6)
    kappa = parse_scalar("-xi/(q + q^-1)")
    m = unit_constant((0, 0, 1), (0, 0, 1), P.star)
    chk(m == kappa, f"m^(001)(001)_(000) = {m}")
    expect = {((0, 0, 0), (0, 0, 0)): ONE, ((0, 0, 1), (0, 0, 1)): kappa}
    chk(_series(rep) == expect, "twist is not 1⊗1 − ξ/(q+q⁻¹) e⊗e")
    F = assemble_twist(P).graded
    M = quantum_composite(F, load_representation("uq_gl11"), K=P.verify_order, params=["xi"])
    Ms = matrix_to_sympy(M)
    q, xi = sp.symbols("q xi")
    oracle = gl11_composite(to_sympy(F.terms[((0, 0, 1), (0, 0, 1))]))
    chk(all(sp.simplify(a - b) == 0 for a, b in zip(Ms, oracle)), "composite differs from oracle")
    chk([sp.simplify(Ms[i, i]) for i in range(4)] == [q, q, 1 / q, 1 / q], "diagonal")
    off = {(i, j) for i in range(4) for j in range(4) if i != j and sp.simplify(Ms[i, j]) != 0}
    chk(off == {(0, 3), (1, 2)}, f"off-diagonal support {sorted(off)}")
    chk(sp.simplify(Ms[0, 3] - xi) == 0 and sp.simplify(Ms[1, 2] - (q - 1 / q)) == 0,
        "off-diagonal values differ from mR4")
    chk(rep["verify"]["rep_check"], "pipeline representation check")
    _record("AC-4", "U_q(gl(1|1)) constant, twist, composite = mR4", chk,
            time.perf_counter() - t0, 60)


# -- AC-5 -----------------------------------------------------------------------------------

def test_ac5_oracle():
    chk = Check()
    t0 = time.perf_counter()
    A = Problem(preset_data("jordanian"), 6).star
    for m in range(6):
        for k in range(6):
            got = unit_constant((0, m), (k, 0), A)
            chk(got == jordanian_constant_oracle(m, k), f"(m,k)=({m},{k}): {got}")
    _record("AC-5", "jordanian constants equal the closed formula, m,k <= 5", chk,
            time.perf_counter() - t0)


# -- AC-6 -----------------------------------------------------------------------------------

def test_ac6_identities():
    chk = Check()
    t0 = time.perf_counter()
    for name in PRESETS:
        P = Problem(preset_data(name), 6)
        v = verify_twist(assemble_twist(P).graded, 6, P.param)
        for key in ("cocycle", "counit", "coassociativity"):
            chk(v[key], f"{name}: {key} fails at degree {v[key + '_first_failure']}")
    P = Problem(preset_data("jordanian"), 6)
    H = P.H
    bad = assemble_twist(P).graded + TensorElement.pure(H.gen("x"), H.gen("x")).scale(XI)
    v = verify_twist(bad, 6, "xi")
    chk(not v["cocycle"], "corrupted twist accepted")
    chk(v["cocycle_first_failure"] is not None, "no first-failure order reported")
    _record("AC-6", "cocycle, counit, coassociativity; corrupted F rejected "
            f"(first failure at degree {v['cocycle_first_failure']})", chk, time.perf_counter() - t0)


# -- AC-7 -----------------------------------------------------------------------------------

def _associativity(P, chk):
    A = P.star
    monos = P.dual.monomials(4)
    w = A.weight
    for i, j, k in itertools.product(monos, repeat=3):
        if w(i) + w(j) + w(k) > 4:
            continue
        ij = A.mul({i: ONE}, {j: ONE})
        jk = A.mul({j: ONE}, {k: ONE})
        if A.mul(ij, {k: ONE}) != A.mul({i: ONE}, jk):
            chk(False, f"{P.data['name']}: associativity at {i},{j},{k}")
            return


def _diagonality(name, chk):
    data = preset_data(name)
    d = DualAlgebra(load_preset(name), [(g["name"], g["partner"]) for g in data["dual"]["generators"]], 6)
    mons = d.monomials(6)
    for r in mons:
        a = d.H.element({d.to_h(r): ONE})
        for p in mons:
            expect = S(d.norm(p)) if p == r else ZERO
            if pair(a, d.unit_mono_element(p), d) != expect:
                chk(False, f"{name}: pairing <{r}, {p}>")
                return


def _rmatrix_oracle(R, odd, label, chk):
    M = matrix_to_sympy(R.M)
    chk(check_ybe(R)["holds"] == ybe_oracle(M, R.parities, odd), f"{label}: YBE disagrees")
    chk(check_unitarity(R)["holds"] == unitarity_oracle(M, R.parities, odd),
        f"{label}: unitarity disagrees")


def test_ac7_properties():
    chk = Check()
    t0 = time.perf_counter()
    for name in PRESETS:
        _associativity(Problem(preset_data(name), 6), chk)
    for name in PRESETS + ("uq_gl11",):
        _diagonality(name, chk)
    for name in PRESETS:
        R = RMatrix.from_dict(preset_data(name)["rmatrix"])
        _rmatrix_oracle(R, ("eta",) if name == "sb2" else (), name, chk)
    ident = RMatrix.from_dict({"entries": ["1" if i % 5 == 0 else "0" for i in range(16)],
                               "parities": [0, 1]})
    _rmatrix_oracle(ident, (), "identity", chk)
    D, par = random_diagonal(1, 2, seed=20261015)
    n = D.rows
    diag = RMatrix.from_dict({"entries": [str(D[i, j]) for i in range(n) for j in range(n)],
                              "parities": par})
    _rmatrix_oracle(diag, (), "random diagonal", chk)
    _record("AC-7", "associativity, pairing diagonality, YBE/unitarity oracle", chk,
            time.perf_counter() - t0)


def summary_lines():
    lines = []
    for ac in sorted(RESULTS):
        ok, title, seconds, failures = RESULTS[ac]
        line = f"{ac} {'PASS' if ok else 'FAIL'} ({seconds:.1f} s) {title}"
        if failures:
            line += " :: " + "; ".join(failures)
        lines.append(line)
    return lines


if __name__ == "__main__":
    for fn in (test_ac1_jordanian, test_ac2_triangular, test_ac3_sb2, test_ac4_gl11,
               test_ac5_oracle, test_ac6_identities, test_ac7_properties):
        try:
            fn()
        except AssertionError:
            pass
    print("\n".join(summary_lines()))
    sys.exit(0 if all(v[0] for v in RESULTS.values()) else 1)
