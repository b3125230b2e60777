import pytest
import sympy as sp

from unitwist import matrices as mx
from unitwist.dual import DualElement
from unitwist.pbw import preset_data
from unitwist.rtt import (RMatrix, RTTError, check_unitarity, check_ybe, classical_r, expand_T,
                          recognize_correction, rtt_residual)
from unitwist.scalar import S, parse_scalar
from unitwist.twist import Problem, star_product

from conftest import problem
from oracles import matrix_to_sympy, random_diagonal, unitarity_oracle, ybe_oracle

BUNDLED = ["jordanian", "triangular", "sb2", "glqq11"]


def _rm(entries, parities, param=None):
    d = {"entries": [str(x) for x in entries], "parities": parities}
    if param:
        d["parameter"] = param
    return RMatrix.from_dict(d)


def _identity(n):
    return [1 if i == j else 0 for i in range(n * n) for j in range(n * n)]


def _odd(name):
    return ("eta",) if name == "sb2" else ()


@pytest.mark.parametrize("name", BUNDLED)
def test_ybe_and_unitarity_match_oracle(name):
    R = RMatrix.from_dict(preset_data(name)["rmatrix"])
    M = matrix_to_sympy(R.M)
    assert check_ybe(R)["holds"] == ybe_oracle(M, R.parities, _odd(name))
    assert check_unitarity(R)["holds"] == unitarity_oracle(M, R.parities, _odd(name))


@pytest.mark.parametrize("name, ybe, unitary", [
    ("jordanian", True, True), ("triangular", True, True), ("sb2", True, True),
    ("glqq11", True, False),
])
def test_bundled_r_checks(name, ybe, unitary):
    R = RMatrix.from_dict(preset_data(name)["rmatrix"])
    assert check_ybe(R)["holds"] is ybe
    assert check_unitarity(R)["holds"] is unitary


@pytest.mark.parametrize("parities", [[0, 0], [0, 1], [1, 1], [0, 0, 1]])
def test_identity_matches_oracle(parities):
    n = len(parities)
    R = _rm(_identity(n), parities)
    assert check_ybe(R)["holds"] and check_unitarity(R)["holds"]
    M = sp.eye(n * n)
    assert ybe_oracle(M, parities) and unitarity_oracle(M, parities)


@pytest.mark.parametrize("seed", range(6))
def test_random_diagonal_matches_oracle(seed):
    M, par = random_diagonal(1 + seed % 2, 1, seed)
    d = M.rows
    entries = [str(M[i, j]) for i in range(d) for j in range(d)]
    R = _rm(entries, par)
    assert check_ybe(R)["holds"] == ybe_oracle(M, par)
    assert check_unitarity(R)["holds"] == unitarity_oracle(M, par)


def test_non_ybe_matrix_detected_by_both():
    entries = ["1", "1", "0", "0", "0", "1", "0", "0", "0", "0", "1", "0", "0", "0", "0", "1"]
    R = _rm(entries, [0, 0])
    M = matrix_to_sympy(R.M)
    assert check_ybe(R)["holds"] == ybe_oracle(M, [0, 0])


def test_classical_r_examples():
    r = classical_r(problem("triangular").R)
    expect = mx.zeros(4)
    expect[0][1], expect[0][2], expect[1][3], expect[2][3] = S(-1), S(1), S(1), S(-1)
    assert r["r"] == expect and r["antisymmetric"]
    r = classical_r(problem("jordanian").R)["r"]
    expect = mx.zeros(4)
    expect[0][1], expect[0][2], expect[1][3], expect[2][3] = S(-1), S(1), S(-1), S(1)
    assert r == expect
    assert mx.is_zero(classical_r(_rm(_identity(2), [0, 0]), "xi")["r"])


def test_not_quasiclassical():
    with pytest.raises(RTTError, match="not quasiclassical"):
        classical_r(problem("glqq11").R)


def test_T_matrices():
    def strs(name):
        return [[str(x) for x in row] for row in problem(name, 4).T]
    assert strs("jordanian") == [["e^{phi/2}", "e^{phi/2} omega"], ["0", "e^{-phi/2}"]]
    assert strs("sb2") == [["e^{u/2}", "-e^{u/2} omega"], ["0", "e^{-u/2}"]]
    assert strs("glqq11") == [["e^{alpha + phi}", "-e^{alpha + phi} b"], ["0", "e^{alpha - phi}"]]


@pytest.mark.parametrize("name, rules", [
    ("jordanian", ["omega∘phi = phi∘omega - 2*xi*e^{-phi}"]),
    ("sb2", ["omega∘u = u∘omega - 2*eta*e^{-u}", "omega∘omega = 0"]),
    ("glqq11", ["b∘alpha = alpha∘b", "b∘phi = phi∘b", "b∘b = (-q*xi/(1 + q^2))*e^{-4*phi}",
                "phi∘alpha = alpha∘phi"]),
])
def test_exchange_rules(name, rules):
    assert problem(name).rules.describe() == rules


def test_triangular_rules():
    assert problem("triangular").rules.describe() == [
        "alpha∘phi = phi∘alpha", "alpha∘omega = omega∘alpha + xi*e^{-phi}", "omega∘phi = phi∘omega"]


@pytest.mark.parametrize("name", BUNDLED)
def test_rtt_residual_vanishes(name):
    P = problem(name)
    A = P.star
    Tser = expand_T(P.T, 2 * P.N, A)
    Rrhs = P.R.specialize(P.mode["twisted"]) if isinstance(P.mode, dict) else None
    res = rtt_residual(A, Tser, P.R.M, Rrhs, P.R.parities)
    assert not any(e for row in res for e in row)


def test_jordanian_half_exponential_rule():
    P = problem("jordanian")
    A = P.star
    half = DualElement.mono(A, phi=parse_scalar("1/2"))
    omega = DualElement.mono(A, powers=(0, 1))
    lhs = star_product(half, omega, A) - star_product(omega, half, A)
    rhs = parse_scalar("xi") * DualElement.mono(A, phi=parse_scalar("-1/2"))
    assert lhs == star_product(rhs, 1, A)


@pytest.mark.parametrize("a", ["1", "3/2", "-2"])
def test_omega_past_exponential(a):
    P = problem("jordanian")
    A = P.star
    ea = DualElement.mono(A, phi=parse_scalar(a))
    omega = DualElement.mono(A, powers=(0, 1))
    lhs = star_product(omega, ea, A)
    shifted = DualElement.mono(A, phi=parse_scalar(a) - 1)
    rhs = star_product(ea, omega, A) - star_product(S(2) * parse_scalar(a) * parse_scalar("xi") * shifted, 1, A)
    assert lhs == rhs


def test_t11_t12_commutator():
    P = problem("jordanian")
    A = P.star
    T = P.T
    c = star_product(T[0][0], T[0][1], A) - star_product(T[0][1], T[0][0], A)
    assert c == star_product(parse_scalar("xi"), 1, A)


def test_recognize_correction():
    P = problem("jordanian")
    rule = next(iter(P.rules.rules.values()))
    assert recognize_correction(rule.correction, P.rules.gens, "xi") == "-2*xi*e^{-phi}"


@pytest.mark.parametrize("index, value", [(3, "2*xi^2"), (1, "-2*xi")])
def test_inconsistent_rtt(index, value):
    d = preset_data("jordanian")
    d["rmatrix"]["entries"][index] = value
    with pytest.raises(RTTError, match="inconsistent at order"):
        Problem(d, 4).rules


def test_twisted_mode_specialization():
    R = problem("glqq11").R
    R0 = R.specialize({"xi": 0})
    assert R0[0][3] == S(0)
    assert R0[1][2] == parse_scalar("q - q^-1")

