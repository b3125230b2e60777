import pytest

from unitwist import matrices as mx
from unitwist.algebra import TensorElement
from unitwist.pbw import (PresentationError, coproduct, counit, load_preset, load_representation,
                          normal_form, presentation_from_dict, represent)
from unitwist.scalar import ONE, ZERO, S, parse_scalar

from oracles import kron_oracle, matrix_to_sympy


@pytest.fixture(scope="module")
def b2():
    return load_preset("jordanian")


@pytest.fixture(scope="module")
def gl():
    return load_preset("uq_gl11")


def test_normal_form_one_rewrite(b2):
    assert normal_form(["x", "h"], b2) == b2.parse("h x") - b2.gen("x")


def test_odd_square_in_sb2():
    assert normal_form("x x", load_preset("sb2")).is_zero()


def test_anticommutator_in_gl11(gl):
    omega_q = parse_scalar("q - q^-1")
    expect = (gl.gen("K") - gl.parse("K^-1")) * (ONE / omega_q) - gl.parse("e f")
    assert normal_form(["f", "e"], gl) == expect


def test_multiply(b2, gl):
    h, x = b2.gen("h"), b2.gen("x")
    assert h * x == b2.parse("h x")
    assert x * h == b2.parse("h x") - x
    assert (gl.gen("e") * gl.gen("e")).is_zero()


def test_coproducts(b2, gl):
    h, x = b2.gen("h"), b2.gen("x")
    one = b2.parse("1")
    assert coproduct(h) == TensorElement.pure(h, one) + TensorElement.pure(one, h)
    xx = x * x
    assert coproduct(xx) == (TensorElement.pure(xx, one) + TensorElement.pure(x, x).scale(S(2))
                             + TensorElement.pure(one, xx))
    e, K, g1 = gl.gen("e"), gl.gen("K"), gl.parse("1")
    assert coproduct(e) == TensorElement.pure(e, K) + TensorElement.pure(g1, e)


def test_coproduct_is_algebra_map(b2, gl):
    for alg, words in ((b2, ["x h", "h x x", "x h h"]), (gl, ["f e", "e f h", "h e"])):
        for w in words:
            letters = w.split()
            prod = coproduct(alg.gen(letters[0]))
            for l in letters[1:]:
                prod = prod.mul(coproduct(alg.gen(l)))
            assert prod == coproduct(alg.parse(w))


def test_counit(b2):
    assert counit(b2.parse("1")) == ONE
    assert counit(b2.parse("h^2 x")) == ZERO
    assert counit(b2.parse("1") + parse_scalar("3*xi") * b2.gen("h")) == ONE


def test_represent(b2):
    rho = load_representation("jordanian")
    assert represent(b2.gen("h"), rho) == mx.from_rows([["1/2", "0"], ["0", "-1/2"]])
    assert represent(b2.gen("x"), rho) == mx.from_rows([["0", "1"], ["0", "0"]])
    x = b2.gen("x")
    assert mx.is_zero(represent(x * x, rho))


@pytest.mark.parametrize("name", ["jordanian", "triangular", "sb2", "glqq11", "uq_gl11"])
def test_representations_satisfy_relations(name):
    load_representation(name).check_relations()


def test_graded_kronecker_all_even():
    A = mx.from_rows([["1", "2"], ["3", "4"]])
    B = mx.from_rows([["0", "1"], ["5", "xi"]])
    assert mx.graded_kronecker(A, B, [0, 0]) == mx.kron(A, B)


def test_graded_kronecker_odd_raising():
    E = mx.from_rows([["0", "1"], ["0", "0"]])
    M = mx.graded_kronecker(E, E, [0, 1])
    expect = mx.zeros(4)
    expect[0][3] = S(-1)
    assert M == expect


def test_graded_kronecker_matches_action_oracle():
    par = [0, 1]
    mats = [mx.from_rows(r) for r in ([["0", "1"], ["0", "0"]], [["0", "0"], ["1", "0"]],
                                      [["1", "0"], ["0", "-1"]], [["2", "0"], ["0", "3"]])]
    for A in mats:
        for B in mats:
            engine = matrix_to_sympy(mx.graded_kronecker(A, B, par))
            assert engine == kron_oracle(matrix_to_sympy(A), matrix_to_sympy(B), par)


def test_unknown_generator_in_relation():
    data = {"generators": [{"name": "a", "parity": 0}],
            "relations": [{"bracket": ["a", "z"], "value": "a"}], "coproducts": {}}
    with pytest.raises(PresentationError, match="unknown generator"):
        presentation_from_dict(data)
