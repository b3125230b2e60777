import pytest

from unitwist.algebra import Element, TensorElement
from unitwist.dual import (BCHError, DualAlgebra, DualElement, bch_factor, canonical_element,
                           canonical_element_product, check_bicharacter, dual_coproduct,
                           dual_normalize, exp_series, pair)
from unitwist.pbw import load_preset, preset_data
from unitwist.scalar import ONE, ZERO, S, parse_scalar

ALL = ["jordanian", "triangular", "sb2", "glqq11", "uq_gl11"]


def make_dual(name, order):
    data = preset_data(name)
    decl = [(g["name"], g["partner"]) for g in data["dual"]["generators"]]
    return DualAlgebra(load_preset(name), decl, order)


@pytest.fixture(scope="module")
def b2():
    return make_dual("jordanian", 6)


def test_pairing_examples(b2):
    H = b2.H
    assert pair(H.parse("h^2 x"), b2.parse("phi^2 omega"), b2) == S(2)
    assert pair(H.gen("h"), b2.gen("omega"), b2) == ZERO
    gl = make_dual("glqq11", 4)
    assert pair(gl.H.gen("e"), gl.gen("b"), gl) == ONE


@pytest.mark.parametrize("name", ALL)
def test_pairing_diagonal_to_weight_6(name):
    d = make_dual(name, 6)
    mons = d.monomials(6)
    for r in mons:
        a = Element(d.H, {d.to_h(r): ONE})
        for p in mons:
            expect = S(d.norm(p)) if p == r else ZERO
            assert pair(a, d.unit_mono_element(p), d) == expect, (r, p)


@pytest.mark.parametrize("name", ALL)
def test_pairing_of_products_uses_dual_coproduct(name):
    N = 4
    d = make_dual(name, N)
    mons = d.monomials(N)
    small = [m for m in mons if d.weight(m) <= 2]
    for r in small:
        a = Element(d.H, {d.to_h(r): ONE})
        for s in small:
            b = Element(d.H, {d.to_h(s): ONE})
            for p in mons:
                if d.weight(p) != d.weight(r) + d.weight(s):
                    continue
                f = d.unit_mono_element(p)
                rhs = ZERO
                for (u, v), c in dual_coproduct(f, d, N).terms.items():
                    sign = -1 if (d.parity(v) and d.parity(r)) else 1
                    rhs = rhs + c * S(sign) * pair(a, d.unit_mono_element(u), d) \
                        * pair(b, d.unit_mono_element(v), d)
                assert pair(a * b, f, d) == rhs


def test_canonical_element_b2(b2):
    T = canonical_element(b2, 2)
    H = b2.H
    assert T.terms[((1, 1), (1, 1))] == ONE
    assert T == canonical_element_product(b2, 2)
    assert T.terms[((2, 0), (2, 0))] == parse_scalar("1/2")
    assert [g.name for g in H.gens] == ["h", "x"]


@pytest.mark.parametrize("name", ["jordanian", "triangular", "sb2", "glqq11", "uq_gl11"])
def test_canonical_element_is_ordered_exponential(name):
    d = make_dual(name, 4)
    assert canonical_element(d, 4) == canonical_element_product(d, 4)


@pytest.mark.parametrize("name", ["jordanian", "sb2", "glqq11"])
def test_bicharacter(name):
    assert check_bicharacter(make_dual(name, 4), 4) == {"delta_id": True, "id_delta_star": True}


def test_dual_normalize_exponential(b2):
    e = dual_normalize(DualElement.mono(b2, phi=-1), 3)
    expect = b2.parse("1 - phi") + b2.parse("phi^2") * parse_scalar("1/2") \
        - b2.parse("phi^3") * parse_scalar("1/6")
    assert DualElement.from_element(expect) == e


def test_dual_normalize_series_times_monomial(b2):
    e = DualElement.mono(b2, powers=(0, 1), phi=parse_scalar("1/2"))
    got = e.expand(2, b2)
    assert got == b2.parse("omega") + b2.parse("phi omega") * parse_scalar("1/2")


def test_dual_normalize_unit_component(b2):
    xi = parse_scalar("xi")
    e = DualElement.from_element(b2.parse("phi omega")) + (S(-2) * xi) * DualElement.mono(b2, phi=-1)
    assert e.expand(6, b2).coeff(b2.one) == S(-2) * xi


def test_dual_coproducts(b2):
    one = b2.parse("1")
    phi, omega = b2.gen("phi"), b2.gen("omega")
    assert dual_coproduct("phi", b2, 3) == TensorElement.pure(phi, one) + TensorElement.pure(one, phi)
    em = DualElement.mono(b2, phi=-1).expand(2, b2)
    expect = TensorElement.pure(omega, em) + TensorElement.pure(one, omega)
    assert dual_coproduct("omega", b2, 3) == expect.truncate(3)


def test_dual_coproduct_gl11():
    d = make_dual("glqq11", 3)
    one, b = d.parse("1"), d.gen("b")
    e2 = DualElement.mono(d, phi=-2).expand(2, d)
    expect = TensorElement.pure(b, e2) + TensorElement.pure(one, b)
    assert dual_coproduct("b", d, 3) == expect.truncate(3)


def test_bch_factor_b2():
    H = load_preset("jordanian")
    X, Y = H.gen("h"), H.gen("x")
    A, B = bch_factor(parse_scalar("xi"), X, Y, 3)
    assert A == exp_series(parse_scalar("xi") * X, ["xi"], 3)
    # at t = 0 the second factor is exp(Y)
    A0, B0 = bch_factor(parse_scalar("xi"), X, Y, 3, check=False)
    B0 = B0.map_coeffs(lambda c: c.substitute({"xi": 0}))
    one = H.parse("1")
    assert B0.coeff(one.alg.one) == ONE
    assert B0.coeff((0, 1)) == ONE


def test_bch_precondition():
    H = load_preset("jordanian")
    with pytest.raises(BCHError):
        bch_factor(parse_scalar("xi"), H.gen("x"), H.gen("h"), 2)
