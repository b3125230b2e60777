"""Exact supercommutative coefficient ring.

A :class:`Scalar` is a finite sum of rational multiples of monomials in
registered parameters.  Even parameters are either *polynomial* (formal,
non-invertible: ``xi``) or *laurent* (invertible, any rational exponent:
``q``).  Odd parameters (``eta``) are Grassmann: they anticommute and square
to zero.

Fractions such as ``1/(q + q^-1)`` are kept as a numerator over a
Laurent-polynomial denominator in the laurent parameters only, reduced by
gcd and normalised (lowest exponents zero, leading coefficient one), so that
equality of canonical forms is equality of values.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Dict, Iterable, Mapping, Tuple, Union

EVEN, ODD = "even", "odd"
POLY, LAURENT = "polynomial", "laurent"


@dataclass(frozen=True)
class Parameter:
    name: str
    parity: str = EVEN
    kind: str = POLY

    def __post_init__(self):
        if self.parity not in (EVEN, ODD):
            raise ValueError(f"bad parity {self.parity!r}")
        if self.kind not in (POLY, LAURENT):
            raise ValueError(f"bad kind {self.kind!r}")
        if self.parity == ODD and self.kind == LAURENT:
            raise ValueError("odd parameters cannot be invertible")


_REGISTRY: Dict[str, Parameter] = {}


def declare(name: str, parity: str = EVEN, kind: str = POLY) -> Parameter:
    """Register a parameter (idempotent for identical redeclarations)."""
    p = Parameter(name, parity, kind)
    old = _REGISTRY.get(name)
    if old is not None and old != p:
        raise ValueError(f"parameter {name!r} already declared as {old}")
    _REGISTRY[name] = p
    return p


def parameter(name: str) -> Parameter:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown parameter {name!r}") from None


def parameters() -> Dict[str, Parameter]:
    return dict(_REGISTRY)


for _n, _p, _k in [("xi", EVEN, POLY), ("q", EVEN, LAURENT), ("eta", ODD, POLY),
                   ("eta_B", EVEN, POLY), ("a", EVEN, POLY), ("t", EVEN, POLY),
                   ("s", EVEN, POLY)]:
    declare(_n, _p, _k)


# -- raw polynomial dictionaries ------------------------------------------
# key = (even monomial, odd monomial); even monomial = sorted ((name, exp), ...)
Key = Tuple[Tuple[Tuple[str, Fraction], ...], Tuple[str, ...]]
Poly = Dict[Key, Fraction]

ONE_KEY: Key = ((), ())


def _merge_even(a, b):
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for n, e in b:
        e2 = d.get(n, 0) + e
        if e2:
            d[n] = e2
        else:
            del d[n]
    return tuple(sorted(d.items()))


def _merge_odd(a, b):
    """Concatenate sorted odd monomials; returns (sign, merged) or (0, None)."""
    if not b:
        return 1, a
    if not a:
        return 1, b
    sa = set(a)
    for x in b:
        if x in sa:
            return 0, None
    inv = 0
    for x in a:
        for y in b:
            if x > y:
                inv += 1
    return (-1 if inv & 1 else 1), tuple(sorted(a + b))


def _mul_key(k1: Key, k2: Key):
    sign, odd = _merge_odd(k1[1], k2[1])
    if not sign:
        return 0, None
    return sign, (_merge_even(k1[0], k2[0]), odd)


def padd(a: Poly, b: Poly, scale=1) -> Poly:
    out = dict(a)
    for k, v in b.items():
        v2 = out.get(k, 0) + scale * v
        if v2:
            out[k] = v2
        else:
            out.pop(k, None)
    return out


def pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for k1, v1 in a.items():
        for k2, v2 in b.items():
            sign, k = _mul_key(k1, k2)
            if not sign:
                continue
            v = out.get(k, 0) + sign * v1 * v2
            if v:
                out[k] = v
            else:
                del out[k]
    return out


def _is_laurent_only(p: Poly) -> bool:
    for (ev, od) in p:
        if od:
            return False
        for n, _ in ev:
            if parameter(n).kind != LAURENT:
                return False
    return True


def _check_key(k: Key):
    ev, _ = k
    for n, e in ev:
        par = parameter(n)
        if par.kind == POLY and (e < 0 or Fraction(e).denominator != 1):
            raise ValueError(f"polynomial parameter {n} cannot have exponent {e}")


# -- gcd cancellation (sympy does the multivariate gcd) -----------------------

def _to_sympy(p: Poly, syms, shift):
    import sympy
    expr = 0
    for (ev, _), v in p.items():
        t = sympy.Rational(v.numerator, v.denominator)
        for n, e in ev:
            t *= syms[n] ** int(e + shift.get(n, 0))
        expr += t
    return expr


def _from_sympy(expr, syms, shift, odd=()) -> Poly:
    import sympy
    names = list(syms)
    poly = sympy.Poly(sympy.expand(expr), *[syms[n] for n in names])
    out: Poly = {}
    for monom, coeff in poly.terms():
        ev = []
        for n, e in zip(names, monom):
            e = Fraction(e) - shift.get(n, 0)
            if e:
                ev.append((n, e))
        c = Fraction(int(coeff.p), int(coeff.q))
        if c:
            out[(tuple(sorted(ev)), tuple(odd))] = c
    return out


def _cancel(num: Poly, den: Poly):
    """Divide num and den by their common polynomial gcd."""
    import sympy
    keys = list(num) + list(den)
    names = sorted({n for (ev, _) in keys for n, _ in ev})
    if any(Fraction(e).denominator != 1 for (ev, _) in keys for _, e in ev):
        return num, den
    shift = {}
    for n in names:
        lo = min((dict(ev).get(n, 0) for (ev, _) in keys), default=0)
        shift[n] = -lo if lo < 0 else 0
    syms = {n: sympy.Symbol(n) for n in names}
    groups: Dict[Tuple[str, ...], Poly] = {}
    for (ev, od), v in num.items():
        groups.setdefault(od, {})[(ev, ())] = v
    dexpr = _to_sympy(den, syms, shift)
    gexprs = {od: _to_sympy(g, syms, shift) for od, g in groups.items()}
    g = reduce(sympy.gcd, gexprs.values(), dexpr)
    if g.is_number:
        return num, den
    new_num: Poly = {}
    for od, ex in gexprs.items():
        q_, r_ = sympy.div(ex, g, *syms.values())
        assert r_ == 0
        new_num.update(_from_sympy(q_, syms, shift, od))
    dq, dr = sympy.div(dexpr, g, *syms.values())
    assert dr == 0
    new_den = _from_sympy(dq, syms, shift)
    # shift was applied to both; the common monomial factor cancels
    return new_num, new_den


_UNIT_DEN = {ONE_KEY: Fraction(1)}


class Scalar:
    """Immutable element of the coefficient ring, in canonical form."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly | None = None, den: Poly | None = None, _canonical=False):
        if _canonical:
            # trusted input: values are already nonzero Fractions
            self.num = num if num is not None else {}
            self.den = _UNIT_DEN if den is None else den
            self._hash = None
            return
        num = {k: Fraction(v) for k, v in (num or {}).items() if v}
        den = {ONE_KEY: Fraction(1)} if den is None else {k: Fraction(v) for k, v in den.items() if v}
        if True:
            for k in num:
                _check_key(k)
            num, den = _canonicalize(num, den)
        self.num = num
        self.den = den
        self._hash = None

    # constructors
    @classmethod
    def const(cls, c) -> "Scalar":
        c = Fraction(c)
        return cls({ONE_KEY: c} if c else {}, None, True)

    @classmethod
    def param(cls, name: str, exp=1) -> "Scalar":
        parameter(name)
        exp = Fraction(exp)
        if parameter(name).parity == ODD:
            if exp != 1:
                return ZERO if exp > 1 else cls.const(1)
            return cls({((), (name,)): Fraction(1)}, None, True)
        return cls({(((name, exp),), ()): Fraction(1)})

    @classmethod
    def coerce(cls, x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, (int, Fraction)):
            return cls.const(x)
        if isinstance(x, str):
            return parse_scalar(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to Scalar")

    # structure
    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self):
        return bool(self.num)

    @property
    def is_polynomial(self) -> bool:
        return self.den is _UNIT_DEN or self.den == _UNIT_DEN

    def is_const(self) -> bool:
        return self.is_polynomial and (not self.num or set(self.num) == {ONE_KEY})

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError(f"{self} is not a rational constant")
        return self.num.get(ONE_KEY, Fraction(0))

    def params(self) -> set:
        names = set()
        for (ev, od) in list(self.num) + list(self.den):
            names.update(n for n, _ in ev)
            names.update(od)
        return names

    def body(self) -> "Scalar":
        """Part free of odd parameters."""
        return Scalar({k: v for k, v in self.num.items() if not k[1]}, self.den)

    def is_unit(self) -> bool:
        b = {k: v for k, v in self.num.items() if not k[1]}
        return bool(b) and _is_laurent_only(b)

    def parity(self) -> str:
        """'even', 'odd', 'mixed' or 'zero'."""
        if not self.num:
            return "zero"
        ps = {len(od) % 2 for (_, od) in self.num}
        if len(ps) > 1:
            return "mixed"
        return ODD if ps.pop() else EVEN

    # arithmetic
    def __add__(self, other):
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            if self.is_polynomial:
                return Scalar(padd(self.num, other.num), None, True)
            return Scalar(padd(self.num, other.num), self.den)
        num = padd(pmul(self.num, other.den), pmul(other.num, self.den))
        return Scalar(num, pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return Scalar({k: -v for k, v in self.num.items()}, self.den, True)

    def __sub__(self, other):
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __mul__(self, other):
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        if not self.num or not other.num:
            return ZERO
        if len(self.num) == 1 and ONE_KEY in self.num and self.is_polynomial:
            c = self.num[ONE_KEY]
            return Scalar({k: c * v for k, v in other.num.items()}, other.den, True)
        if len(other.num) == 1 and ONE_KEY in other.num and other.is_polynomial:
            c = other.num[ONE_KEY]
            return Scalar({k: v * c for k, v in self.num.items()}, self.den, True)
        if self.is_polynomial and other.is_polynomial:
            if len(self.num) == 1 and ONE_KEY in self.num:
                c = self.num[ONE_KEY]
                return Scalar({k: c * v for k, v in other.num.items()}, None, True)
            if len(other.num) == 1 and ONE_KEY in other.num:
                c = other.num[ONE_KEY]
                return Scalar({k: v * c for k, v in self.num.items()}, None, True)
            return Scalar(pmul(self.num, other.num), None, True)
        return Scalar(pmul(self.num, other.num), pmul(self.den, other.den))

    def __rmul__(self, other):
        return Scalar.coerce(other) * self

    def inverse(self) -> "Scalar":
        if not self.is_unit():
            raise ZeroDivisionError(f"non-invertible scalar: {self}")
        body = {k: v for k, v in self.num.items() if not k[1]}
        nil = {k: v for k, v in self.num.items() if k[1]}
        binv = Scalar(dict(self.den), body)  # 1/body, times original denominator
        if not nil:
            return binv
        # (b + n)^-1 = b^-1 * sum_k (-n b^-1)^k ; n is nilpotent
        x = -(Scalar(nil, self.den) * binv)
        out, pw = Scalar.const(1), Scalar.const(1)
        while True:
            pw = pw * x
            if not pw:
                break
            out = out + pw
        return binv * out

    def __truediv__(self, other):
        other = Scalar.coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Scalar.coerce(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = Scalar.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # comparison
    def __eq__(self, other):
        if isinstance(other, (int, Fraction, str)):
            other = Scalar.coerce(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self.num.items()), frozenset(self.den.items())))
        return self._hash

    # parameter-order helpers used by perturbative solvers and truncation
    def degree_in(self, names: Iterable[str]) -> int:
        names = set(names)
        best = -1
        for (ev, od) in self.num:
            d = sum(int(e) for n, e in ev if n in names) + sum(1 for n in od if n in names)
            best = max(best, d)
        return best

    def truncate(self, names: Iterable[str], order: int) -> "Scalar":
        """Drop terms whose total degree in ``names`` exceeds ``order``."""
        names = set(names)
        keep = {}
        for k, v in self.num.items():
            ev, od = k
            d = sum(int(e) for n, e in ev if n in names) + sum(1 for n in od if n in names)
            if d <= order:
                keep[k] = v
        return Scalar(keep, self.den, True) if len(keep) != len(self.num) else self

    def coeff(self, name: str, power: int) -> "Scalar":
        """Coefficient of ``name**power`` (name must not occur in the denominator)."""
        out = {}
        par = parameter(name)
        for (ev, od), v in self.num.items():
            if par.parity == ODD:
                p = 1 if name in od else 0
                if p != power:
                    continue
                if p:
                    i = od.index(name)
                    sign = -1 if i % 2 else 1
                    out[(ev, od[:i] + od[i + 1:])] = sign * v
                else:
                    out[(ev, od)] = v
            else:
                e = dict(ev).get(name, 0)
                if e != power:
                    continue
                out[(tuple((n, x) for n, x in ev if n != name), od)] = v
        return Scalar(out, self.den)

    def substitute(self, bindings: Mapping[str, Union[int, Fraction]]) -> "Scalar":
        return substitute(self, bindings)

    def __repr__(self):
        return f"Scalar({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


def _canonicalize(num: Poly, den: Poly):
    if len(den) > 1 and num:
        key = (frozenset(num.items()), frozenset(den.items()))
        hit = _CANON_MEMO.get(key)
        if hit is None:
            hit = _canonicalize_raw(num, den)
            if len(_CANON_MEMO) > 200000:
                _CANON_MEMO.clear()
            _CANON_MEMO[key] = hit
        return dict(hit[0]), dict(hit[1])
    return _canonicalize_raw(num, den)


_CANON_MEMO: Dict = {}


def _canonicalize_raw(num: Poly, den: Poly):
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not _is_laurent_only(den):
        raise ValueError("denominators may only involve invertible parameters")
    if not num:
        return {}, {ONE_KEY: Fraction(1)}
    if len(den) == 1:
        (k, c), = den.items()
        if k == ONE_KEY and c == 1:
            return num, den
        inv_key = (tuple((n, -e) for n, e in k[0]), ())
        return pmul(num, {inv_key: 1 / c}), {ONE_KEY: Fraction(1)}
    num, den = _cancel(num, den)
    if len(den) == 1:
        return _canonicalize_raw(num, den)
    # normalise: lowest exponent of each parameter in den is zero, leading coeff 1
    names = {n for (ev, _) in den for n, _ in ev}
    shift = []
    for n in sorted(names):
        lo = min(dict(ev).get(n, 0) for (ev, _) in den)
        if lo:
            shift.append((n, -lo))
    if shift:
        sk = (tuple(shift), ())
        num, den = pmul(num, {sk: 1}), pmul(den, {sk: 1})
    lead = den[max(den)]
    if lead != 1:
        num = {k: v / lead for k, v in num.items()}
        den = {k: v / lead for k, v in den.items()}
    return num, den


ZERO = Scalar({}, None, True)
ONE = Scalar.const(1)


def S(x) -> Scalar:
    """Shorthand coercion: ``S('xi/2')``, ``S(3)``."""
    return Scalar.coerce(x)


def substitute(s: Scalar, bindings: Mapping[str, Union[int, Fraction]]) -> Scalar:
    for n in bindings:
        if parameter(n).parity == ODD:
            raise ValueError(f"cannot bind odd parameter {n!r}")
    if not bindings:
        return s
    vals = {n: Fraction(v) for n, v in bindings.items()}

    def ev_poly(p: Poly) -> Poly:
        out: Poly = {}
        for (ev, od), c in p.items():
            rest = []
            for n, e in ev:
                if n in vals:
                    c = c * _rpow(vals[n], e, n)
                else:
                    rest.append((n, e))
            if c:
                k = (tuple(rest), od)
                out = padd(out, {k: c})
        return out

    num, den = ev_poly(s.num), ev_poly(s.den)
    if not den:
        raise ZeroDivisionError("substitution makes the denominator vanish")
    return Scalar(num, den)


def _rpow(v: Fraction, e: Fraction, name: str) -> Fraction:
    e = Fraction(e)
    if e.denominator == 1:
        if v == 0 and e < 0:
            raise ZeroDivisionError(f"{name}=0 in a negative power")
        return v ** int(e)
    # rational root must be exact
    root = e.denominator
    def iroot(x):
        r = round(abs(x) ** (1.0 / root))
        for c in (r - 1, r, r + 1):
            if c >= 0 and c ** root == abs(x):
                return c
        return None
    if v < 0:
        raise ValueError(f"{name}^{e} of a negative value")
    n_, d_ = iroot(v.numerator), iroot(v.denominator)
    if n_ is None or d_ is None:
        raise ValueError(f"{name}^{e} is irrational at {name}={v}")
    return Fraction(n_, d_) ** e.numerator


# -- printing -----------------------------------------------------------------

def _fmt_exp(e: Fraction) -> str:
    e = Fraction(e)
    if e.denominator == 1:
        return str(e.numerator)
    return f"({e.numerator}/{e.denominator})"


def _fmt_poly(p: Poly) -> str:
    if not p:
        return "0"
    parts = []
    for k in sorted(p):
        c = p[k]
        ev, od = k
        factors = [n if e == 1 else f"{n}^{_fmt_exp(e)}" for n, e in ev] + list(od)
        mag = abs(c)
        if factors:
            body = "*".join(factors)
            if mag != 1:
                body = f"{mag}*{body}"
        else:
            body = str(mag)
        parts.append(("-" if c < 0 else "+", body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sgn, body in parts[1:]:
        out += f" {sgn} {body}"
    return out


def format_scalar(s: Scalar) -> str:
    n = _fmt_poly(s.num)
    if s.is_polynomial:
        return n
    if len(s.num) > 1:
        n = f"({n})"
    return f"{n}/({_fmt_poly(s.den)})"


# -- parsing ------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text: str):
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        pos = m.end()
        if m.group(1):
            toks.append(("num", int(m.group(1))))
        elif m.group(2):
            toks.append(("name", m.group(2)))
        else:
            toks.append(("op", m.group(3)))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, op=None):
        t = self.peek()
        if op is not None and t != ("op", op):
            raise ValueError(f"expected {op!r} in {self.text!r}")
        self.i += 1
        return t

    def parse(self) -> Scalar:
        if not self.toks:
            raise ValueError("empty scalar expression")
        v = self.expr()
        if self.i != len(self.toks):
            raise ValueError(f"trailing input in {self.text!r}")
        return v

    def expr(self):
        sign = 1
        if self.peek() in (("op", "-"), ("op", "+")):
            sign = -1 if self.take()[1] == "-" else 1
        v = self.term()
        v = -v if sign < 0 else v
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            t = self.term()
            v = v + t if op == "+" else v - t
        return v

    def term(self):
        v = self.factor()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            f = self.factor()
            if op == "*":
                v = v * f
            else:
                if f.is_const():
                    c = f.const_value()
                    if not c:
                        raise ZeroDivisionError(f"division by zero in {self.text!r}")
                    v = v * Scalar.const(1 / c)
                else:
                    v = v / f
        return v

    def exponent(self) -> Fraction:
        kind, val = self.peek()
        if (kind, val) == ("op", "("):
            self.take()
            neg = False
            if self.peek() == ("op", "-"):
                self.take()
                neg = True
            k, n = self.take()
            if k != "num":
                raise ValueError(f"bad exponent in {self.text!r}")
            d = 1
            if self.peek() == ("op", "/"):
                self.take()
                k, d = self.take()
                if k != "num":
                    raise ValueError(f"bad exponent in {self.text!r}")
            self.take(")")
            e = Fraction(n, d)
            return -e if neg else e
        neg = False
        if (kind, val) == ("op", "-"):
            self.take()
            neg = True
        k, n = self.take()
        if k != "num":
            raise ValueError(f"bad exponent in {self.text!r}")
        return Fraction(-n if neg else n)

    def factor(self):
        kind, val = self.take()
        if kind == "num":
            v = Scalar.const(val)
        elif kind == "name":
            v = Scalar.param(val)
            if self.peek() == ("op", "^"):
                self.take()
                e = self.exponent()
                par = parameter(val)
                if par.parity == ODD:
                    v = Scalar.param(val, e)
                elif par.kind == POLY:
                    if e < 0 or e.denominator != 1:
                        raise ValueError(f"{val} is not invertible")
                    v = Scalar.param(val, e)
                else:
                    v = Scalar.param(val, e)
            return v
        elif (kind, val) == ("op", "("):
            v = self.expr()
            self.take(")")
        elif (kind, val) == ("op", "-"):
            return -self.factor()
        else:
            raise ValueError(f"unexpected token {val!r} in {self.text!r}")
        if self.peek() == ("op", "^"):
            self.take()
            e = self.exponent()
            if e.denominator != 1:
                raise ValueError("rational powers only apply to parameters")
            v = v ** int(e)
        return v


def parse_scalar(text: str) -> Scalar:
    """Parse e.g. ``-xi/(q+q^-1)``, ``2*eta``, ``q^(1/2)``."""
    return _Parser(str(text)).parse()


def scalar_arith(a, b, kind: str) -> Scalar:
    a, b = S(a), S(b)
    if kind == "add":
        return a + b
    if kind == "mul":
        return a * b
    if kind == "div":
        if not b.is_unit():
            raise ZeroDivisionError("non-invertible scalar")
        return a / b
    raise ValueError(f"unknown kind {kind!r}")


def scalar_parity(s) -> str:
    return S(s).parity()
