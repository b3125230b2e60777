"""Ordered (super)algebras given by exchange rules, their elements and tensors.

One rewriting engine serves both sides of the duality: presented enveloping
algebras (exact, finite rules) and deformed dual algebras (rules whose right
sides are truncated series).  Monomials are exponent tuples over the ordered
generator list; a product is normal-ordered by pushing generators leftward
through the rightmost out-of-order neighbour (leftmost-innermost rewriting).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .scalar import ONE, ZERO, Scalar, S, parse_scalar

Mono = Tuple[int, ...]
Poly = Dict[Mono, Scalar]


@dataclass(frozen=True)
class Generator:
    name: str
    parity: int = 0
    weight: int = 1
    central: bool = False
    invertible: bool = False


class RewriteError(RuntimeError):
    pass


def padd(a: Poly, b: Poly, scale: Scalar | None = None) -> Poly:
    return iadd(dict(a), b, scale)


def iadd(out: Poly, b: Poly, scale: Scalar | None = None) -> Poly:
    """In-place ``out += scale * b``."""
    for m, c in b.items():
        if scale is not None:
            c = scale * c
        v = out.get(m)
        v = c if v is None else v + c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


class Filtration:
    """Keep a term iff weight(mono) + sum(w_p * deg_p(coeff)) <= budget."""

    def __init__(self, param_weights: Mapping[str, int], budget: int, max_param_degree: int | None = None):
        self.param_weights = dict(param_weights)
        self.budget = budget
        self.max_param_degree = max_param_degree

    def apply(self, mono_weight: int, c: Scalar) -> Scalar:
        room = self.budget - mono_weight
        if room < 0:
            return ZERO
        if not self.param_weights:
            return c
        keep = {}
        changed = False
        cap = self.max_param_degree
        for k, v in c.num.items():
            ev, od = k
            d = 0
            deg = 0
            for n, e in ev:
                w = self.param_weights.get(n)
                if w:
                    d += w * int(e)
                    deg += int(e)
            for n in od:
                w = self.param_weights.get(n)
                if w:
                    d += w
                    deg += 1
            if d <= room and (cap is None or deg <= cap):
                keep[k] = v
            else:
                changed = True
        if not changed:
            return c
        return Scalar(keep, c.den, c.is_polynomial)


class OrderedAlgebra:
    """Associative superalgebra with a PBW-type basis of ordered monomials."""

    def __init__(self, name: str, generators: Sequence[Generator],
                 rules: Mapping[Tuple[int, int], Poly] | None = None,
                 filtration: Filtration | None = None):
        self.name = name
        self.gens: Tuple[Generator, ...] = tuple(generators)
        self.index = {g.name: i for i, g in enumerate(self.gens)}
        if len(self.index) != len(self.gens):
            raise ValueError("duplicate generator names")
        for g in self.gens:
            if g.central and g.parity:
                raise ValueError(f"central generator {g.name} must be even")
            if g.invertible and not g.central:
                raise ValueError(f"invertible generator {g.name} must be central")
        self.rules: Dict[Tuple[int, int], Poly] = dict(rules or {})
        for (j, i) in self.rules:
            if j < i or (j == i and not self.gens[i].parity):
                raise ValueError(f"rule ({self.gens[j].name},{self.gens[i].name}) is not an exchange rule")
        self.filtration = filtration
        self._cache: Dict[Tuple[Mono, int], Poly] = {}
        self.one: Mono = (0,) * len(self.gens)

    # -- basic monomial data -------------------------------------------
    def parity(self, m: Mono) -> int:
        return sum(e for e, g in zip(m, self.gens) if g.parity) & 1

    def weight(self, m: Mono) -> int:
        return sum(abs(e) * g.weight for e, g in zip(m, self.gens))

    def unit(self, i: int) -> Mono:
        m = [0] * len(self.gens)
        m[i] = 1
        return tuple(m)

    def rule(self, j: int, i: int) -> Poly:
        r = self.rules.get((j, i))
        if r is not None:
            return r
        if j == i:
            return {}
        m = [0] * len(self.gens)
        m[i] += 1
        m[j] += 1
        sign = -1 if (self.gens[i].parity and self.gens[j].parity) else 1
        return {tuple(m): S(sign)}

    def _filter(self, p: Poly) -> Poly:
        f = self.filtration
        if f is None:
            return p
        out = {}
        for m, c in p.items():
            c = f.apply(self.weight(m), c)
            if c:
                out[m] = c
        return out

    # -- multiplication ------------------------------------------------------
    def mul_gen(self, m: Mono, i: int, inverse: bool = False) -> Poly:
        """Normal form of ``m * g_i`` (or ``m * g_i^-1`` for invertible g_i)."""
        key = (m, -1 - i if inverse else i)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        g = self.gens[i]
        if inverse or g.central:
            if inverse and not g.invertible:
                raise RewriteError(f"{g.name} is not invertible")
            m2 = list(m)
            m2[i] += -1 if inverse else 1
            if m2[i] < 0 and not g.invertible:
                raise RewriteError("negative exponent")
            res = {tuple(m2): ONE}
        else:
            j = None
            for k in range(len(m) - 1, i, -1):
                if m[k] and not self.gens[k].central:
                    j = k
                    break
            if j is None:
                if g.parity and m[i] >= 1:
                    mp = list(m)
                    mp[i] -= 1
                    res = self.mul_right(tuple(mp), self.rule(i, i))
                else:
                    m2 = list(m)
                    m2[i] += 1
                    res = {tuple(m2): ONE}
            else:
                mp = list(m)
                mp[j] -= 1
                res = self.mul_right(tuple(mp), self.rule(j, i))
        res = self._filter(res)
        self._cache[key] = res
        return res

    def mul_dict_gen(self, d: Poly, i: int, inverse: bool = False) -> Poly:
        out: Poly = {}
        for m, c in d.items():
            iadd(out, self.mul_gen(m, i, inverse), c)
        return out

    def mul_mono(self, a: Mono, b: Mono) -> Poly:
        """Normal form of the product of two normal monomials."""
        d: Poly = {a: ONE}
        for i, e in enumerate(b):
            if e < 0:
                for _ in range(-e):
                    d = self.mul_dict_gen(d, i, inverse=True)
            else:
                for _ in range(e):
                    d = self.mul_dict_gen(d, i)
            if not d:
                break
        return self._filter(d)

    def mul_right(self, m: Mono, p: Poly) -> Poly:
        """``m * p`` for a polynomial p with left-standing coefficients."""
        out: Poly = {}
        pm = self.parity(m)
        for t, c in p.items():
            if pm and c.parity() not in ("even", "zero"):
                c = _koszul_scalar(c, pm)
            iadd(out, self.mul_mono(m, t), c)
        return out

    def mul(self, a: Poly, b: Poly) -> Poly:
        out: Poly = {}
        for mb, cb in b.items():
            for ma, ca in a.items():
                c = cb
                if self.parity(ma) and cb.parity() not in ("even", "zero"):
                    c = _koszul_scalar(cb, 1)
                iadd(out, self.mul_mono(ma, mb), ca * c)
        return self._filter(out)

    def word(self, letters: Sequence[Tuple[int, int]]) -> Poly:
        """Normal form of an arbitrary word ``[(gen_index, power), ...]``."""
        d: Poly = {self.one: ONE}
        for i, e in letters:
            for _ in range(abs(e)):
                d = self.mul_dict_gen(d, i, inverse=e < 0)
        return self._filter(d)

    def element(self, terms: Poly | None = None) -> "Element":
        return Element(self, terms or {})

    def gen(self, name: str) -> "Element":
        return Element(self, {self.unit(self.index[name]): ONE})

    def parse(self, text: str) -> "Element":
        return parse_element(self, text)

    def format_mono(self, m: Mono) -> str:
        parts = []
        for e, g in zip(m, self.gens):
            if e == 1:
                parts.append(g.name)
            elif e:
                parts.append(f"{g.name}^{e}")
        return " ".join(parts) if parts else "1"

    def monomials(self, max_weight: int) -> List[Mono]:
        """All normal monomials (nonnegative exponents, odd exps <= 1) up to a weight."""
        out: List[Mono] = []

        def rec(k, cur, w):
            if k == len(self.gens):
                out.append(tuple(cur))
                return
            g = self.gens[k]
            top = 1 if g.parity else max_weight
            e = 0
            while e <= top and w + e * g.weight <= max_weight:
                cur.append(e)
                rec(k + 1, cur, w + e * g.weight)
                cur.pop()
                e += 1
                if g.weight == 0:
                    break
        rec(0, [], 0)
        out.sort(key=lambda m: (self.weight(m), tuple(-x for x in m)))
        return out


def _koszul_scalar(c: Scalar, sign_parity: int) -> Scalar:
    """Move a scalar past an object of the given parity: odd terms flip sign."""
    if not sign_parity:
        return c
    num = {}
    for k, v in c.num.items():
        num[k] = -v if len(k[1]) & 1 else v
    return Scalar(num, c.den, True)


koszul_scalar = _koszul_scalar


class Element:
    """Finite linear combination of normal monomials of an OrderedAlgebra."""

    __slots__ = ("alg", "terms")

    def __init__(self, alg: OrderedAlgebra, terms: Poly):
        self.alg = alg
        self.terms = {m: c for m, c in terms.items() if c}

    def __add__(self, other):
        other = self._coerce(other)
        return Element(self.alg, padd(self.terms, other.terms))

    __radd__ = __add__

    def __neg__(self):
        return Element(self.alg, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Element):
            if other.alg is not self.alg:
                raise ValueError("elements of different algebras")
            return Element(self.alg, self.alg.mul(self.terms, other.terms))
        s = S(other)
        # right scalar multiplication: s moves left past each monomial
        return Element(self.alg, {m: c * _koszul_scalar(s, self.alg.parity(m))
                                  for m, c in self.terms.items()})

    def __rmul__(self, other):
        s = S(other)
        return Element(self.alg, {m: s * c for m, c in self.terms.items()})

    def __pow__(self, n: int):
        out = Element(self.alg, {self.alg.one: ONE})
        for _ in range(n):
            out = out * self
        return out

    def _coerce(self, other) -> "Element":
        if isinstance(other, Element):
            return other
        s = S(other)
        return Element(self.alg, {self.alg.one: s} if s else {})

    def __eq__(self, other):
        if not isinstance(other, Element):
            try:
                other = self._coerce(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, m: Mono) -> Scalar:
        return self.terms.get(m, ZERO)

    def parity(self) -> Optional[int]:
        ps = set()
        for m, c in self.terms.items():
            cp = c.parity()
            if cp == "mixed":
                return None
            ps.add((self.alg.parity(m) + (cp == "odd")) & 1)
        if len(ps) > 1:
            return None
        return ps.pop() if ps else 0

    def max_weight(self) -> int:
        return max((self.alg.weight(m) for m in self.terms), default=0)

    def truncate(self, max_weight: int) -> "Element":
        return Element(self.alg, {m: c for m, c in self.terms.items()
                                  if self.alg.weight(m) <= max_weight})

    def map_coeffs(self, fn: Callable[[Scalar], Scalar]) -> "Element":
        return Element(self.alg, {m: fn(c) for m, c in self.terms.items()})

    def __repr__(self):
        return f"Element({self})"

    def __str__(self):
        return format_terms(self.terms, self.alg.format_mono, self.alg.weight)


def format_terms(terms: Mapping, fmt_mono, weight=None) -> str:
    if not terms:
        return "0"
    keys = sorted(terms, key=(lambda m: (weight(m), m)) if weight else None)
    parts = []
    for m in keys:
        c = terms[m]
        mono = fmt_mono(m)
        cs = str(c)
        if mono == "1":
            body = f"[{cs}]" if (" + " in cs or " - " in cs[1:]) else cs
        elif cs == "1":
            body = mono
        elif cs == "-1":
            body = "-" + mono
        elif c.is_const():
            body = f"{cs} {mono}"
        else:
            body = f"[{cs}] {mono}"
        parts.append(body)
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


_ELEM_TOKEN = re.compile(r"\s*(\[[^\]]*\]|[A-Za-z_][A-Za-z_0-9]*(?:\^-?\d+)?|\d+(?:/\d+)?|[+\-*]|⊗)")


def parse_element(alg: OrderedAlgebra, text: str) -> Element:
    """Parse ``"h x - x"``, ``"[1/(q - q^-1)] K - [1/(q - q^-1)] K^-1"``, ``"2 h^2"``."""
    text = text.strip()
    pos = 0
    toks = []
    while pos < len(text):
        m = _ELEM_TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse element {text!r} at {text[pos:]!r}")
        toks.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    total: Poly = {}
    sign = 1
    coef = ONE
    letters: List[Tuple[int, int]] = []
    started = False

    def flush():
        nonlocal coef, letters, started
        if started:
            d = alg.word(letters)
            s = S(sign) * coef
            for m, c in d.items():
                total[m] = total.get(m, ZERO) + s * c
        coef, letters, started = ONE, [], False

    for tok in toks:
        if tok in "+-":
            flush()
            sign = -1 if tok == "-" else 1
            continue
        if tok == "*":
            continue
        started = True
        if tok.startswith("["):
            coef = coef * parse_scalar(tok[1:-1])
        elif tok[0].isdigit():
            coef = coef * S(Fraction(tok))
        else:
            name, _, e = tok.partition("^")
            if name not in alg.index:
                raise ValueError(f"unknown generator {name!r} in {text!r}")
            letters.append((alg.index[name], int(e) if e else 1))
    flush()
    return Element(alg, {m: c for m, c in total.items() if c})


# -- tensors ----------------------------------------------------------------------

class TensorElement:
    """Element of A_1 ⊗ ... ⊗ A_k in the basis of tuples of normal monomials."""

    __slots__ = ("algs", "terms")

    def __init__(self, algs: Sequence[OrderedAlgebra], terms: Mapping[Tuple[Mono, ...], Scalar]):
        self.algs = tuple(algs)
        self.terms = {k: c for k, c in terms.items() if c}

    @classmethod
    def one(cls, algs) -> "TensorElement":
        algs = tuple(algs)
        return cls(algs, {tuple(a.one for a in algs): ONE})

    @classmethod
    def pure(cls, *elements: Element) -> "TensorElement":
        """a_1 ⊗ ... ⊗ a_k of homogeneous factors (scalars collected to the left)."""
        algs = tuple(e.alg for e in elements)
        terms: Dict[Tuple[Mono, ...], Scalar] = {(): ONE}
        for e in elements:
            new = {}
            for key, c in terms.items():
                pk = sum(a.parity(m) for a, m in zip(algs, key)) & 1
                for m, d in e.terms.items():
                    d2 = _koszul_scalar(d, pk)
                    k2 = key + (m,)
                    v = new.get(k2, ZERO) + c * d2
                    new[k2] = v
            terms = new
        return cls(algs, terms)

    def parity_of(self, key) -> int:
        return sum(a.parity(m) for a, m in zip(self.algs, key)) & 1

    def weight_of(self, key) -> int:
        return sum(a.weight(m) for a, m in zip(self.algs, key))

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k)
            v = c if v is None else v + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return TensorElement(self.algs, out)

    __radd__ = __add__

    def __neg__(self):
        return TensorElement(self.algs, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def _coerce(self, other):
        if isinstance(other, TensorElement):
            if len(other.algs) != len(self.algs):
                raise ValueError("tensor rank mismatch")
            return other
        s = S(other)
        one = tuple(a.one for a in self.algs)
        return TensorElement(self.algs, {one: s} if s else {})

    def scale(self, s) -> "TensorElement":
        s = S(s)
        return TensorElement(self.algs, {k: s * c for k, c in self.terms.items()})

    __rmul__ = scale

    def mul(self, other: "TensorElement", coeff_filter: Callable[[Scalar], Scalar] | None = None,
            max_weight: int | None = None) -> "TensorElement":
        if len(other.algs) != len(self.algs):
            raise ValueError("tensor rank mismatch")
        n = len(self.algs)
        out: Dict[Tuple[Mono, ...], Scalar] = {}
        for kb, cb in other.terms.items():
            pb = [a.parity(m) for a, m in zip(self.algs, kb)]
            for ka, ca in self.terms.items():
                pa = [a.parity(m) for a, m in zip(self.algs, ka)]
                # move b-factors and cb left past later a-factors
                sign = 0
                for s in range(n):
                    if pb[s]:
                        sign += sum(pa[s + 1:])
                c = ca * _koszul_scalar(cb, sum(pa) & 1)
                if sign & 1:
                    c = -c
                if coeff_filter is not None:
                    c = coeff_filter(c)
                if not c:
                    continue
                partial: Dict[Tuple[Mono, ...], Scalar] = {(): c}
                for s in range(n):
                    prod = self.algs[s].mul_mono(ka[s], kb[s])
                    nxt = {}
                    for key, v in partial.items():
                        for m, d in prod.items():
                            # d (left coefficient) moves left past earlier slots
                            pk = sum(self.algs[t].parity(key[t]) for t in range(s)) & 1
                            d2 = _koszul_scalar(d, pk)
                            k2 = key + (m,)
                            nxt[k2] = nxt.get(k2, ZERO) + v * d2
                    partial = nxt
                for key, v in partial.items():
                    if not v:
                        continue
                    if max_weight is not None and self.weight_of(key) > max_weight:
                        continue
                    if coeff_filter is not None:
                        v = coeff_filter(v)
                    w = out.get(key)
                    w = v if w is None else w + v
                    if w:
                        out[key] = w
                    else:
                        out.pop(key, None)
        return TensorElement(self.algs, out)

    def __mul__(self, other):
        if isinstance(other, TensorElement):
            return self.mul(other)
        s = S(other)
        return TensorElement(self.algs, {k: c * _koszul_scalar(s, self.parity_of(k))
                                         for k, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, TensorElement):
            try:
                other = self._coerce(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def map_coeffs(self, fn) -> "TensorElement":
        return TensorElement(self.algs, {k: fn(c) for k, c in self.terms.items()})

    def truncate(self, max_weight: int) -> "TensorElement":
        return TensorElement(self.algs, {k: c for k, c in self.terms.items()
                                         if self.weight_of(k) <= max_weight})

    def embed(self, slots: Sequence[int], algs: Sequence[OrderedAlgebra]) -> "TensorElement":
        """Place factor i into slot ``slots[i]`` of a larger tensor (others = 1).

        Slots must be increasing, so no Koszul reordering occurs.
        """
        if list(slots) != sorted(slots):
            raise ValueError("embed needs increasing slots; use permute first")
        algs = tuple(algs)
        out = {}
        for k, c in self.terms.items():
            key = [a.one for a in algs]
            for s, m in zip(slots, k):
                key[s] = m
            out[tuple(key)] = c
        return TensorElement(algs, out)

    def permute(self, perm: Sequence[int]) -> "TensorElement":
        """New tensor whose slot i holds old slot ``perm[i]``, with Koszul signs."""
        n = len(self.algs)
        algs = tuple(self.algs[p] for p in perm)
        out = {}
        for k, c in self.terms.items():
            par = [self.algs[i].parity(k[i]) for i in range(n)]
            sign = 0
            for x in range(n):
                for y in range(x + 1, n):
                    if perm[x] > perm[y] and par[perm[x]] and par[perm[y]]:
                        sign += 1
            key = tuple(k[p] for p in perm)
            out[key] = -c if sign & 1 else c
        return TensorElement(algs, out)

    def flip(self) -> "TensorElement":
        return self.permute([1, 0])

    def apply_slot(self, slot: int, fn: Callable[[Mono], "TensorElement | Element | Poly"],
                   algs: Sequence[OrderedAlgebra] | None = None) -> "TensorElement":
        """Apply a linear map to one slot; fn(mono) returns an Element (same slot count)
        or a TensorElement (slot expanded).  Parity of the map is assumed even."""
        out: Dict[Tuple[Mono, ...], Scalar] = {}
        new_algs = None
        for k, c in self.terms.items():
            img = fn(k[slot])
            if isinstance(img, Element):
                img = TensorElement((img.alg,), {(m,): v for m, v in img.terms.items()})
            pre = sum(self.algs[t].parity(k[t]) for t in range(slot)) & 1
            for km, v in img.terms.items():
                v2 = _koszul_scalar(v, pre)
                key = k[:slot] + km + k[slot + 1:]
                val = out.get(key, ZERO) + c * v2
                if val:
                    out[key] = val
                else:
                    out.pop(key, None)
            if new_algs is None:
                new_algs = self.algs[:slot] + img.algs + self.algs[slot + 1:]
        if new_algs is None:
            if algs is None:
                raise ValueError("cannot infer algebras of an empty tensor map")
            new_algs = tuple(algs)
        return TensorElement(new_algs, out)

    def __repr__(self):
        return f"TensorElement({self})"

    def __str__(self):
        def fmt(k):
            return " ⊗ ".join(a.format_mono(m) for a, m in zip(self.algs, k))
        if not self.terms:
            return "0"
        keys = sorted(self.terms, key=lambda k: (self.weight_of(k), k))
        parts = []
        for k in keys:
            c = self.terms[k]
            cs = str(c)
            if cs == "1":
                parts.append(fmt(k))
            elif cs == "-1":
                parts.append("-" + fmt(k))
            elif c.is_const():
                parts.append(f"{cs} {fmt(k)}")
            else:
                parts.append(f"[{cs}] {fmt(k)}")
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out
