"""Dual bases, the pairing, the canonical element and the dual Hopf structure.

The dual algebra is realised on exponent tuples over the dual generators,
listed in the canonical element's factor order.  The monomial ``p`` stands
for the functional ``D^p`` with ``<D^p, e_r> = eps_p * p! * delta_{pr}``,
where ``e_r`` is the ordered monomial of the algebra and ``eps_p`` is the
Koszul sign produced by expanding the ordered product of exponentials
(``-1`` when the monomial contains two odd generators, ``+1`` otherwise).
Products and coproducts on the dual side are computed by duality.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, List, Mapping, Sequence, Tuple

from .algebra import (Element, Filtration, Generator, Mono, OrderedAlgebra, Poly, iadd,
                      TensorElement, padd)
from .pbw import Presentation
from .scalar import ONE, ZERO, Scalar, S, format_scalar


class DualError(ValueError):
    pass


def odd_count_sign(alg: OrderedAlgebra, m: Mono) -> int:
    k = sum(e for e, g in zip(m, alg.gens) if g.parity)
    return -1 if (k * (k - 1) // 2) & 1 else 1


def mono_factorial(m: Mono) -> int:
    out = 1
    for e in m:
        out *= factorial(e)
    return out


class DualAlgebra(OrderedAlgebra):
    """Truncated graded dual H* of a presentation, product computed by duality."""

    def __init__(self, pres: Presentation, decl: Sequence[Tuple[str, str]], order: int):
        self.decl = [tuple(d) for d in decl]
        partners = [p for _, p in self.decl]
        for p in partners:
            if p not in pres.index:
                raise DualError(f"dual generator partner {p!r} is not a generator")
        missing = [g.name for g in pres.gens if g.name not in partners and not g.invertible]
        if missing:
            raise DualError(f"no dual generator declared for {missing}")
        self.H = pres if [g.name for g in pres.gens[:len(partners)]] == partners else pres.reordered(partners)
        self.source = pres
        self.n = len(partners)
        gens = []
        for name, partner in self.decl:
            g = self.H.gens[self.H.index[partner]]
            gens.append(Generator(name, g.parity, g.weight))
        self.N = order
        self.logs = {self.H.index[k]: (self.H.index[c], lam) for k, (c, lam) in self.H.grouplike_log.items()}
        filt = Filtration({lam: 1 for _, lam in self.logs.values()}, order)
        super().__init__(f"{pres.name}*", gens, filtration=filt)
        self.exponentiable = [not g.parity for g in gens]
        self._table: Dict[Tuple[Mono, Mono], Poly] | None = None
        self._hprod: Dict[Tuple[Mono, Mono], Poly] = {}
        self._delta_memo: Dict[Mono, TensorElement] = {}

    # -- correspondence with the algebra ---------------------------------
    def norm(self, p: Mono) -> int:
        return odd_count_sign(self, p) * mono_factorial(p)

    def to_h(self, p: Mono) -> Mono:
        return tuple(p) + (0,) * (len(self.H.gens) - self.n)

    def from_h(self, m: Mono) -> Mono:
        if any(m[self.n:]):
            raise DualError("monomial still contains group-like generators")
        return tuple(m[:self.n])

    def expand_grouplikes(self, p: Poly, max_weight: int) -> Poly:
        """Rewrite K^j (K = exp(lam c), central) as a series in c up to a weight."""
        if not self.logs:
            return {m: c for m, c in p.items() if self.H.weight(m) <= max_weight}
        out: Poly = {}
        for m, c in p.items():
            terms = {tuple(m): c}
            for k, (ci, lam) in self.logs.items():
                j = m[k]
                if not j:
                    continue
                nxt = {}
                for mm, cc in terms.items():
                    base = list(mm)
                    base[k] = 0
                    w0 = self.H.weight(tuple(base))
                    n = 0
                    while w0 + n * self.H.gens[ci].weight <= max_weight:
                        b = list(base)
                        b[ci] += n
                        coef = cc * (S(j) * Scalar.param(lam)) ** n / factorial(n)
                        nxt[tuple(b)] = nxt.get(tuple(b), ZERO) + coef
                        n += 1
                        if self.H.gens[ci].weight == 0:
                            break
                terms = nxt
            for mm, cc in terms.items():
                if self.H.weight(mm) <= max_weight and cc:
                    iadd(out, {mm: cc})
        return out

    def to_canonical(self, a: Element, max_weight: int | None = None) -> Poly:
        """Express an element of (any ordering of) the algebra in the canonical PBW basis."""
        if max_weight is None:
            max_weight = self.N
        if a.alg is self.H:
            poly = dict(a.terms)
        else:
            poly: Poly = {}
            for m, c in a.terms.items():
                letters = [(self.H.index[g.name], e) for g, e in zip(a.alg.gens, m) if e]
                poly = padd(poly, self.H.word(letters), c)
        return self.expand_grouplikes(poly, max_weight)

    # -- product by duality ------------------------------------------------
    def _build_table(self):
        table: Dict[Tuple[Mono, Mono], Poly] = {}
        N = self.N
        for k in self.monomials(N):
            delta = self.H.coproduct_mono(self.to_h(k))
            for (a, b), g in delta.terms.items():
                ea = self.expand_grouplikes({a: ONE}, N)
                eb = self.expand_grouplikes({b: ONE}, N)
                for ma, ca in ea.items():
                    for mb, cb in eb.items():
                        if self.H.weight(ma) + self.H.weight(mb) > N:
                            continue
                        r, s = self.from_h(ma), self.from_h(mb)
                        sign = -1 if (self.parity(r) and self.parity(s)) else 1
                        val = g * ca * cb * Fraction(sign * self.norm(r) * self.norm(s), self.norm(k))
                        cell = table.setdefault((r, s), {})
                        v = cell.get(k, ZERO) + val
                        if v:
                            cell[k] = v
                        else:
                            cell.pop(k, None)
        self._table = table

    def mul_mono(self, a: Mono, b: Mono) -> Poly:
        if self.weight(a) + self.weight(b) > self.N:
            return {}
        if self._table is None:
            self._build_table()
        return self._table.get((a, b), {})

    def mul_gen(self, m: Mono, i: int, inverse: bool = False) -> Poly:
        if inverse:
            raise DualError("dual generators are not invertible")
        return self.mul_mono(m, self.unit(i))

    def unit_mono_element(self, p: Mono) -> Element:
        return Element(self, {tuple(p): ONE})

    # -- algebra products in the canonical basis (for Δ_*) -------------------
    def h_product(self, r: Mono, s: Mono, max_weight: int) -> Poly:
        key = (r, s, max_weight)
        hit = self._hprod.get(key)
        if hit is None:
            hit = self.expand_grouplikes(self.H.mul_mono(self.to_h(r), self.to_h(s)), max_weight)
            self._hprod[key] = hit
        return hit


# -- closed-form exponential monomials ----------------------------------------------

@dataclass(frozen=True)
class DualMonomial:
    """Ordered product over generators of e^{a_i d_i} d_i^{p_i} (a_i may be formal)."""
    prefactor: Tuple[Tuple[int, Scalar], ...]
    powers: Mono

    def exponent(self, i: int) -> Scalar:
        for k, a in self.prefactor:
            if k == i:
                return a
        return ZERO


class DualElement:
    """Scalar combination of closed-form dual monomials over a dual generator list."""

    def __init__(self, alg: OrderedAlgebra, terms: Mapping[DualMonomial, Scalar] | None = None):
        self.alg = alg
        out: Dict[DualMonomial, Scalar] = {}
        for m, c in (terms or {}).items():
            for i, a in m.prefactor:
                if alg.gens[i].parity:
                    raise DualError(f"odd generator {alg.gens[i].name} cannot carry an exponential")
            for e, g in zip(m.powers, alg.gens):
                if g.parity and e > 1:
                    raise DualError("odd generator exponent above 1")
            pref = tuple(sorted((i, a) for i, a in m.prefactor if a))
            m2 = DualMonomial(pref, tuple(m.powers))
            v = out.get(m2, ZERO) + c
            if v:
                out[m2] = v
            else:
                out.pop(m2, None)
        self.terms = out

    @classmethod
    def mono(cls, alg, powers=None, coef=1, **exps) -> "DualElement":
        powers = tuple(powers) if powers is not None else alg.one
        pref = tuple((alg.index[n], S(a)) for n, a in exps.items())
        return cls(alg, {DualMonomial(pref, powers): S(coef)})

    @classmethod
    def from_element(cls, e: Element) -> "DualElement":
        return cls(e.alg, {DualMonomial((), m): c for m, c in e.terms.items()})

    def __add__(self, other: "DualElement") -> "DualElement":
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t.get(m, ZERO) + c
        return DualElement(self.alg, t)

    def __neg__(self):
        return DualElement(self.alg, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, s):
        s = S(s)
        return DualElement(self.alg, {m: s * c for m, c in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, DualElement) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def has_formal_exponents(self) -> bool:
        return any(not a.is_const() for m in self.terms for _, a in m.prefactor)

    def ordered_product(self, other: "DualElement") -> "DualElement":
        """Concatenation product, valid when every factor of self precedes those of other."""
        out: Dict[DualMonomial, Scalar] = {}
        for ma, ca in self.terms.items():
            last = max([i for i, e in enumerate(ma.powers) if e] + [i for i, _ in ma.prefactor], default=-1)
            for mb, cb in other.terms.items():
                first = min([i for i, e in enumerate(mb.powers) if e] + [i for i, _ in mb.prefactor],
                            default=len(self.alg.gens))
                if first < last:
                    raise DualError("ordered_product called on factors out of canonical order")
                if first == last and (ma.powers[last] or self.alg.gens[last].parity):
                    raise DualError("ordered_product cannot merge a power with a later exponential")
                pref = dict(ma.prefactor)
                for i, a in mb.prefactor:
                    pref[i] = pref.get(i, ZERO) + a
                powers = tuple(x + y for x, y in zip(ma.powers, mb.powers))
                c = cb
                if self.alg.parity(ma.powers) and cb.parity() == "odd":
                    c = -cb
                m = DualMonomial(tuple(sorted(pref.items())), powers)
                out[m] = out.get(m, ZERO) + ca * c
        return DualElement(self.alg, out)

    def expand(self, order: int, alg: OrderedAlgebra | None = None) -> Element:
        """Series in ordered monomials truncated at total weight ``order``."""
        alg = alg or self.alg
        out: Poly = {}
        for m, c in self.terms.items():
            slots: List[List[Tuple[int, Scalar]]] = []
            for i, g in enumerate(alg.gens):
                a = m.exponent(i)
                p = m.powers[i]
                if not a:
                    slots.append([(p, ONE)])
                    continue
                opts = []
                n = 0
                while (p + n) * g.weight <= order:
                    opts.append((p + n, a ** n / factorial(n)))
                    n += 1
                    if g.weight == 0:
                        break
                slots.append(opts)
            partial: Dict[Mono, Scalar] = {(): c}
            for i, opts in enumerate(slots):
                nxt = {}
                for key, v in partial.items():
                    w = sum(e * alg.gens[k].weight for k, e in enumerate(key))
                    for e, cc in opts:
                        if w + e * alg.gens[i].weight > order:
                            continue
                        nxt[key + (e,)] = v * cc
                partial = nxt
            for key, v in partial.items():
                iadd(out, {key: v})
        return Element(alg, out)

    def __str__(self):
        return format_dual(self)

    __repr__ = __str__


def _fmt_exponent(alg, prefactor) -> str:
    parts = []
    for i, a in prefactor:
        name = alg.gens[i].name
        if a.is_const():
            v = a.const_value()
            if v == 1:
                parts.append(("+", name))
            elif v == -1:
                parts.append(("-", name))
            elif v.denominator == 1 or v.numerator not in (1, -1):
                parts.append(("-" if v < 0 else "+", f"{abs(v)}{'' if v.denominator == 1 else ''}*{name}"
                              if v.denominator == 1 else f"{abs(v.numerator)}*{name}/{v.denominator}"))
            else:
                parts.append(("-" if v < 0 else "+", f"{name}/{v.denominator}"))
        else:
            parts.append(("+", f"({format_scalar(a)})*{name}"))
    s = ""
    for k, (sg, body) in enumerate(parts):
        if k == 0:
            s = ("-" if sg == "-" else "") + body
        else:
            s += f" {sg} {body}"
    return "e^{" + s + "}"


def format_dual(d: DualElement) -> str:
    if not d.terms:
        return "0"
    items = sorted(d.terms.items(), key=lambda kv: (d.alg.weight(kv[0].powers), kv[0].powers,
                                                    str(kv[0].prefactor)))
    parts = []
    for m, c in items:
        body = []
        # exponential prefactors are printed at the position of their generator
        pre = dict(m.prefactor)
        done = False
        for i, g in enumerate(d.alg.gens):
            if i in pre and not done:
                # group consecutive prefactors into one exponential
                group = [(k, pre[k]) for k in sorted(pre) if k >= i]
                body.append(_fmt_exponent(d.alg, group))
                done = True
            e = m.powers[i]
            if e:
                body.append(g.name if e == 1 else f"{g.name}^{e}")
        mono = " ".join(body) if body else "1"
        cs = format_scalar(c)
        if mono == "1":
            parts.append(f"[{cs}]" if (" + " in cs or " - " in cs[1:]) else cs)
        elif cs == "1":
            parts.append(mono)
        elif cs == "-1":
            parts.append("-" + mono)
        elif c.is_const():
            parts.append(f"{cs} {mono}")
        else:
            parts.append(f"[{cs}] {mono}")
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


# -- public operations --------------------------------------------------------------

def pair(a: Element, f, dual: DualAlgebra) -> Scalar:
    """<a, f> for a in (any ordering of) the algebra, f a dual Element or DualElement."""
    if isinstance(f, DualElement):
        if f.has_formal_exponents():
            raise DualError("unbound exponent")
        f = f.expand(dual.N, dual)
    poly = dual.to_canonical(a, dual.N)
    out = ZERO
    for m, c in poly.items():
        p = dual.from_h(m)
        d = f.terms.get(p)
        if d:
            out = out + c * d * dual.norm(p)
    return out


def canonical_element(dual: DualAlgebra, order: int | None = None) -> TensorElement:
    """T = sum_p e_p ⊗ E^p over the canonical basis, truncated at total weight."""
    N = dual.N if order is None else order
    terms = {(dual.to_h(p), p): S(Fraction(1, dual.norm(p))) for p in dual.monomials(N)}
    return TensorElement((dual.H, dual), terms)


def canonical_element_product(dual: DualAlgebra, order: int | None = None) -> TensorElement:
    """The ordered product of exponentials exp(g_i ⊗ d_i), truncated at dual weight."""
    N = dual.N if order is None else order
    algs = (dual.H, dual)
    out = TensorElement.one(algs)
    for i, g in enumerate(dual.gens):
        gi = dual.H.unit(i)
        di = dual.unit(i)
        x = TensorElement(algs, {(gi, di): ONE})
        ex = TensorElement.one(algs)
        power = TensorElement.one(algs)
        for n in range(1, N + 1):
            power = power.mul(x)
            power = TensorElement(algs, {k: c for k, c in power.terms.items() if dual.weight(k[1]) <= N})
            if power.is_zero():
                break
            ex = ex + power.scale(S(Fraction(1, factorial(n))))
        out = out.mul(ex)
        out = TensorElement(algs, {k: c for k, c in out.terms.items() if dual.weight(k[1]) <= N})
    return out


def dual_normalize(expr: DualElement, order: int) -> DualElement:
    return DualElement.from_element(expr.expand(order))


def dual_coproduct(d, dual: DualAlgebra, order: int | None = None) -> TensorElement:
    """Δ_*(f) defined by <Δ_*(f), a⊗b> = <f, ab>, truncated at total weight."""
    N = dual.N if order is None else order
    if isinstance(d, str):
        f = dual.gen(d)
    elif isinstance(d, DualElement):
        f = d.expand(N, dual)
    else:
        f = d
    out = TensorElement((dual, dual), {})
    top = f.max_weight()
    for p, cf in f.terms.items():
        memo = dual._delta_memo.get((p, N))
        if memo is None:
            terms = {}
            mons = dual.monomials(N)
            for r in mons:
                for s in mons:
                    if dual.weight(r) + dual.weight(s) > N:
                        continue
                    prod = dual.h_product(r, s, max(top, dual.weight(p)))
                    g = prod.get(dual.to_h(p))
                    if not g:
                        continue
                    sign = -1 if (dual.parity(r) and dual.parity(s)) else 1
                    terms[(r, s)] = g * Fraction(dual.norm(p), sign * dual.norm(r) * dual.norm(s))
            memo = TensorElement((dual, dual), terms)
            dual._delta_memo[(p, N)] = memo
        out = out + memo.scale(cf)
    return out


def _mul(a, b):
    return a.mul(b) if isinstance(a, TensorElement) else a * b


def _one_like(x):
    if isinstance(x, TensorElement):
        return TensorElement.one(x.algs)
    return x.alg.element({x.alg.one: ONE})


def _trunc(x, names, order):
    return x.map_coeffs(lambda c: c.truncate(names, order))


def exp_series(x, names: Sequence[str], order: int):
    """exp(x) for x of positive degree in the bookkeeping parameters ``names``."""
    return _exp_fix(x, names, order)


def _exp_fix(x, names, order):
    out = _one_like(x)
    term = _one_like(x)
    for n in range(1, order + 1):
        term = _trunc(_mul(term, x), names, order)
        if term.is_zero():
            break
        c = S(Fraction(1, factorial(n)))
        out = out + (term.scale(c) if isinstance(term, TensorElement) else c * term)
    return out


def _smul(s, x):
    return x.scale(s) if isinstance(x, TensorElement) else S(s) * x


class BCHError(ValueError):
    pass


def bch_factor(t: Scalar, X, Y, order: int, check: bool = True):
    """Factor exp(tX + Y) = exp(tX) exp(g(t) Y), g(t) = (1 - e^{-t})/t, when [X, Y] = Y.

    ``t`` must be a parameter (or a scalar in parameters); series are truncated at
    total degree ``order`` in t and an internal bookkeeping parameter s scaling Y.
    """
    comm = _mul(X, Y) - _mul(Y, X)
    if not (comm - Y).is_zero():
        raise BCHError("BCH precondition failed: [X, Y] != Y")
    t = S(t)
    names = sorted(t.params() | {"s"})
    svar = Scalar.param("s")
    g = ZERO
    for n in range(order + 1):
        g = g + (-t) ** n / factorial(n + 1)
    A = _exp_fix(_smul(t, X), names, order)
    B = _exp_fix(_smul(svar * g, Y).map_coeffs(lambda c: c.truncate(names, order)), names, order)
    if check:
        lhs = _exp_fix(_smul(t, X) + _smul(svar, Y), names, order)
        rhs = _trunc(_mul(A, B), names, order)
        if not (lhs - rhs).is_zero():
            raise BCHError("BCH identity failed to hold at the requested order")
    A1 = A.map_coeffs(lambda c: c.substitute({"s": 1}))
    B1 = B.map_coeffs(lambda c: c.substitute({"s": 1}))
    return A1, B1


def _keep(t: TensorElement, pred) -> TensorElement:
    return TensorElement(t.algs, {k: c for k, c in t.terms.items() if pred(k)})


def check_bicharacter(dual: DualAlgebra, order: int | None = None) -> Dict[str, bool]:
    """(Δ⊗id)T = T13 T23 and (id⊗Δ_*)T = T12 T13, compared on exactly computable parts."""
    from .pbw import coproduct_slot
    N = dual.N if order is None else order
    H = dual.H
    T = canonical_element(dual, N)
    # (Δ⊗id)T: keep slot1+slot2 weight <= N; group-likes expanded in both H slots
    left = coproduct_slot(T, 0)
    lt: Dict = {}
    for (a, b, p), c in left.terms.items():
        for ma, ca in dual.expand_grouplikes({a: ONE}, N).items():
            for mb, cb in dual.expand_grouplikes({b: ONE}, N).items():
                if H.weight(ma) + H.weight(mb) <= N:
                    k = (ma, mb, p)
                    lt[k] = lt.get(k, ZERO) + c * ca * cb
    lhs = TensorElement((H, H, dual), lt)
    algs3 = (H, H, dual)
    T13 = T.embed([0, 2], algs3)
    T23 = T.embed([1, 2], algs3)
    rhs = _keep(T13.mul(T23), lambda k: H.weight(k[0]) + H.weight(k[1]) <= N)
    first = (lhs - rhs).is_zero()
    # (id⊗Δ_*)T: keep slot2+slot3 weight <= N and slot1 weight <= N
    algsb = (H, dual, dual)
    lt = {}
    for (m, p), c in T.terms.items():
        for (r, s), v in dual_coproduct(dual.unit_mono_element(p), dual, N).terms.items():
            k = (m, r, s)
            lt[k] = lt.get(k, ZERO) + c * v
    lhs2 = TensorElement(algsb, lt)
    rt = {}
    for (mr, r), cr in T.terms.items():
        for (ms, s), cs in T.terms.items():
            if dual.weight(r) + dual.weight(s) > N:
                continue
            # (e_r ⊗ E^r ⊗ 1)(e_s ⊗ 1 ⊗ E^s): E^r passes e_s
            sign = -1 if (dual.parity(r) and dual.parity(s)) else 1
            prod = dual.h_product(r, s, N)
            for m, v in prod.items():
                k = (m, r, s)
                rt[k] = rt.get(k, ZERO) + S(sign) * cr * cs * v
    rhs2 = TensorElement(algsb, rt)
    second = (lhs2 - rhs2).is_zero()
    return {"delta_id": first, "id_delta_star": second}
