"""Presented (super) enveloping algebras: PBW normal forms, coproducts,
counit and matrix representations.

Relations are stored as super-brackets ``[a, b} = value`` and turned into
exchange rules for whatever generator order is requested, so the same
algebra can be normal-ordered in its display order and re-ordered to match
a canonical element's factor order.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Dict, Mapping, Sequence, Tuple

from . import matrices as mx
from .algebra import (Element, Generator, Mono, OrderedAlgebra, Poly, TensorElement,
                      padd)
from .scalar import ONE, ZERO, Scalar, S, declare, parse_scalar

PRESETS = ("jordanian", "triangular", "sb2", "glqq11")
DATA_FILES = PRESETS + ("uq_gl11",)


class PresentationError(ValueError):
    pass


class Presentation(OrderedAlgebra):
    """An OrderedAlgebra with Hopf data (coproduct, counit) and representations."""

    def __init__(self, name: str, generators: Sequence[Generator],
                 brackets: Sequence[Tuple[str, str, str]] = (),
                 coproducts: Mapping[str, object] | None = None,
                 counits: Mapping[str, str] | None = None,
                 grouplike_log: Mapping[str, Tuple[str, str]] | None = None):
        super().__init__(name, generators)
        self.brackets = [tuple(b) for b in brackets]
        self.grouplike_log = dict(grouplike_log or {})
        self._build_rules()
        self._coproduct_spec = dict(coproducts or {})
        self._counit_spec = dict(counits or {})
        self._build_hopf()
        self._delta_cache: Dict[Mono, TensorElement] = {}

    # -- construction ----------------------------------------------------
    def _build_rules(self):
        rules: Dict[Tuple[int, int], Poly] = {}
        seen = set()
        for a, b, value in self.brackets:
            for g in (a, b):
                if g not in self.index:
                    raise PresentationError(f"unknown generator {g!r} in relation [{a},{b}]")
            i, j = self.index[a], self.index[b]
            key = (max(i, j), min(i, j))
            if key in seen:
                raise PresentationError(f"duplicate relation for pair ({a},{b})")
            seen.add(key)
            v = self.parse(value) if isinstance(value, str) else value
            for m in v.terms:
                movable = [k for k, e in enumerate(m) if e and not self.gens[k].central]
                if len(movable) > 1 or (movable and m[movable[0]] > 1):
                    raise PresentationError(
                        f"relation value {value!r} must be a single generator or central")
            pa, pb = self.gens[i].parity, self.gens[j].parity
            s = -1 if (pa and pb) else 1
            if i == j:
                if not pa:
                    if v.terms:
                        raise PresentationError(f"[{a},{a}] of an even generator must vanish")
                    continue
                rules[(i, i)] = {m: c / 2 for m, c in v.terms.items()}
                continue
            if self.gens[i].central or self.gens[j].central:
                if v.terms:
                    raise PresentationError(f"central generator in nonzero relation [{a},{b}]")
                continue
            both = [0] * len(self.gens)
            both[i] += 1
            both[j] += 1
            both = tuple(both)
            if i < j:
                # a earlier: b a -> s (a b - v)
                rhs = padd({both: S(s)}, v.terms, S(-s))
            else:
                # b earlier: a b -> s b a + v
                rhs = padd({both: S(s)}, v.terms)
            rules[key] = rhs
        for (j, i), rhs in rules.items():
            lw = self.gens[i].weight + self.gens[j].weight
            for m in rhs:
                if self.weight(m) > lw:
                    raise PresentationError("exchange rule increases weight: rewriting may not terminate")
        self.rules = rules
        self._cache.clear()

    def _build_hopf(self):
        self.delta_gen: Dict[int, TensorElement] = {}
        self.delta_inv: Dict[int, TensorElement] = {}
        self.eps_gen: Dict[int, Scalar] = {}
        pair = (self, self)
        for i, g in enumerate(self.gens):
            spec = self._coproduct_spec.get(g.name, "grouplike" if g.invertible else "primitive")
            u = self.unit(i)
            if spec == "primitive":
                if g.invertible:
                    raise PresentationError(f"invertible generator {g.name} cannot be primitive")
                d = TensorElement(pair, {(u, self.one): ONE, (self.one, u): ONE})
                eps = ZERO
            elif spec == "grouplike":
                d = TensorElement(pair, {(u, u): ONE})
                eps = ONE
                if g.invertible:
                    ui = tuple(-x for x in u)
                    self.delta_inv[i] = TensorElement(pair, {(ui, ui): ONE})
            else:
                d = TensorElement(pair, {})
                for coef, w1, w2 in spec:
                    a = self.parse(w1)
                    b = self.parse(w2)
                    d = d + TensorElement.pure(a, b).scale(parse_scalar(coef))
                eps = ZERO
            if g.name in self._counit_spec:
                eps = parse_scalar(self._counit_spec[g.name])
            if eps and not g.invertible:
                raise PresentationError(f"counit of {g.name} must vanish")
            self.delta_gen[i] = d
            self.eps_gen[i] = eps
        if self.grouplike_log:
            for k, (gen, param) in self.grouplike_log.items():
                if k not in self.index or gen not in self.index:
                    raise PresentationError(f"bad grouplike_log entry {k}")

    def reordered(self, order: Sequence[str]) -> "Presentation":
        """Same algebra with a different PBW order (listed names first, rest after)."""
        names = list(order) + [g.name for g in self.gens if g.name not in order]
        if sorted(names) != sorted(g.name for g in self.gens):
            raise PresentationError(f"bad generator order {order}")
        gens = [self.gens[self.index[n]] for n in names]
        return Presentation(self.name, gens, self.brackets, self._coproduct_spec,
                            self._counit_spec,
                            self.grouplike_log)

    # -- Hopf structure ----------------------------------------------------
    def coproduct_mono(self, m: Mono) -> TensorElement:
        hit = self._delta_cache.get(m)
        if hit is not None:
            return hit
        out = TensorElement.one((self, self))
        for i, e in enumerate(m):
            if e < 0:
                for _ in range(-e):
                    out = out.mul(self.delta_inv[i])
            else:
                for _ in range(e):
                    out = out.mul(self.delta_gen[i])
        self._delta_cache[m] = out
        return out

    def counit_mono(self, m: Mono) -> Scalar:
        out = ONE
        for i, e in enumerate(m):
            if e:
                out = out * (self.eps_gen[i] ** abs(e) if e > 0 else self.eps_gen[i].inverse() ** -e)
        return out


class Representation:
    """Matrices for the generators of a presentation on a graded vector space."""

    def __init__(self, pres: Presentation, matrices: Mapping[str, mx.Matrix], parities: Sequence[int]):
        self.pres = pres
        self.parities = list(parities)
        self.dim = len(self.parities)
        self.gen_mats: Dict[int, mx.Matrix] = {}
        self.inv_mats: Dict[int, mx.Matrix] = {}
        for name, M in matrices.items():
            if name not in pres.index:
                raise PresentationError(f"representation names unknown generator {name!r}")
            M = [[parse_scalar(x) if isinstance(x, str) else S(x) for x in r] for r in M]
            if mx.shape(M) != (self.dim, self.dim):
                raise PresentationError(f"matrix for {name} has wrong shape")
            i = pres.index[name]
            try:
                par = mx.operator_parity(M, self.parities)
            except ValueError:
                par = None
            if par is not None and par != pres.gens[i].parity and not mx.is_zero(M):
                raise PresentationError(f"parity-inconsistent representation of {name}")
            if par is None:
                raise PresentationError(f"parity-inconsistent representation of {name}")
            self.gen_mats[i] = M
            if pres.gens[i].invertible:
                self.inv_mats[i] = mx.diagonal_inverse(M)
        missing = [g.name for k, g in enumerate(pres.gens) if k not in self.gen_mats]
        if missing:
            raise PresentationError(f"representation lacks matrices for {missing}")
        self._mono_cache: Dict[Mono, mx.Matrix] = {}
        self.check_relations()

    def mono(self, m: Mono) -> mx.Matrix:
        hit = self._mono_cache.get(m)
        if hit is not None:
            return hit
        out = mx.identity(self.dim)
        for i, e in enumerate(m):
            M = self.gen_mats[i] if e > 0 else self.inv_mats.get(i)
            for _ in range(abs(e)):
                out = mx.matmul(out, M)
        self._mono_cache[m] = out
        return out

    def of(self, a: Element | Poly) -> mx.Matrix:
        terms = a.terms if isinstance(a, Element) else a
        out = mx.zeros(self.dim)
        for m, c in terms.items():
            out = mx.matadd(out, mx.graded_scale(c, self.mono(m), self.parities))
        return out

    def check_relations(self):
        p = self.pres
        for (j, i), rhs in p.rules.items():
            lhs = mx.matmul(self.gen_mats[j], self.gen_mats[i])
            if not mx.equal(lhs, self.of(rhs)):
                raise PresentationError(
                    f"representation violates relation {p.gens[j].name}·{p.gens[i].name}")
        for i, g in enumerate(p.gens):
            for j, g2 in enumerate(p.gens):
                if i < j and (j, i) not in p.rules:
                    a, b = self.gen_mats[i], self.gen_mats[j]
                    s = -1 if g.parity and g2.parity else 1
                    if not mx.equal(mx.matmul(b, a), mx.scale(s, mx.matmul(a, b))):
                        raise PresentationError(f"representation violates [{g.name},{g2.name}] = 0")
            if g.parity and (i, i) not in p.rules:
                M = self.gen_mats[i]
                if not mx.is_zero(mx.matmul(M, M)):
                    raise PresentationError(f"representation violates {g.name}² = 0")

    def tensor(self, t: TensorElement) -> mx.Matrix:
        """(ρ⊗...⊗ρ)(t) on the graded tensor power."""
        k = len(t.algs)
        dim = self.dim ** k
        pars = mx.tensor_parities(*([self.parities] * k))
        out = mx.zeros(dim)
        for key, c in t.terms.items():
            M = self.mono(key[0])
            cur_par = list(self.parities)
            for m in key[1:]:
                M = mx.graded_kronecker(M, self.mono(m), cur_par, parities_b=self.parities)
                cur_par = mx.tensor_parities(cur_par, self.parities)
            out = mx.matadd(out, mx.graded_scale(c, M, pars))
        return out


# -- loading --------------------------------------------------------------------

def _declare_params(data: Mapping):
    for p in data.get("parameters", []):
        declare(p["name"], p.get("parity", "even"), p.get("kind", "polynomial"))


def presentation_from_dict(data: Mapping) -> Presentation:
    _declare_params(data)
    gens = []
    for g in data["generators"]:
        par = g.get("parity", 0)
        par = {"even": 0, "odd": 1}.get(par, par)
        gens.append(Generator(g["name"], int(par), int(g.get("weight", 1)),
                              bool(g.get("central", False)), bool(g.get("invertible", False))))
    brackets = [(r["bracket"][0], r["bracket"][1], r.get("value", "0")) for r in data.get("relations", [])]
    logs = {k: (v["generator"], v["parameter"]) for k, v in data.get("grouplike_log", {}).items()}
    return Presentation(data.get("name", "algebra"), gens, brackets,
                        data.get("coproducts", {}), data.get("counit", {}), logs)


def representation_from_dict(pres: Presentation, data: Mapping) -> Representation:
    return Representation(pres, data["matrices"], data["parities"])


def preset_data(name: str) -> dict:
    if name not in DATA_FILES:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(DATA_FILES)}")
    text = resources.files("unitwist").joinpath("data", f"{name}.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def load_preset(name: str) -> Presentation:
    return presentation_from_dict(preset_data(name))


@lru_cache(maxsize=None)
def load_representation(name: str) -> Representation:
    return representation_from_dict(load_preset(name), preset_data(name)["representation"])


# -- operations -------------------------------------------------------------------

def normal_form(word, pres: Presentation, coefficient=1) -> Element:
    """Normal form of a word: a string like ``"x h"``, or a list of names / (name, power)."""
    if isinstance(word, str):
        return pres.parse(word) * 1 if coefficient == 1 else S(coefficient) * pres.parse(word)
    letters = []
    for w in word:
        name, e = (w, 1) if isinstance(w, str) else w
        if name not in pres.index:
            raise PresentationError(f"unknown generator {name!r}")
        letters.append((pres.index[name], e))
    return S(coefficient) * Element(pres, pres.word(letters))


def algebra_multiply(a: Element, b: Element) -> Element:
    return a * b


def coproduct(a: Element) -> TensorElement:
    pres = a.alg
    out = TensorElement(((pres, pres)), {})
    for m, c in a.terms.items():
        out = out + pres.coproduct_mono(m).scale(c)
    return out


def counit(a: Element) -> Scalar:
    pres = a.alg
    out = ZERO
    for m, c in a.terms.items():
        out = out + c * pres.counit_mono(m)
    return out


def represent(a: Element, rho: Representation) -> mx.Matrix:
    return rho.of(a)


graded_kronecker = mx.graded_kronecker


def counit_slot(t: TensorElement, slot: int) -> TensorElement:
    """Apply ε to one slot of a tensor (even map; no signs)."""
    algs = t.algs[:slot] + t.algs[slot + 1:]
    out = {}
    for k, c in t.terms.items():
        e = t.algs[slot].counit_mono(k[slot])
        if e:
            key = k[:slot] + k[slot + 1:]
            out[key] = out.get(key, ZERO) + c * e
    return TensorElement(algs, out)


def coproduct_slot(t: TensorElement, slot: int) -> TensorElement:
    """Apply Δ to one slot of a tensor (Δ is even)."""
    pres = t.algs[slot]
    return t.apply_slot(slot, pres.coproduct_mono,
                        algs=t.algs[:slot] + (pres, pres) + t.algs[slot + 1:])
