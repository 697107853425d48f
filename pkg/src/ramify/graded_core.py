"""Presented graded-commutative algebras and degreewise-evaluated modules.

An algebra is a polynomial ring on named generators (some invertible, some
square-zero) modulo rewrite rules whose left sides are monomials.  Elements
are dicts {exponent tuple: raw coefficient}.  Generators may carry a second
grading (``filtration``) so the same machinery describes bigraded pages.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .base_arith import (
    BaseRingSpec,
    ColumnEchelon,
    raw_fix,
    raw_quot,
    vec_axpy,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class UnknownGenerator(KeyError):
    pass


class NonConfluentRules(ValueError):
    def __init__(self, witness: str, forms: list[str]):
        self.witness = witness
        self.forms = forms
        super().__init__(f"monomial {witness} has distinct normal forms: {' | '.join(forms)}")


class OutsideWindow(ValueError):
    pass


Monomial = tuple


# -- expressions ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(->|[-+*^()/]))")


def _tokenize(text: str):
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"unexpected character {text[pos]!r} in {text!r}")
        num, name, op = m.groups()
        if num is not None:
            out.append(("num", int(num)))
        elif name is not None:
            out.append(("name", name))
        else:
            out.append(("op", op))
        pos = m.end()
    return out


class _Parser:
    """Recursive descent over + - * ^ and parentheses; exponents may be negative."""

    def __init__(self, text: str, names: dict[str, int]):
        self.toks = _tokenize(text)
        self.i = 0
        self.names = names
        self.n = len(names)
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, val=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (val is not None and tok[1] != val):
            raise ValueError(f"malformed expression {self.text!r}")
        self.i += 1
        return tok

    def parse(self):
        if not self.toks:
            raise ValueError("empty expression")
        p = self.expr()
        if self.i != len(self.toks):
            raise ValueError(f"trailing input in {self.text!r}")
        return p

    def expr(self):
        sign = 1
        if self.peek() == ("op", "-"):
            self.take()
            sign = -1
        elif self.peek() == ("op", "+"):
            self.take()
        acc = _pscale(self.term(), sign)
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            t = self.term()
            acc = _padd(acc, t if op == "+" else _pscale(t, -1))
        return acc

    def term(self):
        acc = self.factor()
        while True:
            tok = self.peek()
            if tok == ("op", "*"):
                self.take()
                acc = _pmul(acc, self.factor())
            elif tok == ("op", "/"):
                self.take()
                d = self.factor()
                if len(d) != 1:
                    raise ValueError("can only divide by a single term")
                (m, c), = d.items()
                inv = {tuple(-e for e in m): Fraction(1) / Fraction(c)}
                acc = _pmul(acc, inv)
            else:
                return acc

    def factor(self):
        if self.peek() == ("op", "-"):
            self.take()
            return _pscale(self.factor(), -1)
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            neg = False
            if self.peek() == ("op", "("):
                self.take()
                if self.peek() == ("op", "-"):
                    self.take()
                    neg = True
                e = self.take("num")[1]
                self.take("op", ")")
            else:
                if self.peek() == ("op", "-"):
                    self.take()
                    neg = True
                e = self.take("num")[1]
            return _ppow(base, -e if neg else e, self.n)
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return {(0,) * self.n: Fraction(val)}
        if kind == "name":
            self.take()
            if val not in self.names:
                raise UnknownGenerator(val)
            e = [0] * self.n
            e[self.names[val]] = 1
            return {tuple(e): Fraction(1)}
        if (kind, val) == ("op", "("):
            self.take()
            p = self.expr()
            self.take("op", ")")
            return p
        raise ValueError(f"malformed expression {self.text!r}")


def _padd(a, b):
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0) + c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pscale(a, s):
    return {m: c * s for m, c in a.items() if c * s}


def _pmul(a, b):
    out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _ppow(a, e, n):
    if e < 0:
        if len(a) != 1:
            raise ValueError("negative power of a sum")
        (m, c), = a.items()
        return {tuple(-x * -e for x in m): Fraction(1) / Fraction(c) ** -e}
    out = {(0,) * n: Fraction(1)}
    for _ in range(e):
        out = _pmul(out, a)
    return out


def parse_polynomial(text: str, names: list[str]) -> dict:
    """Parse ``text`` into {exponent tuple: Fraction} over the given generator names."""
    return _Parser(text, {n: i for i, n in enumerate(names)}).parse()


def format_monomial(m: Monomial, names: list[str]) -> str:
    parts = []
    for e, n in zip(m, names):
        if e == 1:
            parts.append(n)
        elif e:
            parts.append(f"{n}^{e}")
    return "*".join(parts) if parts else "1"


def format_polynomial(p: dict, names: list[str]) -> str:
    if not p:
        return "0"
    out = []
    for m in sorted(p, reverse=True):
        c = p[m]
        mono = format_monomial(m, names)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if mono == "1":
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        out.append((sign, body))
    text = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        text += f" {sign} {body}"
    return text


# -- algebras ------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    degree: int
    weight: int = 0
    invertible: bool = False
    square_zero: bool = False
    filtration: int = 0

    @property
    def total(self) -> int:
        return self.degree + self.filtration


@dataclass(frozen=True)
class RewriteRule:
    lhs: Monomial
    rhs: tuple  # sorted tuple of (monomial, raw coefficient)

    def rhs_dict(self) -> dict:
        return dict(self.rhs)


class PresentedGradedAlgebra:
    """Commutative polynomial algebra on graded generators modulo monomial rewrite rules.

    ``exponent_window`` bounds exponents (mainly of invertible generators) for
    basis enumeration; products that leave it are flagged by ``in_window``.
    """

    def __init__(self, base: BaseRingSpec, generators, rules=(), exponent_window=None, label: str = ""):
        self.base = base
        self.generators = tuple(generators)
        self.names = [g.name for g in self.generators]
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate generator names")
        self.index = {n: i for i, n in enumerate(self.names)}
        self.n = len(self.generators)
        self.label = label
        for g in self.generators:
            if g.degree == 0 and g.filtration == 0:
                raise ValueError(f"generator {g.name} sits in bidegree (0,0)")
            if g.invertible and g.square_zero:
                raise ValueError(f"generator {g.name} cannot be invertible and square-zero")
            if g.total % 2 and not g.square_zero and base.p != 2:
                raise ValueError(f"odd generator {g.name} must be square-zero when 2 is not 0")
        self.window = {}
        for name, (lo, hi) in (exponent_window or {}).items():
            if name not in self.index:
                raise UnknownGenerator(name)
            self.window[self.index[name]] = (lo, hi)
        self.rules: list[RewriteRule] = []
        for r in rules:
            self.add_rule(r)
        self._nf_cache: dict = {}
        self._mono_cache: dict = {}
        self._check_critical_pairs()

    # -- construction helpers

    def add_rule(self, rule) -> None:
        if isinstance(rule, str):
            sep = "->" if "->" in rule else "="
            lhs_t, rhs_t = rule.split(sep, 1)
            lhs = parse_polynomial(lhs_t, self.names)
            if len(lhs) != 1 or list(lhs.values())[0] != 1:
                raise ValueError(f"rule left side must be a monomial: {lhs_t!r}")
            lm = list(lhs)[0]
            rhs = self.coerce_poly(parse_polynomial(rhs_t, self.names))
            rule = RewriteRule(lm, tuple(sorted(rhs.items())))
        lm = rule.lhs
        if any(e < 0 for e in lm) or not any(lm):
            raise ValueError("rule left side must be a nonconstant monomial")
        for i, e in enumerate(lm):
            if e and self.generators[i].invertible:
                raise ValueError(f"rules may not rewrite invertible generator {self.names[i]}")
        key = self.bidegree(lm) + (self.weight(lm),)
        for m, _ in rule.rhs:
            if self.bidegree(m) + (self.weight(m),) != key:
                raise ValueError(f"rule {format_monomial(lm, self.names)} is not homogeneous")
        self.rules.append(rule)
        if hasattr(self, "_nf_cache"):
            self._nf_cache.clear()
            self._mono_cache.clear()

    def coerce_poly(self, p: dict) -> dict:
        out = {}
        for m, c in p.items():
            v = self.base.coerce(Fraction(c))
            v = raw_fix(self.base, v)
            if v:
                out[m] = v
        return out

    # -- gradings

    def bidegree(self, m: Monomial) -> tuple[int, int]:
        d = f = 0
        for e, g in zip(m, self.generators):
            if e:
                d += e * g.degree
                f += e * g.filtration
        return d, f

    def degree(self, m: Monomial) -> int:
        return self.bidegree(m)[0]

    def weight(self, m: Monomial) -> int:
        return sum(e * g.weight for e, g in zip(m, self.generators)) % 2

    def total_degree(self, m: Monomial) -> int:
        d, f = self.bidegree(m)
        return d + f

    def poly_bidegree(self, p: dict):
        degs = {self.bidegree(m) for m in p}
        if len(degs) > 1:
            raise ValueError("element is not homogeneous")
        return degs.pop() if degs else None

    def in_window(self, m: Monomial) -> bool:
        for i, (lo, hi) in self.window.items():
            if not lo <= m[i] <= hi:
                return False
        return True

    # -- rewriting

    def _rule_for(self, m: Monomial):
        for k, r in enumerate(self.rules):
            if all(a >= b for a, b in zip(m, r.lhs)):
                return k
        return None

    def _killed(self, m: Monomial) -> bool:
        for e, g in zip(m, self.generators):
            if e < 0 and not g.invertible:
                return True
            if g.square_zero and e > 1:
                return True
        return False

    def _rewrite_once(self, m: Monomial, k: int) -> dict:
        r = self.rules[k]
        out = {}
        for m2, c in r.rhs:
            nm = tuple(a - b + x for a, b, x in zip(m, r.lhs, m2))
            out[nm] = out.get(nm, 0) + c
        return out

    def nf_monomial(self, m: Monomial) -> dict:
        hit = self._nf_cache.get(m)
        if hit is not None:
            return hit
        if self._killed(m):
            res = {}
        else:
            k = self._rule_for(m)
            if k is None:
                res = {m: 1}
            else:
                res = self._nf_poly(self._rewrite_once(m, k))
        self._nf_cache[m] = res
        return res

    def _nf_poly(self, p: dict) -> dict:
        out: dict = {}
        for m, c in p.items():
            if not c:
                continue
            vec_axpy(self.base, out, c, self.nf_monomial(m))
        return out

    def normal_form(self, p) -> dict:
        if isinstance(p, str):
            p = self.coerce_poly(parse_polynomial(p, self.names))
        return self._nf_poly(self.coerce_poly(p))

    def parse(self, text: str) -> dict:
        return self.normal_form(text)

    def mul(self, a: dict, b: dict) -> dict:
        out: dict = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = tuple(x + y for x, y in zip(m1, m2))
                vec_axpy(self.base, out, c1 * c2, self.nf_monomial(m))
        return out

    def mono_mul(self, m1: Monomial, m2: Monomial) -> dict:
        return self.nf_monomial(tuple(x + y for x, y in zip(m1, m2)))

    def is_normal(self, m: Monomial) -> bool:
        return not self._killed(m) and self._rule_for(m) is None

    def format(self, p: dict) -> str:
        return format_polynomial(p, self.names)

    def format_monomial(self, m: Monomial) -> str:
        return format_monomial(m, self.names)

    def parse_monomial(self, text: str) -> Monomial:
        p = parse_polynomial(text, self.names)
        if len(p) != 1 or list(p.values())[0] != 1:
            raise ValueError(f"{text!r} is not a monomial")
        return list(p)[0]

    # -- confluence

    def _normal_forms_of(self, m: Monomial) -> list[dict]:
        forms = []
        for k, r in enumerate(self.rules):
            if all(a >= b for a, b in zip(m, r.lhs)):
                forms.append(self._nf_poly(self._rewrite_once(m, k)))
        return forms

    def _check_monomial(self, m: Monomial) -> None:
        if self._killed(m):
            return
        forms = self._normal_forms_of(m)
        keys = {tuple(sorted(f.items())) for f in forms}
        if len(keys) > 1:
            raise NonConfluentRules(self.format_monomial(m), sorted(self.format(f) for f in forms))

    def _check_critical_pairs(self) -> None:
        for i, a in enumerate(self.rules):
            for b in self.rules[i:]:
                lcm = tuple(max(x, y) for x, y in zip(a.lhs, b.lhs))
                self._check_monomial(lcm)
            for j, g in enumerate(self.generators):
                if g.square_zero and a.lhs[j]:
                    m = list(a.lhs)
                    m[j] = max(m[j], 2)
                    self._check_monomial(tuple(m))

    # -- bases

    def _enum_order(self):
        inv = [i for i, g in enumerate(self.generators) if g.invertible and g.filtration == 0]
        fil = [i for i, g in enumerate(self.generators) if g.filtration != 0 and i not in inv]
        rest = [i for i in range(self.n) if i not in inv and i not in fil]
        rest.sort(key=lambda i: -self.generators[i].degree)
        return inv + fil + rest

    def _exp_range(self, i):
        g = self.generators[i]
        lo, hi = self.window.get(i, (None, None))
        if not g.invertible:
            lo = 0 if lo is None else max(lo, 0)
        if g.square_zero:
            hi = 1 if hi is None else min(hi, 1)
        return lo, hi

    def monomials(self, degree: int, filtration: int = 0, weight=None) -> list[Monomial]:
        """Normal monomials of the given bidegree inside the exponent window.

        Sorted descending-lexicographically on exponent vectors.
        """
        key = (degree, filtration, weight)
        hit = self._mono_cache.get(key)
        if hit is not None:
            return hit
        order = self._enum_order()
        ranges = [self._exp_range(i) for i in order]
        gens = [self.generators[i] for i in order]
        for (lo, hi), g in zip(ranges, gens):
            if lo is None or (hi is None and g.degree <= 0 and g.filtration == 0):
                raise ValueError(f"exponent of {g.name} is unbounded; declare a window")

        def contrib(k, attr):
            # interval of possible contributions of generators k.. in one grading
            lo_t = hi_t = 0
            for (lo, hi), g in zip(ranges[k:], gens[k:]):
                w = getattr(g, attr)
                if w == 0:
                    continue
                vals = [lo * w] + ([hi * w] if hi is not None else [])
                if hi is None:
                    if w > 0:
                        hi_t = None if hi_t is None else hi_t
                        lo_t = None if lo_t is None else lo_t + lo * w
                        hi_t = None
                    else:
                        lo_t = None
                        hi_t = None if hi_t is None else hi_t + lo * w
                    continue
                lo_t = None if lo_t is None else lo_t + min(vals)
                hi_t = None if hi_t is None else hi_t + max(vals)
            return lo_t, hi_t

        bounds = [(contrib(k, "degree"), contrib(k, "filtration")) for k in range(len(order) + 1)]
        has_d = [any(g.degree for g in gens[k:]) for k in range(len(order) + 1)]
        has_f = [any(g.filtration for g in gens[k:]) for k in range(len(order) + 1)]
        out = []
        exps = [0] * len(order)

        def feasible(k, rd, rf):
            (dl, dh), (fl, fh) = bounds[k]
            if dl is not None and rd < dl:
                return False
            if dh is not None and rd > dh:
                return False
            if fl is not None and rf < fl:
                return False
            if fh is not None and rf > fh:
                return False
            return True

        def rec(k, rd, rf):
            if k == len(order):
                if rd == 0 and rf == 0:
                    m = [0] * self.n
                    for pos, i in enumerate(order):
                        m[i] = exps[pos]
                    out.append(tuple(m))
                return
            if not feasible(k, rd, rf):
                return
            g = gens[k]
            lo, hi = ranges[k]
            forced = None
            if g.filtration and not has_f[k + 1]:
                if rf % g.filtration:
                    return
                forced = rf // g.filtration
            if g.degree and not has_d[k + 1]:
                if rd % g.degree:
                    return
                f2 = rd // g.degree
                if forced is not None and forced != f2:
                    return
                forced = f2
            if forced is not None:
                cands = [forced] if forced >= lo and (hi is None or forced <= hi) else []
            else:
                top = hi
                if top is None:
                    rest_lo = bounds[k + 1][0][0]
                    if g.degree > 0 and rest_lo is not None:
                        top = (rd - rest_lo) // g.degree
                    else:
                        rest_flo = bounds[k + 1][1][0]
                        if g.filtration > 0 and rest_flo is not None:
                            top = (rf - rest_flo) // g.filtration
                        else:
                            raise ValueError(f"cannot bound exponent of {g.name}")
                cands = range(lo, top + 1)
            for e in cands:
                exps[k] = e
                rec(k + 1, rd - e * g.degree, rf - e * g.filtration)
            exps[k] = 0

        rec(0, degree, filtration)
        res = [m for m in out if self.is_normal(m) and (weight is None or self.weight(m) == weight % 2)]
        res.sort(reverse=True)
        self._mono_cache[key] = res
        return res

    def all_monomials(self, degree: int, filtration: int = 0) -> list[Monomial]:
        """Every monomial (normal or not) of a bidegree, for confluence sweeps."""
        saved = self.rules
        self.rules = []
        self._mono_cache.clear()
        try:
            res = [m for m in self.monomials(degree, filtration) if not self._killed(m)]
        finally:
            self.rules = saved
            self._mono_cache.clear()
        return res

    def dimension(self, degree: int, filtration: int = 0, weight=None) -> int:
        return len(self.monomials(degree, filtration, weight))


def verify_presentation(alg: PresentedGradedAlgebra, window: tuple[int, int], weight=None) -> dict:
    """Exhaustive confluence sweep and graded dimensions over a degree window.

    Every reducible monomial is rewritten by each applicable rule; all routes
    must reach the same normal form.  Raises NonConfluentRules with a witness.
    """
    lo, hi = window
    dims = {}
    for d in range(lo, hi + 1):
        for m in alg.all_monomials(d):
            alg._check_monomial(m)
        dims[d] = alg.dimension(d, 0, weight)
    return {"confluent": True, "dimensions": dims}


# -- modules -------------------------------------------------------------------


class DegreewiseModule:
    """A graded module evaluated degree by degree inside ``window``.

    Subclasses provide ``_labels(d)`` (hashable basis keys), ``_name(label)``
    and ``_act_columns(elem, d)``.  ``zero_below`` records a degree below
    which the module is known to vanish (None when unbounded below).
    """

    ring: BaseRingSpec
    algebra: PresentedGradedAlgebra | None
    window: tuple[int, int]
    zero_below: int | None = None

    def _check(self, d):
        lo, hi = self.window
        if not lo <= d <= hi:
            raise OutsideWindow(f"degree {d} outside window [{lo}, {hi}]")

    def labels(self, d: int) -> list:
        self._check(d)
        cache = self.__dict__.setdefault("_label_cache", {})
        hit = cache.get(d)
        if hit is None:
            hit = cache[d] = list(self._labels(d))
        return hit

    def index(self, d: int) -> dict:
        cache = self.__dict__.setdefault("_index_cache", {})
        hit = cache.get(d)
        if hit is None:
            hit = cache[d] = {lab: i for i, lab in enumerate(self.labels(d))}
        return hit

    def dim(self, d: int) -> int:
        if self.known_zero(d):
            return 0
        return len(self.labels(d))

    def known_zero(self, d: int) -> bool:
        return self.zero_below is not None and d < self.zero_below

    def in_window(self, d: int) -> bool:
        return self.window[0] <= d <= self.window[1]

    def degree_basis(self, d: int) -> list[str]:
        return [self._name(lab) for lab in self.labels(d)]

    def name(self, lab) -> str:
        return self._name(lab)

    def act_columns(self, elem, d: int) -> list[dict]:
        """Images of the degree-d basis under an algebra element, as sparse columns."""
        if isinstance(elem, str):
            elem = self.algebra.parse(elem)
        cache = self.__dict__.setdefault("_act_cache", {})
        key = (tuple(sorted(elem.items())), d)
        hit = cache.get(key)
        if hit is None:
            if not elem:
                hit = [{} for _ in self.labels(d)]
            else:
                hit = self._act_columns(elem, d)
            cache[key] = hit
        return hit

    def action_matrix(self, elem, d: int) -> list[list]:
        """Dense matrix from degree d to d + deg(elem); rows index the target basis."""
        if isinstance(elem, str):
            elem = self.algebra.parse(elem)
        shift = self.algebra.poly_bidegree(elem)
        shift = 0 if shift is None else shift[0]
        cols = self.act_columns(elem, d)
        rows = len(self.labels(d + shift))
        return [[c.get(i, 0) for c in cols] for i in range(rows)]


class FreeOnBasis(DegreewiseModule):
    """Direct sum of shifted copies of the algebra: one copy per (name, shift)."""

    def __init__(self, algebra: PresentedGradedAlgebra, gens=(("", 0),), window=(0, 60), weight=None):
        self.algebra = algebra
        self.ring = algebra.base
        self.gens = [(n, s) for n, s in gens]
        self.window = tuple(window)
        self.weight = weight
        bounded = all(g.degree > 0 and not g.invertible for g in algebra.generators)
        self.zero_below = min(s for _, s in self.gens) if bounded and self.gens else None

    def _labels(self, d):
        out = []
        for k, (_, s) in enumerate(self.gens):
            out.extend((k, m) for m in self.algebra.monomials(d - s, 0, self.weight))
        return out

    def _name(self, lab):
        k, m = lab
        g = self.gens[k][0]
        mono = self.algebra.format_monomial(m)
        if not g:
            return mono
        return g if mono == "1" else f"{g}*{mono}"

    def _act_columns(self, elem, d):
        shift = self.algebra.poly_bidegree(elem)[0]
        idx = self.index(d + shift)
        cols = []
        for k, m in self.labels(d):
            img = {}
            for m2, c in elem.items():
                for m3, c3 in self.algebra.mono_mul(m, m2).items():
                    j = idx.get((k, m3))
                    if j is None:
                        raise OutsideWindow(f"product {self.algebra.format_monomial(m3)} leaves the window")
                    img[j] = img.get(j, 0) + c * c3
            cols.append({j: raw_fix(self.ring, v) for j, v in img.items() if raw_fix(self.ring, v)})
        return cols


class CyclicQuotient(DegreewiseModule):
    """The algebra modulo the ideal generated by homogeneous relations.

    Each degree is reduced against an echelon basis of the relation span; the
    basis of the quotient is the set of monomials that are not pivots.  The
    relation span must have unit pivots so every graded piece is free.
    """

    def __init__(self, algebra: PresentedGradedAlgebra, relations, window=(0, 60)):
        self.algebra = algebra
        self.ring = algebra.base
        self.relations = [algebra.parse(r) if isinstance(r, str) else algebra.normal_form(r) for r in relations]
        self.relation_text = [algebra.format(r) for r in self.relations]
        self.window = tuple(window)
        bounded = all(g.degree > 0 and not g.invertible for g in algebra.generators)
        self.zero_below = 0 if bounded else None
        self._span_cache = {}

    def _span(self, d):
        hit = self._span_cache.get(d)
        if hit is not None:
            return hit
        alg = self.algebra
        monos = alg.monomials(d)
        pos = {m: i for i, m in enumerate(monos)}
        ech = ColumnEchelon(self.ring, track=False)
        for r in self.relations:
            rd = alg.poly_bidegree(r)[0]
            for u in alg.monomials(d - rd):
                img = {}
                for m, c in alg.mul(r, {u: 1}).items():
                    img[pos[m]] = c
                ech.add(img)
        pivots = {}
        for rho, (vec, _) in ech.pivots.items():
            if not self.ring.is_unit(vec[rho]):
                raise ValueError(f"quotient has torsion in degree {d}; only free quotients are supported")
            pivots[rho] = vec
        # full reduction so that pivot vectors vanish on the other pivot rows
        for rho in sorted(pivots, reverse=True):
            v = pivots[rho]
            for other in sorted(pivots):
                if other <= rho:
                    continue
                if other in v:
                    w = pivots[other]
                    vec_axpy(self.ring, v, -raw_quot(self.ring, v[other], w[other]), w)
        free = [i for i in range(len(monos)) if i not in pivots]
        res = (monos, pos, pivots, free)
        self._span_cache[d] = res
        return res

    def _labels(self, d):
        monos, _, _, free = self._span(d)
        return [monos[i] for i in free]

    def _name(self, lab):
        return self.algebra.format_monomial(lab)

    def reduce(self, d, vec_by_mono: dict) -> dict:
        """Coordinates of an algebra element of degree d in the quotient basis."""
        monos, pos, pivots, free = self._span(d)
        v = {pos[m]: c for m, c in vec_by_mono.items() if c}
        for rho in sorted(pivots):
            if rho in v:
                w = pivots[rho]
                vec_axpy(self.ring, v, -raw_quot(self.ring, v[rho], w[rho]), w)
        idx = self.index(d)
        return {idx[monos[i]]: c for i, c in v.items()}

    def _act_columns(self, elem, d):
        shift = self.algebra.poly_bidegree(elem)[0]
        cols = []
        for m in self.labels(d):
            prod = self.algebra.mul(elem, {m: 1})
            cols.append(self.reduce(d + shift, prod))
        return cols


class RuleModule(DegreewiseModule):
    """A module given by a closed-form basis family and generator action rules.

    ``basis_fn(d)`` lists labels of degree d; ``act_fn(generator_name, label)``
    returns {label: coefficient} (labels live in degree d + deg(generator)).
    Elements act monomial by monomial through repeated generator actions.
    """

    def __init__(self, algebra, basis_fn, act_fn, name_fn, window, zero_below=None, description=""):
        self.algebra = algebra
        self.ring = algebra.base
        self.basis_fn = basis_fn
        self.act_fn = act_fn
        self.name_fn = name_fn
        self.window = tuple(window)
        self.zero_below = zero_below
        self.description = description

    def _labels(self, d):
        return self.basis_fn(d)

    def _name(self, lab):
        return self.name_fn(lab)

    def _apply_monomial(self, m, lab):
        cur = {lab: 1}
        for i, e in enumerate(m):
            if e < 0:
                raise ValueError("rule modules do not support inverse generators")
            for _ in range(e):
                nxt = {}
                for l2, c in cur.items():
                    for l3, c3 in self.act_fn(self.algebra.names[i], l2).items():
                        nxt[l3] = nxt.get(l3, 0) + c * c3
                cur = {k: v for k, v in nxt.items() if raw_fix(self.ring, v)}
                if not cur:
                    return {}
        return cur

    def _act_columns(self, elem, d):
        shift = self.algebra.poly_bidegree(elem)[0]
        tgt = d + shift
        idx = self.index(tgt) if self.in_window(tgt) else None
        cols = []
        for lab in self.labels(d):
            img = {}
            for m, c in elem.items():
                for l2, c2 in self._apply_monomial(m, lab).items():
                    if idx is None or l2 not in idx:
                        raise OutsideWindow(f"action leaves the window at degree {tgt}")
                    j = idx[l2]
                    img[j] = raw_fix(self.ring, img.get(j, 0) + c * c2)
            cols.append({j: v for j, v in img.items() if v})
        return cols


def inverse_monomial_family(algebra: PresentedGradedAlgebra, generators, shift: int, window, annihilators=()):
    """Basis {1/(g1^n1 ... gk^nk) : all ni >= 1} in degree shift - sum ni*|gi|.

    A listed generator lowers its own exponent and kills the class when the
    exponent is 1; annihilators act by zero.  Every algebra generator must be
    one or the other.
    """
    gens = list(generators)
    for g in gens + list(annihilators):
        if g not in algebra.index:
            raise UnknownGenerator(g)
    missing = set(algebra.names) - set(gens) - set(annihilators)
    if missing:
        raise ValueError(f"no action declared for {sorted(missing)}")
    degs = [algebra.generators[algebra.index[g]].degree for g in gens]
    if any(d <= 0 for d in degs):
        raise ValueError("family generators need positive degree")

    def basis(d):
        target = shift - d
        out = []

        def rec(k, rem, acc):
            if k == len(gens):
                if rem == 0:
                    out.append(tuple(acc))
                return
            rest = sum(degs[k + 1:])
            n = 1
            while n * degs[k] + rest <= rem:
                rec(k + 1, rem - n * degs[k], acc + [n])
                n += 1

        if target > 0:
            rec(0, target, [])
        return sorted(out)

    def act(gname, lab):
        if gname in annihilators:
            return {}
        k = gens.index(gname)
        if lab[k] == 1:
            return {}
        new = list(lab)
        new[k] -= 1
        return {tuple(new): 1}

    def name(lab):
        parts = [g if n == 1 else f"{g}^{n}" for g, n in zip(gens, lab)]
        return "1/(" + "*".join(parts) + ")"

    desc = f"inverse family over {' '.join(gens)} shift {shift}"
    return RuleModule(algebra, basis, act, name, window, None, desc)


class DirectSum(DegreewiseModule):
    def __init__(self, summands, window=None):
        self.summands = list(summands)
        first = self.summands[0]
        self.algebra = first.algebra
        self.ring = first.ring
        if window is None:
            window = (max(s.window[0] for s in self.summands), min(s.window[1] for s in self.summands))
        self.window = tuple(window)
        zb = [s.zero_below for s in self.summands]
        self.zero_below = None if any(z is None for z in zb) else min(zb)

    def known_zero(self, d):
        return all(s.known_zero(d) for s in self.summands)

    def _labels(self, d):
        out = []
        for k, s in enumerate(self.summands):
            if s.known_zero(d):
                continue
            out.extend((k, lab) for lab in s.labels(d))
        return out

    def _name(self, lab):
        k, inner = lab
        return self.summands[k].name(inner)

    def _act_columns(self, elem, d):
        shift = self.algebra.poly_bidegree(elem)[0]
        idx = self.index(d + shift)
        cols = []
        for k, s in enumerate(self.summands):
            if s.known_zero(d):
                continue
            tgt_labels = [] if s.known_zero(d + shift) else s.labels(d + shift)
            for c in s.act_columns(elem, d):
                cols.append({idx[(k, tgt_labels[j])]: v for j, v in c.items()})
        return cols


class PlainGradedModule(DegreewiseModule):
    """Free base-modules of declared rank per degree, with no algebra attached."""

    def __init__(self, ring: BaseRingSpec, ranks: dict, window, names=None, zero_below=None):
        self.ring = ring
        self.algebra = None
        self.ranks = dict(ranks)
        self.window = tuple(window)
        self.names_map = names or {}
        self.zero_below = zero_below

    def _labels(self, d):
        return [(d, i) for i in range(self.ranks.get(d, 0))]

    def _name(self, lab):
        d, i = lab
        given = self.names_map.get(d)
        return given[i] if given else f"e{d}_{i}"

    def _act_columns(self, elem, d):
        raise TypeError("plain modules carry no algebra action")


@dataclass
class GradedMap:
    """Degreewise matrices between two modules; ``matrices(d)`` gives sparse columns."""

    source: DegreewiseModule
    target: DegreewiseModule
    degree_shift: int
    columns: object  # callable d -> list[dict]
    label: str = ""

    def at(self, d: int) -> list[dict]:
        return self.columns(d)

    @classmethod
    def multiplication(cls, module: DegreewiseModule, elem) -> "GradedMap":
        if isinstance(elem, str):
            elem = module.algebra.parse(elem)
        shift = module.algebra.poly_bidegree(elem)[0]
        return cls(module, module, shift, lambda d: module.act_columns(elem, d), module.algebra.format(elem))

    def commutes_with(self, gen_name: str, degrees) -> list[int]:
        """Degrees where the map fails to commute with a generator's action."""
        alg = self.source.algebra
        g = alg.parse(gen_name)
        gdeg = alg.poly_bidegree(g)[0]
        bad = []
        for d in degrees:
            try:
                f_then_g = _compose(self.ring_of(), self.target.act_columns(g, d + self.degree_shift), self.at(d))
                g_then_f = _compose(self.ring_of(), self.at(d + gdeg), self.source.act_columns(g, d))
            except OutsideWindow:
                continue
            if f_then_g != g_then_f:
                bad.append(d)
        return bad

    def ring_of(self):
        return self.source.ring


def _compose(ring, outer: list[dict], inner: list[dict]) -> list[dict]:
    out = []
    for col in inner:
        acc: dict = {}
        for j, c in col.items():
            vec_axpy(ring, acc, c, outer[j])
        out.append(acc)
    return out


def compose_columns(ring, outer, inner):
    return _compose(ring, outer, inner)


def generator(name, degree, weight=0, invertible=False, square_zero=False, filtration=0) -> GeneratorSpec:
    return GeneratorSpec(name, degree, weight, invertible, square_zero, filtration)
