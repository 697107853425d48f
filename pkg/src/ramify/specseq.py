"""Multiplicative spectral sequences over prime fields.

A page lives inside an ambient bigraded monomial algebra: every E^2 class is
an ambient monomial (generators carry internal degree m and filtration n).
Later pages store their classes as E^2 combinations modulo accumulated
boundaries.  Differentials are declared on page generators (monomials of the
ambient algebra) and extended by the Leibniz rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import gcd as _gcd

from .base_arith import BaseRingSpec, ColumnEchelon, FgAbelianShape, sparse_homology, vec_axpy
from .graded_core import PresentedGradedAlgebra, format_polynomial, parse_polynomial
from .homalg import AmbiguousExtension, BigradedTable, TableEntry, _extension_candidates


class BidegreeMismatch(ValueError):
    pass


class DSquaredNonzero(ValueError):
    def __init__(self, witness: str, page: int):
        self.witness = witness
        super().__init__(f"d^{page} o d^{page} is nonzero on {witness}")


class InconsistentDifferential(ValueError):
    pass


class Undecomposable(ValueError):
    pass


@dataclass(frozen=True)
class PageGenerator:
    name: str
    monomial: tuple
    invertible: bool = False
    square_zero: bool = False


class DifferentialSpec:
    """d^r on named page generators, each an ambient monomial.

    ``generators`` is a list of (name, ambient expression, flags) where flags
    is a set drawn from {"invertible", "square_zero"}; ``rules`` maps names to
    target expressions written in ambient and page-generator names.
    Unlisted generators have zero differential.
    """

    def __init__(self, r: int, ambient: PresentedGradedAlgebra, generators, rules, ring: BaseRingSpec | None = None):
        self.r = r
        self.ambient = ambient
        self.ring = ring or BaseRingSpec.field(ambient.base.p)
        self.generators: list[PageGenerator] = []
        for name, expr, flags in generators:
            p = parse_polynomial(expr, ambient.names) if isinstance(expr, str) else {tuple(expr): 1}
            if len(p) != 1:
                raise ValueError(f"page generator {name} must be a monomial")
            mono = list(p)[0]
            self.generators.append(PageGenerator(name, mono, "invertible" in flags, "square_zero" in flags))
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ValueError("duplicate page generator names")
        self.index = {g.name: i for i, g in enumerate(self.generators)}
        self.rule_text = dict(rules)
        self.rules: dict[int, dict] = {}
        for name, expr in rules.items():
            if name not in self.index:
                raise ValueError(f"differential given for undeclared generator {name}")
            self.rules[self.index[name]] = self._parse_target(expr)
        self._check_bidegrees()
        self._prepare_solver()
        self._cache: dict = {}

    # -- parsing

    def _parse_target(self, expr: str) -> dict:
        amb = self.ambient.names
        extra = []
        for g in self.generators:
            if g.name in amb:
                unit = tuple(int(i == amb.index(g.name)) for i in range(len(amb)))
                if g.monomial != unit:
                    raise ValueError(f"page generator {g.name} shadows a different ambient generator")
            else:
                extra.append(g)
        p = parse_polynomial(expr, amb + [g.name for g in extra])
        out: dict = {}
        n = len(amb)
        for mono, c in p.items():
            e = list(mono[:n])
            for k, g in enumerate(extra):
                x = mono[n + k]
                if x:
                    e = [a + x * b for a, b in zip(e, g.monomial)]
            key = tuple(e)
            v = self.ring.coerce(Fraction(c))
            out[key] = (out.get(key, 0) + v) % self.ring.p
        return {m: c for m, c in out.items() if c}

    def bidegree(self, mono) -> tuple[int, int]:
        m, n = self.ambient.bidegree(mono)
        return n, m

    def _check_bidegrees(self) -> None:
        for i, target in self.rules.items():
            g = self.generators[i]
            n, m = self.bidegree(g.monomial)
            want = (n - self.r, m + self.r - 1)
            for t in target:
                if self.bidegree(t) != want:
                    raise BidegreeMismatch(
                        f"d^{self.r}({g.name}) has a term in bidegree {self.bidegree(t)}, expected {want}"
                    )

    # -- decomposition into page generators

    def _prepare_solver(self) -> None:
        vecs = [[Fraction(x) for x in g.monomial] for g in self.generators]
        basis: list[int] = []
        for i, v in enumerate(vecs):
            if _rank([vecs[j] for j in basis] + [v]) > len(basis):
                basis.append(i)
        self.basis = basis
        self.extras = [i for i in range(len(vecs)) if i not in basis]
        # choose rows making the basis block invertible
        k = len(basis)
        nrows = len(self.ambient.names)
        rows: list[int] = []
        for r_ in range(nrows):
            trial = rows + [r_]
            block = [[vecs[j][t] for j in basis] for t in trial]
            if _rank(block) == len(trial):
                rows = trial
            if len(rows) == k:
                break
        self.rows = rows
        block = [[vecs[j][t] for j in basis] for t in rows]
        inverse = _invert(block) if k else []
        den = 1
        for row in inverse:
            for x in row:
                den = den * x.denominator // _gcd(den, x.denominator)
        # integer matrix over a common denominator keeps decomposition in ints
        self.den = den
        self.inverse = [[int(x * den) for x in row] for row in inverse]
        combos = []
        for size in range(len(self.extras) + 1):
            combos.extend(combinations(self.extras, size))
        self.combos = combos

    def decompose(self, mono) -> list[int]:
        """Exponents of page generators whose product is ``mono``."""
        hit = self._cache.get(mono)
        if hit is not None:
            return hit
        gens = self.generators
        for combo in self.combos:
            rest = list(mono)
            for j in combo:
                rest = [a - b for a, b in zip(rest, gens[j].monomial)]
            sub = [rest[t] for t in self.rows]
            sol = [sum(x * y for x, y in zip(row, sub)) for row in self.inverse]
            if any(x % self.den for x in sol):
                continue
            sol = [x // self.den for x in sol]
            exps = [0] * len(gens)
            for j in combo:
                exps[j] = 1
            for i, j in enumerate(self.basis):
                exps[j] = int(sol[i])
            ok = True
            for e, g in zip(exps, gens):
                if (e < 0 and not g.invertible) or (g.square_zero and e > 1):
                    ok = False
                    break
            if not ok:
                continue
            prod = [0] * len(mono)
            for e, g in zip(exps, gens):
                if e:
                    prod = [a + e * b for a, b in zip(prod, g.monomial)]
            if tuple(prod) != tuple(mono):
                continue
            self._cache[mono] = exps
            return exps
        raise Undecomposable(f"{self.ambient.format_monomial(mono)} is not a product of page generators")

    def total(self, mono) -> int:
        n, m = self.bidegree(mono)
        return n + m

    def apply(self, mono) -> dict:
        """Leibniz extension on one ambient monomial; returns {monomial: coefficient}."""
        exps = self.decompose(mono)
        p = self.ring.p
        out: dict = {}
        parity = 0
        for i, (e, g) in enumerate(zip(exps, self.generators)):
            if e and i in self.rules and e % p:
                sign = -1 if parity % 2 else 1
                for t, c in self.rules[i].items():
                    key = tuple(a - b + x for a, b, x in zip(mono, g.monomial, t))
                    out[key] = (out.get(key, 0) + sign * e * c) % p
            if e:
                parity += e * self.total(g.monomial)
        return {m: c for m, c in out.items() if c}

    def potential_sources(self, mono):
        """Monomials that could hit ``mono``: multiply by a generator, divide by a term of its image."""
        for i, target in self.rules.items():
            g = self.generators[i]
            for t in target:
                yield tuple(a + b - x for a, b, x in zip(mono, g.monomial, t))


def _rank(rows) -> int:
    m = [list(r) for r in rows]
    if not m:
        return 0
    rank = 0
    ncols = len(m[0])
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c]:
                f = Fraction(m[r][c]) / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def _invert(block):
    n = len(block)
    m = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(block)]
    for c in range(n):
        piv = next(r for r in range(c, n) if m[r][c])
        m[c], m[piv] = m[piv], m[c]
        f = m[c][c]
        m[c] = [x / f for x in m[c]]
        for r in range(n):
            if r != c and m[r][c]:
                g = m[r][c]
                m[r] = [a - g * b for a, b in zip(m[r], m[c])]
    return [row[n:] for row in m]


# -- pages ---------------------------------------------------------------------


@dataclass
class Cell:
    monomials: list
    index: dict
    reps: list  # E^2-coordinate vectors
    boundary: ColumnEchelon
    partial: bool = False


class Page:
    """E^r over a prime field, embedded in an ambient monomial algebra.

    ``row_axis`` names the coordinate that is zero along the line where the
    abutment is read off: "m" for Tate pages, "n" for Tor pages.
    """

    def __init__(self, r, ambient, ring, region, cells, support=None, row_axis="m", label=""):
        self.r = r
        self.ambient = ambient
        self.ring = ring
        self.region = (tuple(region[0]), tuple(region[1]))
        self.cells: dict[tuple[int, int], Cell] = cells
        self.support = support
        self.row_axis = row_axis
        self.label = label

    # -- construction

    @classmethod
    def from_ambient(cls, ambient: PresentedGradedAlgebra, region, weight=None, support=None, r=2, label=""):
        """E^2 spanned by ambient monomials in the region passing the weight and support filters."""
        ring = BaseRingSpec.field(ambient.base.p)
        (nl, nh), (ml, mh) = region
        buckets: dict = {}
        ranges = [ambient._exp_range(i) for i in range(ambient.n)]
        open_ = [i for i, (lo, hi) in enumerate(ranges) if lo is None or hi is None]
        if len(open_) <= 1:
            # product over bounded exponents; the last exponent range is solved from the region
            solve = open_[0] if open_ else max(range(ambient.n), key=lambda i: ranges[i][1] - ranges[i][0])
            g = ambient.generators[solve]
            slo, shi = ranges[solve]
            others = [i for i in range(ambient.n) if i != solve]
            for part in product(*(range(ranges[i][0], ranges[i][1] + 1) for i in others)):
                m0 = n0 = 0
                for i, e in zip(others, part):
                    m0 += e * ambient.generators[i].degree
                    n0 += e * ambient.generators[i].filtration
                lo, hi = slo, shi
                for base, step, (a, b) in ((m0, g.degree, (ml, mh)), (n0, g.filtration, (nl, nh))):
                    if step > 0:
                        lo = max(lo, -((base - a) // step))
                        hi = (b - base) // step if hi is None else min(hi, (b - base) // step)
                    elif step < 0:
                        lo = max(lo, -((b - base) // -step))
                        hi = (base - a) // -step if hi is None else min(hi, (base - a) // -step)
                    elif not a <= base <= b:
                        hi = lo - 1
                if hi is None:
                    raise ValueError(f"exponent of {g.name} is unbounded on the region")
                e = list(part)
                e.insert(solve, 0)
                for x in range(lo, hi + 1):
                    e[solve] = x
                    mono = tuple(e)
                    if weight is not None and ambient.weight(mono) != weight % 2:
                        continue
                    if not ambient.is_normal(mono):
                        continue
                    if support and not support(mono):
                        continue
                    m, n = ambient.bidegree(mono)
                    buckets.setdefault((n, m), []).append(mono)
            for k in buckets:
                buckets[k].sort(reverse=True)
        else:
            for n in range(nl, nh + 1):
                for m in range(ml, mh + 1):
                    monos = ambient.monomials(m, n, weight)
                    if support:
                        monos = [e for e in monos if support(e)]
                    if monos:
                        buckets[(n, m)] = monos
        cells = {}
        for key, monos in buckets.items():
            cells[key] = Cell(monos, {e: i for i, e in enumerate(monos)}, [{i: 1} for i in range(len(monos))],
                              ColumnEchelon(ring, track=False))
        return cls(r, ambient, ring, region, cells, support, "m", label)

    @classmethod
    def from_table(cls, table: BigradedTable, ambient: PresentedGradedAlgebra, support=None, r=2, label=""):
        """E^2 from a computed table whose class names are ambient monomials."""
        ring = BaseRingSpec.field(ambient.base.p)
        cells = {}
        for (n, m), entry in table.nonzero():
            monos = []
            for name in entry.names:
                mono = ambient.parse_monomial(name)
                if ambient.bidegree(mono) != (m, n):
                    raise ValueError(f"class {name} does not sit in bidegree {(n, m)}")
                if support is None or support(mono):
                    monos.append(mono)
            if entry.shape.free_rank:
                raise ValueError("table entries must be p-torsion to start a page over F_p")
            if any(t != ring.p for t in entry.shape.torsion):
                raise ValueError(f"entry {(n, m)} is not an F_{ring.p}-vector space")
            monos.sort(reverse=True)
            if monos:
                cells[(n, m)] = Cell(monos, {e: i for i, e in enumerate(monos)},
                                     [{i: 1} for i in range(len(monos))], ColumnEchelon(ring, track=False),
                                     entry.partial)
        return cls(r, ambient, ring, table.region, cells, support, "m", label)

    # -- queries

    def in_region(self, n, m) -> bool:
        (nl, nh), (ml, mh) = self.region
        return nl <= n <= nh and ml <= m <= mh

    def admissible(self, mono) -> bool:
        """Could ``mono`` be an E^2 class at all (ignoring region and window)?"""
        amb = self.ambient
        for e, g in zip(mono, amb.generators):
            if e < 0 and not g.invertible:
                return False
            if g.square_zero and e > 1:
                return False
        if not amb.is_normal(mono):
            return False
        if self._weight is not None and amb.weight(mono) != self._weight % 2:
            return False
        if self.support and not self.support(mono):
            return False
        return True

    _weight = None
    source_differential = None  # d^{r-1} columns on the previous page, for charts

    def rank(self, n, m) -> int:
        c = self.cells.get((n, m))
        return len(c.reps) if c else 0

    def names(self, n, m) -> list[str]:
        c = self.cells.get((n, m))
        if not c:
            return []
        return [self.rep_name(c, rep) for rep in c.reps]

    def rep_name(self, cell: Cell, rep: dict) -> str:
        if len(rep) == 1:
            (i, _), = rep.items()
            return self.ambient.format_monomial(cell.monomials[i])
        poly = {cell.monomials[i]: c for i, c in rep.items()}
        return "[" + format_polynomial(poly, self.ambient.names) + "]"

    def partial(self, n, m) -> bool:
        c = self.cells.get((n, m))
        return bool(c and c.partial)

    def table(self) -> BigradedTable:
        t = BigradedTable(self.ring, self.region, f"{self.label} E{self.r}")
        for key, c in self.cells.items():
            if c.reps or c.partial:
                t.set(*key, TableEntry(FgAbelianShape(len(c.reps)), self.names(*key), c.partial))
        return t

    def nonzero(self):
        return sorted(k for k, c in self.cells.items() if c.reps)

    # -- differentials

    def differential(self, spec: DifferentialSpec):
        """Matrices of d^r per bidegree, in the coordinates of the surviving classes.

        Returns (columns by bidegree, set of bidegrees whose result is partial).
        """
        cols, out_esc, in_esc = self._differential(spec)
        return cols, out_esc | in_esc

    def _differential(self, spec):
        # out_esc: the outgoing image is not fully known
        # in_esc: a class might be hit from outside the region or window
        if spec.r != self.r:
            raise BidegreeMismatch(f"d^{spec.r} applied to page E^{self.r}")
        r = self.r
        amb = self.ambient
        cols: dict = {}
        out_esc: set = set()
        in_esc: set = set()
        solvers: dict = {}

        def solver(key):
            hit = solvers.get(key)
            if hit is None:
                c = self.cells[key]
                ech = ColumnEchelon(self.ring, track=True)
                for k, b in enumerate(c.boundary.basis()):
                    ech.add(b, ("b", k))
                for i, rep in enumerate(c.reps):
                    ech.add(rep, i)
                hit = solvers[key] = ech
            return hit

        for key, cell in self.cells.items():
            if not cell.reps:
                continue
            n, m = key
            tkey = (n - r, m + r - 1)
            tcell = self.cells.get(tkey)
            out = []
            escaped = False
            for rep in cell.reps:
                img: dict = {}
                try:
                    terms = [(c, spec.apply(cell.monomials[i])) for i, c in rep.items()]
                except Undecomposable:
                    if not cell.partial:
                        raise
                    escaped = True
                    out.append({})
                    continue
                for c, image in terms:
                    for mono, v in image.items():
                        if not self.admissible(mono):
                            continue
                        j = tcell.index.get(mono) if tcell else None
                        if j is None:
                            escaped = True
                            continue
                        img[j] = (img.get(j, 0) + c * v) % self.ring.p
                img = {j: v for j, v in img.items() if v}
                if not img:
                    out.append({})
                    continue
                coeffs = solver(tkey).solve(img)
                if coeffs is None:
                    if tcell.partial:
                        escaped = True
                        out.append({})
                        continue
                    raise InconsistentDifferential(
                        f"d^{r}({self.rep_name(cell, rep)}) is not a cycle class in bidegree {tkey}"
                    )
                out.append({i: v % self.ring.p for i, v in coeffs.items() if not isinstance(i, tuple) and v % self.ring.p})
            cols[key] = out
            if escaped or (tcell is not None and tcell.partial):
                out_esc.add(key)
        # incoming escapes: a class could be hit from outside the region or window
        for key, cell in self.cells.items():
            if cell.reps and self._incoming_escape(spec, key, cell):
                in_esc.add(key)
        # d o d = 0
        for key, out in cols.items():
            if key in out_esc:
                continue
            n, m = key
            tkey = (n - r, m + r - 1)
            tcols = cols.get(tkey)
            if not tcols or tkey in out_esc:
                continue
            for rep, col in zip(self.cells[key].reps, out):
                acc: dict = {}
                for i, v in col.items():
                    vec_axpy(self.ring, acc, v, tcols[i])
                if acc:
                    raise DSquaredNonzero(self.rep_name(self.cells[key], rep), r)
        return cols, out_esc, in_esc

    def _incoming_escape(self, spec, key, cell) -> bool:
        n, m = key
        skey = (n + self.r, m - self.r + 1)
        for rep in cell.reps:
            for i in rep:
                for sigma in spec.potential_sources(cell.monomials[i]):
                    if not self.admissible(sigma):
                        continue
                    if not self.in_region(*skey) or not self.ambient.in_window(sigma):
                        return True
        return False

    def turn(self, spec: DifferentialSpec | None = None) -> "Page":
        """E^{r+1}: homology of d^r, or a copy with index r+1 when d^r is zero."""
        r = self.r
        if spec is None:
            cells = {k: Cell(c.monomials, c.index, list(c.reps), c.boundary, c.partial) for k, c in self.cells.items()}
            return self._derived(r + 1, cells)
        cols, out_esc, in_esc = self._differential(spec)
        new_cells = {}
        for key, cell in self.cells.items():
            n, m = key
            skey = (n + r, m - r + 1)
            tkey = (n - r, m + r - 1)
            d_out = cols.get(key, [{} for _ in cell.reps])
            d_in = cols.get(skey, [])
            new_bnd = []
            for col in d_in:
                lifted: dict = {}
                for i, v in col.items():
                    vec_axpy(self.ring, lifted, v, cell.reps[i])
                if lifted:
                    new_bnd.append(lifted)
            bnd = cell.boundary
            if new_bnd:
                bnd = ColumnEchelon(self.ring, track=False)
                for v in cell.boundary.basis() + new_bnd:
                    bnd.add(v)
            h = sparse_homology(self.ring, d_in, d_out, len(cell.reps))
            reps = []
            for rep in h.reps or []:
                lifted = {}
                for i, v in rep.items():
                    vec_axpy(self.ring, lifted, v, cell.reps[i])
                reps.append(lifted)
            part = cell.partial or key in out_esc or key in in_esc or skey in out_esc
            src = self.cells.get(skey)
            tgt = self.cells.get(tkey)
            part = part or bool(src and src.partial) or bool(tgt and tgt.partial)
            new_cells[key] = Cell(cell.monomials, cell.index, reps, bnd, part)
        new = self._derived(r + 1, new_cells)
        new.source_differential = cols
        return new

    def _derived(self, r, cells) -> "Page":
        p = Page(r, self.ambient, self.ring, self.region, cells, self.support, self.row_axis, self.label)
        p._weight = self._weight
        return p


def page_from_ambient(ambient, region, weight=None, support=None, label=""):
    p = Page.from_ambient(ambient, region, weight, support, label=label)
    p._weight = weight
    return p


def page_from_table(table, ambient, weight=None, support=None, label=""):
    p = Page.from_table(table, ambient, support, label=label)
    p._weight = weight
    return p


def leibniz_extend(page: Page, spec: DifferentialSpec):
    return page.differential(spec)


def turn_page(page: Page, spec: DifferentialSpec | None = None) -> Page:
    return page.turn(spec)


# -- collapse and abutment -----------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    kind: str  # CollapsedAt, RowZeroOnly, OddPositiveFiltration, Unknown
    page: int | None = None

    def format(self) -> str:
        return f"{self.kind}({self.page})" if self.kind == "CollapsedAt" else self.kind


def detect_collapse(table: BigradedTable, r: int, row_axis="m", edge_protected=False, r_max=None) -> Verdict:
    """Decide whether all differentials from page r on must vanish.

    Only settled (non-partial) entries are inspected.  Lookups outside the
    region use the table's periodicity and support data; anything unknown
    makes the verdict Unknown.
    """
    nz = [(k, e) for k, e in table.nonzero() if not e.partial]
    if not nz:
        return Verdict("CollapsedAt", r)
    axis = 1 if row_axis == "m" else 0
    if all(key[axis] == 0 for key, _ in nz):
        return Verdict("RowZeroOnly")
    if edge_protected and row_axis == "n":
        if all(n == 0 or (n + m) % 2 for (n, m), _ in nz):
            return Verdict("OddPositiveFiltration")
    determined = table.periodic_n is not None and table.m_support is not None and not table.partial_keys()
    if determined and len({(n + m) % 2 for (n, m), _ in nz}) == 1:
        # differentials lower total degree by one
        return Verdict("CollapsedAt", r)
    if r_max is None:
        return Verdict("Unknown")
    for (n, m), _ in nz:
        for s in range(r, r_max + 1):
            tgt = table.lookup(n - s, m + s - 1)
            if tgt is None or not tgt.shape.is_zero:
                return Verdict("Unknown")
    return Verdict("CollapsedAt", r)


@dataclass
class AbutmentDegree:
    degree: int
    result: object  # FgAbelianShape or AmbiguousExtension
    names: list
    complete: bool
    contributions: list  # bidegrees with nonzero entries

    @property
    def shape(self):
        return self.result if isinstance(self.result, FgAbelianShape) else None


def assemble_abutment(table: BigradedTable, verdict: Verdict, degrees, row_axis="m", row_bottom=None) -> dict:
    """Additive abutment per total degree.

    With RowZeroOnly on a Tate page degree d is the entry (d, 0).  Otherwise
    the anti-diagonal n + m = d is summed over the rows of the region;
    ``row_bottom(n)`` is the lowest internal degree that can be nonzero in
    row n (None when unbounded), which excludes rows past the region.
    Partial entries are left out and make the degree incomplete.  Free
    summands assemble to their direct sum; torsion in more than one place
    gives an AmbiguousExtension.
    """
    if verdict.kind == "Unknown":
        raise ValueError("cannot assemble an abutment without a collapse verdict")
    (nl, nh), (ml, mh) = table.region
    out = {}
    for d in degrees:
        keys = []
        complete = True
        if verdict.kind == "RowZeroOnly" and row_axis == "m":
            keys = [(d, 0)]
        elif row_axis == "m":
            keys = [(d - m, m) for m in range(ml, mh + 1)]
            complete = table.m_support is not None and ml <= table.m_support[0] and table.m_support[1] <= mh
        else:
            for n in range(nl, nh + 1):
                m = d - n
                if row_bottom is not None and row_bottom(n) is not None and m < row_bottom(n):
                    continue
                keys.append((n, m))
            nxt = row_bottom(nh + 1) if row_bottom is not None else None
            if nxt is None or nxt <= d - nh - 1:
                complete = False
        parts = []
        names = []
        for key in keys:
            e = table.lookup(*key)
            if e is None:
                complete = False
                continue
            if e.partial:
                complete = False
                continue
            if not e.shape.is_zero:
                parts.append((key, e))
                names.extend(e.names)
        shapes = [e.shape for _, e in parts]
        total = FgAbelianShape()
        for sh in shapes:
            total = total.direct_sum(sh)
        if sum(1 for sh in shapes if sh.torsion) and len(shapes) > 1 and not table.ring.is_field:
            quot = FgAbelianShape()
            for sh in shapes[1:]:
                quot = quot.direct_sum(sh)
            result = AmbiguousExtension(shapes[0], quot, _extension_candidates(shapes[0], quot))
        else:
            result = total
        out[d] = AbutmentDegree(d, result, names, complete, [k for k, _ in parts])
    return out


@dataclass
class SpectralSequenceRun:
    pages: dict
    verdict: Verdict
    abutment: dict

    def arrows(self, r: int) -> list:
        """Nonzero d^r as ((n, m), (n', m'), source name, target expression)."""
        page = self.pages.get(r)
        nxt = self.pages.get(r + 1)
        if page is None or nxt is None or not nxt.source_differential:
            return []
        out = []
        for key, cols in sorted(nxt.source_differential.items()):
            n, m = key
            tkey = (n - r, m + r - 1)
            tcell = page.cells.get(tkey)
            for rep, col in zip(page.cells[key].reps, cols):
                if col and tcell is not None:
                    img: dict = {}
                    for i, v in col.items():
                        vec_axpy(page.ring, img, v, tcell.reps[i])
                    out.append((key, tkey, page.rep_name(page.cells[key], rep), page.rep_name(tcell, img)))
        return out


def run_spectral_sequence(page: Page, differentials: dict, r_final: int, degrees=(), edge_protected=False) -> SpectralSequenceRun:
    """Turn pages from page.r up to r_final using the declared differentials."""
    pages = {page.r: page}
    cur = page
    while cur.r < r_final:
        cur = cur.turn(differentials.get(cur.r))
        pages[cur.r] = cur
    table = cur.table()
    verdict = detect_collapse(table, cur.r, cur.row_axis, edge_protected)
    abut = assemble_abutment(table, verdict, degrees, cur.row_axis) if verdict.kind != "Unknown" else {}
    return SpectralSequenceRun(pages, verdict, abut)
