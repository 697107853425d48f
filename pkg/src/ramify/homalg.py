"""Resolutions, Tor tables, Tate cohomology, cone sequences and trace forms.

All homology is computed degree by degree with the sparse routines of
base_arith.  Tables record which entries could be affected by truncation
(``partial``) rather than guessing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .base_arith import (
    BaseRingSpec,
    ColumnEchelon,
    FgAbelianShape,
    cokernel_shape,
    kernel_int,
    raw_fix,
    sparse_homology,
    sparse_kernel,
    sparse_rank,
    subquotient_shape,
    vec_axpy,
)
from .graded_core import (
    DegreewiseModule,
    OutsideWindow,
    PresentedGradedAlgebra,
    compose_columns,
)


class WindowTooSmall(ValueError):
    pass


class InsufficientWindow(ValueError):
    pass


class NotNormalizing(ValueError):
    pass


@dataclass(frozen=True)
class AmbiguousExtension:
    """An extension 0 -> sub -> ? -> quot -> 0 the data cannot decide."""

    sub: FgAbelianShape
    quot: FgAbelianShape
    candidates: tuple

    def format(self) -> str:
        return "ambiguous{" + ", ".join(c.format() for c in self.candidates) + "}"


# -- tables --------------------------------------------------------------------


@dataclass
class TableEntry:
    shape: FgAbelianShape
    names: list = field(default_factory=list)
    partial: bool = False
    reps: list | None = None

    @property
    def is_zero(self) -> bool:
        return self.shape.is_zero


ZERO = FgAbelianShape()


class BigradedTable:
    """Entries indexed by (n, m) over a rectangular region.

    Inside the region a missing key means zero.  ``periodic_n`` extends the
    table periodically in n; ``m_support`` is an interval outside of which
    every entry is known to vanish.
    """

    def __init__(self, ring, region, provenance="", periodic_n=None, m_support=None):
        self.ring = ring
        self.region = (tuple(region[0]), tuple(region[1]))
        self.entries: dict[tuple[int, int], TableEntry] = {}
        self.provenance = provenance
        self.periodic_n = periodic_n
        self.m_support = m_support

    def in_region(self, n, m) -> bool:
        (nl, nh), (ml, mh) = self.region
        return nl <= n <= nh and ml <= m <= mh

    def set(self, n, m, entry: TableEntry) -> None:
        if entry.shape.is_zero and not entry.partial:
            self.entries.pop((n, m), None)
        else:
            self.entries[(n, m)] = entry

    def lookup(self, n, m):
        """The entry at (n, m), a zero entry when known to vanish, or None."""
        if self.m_support is not None and not self.m_support[0] <= m <= self.m_support[1]:
            return TableEntry(ZERO)
        if self.in_region(n, m):
            return self.entries.get((n, m), TableEntry(ZERO))
        if self.periodic_n:
            (nl, nh), (ml, mh) = self.region
            if ml <= m <= mh and nh - nl + 1 >= self.periodic_n:
                n2 = nl + (n - nl) % self.periodic_n
                return self.entries.get((n2, m), TableEntry(ZERO))
        return None

    def __getitem__(self, key) -> TableEntry:
        hit = self.lookup(*key)
        if hit is None:
            raise KeyError(f"bidegree {key} outside the computed region")
        return hit

    def nonzero(self):
        return sorted((k, e) for k, e in self.entries.items() if not e.shape.is_zero)

    def rank(self, n, m) -> int:
        return self[(n, m)].shape.generator_count

    def partial_keys(self):
        return sorted(k for k, e in self.entries.items() if e.partial)


# -- resolutions ---------------------------------------------------------------


@dataclass
class ResolutionStage:
    shifts: list
    images: list  # images[j][i]: algebra element, coefficient of generator i of the previous stage


class FreeResolution:
    """A free resolution F_n of a cyclic module alg/(relations).

    ``known_through`` is the degree up to which every stage lists all its
    generators (None for hand-built resolutions, which are complete).
    """

    def __init__(self, algebra: PresentedGradedAlgebra, stages, relations=(), known_through=None, label=""):
        self.algebra = algebra
        self.ring = algebra.base
        self.stages = list(stages)
        self.relations = list(relations)
        self.known_through = known_through
        self.label = label
        self._basis_cache = {}
        self._diff_cache = {}

    def __len__(self):
        return len(self.stages)

    def shifts(self, n):
        return self.stages[n].shifts if n < len(self.stages) else []

    def basis(self, n, d):
        key = (n, d)
        hit = self._basis_cache.get(key)
        if hit is None:
            hit = []
            for j, s in enumerate(self.shifts(n)):
                hit.extend((j, m) for m in self.algebra.monomials(d - s))
            self._basis_cache[key] = hit
        return hit

    def differential(self, n, d):
        """Sparse columns of F_n -> F_{n-1} in degree d."""
        key = (n, d)
        hit = self._diff_cache.get(key)
        if hit is not None:
            return hit
        src = self.basis(n, d)
        if n == 0 or n >= len(self.stages):
            hit = [{} for _ in src]
        else:
            tgt = {lab: i for i, lab in enumerate(self.basis(n - 1, d))}
            imgs = self.stages[n].images
            hit = []
            for j, u in src:
                col: dict = {}
                for i, p in enumerate(imgs[j]):
                    if not p:
                        continue
                    for m, c in self.algebra.mul(p, {u: 1}).items():
                        k = tgt[(i, m)]
                        col[k] = raw_fix(self.ring, col.get(k, 0) + c)
                hit.append({k: v for k, v in col.items() if v})
        self._diff_cache[key] = hit
        return hit

    def describe(self) -> list[str]:
        out = []
        for n, st in enumerate(self.stages):
            if n == 0:
                out.append(f"F0 shifts {st.shifts}")
                continue
            maps = []
            for row in st.images:
                maps.append("(" + ", ".join(self.algebra.format(p) for p in row) + ")")
            out.append(f"F{n} shifts {st.shifts} maps {' '.join(maps)}")
        return out


def periodic_resolution(algebra: PresentedGradedAlgebra, maps, length: int, relations=(), label="") -> FreeResolution:
    """Rank-one stages alternating through ``maps`` (multiplication elements)."""
    polys = [algebra.parse(m) if isinstance(m, str) else algebra.normal_form(m) for m in maps]
    stages = [ResolutionStage([0], [])]
    shift = 0
    for n in range(1, length):
        p = polys[(n - 1) % len(polys)]
        bd = algebra.poly_bidegree(p)
        shift += bd[0]
        stages.append(ResolutionStage([shift], [[p]]))
    if not relations:
        relations = [polys[0]]
    return FreeResolution(algebra, stages, relations, None, label)


def _poly_from_vector(basis, vec, nprev):
    """Split a vector over (generator, monomial) labels into per-generator polynomials."""
    rows = [dict() for _ in range(nprev)]
    for k, c in vec.items():
        i, m = basis[k]
        rows[i][m] = c
    return rows


def resolve_cyclic_auto(algebra: PresentedGradedAlgebra, relations, window, max_stages: int = 12) -> FreeResolution:
    """Minimal resolution of alg/(relations) built degree by degree.

    New generators are kernel vectors independent of the current image after
    reduction to the residue field (graded Nakayama), so the base ring must be
    local or a field and every algebra generator must have positive degree.
    """
    ring = algebra.base
    if ring.kind == "Integers":
        raise ValueError("automatic resolutions need a local base ring or a field")
    if any(g.degree <= 0 or g.invertible for g in algebra.generators):
        raise ValueError("automatic resolutions need positively graded algebras")
    lo, hi = window
    rels = [algebra.parse(r) if isinstance(r, str) else algebra.normal_form(r) for r in relations]
    field = BaseRingSpec.field(ring.p)
    res = FreeResolution(algebra, [ResolutionStage([0], [])], rels, hi, "auto")
    stages = res.stages
    # stage 1: the relations, dropping redundant ones
    if not rels:
        return res
    ordered = sorted(rels, key=lambda p: (algebra.poly_bidegree(p)[0], algebra.format(p)))
    st1 = ResolutionStage([], [])
    stages.append(st1)
    for p in ordered:
        d = algebra.poly_bidegree(p)[0]
        if d > hi:
            raise WindowTooSmall(f"relation of degree {d} above window top {hi}")
        res._diff_cache.clear()
        res._basis_cache.clear()
        img = ColumnEchelon(field, track=False)
        for col in res.differential(1, d):
            img.add(_mod_p(ring, col))
        tgt = {lab: i for i, lab in enumerate(res.basis(0, d))}
        vec = {tgt[(0, m)]: c for m, c in p.items()}
        if img.add(_mod_p(ring, vec)):
            st1.shifts.append(d)
            st1.images.append([p])
    n = 2
    while n < max_stages:
        prev = stages[n - 1]
        if not prev.shifts or min(prev.shifts) > hi:
            break
        st = ResolutionStage([], [])
        stages.append(st)
        start = min(prev.shifts)
        for d in range(start, hi + 1):
            res._diff_cache.pop((n, d), None)
            res._basis_cache.pop((n, d), None)
            cols = res.differential(n - 1, d)
            if not cols:
                continue
            ker = sparse_kernel(ring, cols)
            if not ker:
                continue
            img = ColumnEchelon(field, track=False)
            for col in res.differential(n, d):
                img.add(_mod_p(ring, col))
            basis_prev = res.basis(n - 1, d)
            added = False
            for kv in ker:
                if img.add(_mod_p(ring, kv)):
                    st.shifts.append(d)
                    st.images.append(_poly_from_vector(basis_prev, kv, len(prev.shifts)))
                    added = True
            if added:
                res._diff_cache.pop((n, d), None)
                res._basis_cache = {k: v for k, v in res._basis_cache.items() if k[0] != n}
        if not st.shifts:
            stages.pop()
            break
        n += 1
    res._diff_cache.clear()
    res._basis_cache.clear()
    return res


def _mod_p(ring, vec):
    from .base_arith import vec_mod_p

    if ring.kind == "PrimeField":
        return dict(vec)
    return vec_mod_p(ring, vec)


@dataclass
class ResolutionReport:
    d_squared_zero: bool
    exact: bool
    failures: list  # (kind, stage, degree)
    witness_degree: int | None

    def format(self) -> str:
        state = "exact" if self.exact and self.d_squared_zero else "not exact"
        extra = f", first failure in degree {self.witness_degree}" if self.witness_degree is not None else ""
        return f"{state}{extra}"


def verify_resolution(res: FreeResolution, window) -> ResolutionReport:
    """Check d o d = 0 and ker = im at every interior stage within the window."""
    ring = res.ring
    lo, hi = window
    failures = []
    top = len(res.stages)
    for n in range(1, top):
        for d in range(lo, hi + 1):
            outer = res.differential(n, d)
            if n + 1 < top:
                inner = res.differential(n + 1, d)
                comp = compose_columns(ring, outer, inner)
                if any(c for c in comp):
                    failures.append(("d_squared", n, d))
            if n + 1 >= top:
                continue
            if res.known_through is not None and d > res.known_through:
                continue
            ker = sparse_kernel(ring, outer)
            img = ColumnEchelon(ring, track=False)
            for c in res.differential(n + 1, d):
                img.add(c)
            if any(img.solve(k) is None for k in ker) or img.rank != len(ker):
                failures.append(("homology", n, d))
    # stage 0: cokernel of d_1 must be alg/(relations)
    if res.relations and top > 1:
        from .graded_core import CyclicQuotient

        q = CyclicQuotient(res.algebra, res.relations, (lo, hi))
        for d in range(max(lo, 0), hi + 1):
            shape = _cokernel_sparse(ring, res.differential(1, d), len(res.basis(0, d)))
            if shape != FgAbelianShape(q.dim(d)):
                failures.append(("augmentation", 0, d))
    dsq = not any(f[0] == "d_squared" for f in failures)
    exact = not any(f[0] != "d_squared" for f in failures)
    witness = min((f[2] for f in failures), default=None)
    return ResolutionReport(dsq, exact, failures, witness)


def _cokernel_sparse(ring, cols, nrows):
    if nrows == 0:
        return FgAbelianShape()
    dense = [[c.get(i, 0) for c in cols] for i in range(nrows)]
    if not cols:
        return FgAbelianShape(nrows)
    return cokernel_shape(dense, ring, nrows)


# -- Tor -----------------------------------------------------------------------


def _stage_name(res, n, j, inner):
    if len(res.shifts(n)) == 1:
        return f"F{n}:{inner}"
    return f"F{n}.{j}:{inner}"


def tor_table(res: FreeResolution, module: DegreewiseModule, internal, max_filtration: int, label="") -> BigradedTable:
    """Tor over the algebra of (resolved module, module) as a bigraded table.

    Entry (n, t) is the homology of F_n (x) module in internal degree t.  A
    module degree outside the module's window is treated as zero and flags
    the entry partial; so do resolution generators beyond ``known_through``.
    """
    ring = module.ring
    lo, hi = internal
    table = BigradedTable(ring, ((0, max_filtration), (lo, hi)), label or "tor")
    if len(res.stages) < max_filtration + 2 and res.known_through is None:
        raise WindowTooSmall(f"resolution has {len(res.stages)} stages, need {max_filtration + 2}")
    alg = res.algebra

    def chain(n, t):
        """Blocks (generator j, module labels) of F_n (x) M in degree t, and truncation flag."""
        blocks = []
        trunc = False
        for j, s in enumerate(res.shifts(n)):
            e = t - s
            if module.known_zero(e):
                blocks.append((j, e, []))
            elif module.in_window(e):
                blocks.append((j, e, module.labels(e)))
            else:
                trunc = True
                blocks.append((j, e, []))
        return blocks, trunc

    def boundary(n, t, src_blocks, tgt_blocks):
        offs = {}
        pos = 0
        for j, e, labs in tgt_blocks:
            offs[j] = pos
            pos += len(labs)
        cols = []
        if n == 0 or n >= len(res.stages):
            return [{} for _, _, labs in src_blocks for _ in labs]
        imgs = res.stages[n].images
        for j, e, labs in src_blocks:
            blk_cols = [dict() for _ in labs]
            for i, p in enumerate(imgs[j]):
                if not p or not tgt_blocks[i][2]:
                    continue
                try:
                    acts = module.act_columns(p, e)
                except OutsideWindow:
                    continue
                for k, c in enumerate(acts):
                    vec_axpy(ring, blk_cols[k], 1, {offs[i] + r: v for r, v in c.items()})
            cols.extend(blk_cols)
        return cols

    def horizon(n, t):
        if res.known_through is None:
            return False
        e = t - res.known_through - 1
        if e < module.window[0]:
            return False
        return not module.known_zero(e)

    for n in range(0, max_filtration + 1):
        for t in range(lo, hi + 1):
            cur, trunc_c = chain(n, t)
            dim = sum(len(b[2]) for b in cur)
            nxt, trunc_n = chain(n + 1, t)
            partial = trunc_c or trunc_n or horizon(n, t) or horizon(n + 1, t)
            if dim == 0:
                if partial:
                    table.set(n, t, TableEntry(ZERO, [], True))
                continue
            prev, _ = chain(n - 1, t) if n > 0 else ([], False)
            d_out = boundary(n, t, cur, prev) if n > 0 else [{} for _ in range(dim)]
            d_in = boundary(n + 1, t, nxt, cur)
            h = sparse_homology(ring, d_in, d_out, dim)
            names = []
            flat = [(j, lab) for j, e, labs in cur for lab in labs]
            if h.reps is not None:
                for rep, std in zip(h.reps, h.standard):
                    if std is not None:
                        j, lab = flat[std]
                        names.append(_stage_name(res, n, j, module.name(lab)))
                    else:
                        terms = []
                        for k in sorted(rep):
                            j, lab = flat[k]
                            terms.append(f"{rep[k]}*{module.name(lab)}")
                        names.append(f"F{n}:[" + " + ".join(terms) + "]")
            table.set(n, t, TableEntry(h.shape, names, partial, h.reps))
    return table


# -- group actions and Tate cohomology -----------------------------------------


class CyclicAction:
    """A chosen generator t of a cyclic group of order k acting degreewise."""

    def __init__(self, module, order: int, t_columns, label=""):
        self.module = module
        self.ring = module.ring
        self.order = order
        self._t = t_columns
        self.label = label
        self._cache = {}

    def t(self, d):
        hit = self._cache.get(d)
        if hit is None:
            hit = self._cache[d] = self._t(d)
        return hit

    def check_order(self, degrees) -> list[int]:
        """Degrees where t^k differs from the identity."""
        bad = []
        for d in degrees:
            T = self.t(d)
            acc = [{i: 1} for i in range(len(T))]
            for _ in range(self.order):
                acc = compose_columns(self.ring, T, acc)
            if acc != [{i: 1} for i in range(len(T))]:
                bad.append(d)
        return bad

    @classmethod
    def trivial(cls, module, order: int):
        return cls(module, order, lambda d: [{i: 1} for i in range(module.dim(d))], "trivial")

    @classmethod
    def sign(cls, module):
        """Order two; basis monomials of odd weight change sign."""
        alg = module.algebra

        def t(d):
            cols = []
            for i, lab in enumerate(module.labels(d)):
                mono = lab[1] if isinstance(lab, tuple) and len(lab) == 2 and isinstance(lab[1], tuple) else lab
                s = -1 if alg.weight(mono) else 1
                cols.append({i: raw_fix(module.ring, s)})
            return cols

        return cls(module, 2, t, "sign")

    @classmethod
    def from_matrices(cls, module, order: int, matrices: dict):
        def t(d):
            m = matrices.get(d)
            if m is None:
                return [{i: 1} for i in range(module.dim(d))]
            ncols = len(m[0]) if m else 0
            return [{r: m[r][c] for r in range(len(m)) if m[r][c]} for c in range(ncols)]

        return cls(module, order, t, "matrix")

    def norm(self, d):
        T = self.t(d)
        n = len(T)
        acc = [{i: 1} for i in range(n)]
        power = [{i: 1} for i in range(n)]
        for _ in range(self.order - 1):
            power = compose_columns(self.ring, T, power)
            for a, b in zip(acc, power):
                vec_axpy(self.ring, a, 1, b)
        return acc

    def t_minus_one(self, d):
        out = []
        for i, c in enumerate(self.t(d)):
            v = dict(c)
            vec_axpy(self.ring, v, -1, {i: 1})
            out.append(v)
        return out


def _power_name(base: str, gen: str, k: int) -> str:
    if k == 0:
        return base
    p = gen if k == 1 else f"{gen}^{k}"
    return p if base == "1" else f"{base}*{p}"


def tate_cyclic(action: CyclicAction, internal, columns, periodic_generator="zeta", label="") -> BigradedTable:
    """Tate cohomology H^{-n}(C_k; M_m) for m in ``internal`` and n in ``columns``.

    Even cohomological degree: ker(t-1)/im N.  Odd: ker N/im(t-1).  A class
    represented by basis element b in column n is named b*zeta^{-n}.
    """
    ring = action.ring
    mod = action.module
    lo, hi = internal
    table = BigradedTable(ring, (tuple(columns), (lo, hi)), label or "tate", periodic_n=2)
    for m in range(lo, hi + 1):
        if mod.known_zero(m) or not mod.in_window(m):
            continue
        dim = mod.dim(m)
        if dim == 0:
            continue
        N = action.norm(m)
        D = action.t_minus_one(m)
        even = sparse_homology(ring, N, D, dim)
        odd = sparse_homology(ring, D, N, dim)
        for n in range(columns[0], columns[1] + 1):
            h = even if (-n) % 2 == 0 else odd
            names = []
            if h.reps is not None:
                for rep, std in zip(h.reps, h.standard):
                    if std is not None:
                        names.append(_power_name(mod.degree_basis(m)[std], periodic_generator, -n))
                    else:
                        body = " + ".join(f"{rep[k]}*{mod.degree_basis(m)[k]}" for k in sorted(rep))
                        names.append(_power_name(f"[{body}]", periodic_generator, -n))
            table.set(n, m, TableEntry(h.shape, names, False, h.reps))
    return table


def tate_sigma3_via_sylow(c3: CyclicAction, weyl_columns, internal, columns, twist=True, label="") -> BigradedTable:
    """Tate cohomology of a group with normal Sylow C_3 and quotient C_2, over F_3.

    The Weyl element w must satisfy t w = w t^2.  On cohomological degree q
    it acts as (-1)^ceil(q/2) times its action on representatives; the table
    keeps the fixed subspace.  ``twist=False`` drops the sign.
    """
    ring = c3.ring
    if not ring.is_field or ring.p != 3 or c3.order != 3:
        raise ValueError("the Sylow route is implemented for C_3 over F_3")
    mod = c3.module
    lo, hi = internal
    table = BigradedTable(ring, (tuple(columns), (lo, hi)), label or "tate-sigma3", periodic_n=4 if twist else 2)
    for m in range(lo, hi + 1):
        if mod.known_zero(m) or not mod.in_window(m):
            continue
        dim = mod.dim(m)
        if dim == 0:
            continue
        T = c3.t(m)
        W = weyl_columns(m)
        tw = compose_columns(ring, T, W)
        wtt = compose_columns(ring, W, compose_columns(ring, T, T))
        if tw != wtt:
            raise NotNormalizing(f"w does not normalize t in degree {m}")
        N = c3.norm(m)
        D = c3.t_minus_one(m)
        for n in range(columns[0], columns[1] + 1):
            q = -n
            outgoing, incoming = (D, N) if q % 2 == 0 else (N, D)
            sign = (-1 if (-(-q // 2)) % 2 else 1) if twist else 1
            kernel = sparse_kernel(ring, outgoing)
            bnd = [c for c in incoming if c]
            fixed_dim = _fixed_dimension(ring, kernel, bnd, W, sign)
            names = [f"H{q}[{m}]_{k}" for k in range(fixed_dim)]
            table.set(n, m, TableEntry(FgAbelianShape.from_divisors(0, [3] * fixed_dim), names))
    return table


def _fixed_dimension(ring, kernel, boundary, W, sign) -> int:
    """dim of the fixed part of (sign * W) on span(kernel)/span(boundary), over a field."""
    bech = ColumnEchelon(ring, track=False)
    for b in boundary:
        bech.add(b)
    bdim = bech.rank
    bbasis = bech.basis()
    cols = []
    for k in kernel:
        img = {}
        for i, c in k.items():
            vec_axpy(ring, img, c * sign, W[i])
        vec_axpy(ring, img, -1, k)
        cols.append(img)
    for b in bbasis:
        cols.append({i: -c for i, c in b.items()})
    nullity = len(cols) - sparse_rank(ring, cols)
    return nullity - bdim if kernel else 0


# -- long exact sequences ------------------------------------------------------


@dataclass
class MapDatum:
    """A homomorphism between two finitely generated modules in one degree.

    Source and target are presented on their standard generators (free ones
    first, then one per invariant factor); ``matrix`` has one row per target
    generator.
    """

    source: FgAbelianShape
    target: FgAbelianShape
    matrix: list


def _relations(shape: FgAbelianShape):
    return [0] * shape.free_rank + list(shape.torsion)


def map_kernel(ring, datum: MapDatum) -> FgAbelianShape:
    a, b = datum.source, datum.target
    na, nb = a.generator_count, b.generator_count
    if na == 0:
        return FgAbelianShape()
    rb = _relations(b)
    ra = _relations(a)
    # pairs (x, y) with f x + diag(rb) y = 0
    rows = []
    for i in range(nb):
        row = [datum.matrix[i][j] if datum.matrix else 0 for j in range(na)]
        row += [rb[i] if k == i else 0 for k in range(nb)]
        rows.append(row)
    if nb:
        ker = kernel_int(rows, ring, na + nb)
        sub = [v[:na] for v in ker]
    else:
        sub = [[1 if i == j else 0 for i in range(na)] for j in range(na)]
    rel = [[ra[j] if i == j else 0 for i in range(na)] for j in range(na) if ra[j]]
    return subquotient_shape(ring, sub, rel, na)


def map_cokernel(ring, datum: MapDatum) -> FgAbelianShape:
    a, b = datum.source, datum.target
    na, nb = a.generator_count, b.generator_count
    if nb == 0:
        return FgAbelianShape()
    rb = _relations(b)
    rows = []
    for i in range(nb):
        row = [datum.matrix[i][j] for j in range(na)] if na else []
        row += [rb[i] if k == i else 0 for k in range(nb)]
        rows.append(row)
    return cokernel_shape(rows, ring, nb)


def _extension_candidates(sub: FgAbelianShape, quot: FgAbelianShape):
    split = sub.direct_sum(quot)
    cands = [split]
    if sub.torsion == () and quot.free_rank == 0 and sub.free_rank >= len(quot.torsion):
        # each cyclic torsion quotient can be absorbed by a free summand
        cands.insert(0, FgAbelianShape(sub.free_rank))
    return tuple(cands)


@dataclass
class ConeDegree:
    degree: int
    cokernel: FgAbelianShape
    kernel: FgAbelianShape
    result: object  # FgAbelianShape or AmbiguousExtension
    resolved_by: str = ""

    @property
    def shape(self):
        return self.result if isinstance(self.result, FgAbelianShape) else None


def cone_les_solve(ring, map_data: dict, window, hints=None) -> dict:
    """Homotopy of the cone of A -> B from per-degree maps pi_d A -> pi_d B.

    0 -> coker(f_d) -> pi_d cone -> ker(f_{d-1}) -> 0.  Hints per degree:
    ``"torsion_free_total"`` picks the torsion-free candidate, a shape string
    names the answer of a comparison argument and must be a candidate.
    """
    lo, hi = window
    hints = hints or {}
    missing = [d for d in range(lo - 1, hi + 1) if d not in map_data]
    if missing:
        raise InsufficientWindow(f"map data missing in degrees {missing}")
    out = {}
    for d in range(lo, hi + 1):
        coker = map_cokernel(ring, map_data[d])
        ker = map_kernel(ring, map_data[d - 1])
        how = "exact"
        if ker.is_zero:
            result = coker
        elif coker.is_zero:
            result = ker
        elif not ker.torsion:
            result = coker.direct_sum(ker)
            how = "free quotient splits"
        else:
            result = AmbiguousExtension(coker, ker, _extension_candidates(coker, ker))
            how = "ambiguous"
        hint = hints.get(d)
        if hint is not None and isinstance(result, AmbiguousExtension):
            if hint == "torsion_free_total":
                free = [c for c in result.candidates if not c.torsion]
                if not free:
                    raise ValueError(f"degree {d}: no torsion-free candidate")
                result, how = free[0], "torsion-free hint"
            else:
                want = FgAbelianShape.parse(hint) if isinstance(hint, str) else hint
                if want not in result.candidates:
                    raise ValueError(f"degree {d}: hinted shape {want.format()} is not a candidate")
                result, how = want, "comparison hint"
        out[d] = ConeDegree(d, coker, ker, result, how)
    return out


# -- trace forms ---------------------------------------------------------------


@dataclass
class TraceGram:
    ring: BaseRingSpec
    poly_degree: int
    source_shifts: list
    target_shifts: list
    matrices: dict  # degree -> (source labels, target labels, dense matrix)

    def at(self, d):
        return self.matrices[d]


def trace_gram(ring, source_shifts, trace_rule, window, poly_degree: int, target_shifts=None, var="v") -> TraceGram:
    """Degreewise matrices of a map between sums of shifted copies of ring[v].

    ``trace_rule(i, j, k)`` is the coefficient with which v^k in source
    summand i lands in target summand j; the power of v in the image is
    fixed by the degrees.
    """
    if target_shifts is None:
        target_shifts = [-s for s in source_shifts]
    lo, hi = window
    mats = {}
    for d in range(lo, hi + 1):
        src = [(i, (d - s) // poly_degree) for i, s in enumerate(source_shifts)
               if d - s >= 0 and (d - s) % poly_degree == 0]
        tgt = [(j, (d - t) // poly_degree) for j, t in enumerate(target_shifts)
               if d - t >= 0 and (d - t) % poly_degree == 0]
        tidx = {j: r for r, (j, _) in enumerate(tgt)}
        mat = [[0] * len(src) for _ in tgt]
        for c, (i, k) in enumerate(src):
            for j, _ in tgt:
                coeff = trace_rule(i, j, k)
                if coeff:
                    mat[tidx[j]][c] = ring.coerce(coeff)
        names_s = [f"s{i}*{var}^{k}" for i, k in src]
        names_t = [f"t{j}*{var}^{k}" for j, k in tgt]
        mats[d] = (names_s, names_t, mat)
    return TraceGram(ring, poly_degree, list(source_shifts), list(target_shifts), mats)


def discriminant_cokernel(gram: TraceGram, window=None) -> dict:
    """Cokernel shape of the gram map in each degree of the window."""
    lo, hi = window or (min(gram.matrices), max(gram.matrices))
    out = {}
    for d in range(lo, hi + 1):
        _, tgt, mat = gram.matrices[d]
        if not tgt:
            out[d] = FgAbelianShape()
            continue
        if not mat or not mat[0]:
            out[d] = FgAbelianShape(len(tgt))
        else:
            out[d] = cokernel_shape(mat, gram.ring, len(tgt))
    return out
