"""Exact scalars over Z, Z_(p) and F_p, and the linear algebra built on them.

Matrices are plain lists of rows.  Entries may be ``Scalar`` objects (the ring
is then read off the entries) or raw ints/Fractions together with an explicit
``ring`` argument.  Internally everything is reduced to integer matrices:
rows are rescaled by units of the ring, which changes neither kernels nor
elementary divisors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd


class MixedRings(ValueError):
    """Entries of one matrix live over different base rings."""


class NotInRing(ValueError):
    """A value cannot be interpreted in the requested base ring."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def valuation(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of zero")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def prime_to_p_part(n: int, p: int) -> int:
    n = abs(n)
    while n and n % p == 0:
        n //= p
    return n


@dataclass(frozen=True)
class BaseRingSpec:
    kind: str
    p: int | None = None

    def __post_init__(self):
        if self.kind not in ("Integers", "PLocalIntegers", "PrimeField"):
            raise ValueError(f"unknown ring kind {self.kind!r}")
        if self.kind == "Integers":
            if self.p is not None:
                raise ValueError("Integers take no prime")
        elif self.p is None or not is_prime(self.p):
            raise ValueError(f"{self.kind} needs a prime, got {self.p!r}")

    @classmethod
    def integers(cls) -> "BaseRingSpec":
        return cls("Integers")

    @classmethod
    def local(cls, p: int) -> "BaseRingSpec":
        return cls("PLocalIntegers", p)

    @classmethod
    def field(cls, p: int) -> "BaseRingSpec":
        return cls("PrimeField", p)

    @property
    def is_field(self) -> bool:
        return self.kind == "PrimeField"

    def __str__(self):
        if self.kind == "Integers":
            return "Z"
        if self.kind == "PLocalIntegers":
            return f"Z({self.p})"
        return f"F({self.p})"

    @classmethod
    def parse(cls, text: str) -> "BaseRingSpec":
        t = text.strip().replace(" ", "")
        if t == "Z":
            return cls.integers()
        for prefix, kind in (("Z(", "PLocalIntegers"), ("F(", "PrimeField")):
            if t.startswith(prefix) and t.endswith(")"):
                try:
                    p = int(t[2:-1])
                except ValueError:
                    break
                return cls(kind, p)
        if t[:1] == "F" and t[1:].isdigit():
            return cls("PrimeField", int(t[1:]))
        raise ValueError(f"cannot parse base ring {text!r}")

    # -- element handling -------------------------------------------------

    def coerce(self, x) -> int | Fraction:
        """Canonical raw value: int for Z and F_p, Fraction or int for Z_(p)."""
        if isinstance(x, Scalar):
            if x.ring != self:
                raise MixedRings(f"{x.ring} element used over {self}")
            return x.value
        if isinstance(x, bool):
            x = int(x)
        if isinstance(x, int):
            return x % self.p if self.kind == "PrimeField" else x
        if isinstance(x, Fraction):
            if x.denominator == 1:
                return self.coerce(x.numerator)
            if self.kind == "Integers":
                raise NotInRing(f"{x} is not an integer")
            if x.denominator % self.p == 0:
                raise NotInRing(f"{x} has a denominator divisible by {self.p}")
            if self.kind == "PrimeField":
                return x.numerator * pow(x.denominator, -1, self.p) % self.p
            return x
        raise NotInRing(f"cannot coerce {x!r} into {self}")

    def is_unit(self, x) -> bool:
        x = self.coerce(x)
        if self.kind == "Integers":
            return x in (1, -1)
        if self.kind == "PrimeField":
            return x != 0
        return Fraction(x).numerator % self.p != 0

    def normalize(self, x) -> int:
        """Canonical associate: |x| over Z, p^v over Z_(p), 1 or 0 over F_p."""
        x = self.coerce(x)
        if x == 0:
            return 0
        if self.kind == "Integers":
            return abs(x)
        if self.kind == "PrimeField":
            return 1
        return self.p ** valuation(Fraction(x).numerator, self.p)


@dataclass(frozen=True)
class Scalar:
    ring: BaseRingSpec
    value: int | Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", self.ring.coerce(self.value))

    def _other(self, other):
        if isinstance(other, Scalar):
            if other.ring != self.ring:
                raise MixedRings(f"{self.ring} vs {other.ring}")
            return other.value
        return self.ring.coerce(other)

    def __add__(self, other):
        return Scalar(self.ring, self.value + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Scalar(self.ring, self.value - self._other(other))

    def __rsub__(self, other):
        return Scalar(self.ring, self._other(other) - self.value)

    def __mul__(self, other):
        return Scalar(self.ring, self.value * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Scalar(self.ring, -self.value)

    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.ring == other.ring and self.value == other.value
        try:
            return self.value == self.ring.coerce(other)
        except (NotInRing, MixedRings):
            return False

    def __hash__(self):
        return hash((self.ring, self.value))

    def is_zero(self) -> bool:
        return self.value == 0

    def __repr__(self):
        return f"{self.value} in {self.ring}"


@dataclass(frozen=True)
class FgAbelianShape:
    """A finitely generated module over the base ring: free part plus torsion."""

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(int(t) for t in self.torsion))
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        for t in self.torsion:
            if t <= 1:
                raise ValueError(f"invariant factor {t} must exceed 1")
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a:
                raise ValueError(f"invariant factors {self.torsion} do not form a chain")

    @classmethod
    def from_divisors(cls, free_rank: int, divisors) -> "FgAbelianShape":
        """Build from arbitrary cyclic orders, renormalizing to a divisor chain."""
        orders = [abs(int(d)) for d in divisors if abs(int(d)) != 1]
        if any(d == 0 for d in orders):
            raise ValueError("use free_rank for free summands")
        if not orders:
            return cls(free_rank, ())
        diag = [[0] * len(orders) for _ in orders]
        for i, d in enumerate(orders):
            diag[i][i] = d
        divs = _integer_divisors(diag)
        return cls(free_rank, tuple(d for d in divs if d != 1))

    def direct_sum(self, other: "FgAbelianShape") -> "FgAbelianShape":
        return FgAbelianShape.from_divisors(
            self.free_rank + other.free_rank, list(self.torsion) + list(other.torsion)
        )

    @property
    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    @property
    def generator_count(self) -> int:
        return self.free_rank + len(self.torsion)

    def format(self) -> str:
        """Compact text form used in reports and golden files."""
        if self.is_zero:
            return "0"
        parts = []
        if self.free_rank == 1:
            parts.append("free")
        elif self.free_rank > 1:
            parts.append(f"free^{self.free_rank}")
        i = 0
        while i < len(self.torsion):
            j = i
            while j < len(self.torsion) and self.torsion[j] == self.torsion[i]:
                j += 1
            k = j - i
            parts.append(f"tors({self.torsion[i]})" + (f"^{k}" if k > 1 else ""))
            i = j
        return " + ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "FgAbelianShape":
        text = text.strip()
        if text == "0":
            return cls()
        free = 0
        tors = []
        for part in text.split("+"):
            part = part.strip()
            mult = 1
            if "^" in part:
                part, m = part.rsplit("^", 1)
                mult = int(m)
            if part == "free":
                free += mult
            elif part.startswith("tors(") and part.endswith(")"):
                tors.extend([int(part[5:-1])] * mult)
            else:
                raise ValueError(f"bad shape term {part!r}")
        return cls.from_divisors(free, tors)

    def describe(self, ring: BaseRingSpec) -> str:
        if self.is_zero:
            return "0"
        parts = []
        if self.free_rank:
            parts.append(f"{ring}" + (f"^{self.free_rank}" if self.free_rank > 1 else ""))
        parts.extend(f"Z/{t}" for t in self.torsion)
        return " + ".join(parts)

    def __str__(self):
        return self.format()


# -- matrix preparation ------------------------------------------------------


def _ring_of(m, ring):
    found = ring
    for row in m:
        for x in row:
            if isinstance(x, Scalar):
                if found is None:
                    found = x.ring
                elif x.ring != found:
                    raise MixedRings(f"matrix mixes {found} and {x.ring}")
    if found is None:
        raise ValueError("cannot infer the base ring; pass ring=")
    return found


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def prepare(m, ring: BaseRingSpec | None = None, ncols: int | None = None):
    """Return (ring, integer matrix, ncols) with rows rescaled by units."""
    ring = _ring_of(m, ring)
    rows = []
    width = ncols
    for row in m:
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValueError("ragged matrix")
        vals = [ring.coerce(x) for x in row]
        if ring.kind == "PLocalIntegers":
            den = 1
            for v in vals:
                if isinstance(v, Fraction):
                    den = _lcm(den, v.denominator)
            vals = [int(v * den) for v in vals]
        rows.append([int(v) for v in vals])
    return ring, rows, (width or 0)


# -- elimination core -------------------------------------------------------------


def _xgcd(a: int, b: int):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _size(ring: BaseRingSpec, x: int) -> int:
    if ring.kind == "Integers":
        return abs(x)
    if ring.kind == "PrimeField":
        return 0
    return valuation(x, ring.p)


def _combine(ring: BaseRingSpec, a: int, b: int):
    """Unimodular 2x2 (alpha, beta, gamma, delta) sending (a, b) to (g, 0).

    Rows are combined as new_pivot = alpha*pivot + beta*other and
    new_other = gamma*pivot + delta*other.
    """
    p = ring.p
    if ring.kind == "PrimeField":
        return 1, 0, (-b * pow(a, -1, p)) % p, 1
    if ring.kind == "PLocalIntegers":
        v = valuation(a, p)
        unit = a // p ** v
        return 1, 0, -(b // p ** v), unit
    if b % a == 0:
        return 1, 0, -(b // a), 1
    g, x, y = _xgcd(a, b)
    return x, y, -(b // g), a // g


def _reduce_row(ring: BaseRingSpec, row: list[int]) -> list[int]:
    if ring.kind == "PrimeField":
        return [v % ring.p for v in row]
    if ring.kind == "PLocalIntegers":
        c = 0
        for v in row:
            if v:
                c = gcd(c, v)
        c = prime_to_p_part(c, ring.p)
        if c > 1:
            return [v // c for v in row]
    return row


def _integer_divisors(a: list[list[int]]) -> list[int]:
    ring = BaseRingSpec.integers()
    diag, _, _ = _smith_core(ring, [r[:] for r in a], track=False)
    return diag


def _smith_core(ring: BaseRingSpec, a: list[list[int]], track: bool):
    """Diagonalize in place.  Returns (diagonal, L, R) with L*A*R = D when tracked.

    Pivots are chosen with minimal size (absolute value over Z, valuation over
    Z_(p)), which keeps the divisibility chain automatic over Z_(p) and F_p.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    left = [[int(i == j) for j in range(m)] for i in range(m)] if track else None
    right = [[int(i == j) for j in range(n)] for i in range(n)] if track else None
    p = ring.p
    mod = ring.kind == "PrimeField"

    def fix(v):
        return v % p if mod else v

    t = 0
    diag = []
    while t < min(m, n):
        best = None
        for i in range(t, m):
            row = a[i]
            for j in range(t, n):
                if row[j]:
                    s = _size(ring, row[j])
                    if best is None or s < best[0]:
                        best = (s, i, j)
                        if s == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        _, i, j = best
        if i != t:
            a[i], a[t] = a[t], a[i]
            if track:
                left[i], left[t] = left[t], left[i]
        if j != t:
            for row in a:
                row[j], row[t] = row[t], row[j]
            if track:
                for row in right:
                    row[j], row[t] = row[t], row[j]
        while True:
            for i in range(t + 1, m):
                b = a[i][t]
                if not b:
                    continue
                al, be, ga, de = _combine(ring, a[t][t], b)
                rt, ri = a[t], a[i]
                a[t] = [fix(al * x + be * y) for x, y in zip(rt, ri)]
                a[i] = [fix(ga * x + de * y) for x, y in zip(rt, ri)]
                if track:
                    lt, li = left[t], left[i]
                    left[t] = [fix(al * x + be * y) for x, y in zip(lt, li)]
                    left[i] = [fix(ga * x + de * y) for x, y in zip(lt, li)]
                elif ring.kind == "PLocalIntegers":
                    a[i] = _reduce_row(ring, a[i])
            dirty = False
            for j in range(t + 1, n):
                b = a[t][j]
                if not b:
                    continue
                al, be, ga, de = _combine(ring, a[t][t], b)
                for row in a:
                    x, y = row[t], row[j]
                    row[t] = fix(al * x + be * y)
                    row[j] = fix(ga * x + de * y)
                if track:
                    for row in right:
                        x, y = row[t], row[j]
                        row[t] = fix(al * x + be * y)
                        row[j] = fix(ga * x + de * y)
                if any(a[i][t] for i in range(t + 1, m)):
                    dirty = True
            if dirty:
                continue
            if ring.kind == "Integers":
                piv = a[t][t]
                bad = None
                for i in range(t + 1, m):
                    for j in range(t + 1, n):
                        if a[i][j] % piv:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is not None:
                    a[t] = [x + y for x, y in zip(a[t], a[bad])]
                    if track:
                        left[t] = [x + y for x, y in zip(left[t], left[bad])]
                    continue
            break
        diag.append(ring.normalize(a[t][t]))
        t += 1
    return diag, left, right


# -- public operations -----------------------------------------------------------


def smith_normal_form(m, ring: BaseRingSpec | None = None):
    """Elementary divisors (units normalized to 1) and rank of ``m``.

    >>> smith_normal_form([[4, 6], [2, 0]], BaseRingSpec.integers())[0]
    [2, 6]
    """
    ring, a, _ = prepare(m, ring)
    if not a or not a[0]:
        return [], 0
    diag, _, _ = _smith_core(ring, a, track=False)
    return [Scalar(ring, d) for d in diag], len(diag)


def elementary_divisors(m, ring: BaseRingSpec | None = None) -> list[int]:
    divs, _ = smith_normal_form(m, ring)
    return [int(d.value) for d in divs]


def rank(m, ring: BaseRingSpec | None = None) -> int:
    return smith_normal_form(m, ring)[1]


def cokernel_shape(m, ring: BaseRingSpec | None = None, nrows: int | None = None) -> FgAbelianShape:
    """Shape of coker(m): rows are target coordinates.

    ``nrows`` lets callers describe maps out of the zero module, where the
    matrix has no columns and therefore no way to carry its row count.
    """
    if m and m[0]:
        divs, r = smith_normal_form(m, ring)
        rows = len(m)
    else:
        divs, r = [], 0
        rows = len(m) if m else (nrows or 0)
    return FgAbelianShape.from_divisors(rows - r, [int(d.value) for d in divs])


def _canonical_rows(ring: BaseRingSpec, rows: list[list[int]]) -> list[list[int]]:
    """Row echelon form with normalized pivots; spans the same module."""
    rows = [r[:] for r in rows if any(r)]
    if not rows:
        return []
    n = len(rows[0])
    mod = ring.kind == "PrimeField"
    p = ring.p
    out = []
    col = 0
    while rows and col < n:
        nz = [r for r in rows if r[col] % p] if mod else [r for r in rows if r[col]]
        if not nz:
            col += 1
            continue
        if ring.kind == "PLocalIntegers":
            piv = min(nz, key=lambda r: valuation(r[col], p))
        else:
            piv = min(nz, key=lambda r: abs(r[col]))
        rows.remove(piv)
        changed = True
        while changed:
            changed = False
            new_rows = []
            for r in rows:
                if not (r[col] % p if mod else r[col]):
                    new_rows.append(r)
                    continue
                al, be, ga, de = _combine(ring, piv[col], r[col])
                np_ = [al * x + be * y for x, y in zip(piv, r)]
                nr = [ga * x + de * y for x, y in zip(piv, r)]
                if mod:
                    np_ = [v % p for v in np_]
                    nr = [v % p for v in nr]
                piv = _reduce_row(ring, np_)
                if any(nr):
                    new_rows.append(_reduce_row(ring, nr))
            rows = new_rows
        if mod:
            inv = pow(piv[col], -1, p)
            piv = [v * inv % p for v in piv]
        elif piv[col] < 0:
            piv = [-v for v in piv]
        if ring.kind == "PLocalIntegers":
            piv = _reduce_row(ring, piv)
        out.append(piv)
        col += 1
    # reduce entries above pivots where the ring allows it
    for i in range(len(out)):
        c = next(k for k, v in enumerate(out[i]) if v)
        for j in range(i):
            b = out[j][c]
            if not b:
                continue
            a = out[i][c]
            if mod:
                q = b * pow(a, -1, p) % p
                out[j] = [(x - q * y) % p for x, y in zip(out[j], out[i])]
            elif ring.kind == "Integers":
                q = b // a
                out[j] = [x - q * y for x, y in zip(out[j], out[i])]
    return out


def kernel_basis(m, ring: BaseRingSpec | None = None, ncols: int | None = None) -> list[list[Scalar]]:
    """A basis of ker(m) (column vectors as lists); saturated over Z and Z_(p)."""
    ring, vecs = _kernel_int(m, ring, ncols)
    return [[Scalar(ring, v) for v in vec] for vec in vecs]


def _kernel_int(m, ring=None, ncols=None):
    ring, a, n = prepare(m, ring, ncols)
    if ncols is not None:
        n = ncols
    if n == 0:
        return ring, []
    if not a:
        vecs = [[int(i == j) for j in range(n)] for i in range(n)]
        return ring, vecs
    diag, _, right = _smith_core(ring, a, track=True)
    r = len(diag)
    vecs = [[right[i][j] for i in range(n)] for j in range(r, n)]
    return ring, _canonical_rows(ring, vecs)


def kernel_int(m, ring: BaseRingSpec, ncols: int) -> list[list[int]]:
    """Integer kernel vectors, the raw form used by the graded engines."""
    return _kernel_int(m, ring, ncols)[1]


def span_basis(ring: BaseRingSpec, vectors: list[list[int]]) -> list[list[int]]:
    """An echelon basis of the submodule spanned by ``vectors``."""
    return _canonical_rows(ring, vectors)


def transpose(m: list[list], ncols: int | None = None) -> list[list]:
    if not m:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*m)]


def mat_mul(ring: BaseRingSpec, a: list[list[int]], b: list[list[int]], inner: int | None = None, ncols: int | None = None):
    """Product of integer matrices; reduced mod p over a prime field."""
    rows = len(a)
    k = inner if inner is not None else (len(a[0]) if a else len(b))
    cols = ncols if ncols is not None else (len(b[0]) if b else 0)
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        ai = a[i]
        oi = out[i]
        for t in range(k):
            x = ai[t]
            if not x:
                continue
            bt = b[t]
            for j in range(cols):
                if bt[j]:
                    oi[j] += x * bt[j]
    if ring.kind == "PrimeField":
        out = [[v % ring.p for v in row] for row in out]
    return out


def solve_in_span(ring: BaseRingSpec, basis: list[list[int]], target: list[int]):
    """Coefficients c with sum c_i basis_i = target over the ring, or None.

    Coefficients come back as ints (Z, F_p) or Fractions (Z_(p)).
    """
    n = len(target)
    k = len(basis)
    if k == 0:
        return [] if not any(target) else None
    # augmented system: columns are basis vectors plus target
    cols = [list(b) for b in basis]
    a = [[cols[j][i] for j in range(k)] + [-target[i]] for i in range(n)]
    if ring.kind == "PrimeField":
        a = [[v % ring.p for v in row] for row in a]
    ker = _kernel_int(a, ring, k + 1)[1]
    for vec in ker:
        last = vec[k]
        if last and ring.is_unit(last):
            if ring.kind == "PrimeField":
                inv = pow(last, -1, ring.p)
                return [v * inv % ring.p for v in vec[:k]]
            if ring.kind == "Integers":
                return [v * last for v in vec[:k]]
            return [Fraction(v, last) for v in vec[:k]]
    # the kernel basis is canonical; combine to look for a unit last entry
    if ring.kind != "PrimeField":
        g = 0
        for vec in ker:
            g = gcd(g, vec[k])
        if g and ring.is_unit(g):
            combo = _combine_to_gcd(ring, ker, k)
            if combo is not None:
                return combo
    return None


def _combine_to_gcd(ring, ker, k):
    acc = None
    for vec in ker:
        if not vec[k]:
            continue
        if acc is None:
            acc = vec[:]
            continue
        g, x, y = _xgcd(acc[k], vec[k])
        acc = [x * u + y * v for u, v in zip(acc, vec)]
    if acc is None or not ring.is_unit(acc[k]):
        return None
    last = acc[k]
    if ring.kind == "Integers":
        return [v * last for v in acc[:k]]
    return [Fraction(v, last) for v in acc[:k]]


def subquotient_shape(ring: BaseRingSpec, sub: list[list[int]], rel: list[list[int]], dim: int) -> FgAbelianShape:
    """Shape of span(sub)/span(rel), assuming span(rel) lies inside span(sub)."""
    basis = _canonical_rows(ring, sub)
    if not basis:
        return FgAbelianShape()
    coords = []
    for r in rel:
        if not any(r):
            continue
        c = solve_in_span(ring, basis, r)
        if c is None:
            raise ValueError("relation outside the submodule")
        coords.append(c)
    if not coords:
        return FgAbelianShape(len(basis))
    m = [[c[i] for c in coords] for i in range(len(basis))]
    return cokernel_shape(m, ring)


def homology_shape(ring: BaseRingSpec, d_in, d_out, dim: int) -> FgAbelianShape:
    """Shape of ker(d_out)/im(d_in) at a module of rank ``dim``.

    ``d_in`` has ``dim`` rows; ``d_out`` has ``dim`` columns.  Over a PID the
    kernel is a direct summand, so torsion equals the nonunit divisors of d_in.
    """
    if dim == 0:
        return FgAbelianShape()
    if d_out and d_out[0]:
        nullity = dim - rank(d_out, ring)
    else:
        nullity = dim
    if d_in and d_in[0]:
        divs = elementary_divisors(d_in, ring)
    else:
        divs = []
    return FgAbelianShape.from_divisors(nullity - len(divs), divs)


# -- sparse layer ----------------------------------------------------------------
#
# Degreewise matrices in the graded engines are large but very sparse (a
# multiplication map sends a monomial to a handful of monomials).  Vectors are
# dicts {index: raw value}; all operations are unimodular, so kernels stay
# saturated over Z and Z_(p).


def raw_fix(ring: BaseRingSpec, v):
    if ring.kind == "PrimeField":
        return v % ring.p
    if isinstance(v, Fraction) and v.denominator == 1:
        return v.numerator
    return v


def raw_val(ring: BaseRingSpec, v) -> int:
    """Size used for pivoting: valuation over Z_(p), |v| over Z, 0 over F_p."""
    if ring.kind == "PrimeField":
        return 0
    if ring.kind == "Integers":
        return abs(v)
    return valuation(Fraction(v).numerator, ring.p)


def raw_quot(ring: BaseRingSpec, a, b):
    """a / b inside the ring; the caller guarantees divisibility."""
    if ring.kind == "PrimeField":
        return a * pow(b, -1, ring.p) % ring.p
    if ring.kind == "Integers":
        q, r = divmod(a, b)
        if r:
            raise ArithmeticError(f"{b} does not divide {a}")
        return q
    return raw_fix(ring, Fraction(a) / Fraction(b))


def raw_divides(ring: BaseRingSpec, b, a) -> bool:
    if ring.kind == "PrimeField":
        return b % ring.p != 0
    if ring.kind == "Integers":
        return a % b == 0
    return valuation(Fraction(b).numerator, ring.p) <= valuation(Fraction(a).numerator, ring.p)


def vec_axpy(ring: BaseRingSpec, v: dict, c, w: dict) -> None:
    """v += c * w in place, dropping zeros."""
    if not c:
        return
    for k, x in w.items():
        y = raw_fix(ring, v.get(k, 0) + c * x)
        if y:
            v[k] = y
        else:
            v.pop(k, None)


def vec_scale(ring: BaseRingSpec, c, w: dict) -> dict:
    out = {}
    for k, x in w.items():
        y = raw_fix(ring, c * x)
        if y:
            out[k] = y
    return out


def vec_mod_p(ring: BaseRingSpec, v: dict) -> dict:
    """Reduction to the residue field; vectors must have p-integral entries."""
    p = ring.p
    out = {}
    for k, x in v.items():
        if isinstance(x, Fraction):
            y = x.numerator * pow(x.denominator, -1, p) % p
        else:
            y = x % p
        if y:
            out[k] = y
    return out


class ColumnEchelon:
    """Incremental column echelon form with tracked column operations.

    Columns are added one at a time with a tag.  Each stored pivot column has
    a distinct leading (smallest) row index.  A column that reduces to zero
    records the combination of tags that produced it: these combinations form
    a basis of the kernel of the matrix whose columns were added.
    """

    def __init__(self, ring: BaseRingSpec, track: bool = True):
        self.ring = ring
        self.track = track
        self.pivots: dict[int, tuple[dict, dict]] = {}
        self.kernel: list[dict] = []

    def __len__(self):
        return len(self.pivots)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def add(self, vec: dict, tag=None) -> bool:
        """Insert a column; returns True when it enlarged the span."""
        ring = self.ring
        v = {k: raw_fix(ring, x) for k, x in vec.items() if raw_fix(ring, x)}
        comb = {tag: 1} if self.track else {}
        grew = False
        while v:
            rho = min(v)
            hit = self.pivots.get(rho)
            if hit is None:
                self.pivots[rho] = (v, comb)
                return True
            w, wc = hit
            a, b = w[rho], v[rho]
            if raw_divides(ring, a, b):
                q = raw_quot(ring, b, a)
                vec_axpy(ring, v, -q, w)
                if self.track:
                    vec_axpy(ring, comb, -q, wc)
            elif raw_divides(ring, b, a):
                # the newcomer becomes the pivot and the old pivot is reduced
                self.pivots[rho] = (v, comb)
                q = raw_quot(ring, a, b)
                w = dict(w)
                wc = dict(wc)
                vec_axpy(ring, w, -q, v)
                if self.track:
                    vec_axpy(ring, wc, -q, comb)
                v, comb = w, wc
                grew = True
            else:
                # over Z: replace the pair by its gcd combination
                g, x, y = _xgcd(a, b)
                nw = vec_scale(ring, x, w)
                vec_axpy(ring, nw, y, v)
                nv = vec_scale(ring, -(b // g), w)
                vec_axpy(ring, nv, a // g, v)
                if self.track:
                    nwc = vec_scale(ring, x, wc)
                    vec_axpy(ring, nwc, y, comb)
                    nvc = vec_scale(ring, -(b // g), wc)
                    vec_axpy(ring, nvc, a // g, comb)
                else:
                    nwc = nvc = {}
                self.pivots[rho] = (nw, nwc)
                v, comb = nv, nvc
                grew = True
        if self.track and comb:
            self.kernel.append(comb)
        return grew

    def contains(self, vec: dict) -> bool:
        return self.solve(vec) is not None

    def solve(self, vec: dict):
        """Coefficients (keyed by tag) expressing vec in the span, or None."""
        ring = self.ring
        v = {k: raw_fix(ring, x) for k, x in vec.items() if raw_fix(ring, x)}
        coeffs: dict = {}
        while v:
            rho = min(v)
            hit = self.pivots.get(rho)
            if hit is None:
                return None
            w, wc = hit
            if not raw_divides(ring, w[rho], v[rho]):
                return None
            q = raw_quot(ring, v[rho], w[rho])
            vec_axpy(ring, v, -q, w)
            vec_axpy(ring, coeffs, q, wc)
        return coeffs

    def basis(self) -> list[dict]:
        return [self.pivots[k][0] for k in sorted(self.pivots)]


def sparse_kernel(ring: BaseRingSpec, cols: list[dict]) -> list[dict]:
    """Saturated kernel basis of the matrix with the given sparse columns."""
    ech = ColumnEchelon(ring)
    for j, c in enumerate(cols):
        ech.add(c, j)
    return ech.kernel


def sparse_rank(ring: BaseRingSpec, cols: list[dict]) -> int:
    ech = ColumnEchelon(ring, track=False)
    for c in cols:
        ech.add(c)
    return ech.rank


def sparse_divisors(ring: BaseRingSpec, cols: list[dict]) -> list[int]:
    """Normalized elementary divisors of a sparse matrix (nonzero ones only).

    Over Z_(p) and F_p a minimal-valuation pivot divides its whole row and
    column, so plain elimination yields the Smith form.  Over Z the matrix is
    densified and handed to the general routine.
    """
    cols = [c for c in cols if c]
    if not cols:
        return []
    if ring.kind == "Integers":
        nrows = max(max(c) for c in cols) + 1
        dense = [[c.get(i, 0) for c in cols] for i in range(nrows)]
        return [d for d in elementary_divisors(dense, ring)]
    rows: dict[int, dict] = {}
    colidx: dict[int, set] = {}
    for j, c in enumerate(cols):
        for i, x in c.items():
            x = raw_fix(ring, x)
            if x:
                rows.setdefault(i, {})[j] = x
                colidx.setdefault(j, set()).add(i)
    out = []
    while rows:
        best = None
        for i, r in rows.items():
            for j, x in r.items():
                s = raw_val(ring, x)
                if best is None or s < best[0] or (s == best[0] and len(colidx[j]) < len(colidx[best[2]])):
                    best = (s, i, j)
            if best is not None and best[0] == 0 and len(colidx[best[2]]) == 1:
                break
        if best is None:
            break
        s, i, j = best
        prow = rows.pop(i)
        piv = prow[j]
        for k in prow:
            colidx[k].discard(i)
        for r_i in list(colidx[j]):
            r = rows[r_i]
            q = raw_quot(ring, r[j], piv)
            for k, x in prow.items():
                y = raw_fix(ring, r.get(k, 0) - q * x)
                if y:
                    if k not in r:
                        colidx[k].add(r_i)
                    r[k] = y
                elif k in r:
                    del r[k]
                    colidx[k].discard(r_i)
            if not r:
                del rows[r_i]
        del colidx[j]
        for k in prow:
            if k != j and not colidx.get(k):
                colidx.pop(k, None)
        out.append(ring.normalize(piv))
    return sorted(out, key=lambda d: (raw_val(ring, d) if d else 0, d))


@dataclass
class Homology:
    shape: FgAbelianShape
    reps: list[dict] | None
    standard: list[int | None] | None


def sparse_homology(ring: BaseRingSpec, d_in: list[dict], d_out: list[dict], dim: int) -> Homology:
    """ker(d_out) / im(d_in) at a free module of rank ``dim``.

    ``d_out[i]`` is the image of basis vector i; ``d_in`` lists images of the
    previous basis inside this module.  Representatives prefer standard basis
    vectors so that monomial names survive; ``standard`` records which basis
    index each representative is (None for a combination).
    """
    if dim == 0:
        return Homology(FgAbelianShape(), [], [])
    ker = ColumnEchelon(ring)
    zero_cols = []
    for i in range(dim):
        c = d_out[i] if i < len(d_out) else {}
        if not any(c.values()):
            zero_cols.append(i)
        ker.add(c, i)
    kernel = ker.kernel
    nullity = len(kernel)
    image = [c for c in d_in if c]
    divs = [d for d in sparse_divisors(ring, image) if d != 1] if image else []
    r_in = sparse_rank(ring, image) if image else 0
    shape = FgAbelianShape.from_divisors(nullity - r_in, divs)
    need = shape.generator_count
    if need == 0:
        return Homology(shape, [], [])
    if ring.kind == "Integers":
        if image:
            return Homology(shape, None, None)
        if len(zero_cols) == nullity:
            return Homology(shape, [{i: 1} for i in zero_cols], list(zero_cols))
        return Homology(shape, [dict(k) for k in kernel], [None] * nullity)
    field = BaseRingSpec.field(ring.p)
    ech = ColumnEchelon(field, track=False)
    for c in image:
        ech.add(vec_mod_p(ring, c))
    reps, std = [], []
    for i in zero_cols:
        if len(reps) == need:
            break
        if ech.add({i: 1}):
            reps.append({i: 1})
            std.append(i)
    for k in kernel:
        if len(reps) == need:
            break
        if ech.add(vec_mod_p(ring, k)):
            reps.append(dict(k))
            std.append(None)
    return Homology(shape, reps, std)
