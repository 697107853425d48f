"""Norm images on pi_0 for GL_2(Z/n)-Tate constructions.

All arithmetic is integer arithmetic.  Ideals of Z[1/n] are represented by
positive integers coprime to n (their content).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import gcd


def factorint(n: int) -> dict[int, int]:
    """Prime factorization by trial division; inputs here are small."""
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _primes(n: int) -> list[int]:
    return sorted(factorint(n))


def mobius(n: int) -> int:
    if n < 1:
        raise ValueError("mobius needs n >= 1")
    f = factorint(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def euler_phi(n: int) -> int:
    if n < 1:
        raise ValueError("euler_phi needs n >= 1")
    out = n
    for p in _primes(n):
        out = out // p * (p - 1)
    return out


def ramanujan_sum(n: int, i: int) -> int:
    """Sum of zeta_n^(i r) over units r mod n, via the closed form."""
    if n < 1:
        raise ValueError("ramanujan_sum needs n >= 1")
    g = gcd(i, n)
    q = n // g
    return mobius(q) * euler_phi(n) // euler_phi(q)


def group_orders(n: int) -> tuple[int, int]:
    """(|GL_2(Z/n)|, |SL_2(Z/n)|)."""
    if n < 2:
        raise ValueError("group orders need n >= 2")
    gl = euler_phi(n) * n**3
    for p in _primes(n):
        # multiply by (1 - 1/p^2) exactly
        gl = gl // (p * p) * (p * p - 1)
    return gl, gl // euler_phi(n)


def brute_group_orders(n: int) -> tuple[int, int]:
    """Count invertible and determinant-one 2x2 matrices over Z/n directly."""
    gl = sl = 0
    for a, b, c, d in product(range(n), repeat=4):
        det = (a * d - b * c) % n
        if gcd(det, n) == 1:
            gl += 1
            if det == 1 % n:
                sl += 1
    return gl, sl


def strip_primes(x: int, n: int) -> int:
    """The part of |x| coprime to n, i.e. the content of x in Z[1/n]."""
    x = abs(x)
    if x == 0:
        return 0
    for p in _primes(n):
        while x % p == 0:
            x //= p
    return x


@dataclass
class NormReport:
    n: int
    gl2_order: int
    sl2_order: int
    image_generators: list = field(default_factory=list)
    image_gcd_content: int = 1
    verdict: str = ""

    def format(self) -> str:
        return (f"n={self.n} |GL2|={self.gl2_order} |SL2|={self.sl2_order} "
                f"content={self.image_gcd_content} {self.verdict}")


def norm_image(n: int) -> NormReport:
    """Generators and content of the norm image on pi_0 inside Z[1/n].

    Trivial content only says the pi_0 cokernel vanishes; it does not show
    the whole Tate construction is contractible.
    """
    gl, sl = group_orders(n)
    gens = [sl * ramanujan_sum(n, i) for i in range(n)] + [gl]
    g = 0
    for x in gens:
        g = gcd(g, x)
    content = strip_primes(g, n)
    verdict = "TrivialPi0Cokernel" if content == 1 else "NontrivialTate"
    return NormReport(n, gl, sl, gens, content, verdict)


def verdict_table(n_range) -> list[NormReport]:
    return [norm_image(n) for n in n_range]


def format_verdict_table(reports) -> str:
    lines = [f"{'n':>3}  {'|GL2|':>12}  {'|SL2|':>10}  {'content':>8}  verdict"]
    for r in reports:
        lines.append(f"{r.n:>3}  {r.gl2_order:>12}  {r.sl2_order:>10}  {r.image_gcd_content:>8}  {r.verdict}")
    return "\n".join(lines)
