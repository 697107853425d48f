"""Write the bundled scenario files, expected blocks included.

The expected blocks come from closed forms worked out by hand for each
example.  Nothing here imports the ramify engines, so a golden file is an
independent witness for the computation it describes.

    python3 scripts/make_goldens.py [OUTDIR]
"""

import cmath
import math
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "ramify" / "scenarios_cli" / "data"


def mono(pairs):
    """Name of a monomial from (generator, exponent) pairs in generator order."""
    parts = [g if e == 1 else f"{g}^{e}" for g, e in pairs if e]
    return "*".join(parts) or "1"


def shape(free=0, tors=None):
    parts = []
    if free == 1:
        parts.append("free")
    elif free > 1:
        parts.append(f"free^{free}")
    if tors:
        order, k = tors
        if k:
            parts.append(f"tors({order})" + (f"^{k}" if k > 1 else ""))
    return " + ".join(parts) or "0"


def q(text):
    return '"' + text + '"'


def entry_lines(entries, indent="  "):
    out = []
    for (n, m), names in sorted(entries.items()):
        out.append(f"{indent}entry {n} {m} {shape(len(names))} " + " ".join(q(x) for x in sorted(names)))
    return out


def abutment_lines(entries, degrees):
    out = []
    by = {}
    for (n, m), names in entries.items():
        by.setdefault(n + m, []).extend(names)
    for d in degrees:
        names = by.get(d, [])
        if names:
            out.append(f"  abutment {d} {shape(len(names))} " + " ".join(q(x) for x in sorted(names)))
    return out


# -- Tor over 2-periodic resolutions ------------------------------------------


def periodic_shifts(first, second, count):
    s, out = 0, []
    for n in range(count):
        out.append(s)
        s += first if n % 2 == 0 else second
    return out


def tmf0_2_quotient(rows, lo, hi):
    """Tor of Z[a2,a4] against itself over Z[a2,a4,r]/(cubic in r).

    Row 0 is Z[a2,a4]; odd rows are Z[a2] shifted by the resolution; even
    positive rows vanish.
    """
    s = periodic_shifts(4, 8, rows + 1)
    out = {}
    for m in range(max(lo, 0), hi + 1):
        names = [f"F0:{mono([('a2', i), ('a4', j)])}" for j in range(m // 8 + 1) for i in range(m // 4 + 1)
                 if 4 * i + 8 * j == m]
        if names:
            out[(0, m)] = names
    for n in range(1, rows + 1, 2):
        for m in range(max(lo, s[n]), hi + 1):
            if (m - s[n]) % 4 == 0:
                out[(n, m)] = [f"F{n}:{mono([('a2', (m - s[n]) // 4)])}"]
    return out


def tmf0_2_family(rows, lo, hi):
    """The inverse family 1/(a2^i a4^j), i, j >= 1, sitting in degree -1-4i-8j.

    r kills it and a4 is onto it, so it contributes all of row 0 and the a4
    socle 1/(a2^i a4) to every even row.
    """
    s = periodic_shifts(4, 8, rows + 1)
    out = {}
    for i in range(1, 200):
        for j in range(1, 200):
            m = -1 - 4 * i - 8 * j
            if lo <= m <= hi:
                out.setdefault((0, m), []).append(f"F0:1/({mono([('a2', i), ('a4', j)])})")
    for n in range(2, rows + 1, 2):
        for i in range(1, 200):
            m = s[n] - 1 - 4 * i - 8
            if lo <= m <= hi:
                out.setdefault((n, m), []).append(f"F{n}:1/({mono([('a2', i), ('a4', 1)])})")
    return out


def tmf2_entries(rows, lo, hi):
    out = {}
    for m in range(max(lo, 0), hi + 1, 4):
        k = m // 4
        out[(0, m)] = [f"F0:{mono([('lambda1', i), ('lambda2', k - i)])}" for i in range(k + 1)]
    for n in range(1, rows + 1, 2):
        for m in range(max(lo, 4 * n), hi + 1, 4):
            out[(n, m)] = [f"F{n}:{mono([('lambda1', (m - 4 * n) // 4)])}"]
    return out


THH_TMF0_2 = """\
scenario thh_tmf0_2
kind TorTHH
ring Z(3)
tags tor thh connective
algebra {
  gen a2 4
  gen a4 8
  gen r 4
  rule "r^3 -> -a2*r^2 - a4*r"
}
resolution {
  relation "r"
  maps "r" "r^2 + a2*r + a4"
}
coefficients {
  quotient "r"
}
window {
  internal 0 60
  filtration 9
}
hints {
  edge_protected
}
"""


def golden_thh_tmf0_2():
    ent = tmf0_2_quotient(9, 0, 60)
    lines = ["expected {", '  cite "Tor over the level two ring at p = 3, quotient by r, 2-periodic resolution"',
             "  region 0 9 0 60", "  verdict OddPositiveFiltration"]
    lines += entry_lines(ent)
    lines += abutment_lines(ent, range(0, 61))
    lines += ["  abutment_degrees 0 60", "}"]
    return THH_TMF0_2 + "\n".join(lines) + "\n"


THH_TMF0_2_PERIODIC = """\
scenario thh_Tmf0_2
kind TorTHH
ring Z(3)
tags tor thh nonconnective
algebra {
  gen a2 4
  gen a4 8
  gen r 4
  rule "r^3 -> -a2*r^2 - a4*r"
}
resolution {
  relation "r"
  maps "r" "r^2 + a2*r + a4"
  crosscheck_auto 168
}
coefficients {
  quotient "r"
  family a2 a4 shift -1 annihilate r
}
window {
  internal -60 60
  filtration 7
  module -108 60
}
hints {
  edge_protected
}
"""


def golden_thh_Tmf0_2():
    ent = tmf0_2_quotient(7, -60, 60)
    for k, v in tmf0_2_family(7, -60, 60).items():
        ent.setdefault(k, []).extend(v)
    lines = ["expected {", '  cite "Tor for the nonconnective level two ring: negative family gives even rows"',
             "  region 0 7 -60 60", "  verdict OddPositiveFiltration"]
    lines += entry_lines(ent)
    for i in range(1, 4):
        name = f"F{2 * i}:1/({mono([('a2', i), ('a4', 1)])})"
        lines.append(f"  contains {10 * i - 9} {q(name)}")
    lines.append("}")
    return THH_TMF0_2_PERIODIC + "\n".join(lines) + "\n"


THH_TMF2 = """\
scenario thh_tmf2
kind TorTHH
ring Z(3)
tags tor thh connective
algebra {
  gen lambda1 4
  gen lambda2 4
  gen a 4
  rule "a^2 -> -lambda1*a + lambda2*a"
}
resolution {
  relation "a"
  maps "a" "a + lambda1 - lambda2"
}
coefficients {
  quotient "a"
}
window {
  internal 0 60
  filtration 9
}
hints {
  edge_protected
}
"""


def golden_thh_tmf2():
    ent = tmf2_entries(9, 0, 60)
    lines = ["expected {", '  cite "Tor for full level two structure at p = 3, odd rows are Z(3)[lambda1]"',
             "  region 0 9 0 60", "  verdict OddPositiveFiltration"]
    lines += entry_lines(ent)
    by = {}
    for (n, m), names in ent.items():
        by.setdefault(n + m, []).extend(names)
    for d in (5, 15, 25, 35, 45):
        lines.append(f"  abutment {d} {shape(len(by[d]))} " + " ".join(q(x) for x in sorted(by[d])))
    lines.append("}")
    return THH_TMF2 + "\n".join(lines) + "\n"


# -- Tate spectral sequences ---------------------------------------------------


TATE_TMF1_3 = """\
scenario tate_tmf1_3
kind TateCyclic
ring Z(2)
tags tate sign-action connective
algebra {
  gen a1 2 weight 1
  gen a3 6 weight 1
}
action sign
window {
  internal 0 88
  columns -42 42
}
page {
  field F2
  ambient {
    gen a1 2 weight 1
    gen a3 6 weight 1
    gen zeta 0 weight 1 filtration -1 invertible
  }
  weight 0
  final 8
}
differential 3 {
  gen a1z "a1*zeta"
  gen a3z "a3*zeta"
  gen z2 "zeta^2" invertible
  gen a1sq "a1^2"
  gen q "a1*a3"
  gen s "a3^2"
  d a1sq "a1z^3"
  d s "a1*a3^2*zeta^3"
  d a3z "q*zeta^4"
  d z2 "a1*zeta^5"
}
differential 7 {
  gen x "zeta*a3^3" invertible
  gen Delta "a3^4" invertible
  d Delta "x^7*Delta^-4"
}
"""


def golden_tate_tmf1_3():
    ent = {(-8 * i, 0): [mono([("zeta", 8 * i)])] for i in range(-4, 5)}
    lines = ["expected {", '  cite "sign action on tmf1(3): only the powers zeta^8i survive, all on the zero line"',
             "  page 8", "  region -32 32 0 80", "  verdict RowZeroOnly"]
    lines += entry_lines(ent)
    lines += abutment_lines(ent, range(-32, 33))
    lines += ["  abutment_degrees -32 32", "}"]
    return TATE_TMF1_3 + "\n".join(lines) + "\n"


TATE_TMF1_3_PERIODIC = """\
scenario tate_TMF1_3
kind TateCyclic
ring F2
tags tate sign-action periodic slow
window {
  columns -13 13
  internal -302 302
}
page {
  field F2
  ambient {
    gen a1 2 weight 1
    gen a3 6 weight 1 invertible window -55 55
    gen zeta 0 weight 1 filtration -1 invertible window -13 13
  }
  weight 0
  start 3
  final 8
}
differential 3 {
  gen q "a1*a3"
  gen s "a3^2" invertible
  gen x "zeta*a3^3" invertible
  gen a1sq "a1^2"
  d a1sq "(x*q*a3^-4)^3"
  d s "x^3*q*a3^-8"
}
differential 7 {
  gen x "zeta*a3^3" invertible
  gen Delta "a3^4" invertible
  d Delta "x^7*Delta^-4"
}
"""


def golden_tate_TMF1_3():
    ent = {}
    for i in range(-10, 11):
        for m in range(-300, 301):
            if (m - 18 * i) % 24 == 0:
                ent[(-i, m)] = [mono([("a3", 3 * i + 4 * ((m - 18 * i) // 24)), ("zeta", i)])]
    lines = ["expected {", '  cite "periodic version after d3: one class a3^(3i+4l) zeta^i in each slot (-i, 18i+24l)"',
             "  page 4", "  region -10 10 -300 300"]
    lines += entry_lines(ent)
    lines += ["}", "expected {", '  cite "periodic version after d7: nothing survives away from the window edge"',
              "  page 8", "  region -3 3 -280 280", "}"]
    return TATE_TMF1_3_PERIODIC + "\n".join(lines) + "\n"


TATE_SIGMA3 = """\
scenario tate_tmf2_sigma3
kind TateSigma3
ring F3
tags tate sigma3 periodic
window {
  columns -70 70
  internal -800 800
}
page {
  field F3
  ambient {
    gen alpha 4 filtration -1 square_zero
    gen beta 12 filtration -2 invertible window -30 30
    gen Delta 24 invertible window -16 16
  }
  support "beta + 2*Delta >= 0 if alpha == 0 else 1 + 3*beta + 6*Delta >= 0"
  start 5
  final 10
}
differential 5 {
  gen alpha "alpha" square_zero
  gen beta "beta" invertible
  gen Delta "Delta" invertible
  d Delta "alpha*beta^2"
}
differential 9 {
  gen y "alpha*Delta^2" square_zero
  gen beta "beta" invertible
  gen D "Delta^3" invertible
  d y "beta^5"
}
"""


def golden_tate_sigma3():
    ent = {(12 * k, 0): [mono([("beta", -6 * k), ("Delta", 3 * k)])] for k in range(-3, 4)}
    lines = ["expected {", '  cite "Sigma3 Tate page at p = 3: after d5 and d9 only beta^-6k Delta^3k remain"',
             "  page 10", "  region -36 36 -100 100", "  verdict RowZeroOnly"]
    lines += entry_lines(ent)
    lines += abutment_lines(ent, range(-36, 37))
    lines += ["}"]
    return TATE_SIGMA3 + "\n".join(lines) + "\n"


EN_RANKS = {0: 1, 2: 2, 4: 3}

TATE_EN = """\
scenario tate_En
kind TateCyclic
ring Z(3)
tags tate trivial-action
module plain {
  rank 0 1
  rank 2 2
  rank 4 3
}
action trivial 9
window {
  internal -2 6
  columns -8 8
}
"""


def golden_tate_En():
    lines = ["expected {", '  cite "trivial C9 action on a truncated Morava E-theory model: Z/9 in every even column"',
             "  region -8 8 -2 6", "  verdict CollapsedAt(2)", "  tate_verdict NontrivialTate"]
    for n in range(-8, 9, 2):
        for m, r in sorted(EN_RANKS.items()):
            lines.append(f"  entry {n} {m} {shape(0, (9, r))}")
    lines.append("}")
    return TATE_EN + "\n".join(lines) + "\n"


# -- one-degree computations ---------------------------------------------------


def _cokernel_free_degrees(sources, targets, poly, window, pairs_unit):
    """Degrees where a target summand has no source in that degree to hit it."""
    out = {}
    for d in range(window[0], window[1] + 1):
        hit = 0
        tgts = [j for j, t in enumerate(targets) if d - t >= 0 and (d - t) % poly == 0]
        srcs = [i for i, s in enumerate(sources) if d - s >= 0 and (d - s) % poly == 0]
        for j in tgts:
            if any(pairs_unit(i, j) for i in srcs):
                hit += 1
        if len(tgts) - hit:
            out[d] = len(tgts) - hit
    return out


DISCRIMINANT = """\
scenario discriminant
kind DiscriminantTrace
ring Z(5)
tags discriminant one-degree
case l5_ku5 {
  ring Z(5)
  sources 0 2 4 6
  targets 0 -2 -4 -6
  poly_degree 8
  window -20 20
  rule "4 if (i + j) % 4 == 0 else 0"
}
case ku_ko {
  ring Z
  sources 0
  targets -2
  poly_degree 2
  window -20 20
  rule "1"
}
"""


def golden_discriminant():
    lines = []
    free = _cokernel_free_degrees([0, 2, 4, 6], [0, -2, -4, -6], 8, (-20, 20), lambda i, j: (i + j) % 4 == 0)
    lines += ["expected l5_ku5 {", '  cite "trace form of the C4 Galois extension at p = 5: cokernel in degrees -6, -4, -2"']
    lines += [f"  cokernel {d} {shape(r)}" for d, r in sorted(free.items())] + ["}"]
    free = _cokernel_free_degrees([0], [-2], 2, (-20, 20), lambda i, j: True)
    lines += ["expected ku_ko {", '  cite "complexification trace: cokernel is a single free class in degree -2"']
    lines += [f"  cokernel {d} {shape(r)}" for d, r in sorted(free.items())] + ["}"]
    return DISCRIMINANT + "\n".join(lines) + "\n"


TAQ = """\
scenario taq_bottom
kind ConeLES
ring Z
tags cone taq one-degree
case l_ku {
  ring Z(5)
  window 2 2
  degree 1 0 0
  degree 2 0 free
}
case tmf03_tmf13 {
  ring Z(2)
  window 2 2
  degree 1 tors(2) 0
  degree 2 tors(2) free "0"
  hint 2 free
}
case tmf_tmf02 {
  ring Z(3)
  window 4 4
  degree 3 tors(3) 0
  degree 4 0 free
  hint 4 torsion_free_total
}
case tmf_tmf02_nohint {
  ring Z(3)
  window 4 4
  degree 3 tors(3) 0
  degree 4 0 free
}
"""


def golden_taq():
    return TAQ + "\n".join([
        "expected l_ku {", '  cite "bottom cell of the cone of l -> ku at p = 5"', "  cone 2 free", "}",
        "expected tmf03_tmf13 {", '  cite "bottom cell for tmf0(3) -> tmf1(3) at p = 2, comparison settles the extension"',
        "  cone 2 free", "}",
        "expected tmf_tmf02 {", '  cite "bottom cell for tmf -> tmf0(2) at p = 3, the total group is torsion free"',
        "  cone 4 free", "}",
        "expected tmf_tmf02_nohint {", '  cite "same data without the hint: the extension stays open"',
        '  cone 4 ambiguous free "free + tors(3)"', "}",
    ]) + "\n"


NORMS = """\
scenario norm_verdicts
kind NormVerdict
ring Z
tags number-theory
range {
  n 2 30
}
"""


def _prime_factors(n):
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _exp_sum(n, i):
    """Sum of exp(2 pi i r i / n) over units r, summed numerically."""
    z = sum(cmath.exp(2j * cmath.pi * r * i / n) for r in range(1, n + 1) if math.gcd(r, n) == 1)
    return round(z.real)


def golden_norms():
    lines = ["expected {", '  cite "norm image on pi_0 for GL2(Z/n): trivial cokernel exactly when 6 divides n"',
             "  brute_force_through 8"]
    for n in range(2, 31):
        ps = _prime_factors(n)
        phi = n
        for p in ps:
            phi = phi // p * (p - 1)
        gl = n ** 4
        for p in ps:
            gl = gl * (p - 1) * (p * p - 1) // (p ** 3)
        sl = gl // phi
        g = gl
        for i in range(n):
            g = math.gcd(g, sl * _exp_sum(n, i))
        for p in ps:
            while g % p == 0:
                g //= p
        lines.append(f"  orders {n} {gl} {sl}")
        lines.append(f"  verdict {n} {'TrivialPi0Cokernel' if g == 1 else 'NontrivialTate'}")
    lines.append("}")
    return NORMS + "\n".join(lines) + "\n"


GOLDENS = {
    "thh_tmf0_2": golden_thh_tmf0_2,
    "thh_Tmf0_2": golden_thh_Tmf0_2,
    "thh_tmf2": golden_thh_tmf2,
    "tate_tmf1_3": golden_tate_tmf1_3,
    "tate_TMF1_3": golden_tate_TMF1_3,
    "tate_tmf2_sigma3": golden_tate_sigma3,
    "tate_En": golden_tate_En,
    "discriminant": golden_discriminant,
    "taq_bottom": golden_taq,
    "norm_verdicts": golden_norms,
}


def render_all() -> dict:
    return {name: fn() for name, fn in GOLDENS.items()}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    out = Path(argv[0]) if argv else OUT
    out.mkdir(parents=True, exist_ok=True)
    for name, text in render_all().items():
        (out / f"{name}.scn").write_text(text, encoding="utf-8")
        print(f"wrote {out / (name + '.scn')}")


if __name__ == "__main__":
    main()
