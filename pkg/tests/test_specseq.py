import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramify.base_arith import BaseRingSpec, FgAbelianShape
from ramify.graded_core import PresentedGradedAlgebra, generator
from ramify.homalg import AmbiguousExtension, BigradedTable, TableEntry
from ramify.scenarios_cli import load_scenario
from ramify.scenarios_cli.runner import DATA_DIR, _differentials, build_algebra
from ramify.specseq import (
    BidegreeMismatch,
    DifferentialSpec,
    DSquaredNonzero,
    Verdict,
    assemble_abutment,
    detect_collapse,
    page_from_ambient,
    run_spectral_sequence,
)

F2 = BaseRingSpec.field(2)
F3 = BaseRingSpec.field(3)
Z3 = BaseRingSpec.local(3)


def toy(window=8):
    """F2[u, v^+-] with u in (0, 2), v in (-1, 0) and d3(u) = u^2 v^3."""
    amb = PresentedGradedAlgebra(F2, [generator("u", 2), generator("v", 0, filtration=-1, invertible=True)],
                                 exponent_window={"v": (-window, window)})
    page = page_from_ambient(amb, ((-window, window), (0, 12)))
    spec = DifferentialSpec(3, amb, [("u", "u", set()), ("v", "v", {"invertible"})], {"u": "u^2*v^3"})
    return amb, page, spec


def test_toy_leibniz_values():
    amb, _, spec = toy()
    # d(u^k v^j) = k u^(k+1) v^(j+3) over F2
    for k in range(0, 5):
        for j in range(-3, 3):
            got = spec.apply(amb.parse_monomial(f"u^{k}*v^{j}"))
            want = {(k + 1, j + 3): 1} if k % 2 else {}
            assert got == want


def test_toy_page_four_by_hand():
    _, page, spec = toy()
    page.r = 3
    e4 = page.turn(spec)
    for (n, m) in [(n, m) for n in range(-4, 5) for m in range(0, 9)]:
        if e4.partial(n, m):
            continue
        want = ["v^" + str(-n) if n not in (0, 1, -1) else {0: "1", -1: "v", 1: "v^-1"}[n]] if m == 0 else []
        assert e4.names(n, m) == want, (n, m)
    # interior cells are settled, window edges are not
    assert not any(e4.partial(n, 0) for n in range(-4, 5))
    assert any(e4.partial(*k) for k in e4.cells)


def test_toy_window_stability():
    _, small, spec = toy(8)
    _, big, spec_big = toy(14)
    small.r = big.r = 3
    a, b = small.turn(spec), big.turn(spec_big)
    for n in range(-8, 9):
        for m in range(0, 13):
            if a.partial(n, m):
                continue
            assert sorted(a.names(n, m)) == sorted(b.names(n, m)), (n, m)
            assert not b.partial(n, m)


def test_arrows_point_along_d3():
    _, page, spec = toy()
    page.r = 3
    run = run_spectral_sequence(page, {3: spec}, 4)
    arrows = run.arrows(3)
    assert arrows
    for (src, tgt, s_name, t_name) in arrows:
        assert tgt == (src[0] - 3, src[1] + 2)
        k = int(s_name.split("*")[0].lstrip("u^") or 1)
        assert k % 2 == 1
        assert t_name.startswith(f"u^{k + 1}")


def test_d_squared_nonzero_detected():
    amb = PresentedGradedAlgebra(F2, [generator("x", 2), generator("y", 4, filtration=-3), generator("z", 6, filtration=-6)])
    spec = DifferentialSpec(3, amb, [("x", "x", set()), ("y", "y", set()), ("z", "z", set())], {"x": "y", "y": "z"})
    page = page_from_ambient(amb, ((-12, 0), (0, 12)))
    page.r = 3
    with pytest.raises(DSquaredNonzero):
        page.turn(spec)


def test_bidegree_mismatch_detected():
    amb, _, _ = toy()
    with pytest.raises(BidegreeMismatch):
        DifferentialSpec(3, amb, [("u", "u", set())], {"u": "u^2*v^2"})


def test_page_index_must_match():
    _, page, spec = toy()
    with pytest.raises(BidegreeMismatch):
        page.turn(spec)  # page is E2, spec is d3


# -- property suite: d o d = 0 on every bundled differential


def _bundled_specs():
    out = []
    for path in sorted(DATA_DIR.glob("*.scn")):
        s = load_scenario(path)
        page = s.block("page")
        if page is None:
            continue
        field = BaseRingSpec.parse(page.first("field").args[0])
        amb = build_algebra(page.first("ambient"), field)
        for r, spec in _differentials(s, amb).items():
            out.append(pytest.param(amb, spec, id=f"{s.name}-d{r}"))
    return out


@pytest.mark.parametrize("amb,spec", _bundled_specs())
def test_bundled_differentials_square_to_zero(amb, spec):
    rng = random.Random(7)
    p = spec.ring.p
    for _ in range(300):
        # random products of page generators, so every sample decomposes
        mono = [0] * amb.n
        for g in spec.generators:
            e = rng.randint(-4, 4) if g.invertible else rng.randint(0, 1 if g.square_zero else 4)
            mono = [a + e * b for a, b in zip(mono, g.monomial)]
        mono = tuple(mono)
        twice = {}
        for t, c in spec.apply(mono).items():
            if not amb.nf_monomial(t):
                continue
            for t2, c2 in spec.apply(t).items():
                if amb.nf_monomial(t2):
                    twice[t2] = (twice.get(t2, 0) + c * c2) % p
        assert not any(twice.values()), amb.format_monomial(mono)


# -- permuting the ambient generators changes nothing


def sigma3(order):
    gens = {"alpha": generator("alpha", 4, filtration=-1, square_zero=True),
            "beta": generator("beta", 12, filtration=-2, invertible=True),
            "Delta": generator("Delta", 24, invertible=True)}
    amb = PresentedGradedAlgebra(F3, [gens[g] for g in order], exponent_window={"beta": (-12, 12), "Delta": (-6, 6)})
    pos = {g: amb.names.index(g) for g in order}

    def supp(e):
        a, b, k = e[pos["alpha"]], e[pos["beta"]], e[pos["Delta"]]
        return b + 2 * k >= 0 if a == 0 else 1 + 3 * b + 6 * k >= 0

    page = page_from_ambient(amb, ((-30, 30), (-300, 300)), support=supp)
    page.r = 5
    d5 = DifferentialSpec(5, amb, [("alpha", "alpha", {"square_zero"}), ("beta", "beta", {"invertible"}),
                                   ("Delta", "Delta", {"invertible"})], {"Delta": "alpha*beta^2"})
    d9 = DifferentialSpec(9, amb, [("y", "alpha*Delta^2", {"square_zero"}), ("beta", "beta", {"invertible"}),
                                   ("D", "Delta^3", {"invertible"})], {"y": "beta^5"})
    return run_spectral_sequence(page, {5: d5, 9: d9}, 10)


def _settled(run, r):
    # factor sets make names independent of the generator order
    p = run.pages[r]
    return {k: sorted(tuple(sorted(x.split("*"))) for x in p.names(*k)) for k in p.nonzero() if not p.partial(*k)}


def test_generator_order_is_irrelevant():
    a = sigma3(["alpha", "beta", "Delta"])
    b = sigma3(["Delta", "alpha", "beta"])
    for r in (6, 10):
        sa, sb = _settled(a, r), _settled(b, r)
        common = set(sa) & set(sb)
        assert common
        for k in common:
            assert sa[k] == sb[k], k
    assert set(_settled(a, 10)) == set(_settled(b, 10))


# -- collapse and abutment


def table_with(entries, ring=F2, region=((-4, 4), (0, 8)), **kw):
    t = BigradedTable(ring, region, **kw)
    for key, (shape, names, partial) in entries.items():
        t.set(*key, TableEntry(FgAbelianShape.parse(shape), names, partial))
    return t


def test_row_zero_only():
    t = table_with({(0, 0): ("free", ["1"], False), (-2, 0): ("free", ["z2"], False), (1, 3): ("0", [], True)})
    v = detect_collapse(t, 8, "m")
    assert v.format() == "RowZeroOnly"
    ab = assemble_abutment(t, v, range(-4, 5))
    assert ab[-2].names == ["z2"] and ab[-2].complete
    assert ab[1].contributions == []


def test_odd_positive_filtration_needs_the_hint():
    t = table_with({(0, 0): ("free", ["F0:1"], False), (1, 4): ("free", ["F1:1"], False)}, Z3,
                   region=((0, 3), (0, 8)))
    assert detect_collapse(t, 2, "n").kind == "Unknown"
    assert detect_collapse(t, 2, "n", edge_protected=True).format() == "OddPositiveFiltration"


def test_parity_collapse_needs_determined_table():
    entries = {(0, 0): ("tors(9)", [], False), (-2, 2): ("tors(9)", [], False)}
    assert detect_collapse(table_with(entries, Z3), 2).kind == "Unknown"
    t = table_with(entries, Z3, periodic_n=2, m_support=(0, 2))
    assert detect_collapse(t, 2).format() == "CollapsedAt(2)"


def test_torsion_in_two_filtrations_is_ambiguous():
    t = table_with({(0, 4): ("tors(3)", ["a"], False), (1, 3): ("free", ["b"], False),
                    (2, 2): ("tors(3)", ["c"], False)}, Z3, region=((0, 2), (0, 8)))
    ab = assemble_abutment(t, Verdict("CollapsedAt", 2), [4], "n", lambda n: 0)
    assert isinstance(ab[4].result, AmbiguousExtension)


def test_partial_entries_make_degree_incomplete():
    t = table_with({(0, 0): ("free", ["1"], False), (-1, 0): ("free", ["v"], True)})
    ab = assemble_abutment(t, detect_collapse(t, 4), [-1, 0])
    assert not ab[-1].complete and ab[0].complete
    with pytest.raises(ValueError):
        assemble_abutment(t, detect_collapse(table_with({(1, 1): ("free", [], False)}), 2), [0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(-4, 4), st.integers(1, 3)), max_size=6))
def test_row_zero_abutment_sums_row_zero(cells):
    entries = {(n, 0): (f"free^{k}" if k > 1 else "free", [f"c{n}_{i}" for i in range(k)], False) for n, k in cells}
    t = table_with(entries)
    v = detect_collapse(t, 2)
    ab = assemble_abutment(t, v, range(-4, 5))
    for n in range(-4, 5):
        want = entries.get((n, 0))
        got = ab[n].shape
        assert got == (FgAbelianShape.parse(want[0]) if want else FgAbelianShape())
