import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramify.base_arith import BaseRingSpec, FgAbelianShape
from ramify.graded_core import CyclicQuotient, FreeOnBasis, PlainGradedModule, PresentedGradedAlgebra, generator
from ramify.homalg import (
    AmbiguousExtension,
    CyclicAction,
    InsufficientWindow,
    MapDatum,
    NotNormalizing,
    cone_les_solve,
    discriminant_cokernel,
    periodic_resolution,
    resolve_cyclic_auto,
    tate_cyclic,
    tate_sigma3_via_sylow,
    tor_table,
    trace_gram,
    verify_resolution,
)

Z = BaseRingSpec.integers()
Z2 = BaseRingSpec.local(2)
Z3 = BaseRingSpec.local(3)
F3 = BaseRingSpec.field(3)


def tmf0_2():
    return PresentedGradedAlgebra(Z3, [generator("a2", 4), generator("a4", 8), generator("r", 4)],
                                  ["r^3 -> -a2*r^2 - a4*r"])


def tmf2():
    return PresentedGradedAlgebra(Z3, [generator("lambda1", 4), generator("lambda2", 4), generator("a", 4)],
                                  ["a^2 -> -lambda1*a + lambda2*a"])


def hand_resolution(alg, stages=8):
    gen = alg.names[-1]
    other = "r^2 + a2*r + a4" if gen == "r" else "a + lambda1 - lambda2"
    return periodic_resolution(alg, [gen, other], stages, [gen])


def test_hand_resolutions_are_exact():
    for alg in (tmf0_2(), tmf2()):
        rep = verify_resolution(hand_resolution(alg), (0, 40))
        assert rep.exact and rep.d_squared_zero, rep.format()


def test_broken_resolution_is_caught():
    alg = tmf0_2()
    res = periodic_resolution(alg, ["r", "r^2 + a4"], 6, ["r"])
    rep = verify_resolution(res, (0, 30))
    assert not (rep.exact and rep.d_squared_zero)
    assert rep.witness_degree is not None


@pytest.mark.parametrize("make", [tmf0_2, tmf2])
def test_auto_resolution_gives_same_tor(make):
    # property suite: automatic and hand resolutions must agree on Tor
    alg = make()
    rel = [alg.names[-1]]
    module = CyclicQuotient(alg, rel, (0, 48))
    a = tor_table(hand_resolution(alg, 8), module, (0, 40), 6)
    b = tor_table(resolve_cyclic_auto(alg, rel, (0, 60), max_stages=8), module, (0, 40), 6)
    for key in set(a.entries) | set(b.entries):
        assert a[key].shape == b[key].shape, key
        assert sorted(a[key].names) == sorted(b[key].names), key


def test_tor_window_stability():
    alg = tmf0_2()
    res = hand_resolution(alg, 9)
    small = tor_table(res, CyclicQuotient(alg, ["r"], (0, 40)), (0, 40), 7)
    big = tor_table(res, CyclicQuotient(alg, ["r"], (0, 64)), (0, 64), 7)
    for n in range(0, 8):
        for m in range(0, 41):
            assert small[(n, m)].shape == big[(n, m)].shape
            assert sorted(small[(n, m)].names) == sorted(big[(n, m)].names)


def test_tor_row_shifts():
    alg = tmf0_2()
    res = hand_resolution(alg, 6)
    assert [res.shifts(n)[0] for n in range(6)] == [0, 4, 12, 16, 24, 28]


# -- Tate cohomology


def sign_module():
    alg = PresentedGradedAlgebra(Z2, [generator("a1", 2, weight=1), generator("a3", 6, weight=1)])
    return FreeOnBasis(alg, window=(0, 30))


def test_sign_action_has_order_two():
    act = CyclicAction.sign(sign_module())
    assert act.check_order(range(0, 31)) == []


def test_tate_of_sign_action_small_degrees():
    # weight-even monomials give Z/2 in even cohomological degree, odd ones in odd degree
    t = tate_cyclic(CyclicAction.sign(sign_module()), (0, 8), (-3, 3))
    assert t[(0, 0)].shape == FgAbelianShape(0, (2,))
    assert t[(0, 2)].shape.is_zero and t[(-1, 2)].shape == FgAbelianShape(0, (2,))
    assert t[(0, 4)].names == ["a1^2"]
    assert t[(2, 4)].names == ["a1^2*zeta^-2"]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.lists(st.integers(0, 3), min_size=1, max_size=3), st.sampled_from([Z, Z2, Z3]))
def test_tate_periodic_and_annihilated_by_order(k, blocks, ring):
    # property suite: permutation modules (sums of regular and trivial blocks)
    ranks = {0: sum(k if b % 2 else 1 for b in blocks)}
    mod = PlainGradedModule(ring, ranks, (0, 0), zero_below=0)
    cols, i = [], 0
    for b in blocks:
        if b % 2:
            cols += [{i + (j + 1) % k: 1} for j in range(k)]
            i += k
        else:
            cols.append({i: 1})
            i += 1
    mat = [[1 if r in c else 0 for c in cols] for r in range(len(cols))]
    act = CyclicAction.from_matrices(mod, k, {0: mat})
    assert act.check_order([0]) == []
    t = tate_cyclic(act, (0, 0), (-6, 6))
    for n in range(-6, 5):
        assert t[(n, 0)].shape == t[(n + 2, 0)].shape
    for n in range(-6, 7):
        shape = t[(n, 0)].shape
        assert shape.free_rank == 0
        assert all(k % d == 0 for d in shape.torsion)


def test_sigma3_tate_of_trivial_module_has_period_four():
    # H^q(Sigma_3; F_3) is F_3 exactly for q = 0, 3 mod 4
    mod = PlainGradedModule(F3, {0: 1}, (0, 0), zero_below=0)
    c3 = CyclicAction.trivial(mod, 3)
    t = tate_sigma3_via_sylow(c3, lambda d: [{0: 1}], (0, 0), (-8, 8))
    for n in range(-8, 9):
        q = -n
        assert t[(n, 0)].shape.generator_count == (1 if q % 4 in (0, 3) else 0), q


def test_sigma3_weyl_element_must_normalize():
    mod = PlainGradedModule(F3, {0: 3}, (0, 0), zero_below=0)
    rot = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]
    c3 = CyclicAction.from_matrices(mod, 3, {0: rot})
    with pytest.raises(NotNormalizing):
        tate_sigma3_via_sylow(c3, lambda d: [{0: 1}, {1: 1}, {2: 1}], (0, 0), (-2, 2))
    # a transposition does normalize the 3-cycle
    swap = lambda d: [{0: 1}, {2: 1}, {1: 1}]  # noqa: E731
    tate_sigma3_via_sylow(c3, swap, (0, 0), (-2, 2))


# -- cones and trace forms


def test_cone_exact_and_ambiguous_cases():
    free, t3 = FgAbelianShape(1), FgAbelianShape(0, (3,))
    data = {3: MapDatum(t3, FgAbelianShape(), []), 4: MapDatum(FgAbelianShape(), free, [[]])}
    out = cone_les_solve(Z3, data, (4, 4))
    assert isinstance(out[4].result, AmbiguousExtension)
    assert out[4].result.format() == "ambiguous{free, free + tors(3)}"
    hinted = cone_les_solve(Z3, data, (4, 4), {4: "torsion_free_total"})
    assert hinted[4].result == free
    with pytest.raises(ValueError):
        cone_les_solve(Z3, data, (4, 4), {4: "tors(9)"})
    with pytest.raises(InsufficientWindow):
        cone_les_solve(Z3, data, (3, 4))


def test_cone_of_multiplication_by_p():
    # Z --3--> Z has cone Z/3 in degree 0
    data = {-1: MapDatum(FgAbelianShape(), FgAbelianShape(), []),
            0: MapDatum(FgAbelianShape(1), FgAbelianShape(1), [[3]])}
    assert cone_les_solve(Z, data, (0, 0))[0].result == FgAbelianShape(0, (3,))


def test_trace_gram_for_complexification():
    gram = trace_gram(Z, [0], lambda i, j, k: 1, (-6, 6), 2, [-2])
    coker = discriminant_cokernel(gram)
    assert coker[-2] == FgAbelianShape(1)
    assert all(coker[d].is_zero for d in range(-6, 7) if d != -2)
    gram2 = trace_gram(Z, [0], lambda i, j, k: 2, (-6, 6), 2, [-2])
    assert discriminant_cokernel(gram2)[0] == FgAbelianShape(0, (2,))
