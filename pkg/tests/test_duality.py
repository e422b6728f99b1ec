import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pwnorm.bases import disjoint_indicators, haar_basis, independent_digit_functions, rademacher_basis
from pwnorm.duality import (
    EPS_CLAMP,
    NormingFunction,
    brute_force_dual_max,
    build_family,
    dual_optimal_c,
    dual_value,
    maxc_argmax,
    maxc_g,
    optimal_g,
    reduce_g,
    sample_g,
    weights_from_g,
)
from pwnorm.norms import ell_p_norm, family_norm, family_norms, square_function_norm
from pwnorm.stepfn import DyadicSet, cond_expect, StepFunction, integral, lp_norm, pointwise

P_GRID = [2.5, 3.0, 4.0, 6.0]
ONE = StepFunction.constant(1.0)


def nf(values, q=2.0, level=None):
    values = np.asarray(values, dtype=float)
    level = int(np.log2(values.size)) if level is None else level
    return NormingFunction(StepFunction(level, values), q)


def halves(p=4.0):
    return disjoint_indicators([(1, 0), (1, 1)], p)


def test_norming_function_validation():
    with pytest.raises(ValueError):
        nf([-0.1, 1.0])
    with pytest.raises(ValueError):
        nf([2.0, 2.0])
    assert NormingFunction.from_json(nf([1.0, 1.0]).to_json()).g == StepFunction(1, [1, 1])


# --- weights_from_g --------------------------------------------------------

def test_weights_from_g_examples():
    w = weights_from_g(nf([1.0], level=0), rademacher_basis(5, 4.0))
    assert np.array_equal(w.w, np.ones(5))
    w = weights_from_g(nf([1.0], level=0), halves())
    assert np.allclose(w.w, 2**-0.25, rtol=1e-14)


def test_weights_from_g_clamps_zero_integrals():
    basis = disjoint_indicators([(2, 0), (2, 1)], 4.0)
    g = nf([0, 0, 2**0.5, 2**0.5])
    w = weights_from_g(g, basis)
    assert np.all(w.w == EPS_CLAMP)
    assert w.clamped == (0, 1)


def test_weights_from_g_rejects_unnormalized_basis():
    from pwnorm.norms import BasisSequence
    big = BasisSequence((StepFunction(0, [3.0]),), 4.0)
    with pytest.raises(ValueError, match="exceeds 1"):
        weights_from_g(nf([1.0], level=0), big)


# --- optimal_g -------------------------------------------------------------

def test_optimal_g_constant_square_function():
    for p in P_GRID:
        g = optimal_g([3.0, -4.0], rademacher_basis(2, p))
        assert np.allclose(g.g.values, 1.0, rtol=1e-14)


def test_optimal_g_example_one_indicators():
    basis = halves()
    g = optimal_g([1, 1], basis)
    assert np.allclose(g.g.values, 1.0, rtol=1e-14)
    fam = build_family([g], basis)
    assert family_norm([1, 1], fam, 4) == pytest.approx(2**0.25, rel=1e-14)
    assert family_norm([1, 1], fam, 4) == pytest.approx(square_function_norm([1, 1], basis), rel=1e-14)


def test_optimal_g_single_indicator():
    basis = halves()
    g = optimal_g([1, 0], basis)
    assert np.allclose(g.g.values, [2**0.5, 0], rtol=1e-14)
    assert lp_norm(g.g, 2) == pytest.approx(1, rel=1e-14)
    f = basis.square_sum([1, 0])
    assert integral(pointwise("mul", g.g, f)) == pytest.approx(1, rel=1e-14)


def test_optimal_g_degenerate():
    with pytest.raises(ValueError, match="degenerate coefficient vector"):
        optimal_g([0, 0], halves())


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(P_GRID), st.integers(0, 2), st.data())
def test_optimal_g_holder_equality(p, which, data):
    basis = [rademacher_basis(3, p), haar_basis(3, p), disjoint_indicators([(1, 0), (2, 2), (2, 3)], p)][which]
    a = data.draw(arrays(np.float64, len(basis), elements=st.floats(-10, 10)))
    if not np.any(a):
        return
    a = a / np.max(np.abs(a))
    g = optimal_g(a, basis)
    f = basis.square_sum(a)
    assert lp_norm(g.g, basis.q) == pytest.approx(1, abs=1e-10)
    assert integral(pointwise("mul", g.g, f)) == pytest.approx(lp_norm(f, p / 2), abs=1e-10)


# --- maxc_g ----------------------------------------------------------------

def test_maxc_g_rademacher_flat():
    basis = rademacher_basis(2, 4.0)
    g = maxc_g([1.0, 0.0], basis)
    assert np.allclose(g.g.values, 1.0)
    assert integral(pointwise("mul", g.g, pointwise("mul", basis.functions[0], basis.functions[0]))) >= 1 - 1e-10


def test_maxc_g_disjoint_indicators_exact():
    basis = halves()
    c = np.array([2**-0.5, 2**-0.5])
    g = maxc_g(c, basis)
    assert np.allclose(g.g.values, 1.0, rtol=1e-14)
    assert lp_norm(g.g, 2) == pytest.approx(1, rel=1e-14)
    assert np.allclose(weights_from_g(g, basis).w ** 2, c, rtol=1e-14)


def test_maxc_g_haar_pair():
    basis = haar_basis(1, 4.0)
    g = maxc_g([1.0, 0.0], basis)
    assert np.allclose(g.g.values, 1.0)
    assert weights_from_g(g, basis).w[0] ** 2 == pytest.approx(1, rel=1e-14)


def test_maxc_g_validation():
    basis = halves()
    with pytest.raises(ValueError):
        maxc_g([-0.5, 1.0], basis)
    with pytest.raises(ValueError):
        maxc_g([0.5, 0.5], basis)


def test_maxc_argmax_tie_break_smallest_index():
    basis = rademacher_basis(2, 4.0)
    assert np.all(maxc_argmax([2**-0.5, 2**-0.5], basis) == 0)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(P_GRID), st.integers(0, 2), st.data())
def test_maxc_g_certificates(p, which, data):
    basis = [rademacher_basis(3, p), haar_basis(2, p),
             independent_digit_functions([[1, 2], [3]], [[1, 2, -1, 0.5], [1, -1]], p)][which]
    c = data.draw(arrays(np.float64, len(basis), elements=st.floats(0, 1)))
    if not np.any(c):
        return
    c = c / ell_p_norm(c, basis.q)
    g = maxc_g(c, basis)
    assert lp_norm(g.g, basis.q) <= 1 + 1e-10
    integrals = basis.squares @ np.repeat(g.g.values, 2 ** (basis.level - g.g.level)) * 2.0**-basis.level
    assert np.all(integrals >= c - 1e-10)


# --- reduce_g ----------------------------------------------------------------

def test_reduce_g_examples():
    whole = [DyadicSet.interval(0, 0)]
    assert reduce_g(nf([1.0], level=0), whole).g == ONE
    # [1, 3] itself has L_3 norm > 1, so the averaging is checked on the raw step
    # function and on its normalized multiple
    raw = StepFunction(1, [1.0, 3.0])
    assert cond_expect(raw, whole) == StepFunction.constant(2.0)
    assert integral(pointwise("mul", raw, ONE)) == integral(cond_expect(raw, whole)) == 2
    s = lp_norm(raw, 3.0)
    g = nf([1.0 / s, 3.0 / s], q=3.0)
    r = reduce_g(g, whole)
    assert r.g.values[0] == pytest.approx(2.0 / s, rel=1e-15)
    assert integral(pointwise("mul", g.g, ONE)) == pytest.approx(integral(r.g), rel=1e-15)
    r = reduce_g(nf([2.0, 0, 0, 0], q=2.0), [DyadicSet.interval(1, 0), DyadicSet.interval(1, 1)])
    assert r.g == StepFunction(2, [1, 1, 0, 0])


def test_reduce_g_preserves_weights():
    rng = np.random.default_rng(3)
    basis = disjoint_indicators([(1, 0), (2, 2), (3, 6)], 4.0)
    sets = [DyadicSet.interval(1, 0), DyadicSet.interval(2, 2), DyadicSet.interval(3, 6)]
    for g in sample_g(rng, 5, basis.q, 10):
        assert np.allclose(weights_from_g(g, basis).w, weights_from_g(reduce_g(g, sets), basis).w,
                           rtol=0, atol=1e-12)


# --- build_family and sampling ---------------------------------------------

def test_build_family_shapes():
    basis = halves()
    fam = build_family([nf([1.0], level=0)], basis)
    assert len(fam) == 1 and fam.pairs[0].partition.blocks == ((0, 1),)
    assert np.allclose(fam.pairs[0].weights.w, 2**-0.25)
    fam = build_family([nf([1.0], level=0)], basis, include_discrete=True)
    assert len(fam) == 2 and fam.pairs[1].partition.blocks == ((0,), (1,))
    with pytest.raises(ValueError):
        build_family([], basis)


def test_discrete_pair_gives_ell_p_lower_bound():
    rng = np.random.default_rng(0)
    basis = rademacher_basis(4, 3.0)
    fam = build_family(sample_g(rng, 4, basis.q, 3), basis, include_discrete=True)
    for _ in range(50):
        a = rng.standard_normal(4)
        assert family_norm(a, fam, 3.0) >= ell_p_norm(a, 3.0) - 1e-12


def test_sample_g_normalized_and_seeded():
    a = sample_g(np.random.default_rng(5), 6, 2.0, 4)
    b = sample_g(np.random.default_rng(5), 6, 2.0, 4)
    for x, y in zip(a, b):
        assert x.g == y.g
        assert lp_norm(x.g, 2.0) == pytest.approx(1, abs=1e-12)
    for dist in ("uniform", "exponential"):
        (g,) = sample_g(np.random.default_rng(1), 3, 3.0, 1, dist)
        assert lp_norm(g.g, 3.0) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        sample_g(np.random.default_rng(1), 3, 3.0, 1, "cauchy")


def test_attainment_and_upper_envelope():
    rng = np.random.default_rng(11)
    for basis in (rademacher_basis(4, 4.0), haar_basis(3, 3.0), halves(6.0)):
        sampled = build_family(sample_g(rng, basis.level, basis.q, 8), basis)
        for _ in range(100):
            a = rng.standard_normal(len(basis))
            sq = square_function_norm(a, basis)
            assert np.all(family_norms(a, sampled, basis.p) <= sq + 1e-10)
            fam = build_family([optimal_g(a, basis)], basis)
            assert family_norm(a, fam, basis.p) == pytest.approx(sq, rel=1e-9)


def test_holder_weight_bound():
    rng = np.random.default_rng(2)
    for basis in (rademacher_basis(3, 2.5), haar_basis(4, 6.0)):
        for g in sample_g(rng, 6, basis.q, 20):
            assert np.all(weights_from_g(g, basis).w <= 1 + 1e-10)


# --- dual-optimal c ---------------------------------------------------------

def test_dual_optimal_c_value():
    rng = np.random.default_rng(4)
    for p in P_GRID:
        for _ in range(20):
            a = rng.standard_normal(5)
            c = dual_optimal_c(a, p)
            assert ell_p_norm(c, p / (p - 2)) == pytest.approx(1, abs=1e-12)
            assert dual_value(a, c) == pytest.approx(ell_p_norm(a, p), rel=1e-12)


@pytest.mark.parametrize("p", P_GRID)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_dual_optimal_c_against_grid(p, n):
    rng = np.random.default_rng(100 * n + int(p * 10))
    a = rng.standard_normal(n)
    grid, c_grid = brute_force_dual_max(a, p)
    closed = dual_value(a, dual_optimal_c(a, p))
    assert ell_p_norm(c_grid, p / (p - 2)) == pytest.approx(1, abs=1e-9)
    assert grid <= closed + 1e-8
    assert grid >= closed * (1 - 1e-5)


def test_dual_optimal_c_degenerate():
    with pytest.raises(ValueError):
        dual_optimal_c([0, 0], 4)
