import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssgpac.complexity import (ComplexityQuery, attack_losses, eulerian_numbers, feasible_volume,
                               irwin_hall_cdf, ln_capacity_npl_component, ln_cover_X,
                               ln_irwin_hall_cdf, rho_distance, samples_gsuqr, samples_gsuqr_weak,
                               samples_npl, samples_ssuqr)


def descents_brute_force(T):
    row = [0] * T
    for p in itertools.permutations(range(T)):
        row[sum(p[i] > p[i + 1] for i in range(T - 1))] += 1
    return row


@pytest.mark.parametrize("T", range(1, 8))
def test_eulerian_matches_permutation_count(T):
    assert eulerian_numbers(T) == descents_brute_force(T)


def test_eulerian_row_sums():
    for T in range(1, 21):
        assert sum(eulerian_numbers(T)) == math.factorial(T)
    assert eulerian_numbers(3) == [1, 4, 1]
    with pytest.raises(ValueError):
        eulerian_numbers(31)


def irwin_hall_mpmath(T, k):
    mpmath.mp.dps = 60
    total = mpmath.fsum((-1) ** j * mpmath.binomial(T, j) * mpmath.mpf(k - j) ** T for j in range(k + 1))
    return total / mpmath.factorial(T)


def test_irwin_hall_exact_values():
    assert irwin_hall_cdf(3, 1) == Fraction(1, 6)
    assert irwin_hall_cdf(2, 1) == Fraction(1, 2)
    assert irwin_hall_cdf(5, 0) == 0 and irwin_hall_cdf(5, 5) == 1
    for T in range(1, 13):
        row = eulerian_numbers(T)
        for k in range(1, T + 1):
            assert irwin_hall_cdf(T, k) - irwin_hall_cdf(T, k - 1) == Fraction(row[k - 1], math.factorial(T))
    with pytest.raises(ValueError):
        irwin_hall_cdf(4, 1.5)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 60), st.data())
def test_ln_irwin_hall_matches_mpmath(T, data):
    k = data.draw(st.integers(1, T))
    ref = float(mpmath.log(irwin_hall_mpmath(T, k)))
    assert math.isclose(ln_irwin_hall_cdf(T, k), ref, rel_tol=1e-12, abs_tol=1e-12)


def test_ln_irwin_hall_large_t_is_finite():
    v = ln_irwin_hall_cdf(400, 3)
    assert math.isfinite(v) and v < 0
    assert ln_irwin_hall_cdf(5, 0) == -math.inf


@pytest.mark.parametrize("T,K", [(3, 1), (4, 2), (5, 2)])
def test_feasible_volume_monte_carlo(T, K):
    u = np.random.default_rng(0).random((400_000, T))
    assert abs(np.mean(u.sum(1) <= K) - float(feasible_volume(T, K))) < 5e-3


def test_cover_methods():
    exact = ln_cover_X(10, 2, 0.1)
    assert math.isclose(exact, ln_irwin_hall_cdf(10, 3) - 10 * math.log(0.2))
    bern = ln_cover_X(10, 2, 0.1, method="bernstein")
    assert math.isfinite(bern)
    with pytest.raises(ValueError):
        ln_cover_X(3, 1, 0.1, method="bernstein")
    with pytest.raises(ValueError):
        ln_cover_X(3, 1, 0.1, method="other")
    with pytest.raises(ValueError):
        ln_cover_X(3, 1, 1.5)


def test_npl_component_capacity_matches_direct_formula():
    T, K, M, khat, eps = 3, 1, 20.0, 5.0, 0.05
    comp = ln_capacity_npl_component(T, K, M, khat, eps)
    N = float(irwin_hall_cdf(T, K + 1)) / (2 * eps / (2 * khat)) ** T
    direct = math.log(2 * math.ceil(M / eps) + 1) + N * math.log(2)
    assert math.isclose(comp.log_value, direct, rel_tol=1e-12)
    assert math.isclose(comp.log_log_value, math.log(direct), rel_tol=1e-12)


def test_gsuqr_bound_matches_mpmath():
    q = ComplexityQuery(alpha=0.1, delta=0.05, T=5)
    mpmath.mp.dps = 40
    eps = mpmath.mpf(0.1) / (96 * 5)
    ref = 576 * mpmath.mpf(20) ** 2 / mpmath.mpf(0.1) ** 2 * (
        mpmath.log(1 / mpmath.mpf(0.05)) + mpmath.log(8) + 5 * mpmath.log(20 / (2 * eps)))
    assert math.isclose(samples_gsuqr(q).samples, float(ref), rel_tol=1e-12)


def test_ssuqr_smaller_than_gsuqr():
    q = ComplexityQuery(alpha=0.1, delta=0.05, T=8)
    assert samples_ssuqr(q).samples < samples_gsuqr(q).samples


def grid():
    for alpha, delta, T, M in itertools.product((0.05, 0.2), (0.01, 0.1), (3, 5, 8, 12, 20), (10.0, 40.0)):
        yield alpha, delta, T, M


def test_bound_ordering():
    pts = list(grid())
    assert len(pts) >= 40
    for alpha, delta, T, M in pts:
        q = ComplexityQuery(alpha, delta, T, M=M)
        n, w, g = samples_npl(q), samples_gsuqr_weak(q), samples_gsuqr(q)
        assert n.ln_samples >= w.ln_samples >= g.ln_samples


@pytest.mark.parametrize("fn", [samples_gsuqr, samples_gsuqr_weak, samples_npl, samples_ssuqr])
def test_bounds_decrease_in_alpha(fn):
    vals = [fn(ComplexityQuery(a, 0.05, 6)).ln_samples for a in (0.01, 0.05, 0.1, 0.3, 0.9)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_npl_overflow_is_reported():
    r = samples_npl(ComplexityQuery(0.01, 0.05, 60))
    assert math.isfinite(r.ln_samples) and r.samples == math.inf
    assert r.to_dict()["m"] == "inf-overflow"


def test_query_validation():
    with pytest.raises(ValueError):
        ComplexityQuery(alpha=0.0, delta=0.1, T=3)
    with pytest.raises(ValueError):
        ComplexityQuery(alpha=0.1, delta=0.1, T=3, K=3)


def test_attack_losses():
    assert np.allclose(attack_losses([0.0]), [np.log(2), np.log(2)])
    assert np.isclose(np.exp(-attack_losses([1.0, -2.0])).sum(), 1.0)


def test_loss_distance_bound(rng):
    for _ in range(2000):
        T = int(rng.integers(2, 9))
        a, b = rng.normal(0, 3, (2, T - 1))
        rho = rho_distance(a, b)
        gap = np.abs(a - b).max()
        assert rho <= 2 * gap + 1e-12
        assert 2 * gap <= 2 * T * np.abs(a - b).sum() + 1e-12
    with pytest.raises(ValueError):
        rho_distance([0.0], [0.0, 1.0])
