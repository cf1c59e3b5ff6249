import itertools

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ssgpac.optim import (ConvergenceError, SolverConfig, band_box_violation, dykstra,
                          finite_diff_check, project_band_box, project_capped_simplex,
                          project_pairwise_band, projected_gradient_ascent)

TIGHT = dict(tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)


def qp_capped_simplex(v, K):
    x = cp.Variable(v.size)
    cp.Problem(cp.Minimize(cp.sum_squares(x - v)), [x >= 0, x <= 1, cp.sum(x) <= K]).solve(
        solver=cp.CLARABEL, **TIGHT)
    return x.value


def active_set_oracle_2d(v, K):
    """Exact projection for T=2 by enumerating the candidate active sets."""
    best, best_d = None, np.inf
    cands = [np.clip(v, 0, 1)]
    # on the line x0 + x1 = K, clipped to the box
    t = (v[0] - v[1] + K) / 2
    cands.append(np.array([t, K - t]))
    for a in (0.0, 1.0):
        cands += [np.array([a, np.clip(v[1], 0, 1)]), np.array([np.clip(v[0], 0, 1), a])]
        cands += [np.array([a, K - a]), np.array([K - a, a])]
    for c in cands:
        if np.all(c >= -1e-15) and np.all(c <= 1 + 1e-15) and c.sum() <= K + 1e-15:
            d = np.sum((c - v) ** 2)
            if d < best_d:
                best, best_d = c, d
    return best


def kkt_residual(x, v, K):
    lam = 0.0
    free = (x > 1e-12) & (x < 1 - 1e-12)
    if x.sum() >= K - 1e-12:
        if free.any():
            lam = float(np.mean(v[free] - x[free]))
        else:
            # no free coordinate: smallest multiplier compatible with the zero bounds
            zero = x <= 1e-12
            lam = max(0.0, float(v[zero].max())) if zero.any() else 0.0
    g = x - v + lam
    r = max(0.0, x.sum() - K, -x.min(), x.max() - 1)
    for i in range(x.size):
        if x[i] <= 1e-12:
            r = max(r, -g[i])
        elif x[i] >= 1 - 1e-12:
            r = max(r, g[i])
        else:
            r = max(r, abs(g[i]))
    return r, lam


def test_capped_simplex_examples():
    assert np.allclose(project_capped_simplex([0.3, 0.3], 1), [0.3, 0.3])
    assert np.allclose(project_capped_simplex([1.0, 1.0], 1), [0.5, 0.5], atol=1e-15)
    assert np.allclose(project_capped_simplex([2.0, -1.0, 0.5], 2), [1.0, 0.0, 0.5])
    with pytest.raises(ValueError):
        project_capped_simplex([0.1], 0)


@settings(max_examples=300, deadline=None)
@given(arrays(np.float64, 2, elements=st.floats(-3, 3)), st.sampled_from([0.5, 1.0, 1.5]))
def test_capped_simplex_matches_2d_active_set(v, K):
    x = project_capped_simplex(v, K)
    assert np.allclose(x, active_set_oracle_2d(v, K), atol=1e-12)


def test_capped_simplex_matches_qp_oracle(rng):
    for _ in range(40):
        T = int(rng.integers(2, 9))
        K = int(rng.integers(1, T))
        v = rng.normal(0.5, 1.0, T)
        x = project_capped_simplex(v, K)
        assert np.allclose(x, qp_capped_simplex(v, K), atol=1e-7)
        r, lam = kkt_residual(x, v, K)
        assert r <= 1e-10
        assert lam >= -1e-12


def test_capped_simplex_batch(rng):
    V = rng.normal(size=(6, 4))
    X = project_capped_simplex(V, 2)
    for v, x in zip(V, X):
        assert np.array_equal(project_capped_simplex(v, 2), x)


def test_pairwise_band():
    assert project_pairwise_band(0.0, 3.0, 1.0) == (1.0, 2.0)
    assert project_pairwise_band(0.5, 0.2, 1.0) == (0.5, 0.2)
    a, b = project_pairwise_band(np.array([4.0, 0.0]), np.array([0.0, 0.0]), 2.0)
    assert np.allclose(a, [3.0, 0.0]) and np.allclose(b, [1.0, 0.0])


def test_dykstra_box_and_halfspace():
    # intersection of the unit box and {x + y <= 1}: projection of (1, 1) is (0.5, 0.5)
    box = lambda z: np.clip(z, 0, 1)

    def half(z):
        e = z.sum() - 1
        return z - max(e, 0) / 2
    x, cycles, ok = dykstra([1.0, 1.0], [box, half])
    assert ok and np.allclose(x, [0.5, 0.5], atol=1e-9)
    # plain alternating projections would stop at a non-nearest point here
    x, _, ok = dykstra([2.0, 0.2], [box, half])
    assert ok and np.allclose(x, qp_capped_simplex(np.array([2.0, 0.2]), 1), atol=1e-8)


def qp_band_box(z, C, bound):
    s = z.size
    x = cp.Variable(s)
    cons = [cp.abs(x) <= bound]
    for j, k in itertools.combinations(range(s), 2):
        cons.append(cp.abs(x[j] - x[k]) <= C[j, k])
    cp.Problem(cp.Minimize(cp.sum_squares(x - z)), cons).solve(solver=cp.CLARABEL, **TIGHT)
    return x.value


def test_band_box_matches_qp_oracle(rng):
    for _ in range(15):
        s = int(rng.integers(2, 8))
        P = rng.random((s, 3))
        C = 2.0 * np.abs(P[:, None, :] - P[None, :, :]).sum(-1)
        Z = rng.normal(0, 3, (2, s))
        out, cycles = project_band_box(Z, C, 2.0, tol=1e-13, max_cycles=100000)
        for z, x in zip(Z, out):
            assert np.allclose(x, qp_band_box(z, C, 2.0), atol=1e-6)
        assert band_box_violation(out, C, 2.0) <= 1e-9


def test_band_box_is_identity_inside(rng):
    s = 5
    P = rng.random((s, 2))
    C = np.abs(P[:, None, :] - P[None, :, :]).sum(-1)
    z = 0.1 * P[:, 0][None, :]
    out, cycles = project_band_box(z, C, 1.0)
    assert np.array_equal(out, z) and cycles == 1


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(max_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(backtrack_factor=1.0)


def test_pga_concave_quadratic():
    # maximize -|x - c|^2 over the capped simplex: answer is the projection of c
    c = np.array([0.9, 0.8, -0.2])
    fun = lambda x: (-float(np.sum((x - c) ** 2)), -2 * (x - c))
    proj = lambda y: project_capped_simplex(y, 1)
    x, f, diag = projected_gradient_ascent(fun, proj, np.zeros(3), record=True)
    assert diag.converged
    assert np.allclose(x, project_capped_simplex(c, 1), atol=1e-7)
    assert np.all(np.diff(diag.values) >= 0)


def test_pga_iteration_cap_reports_not_converged():
    fun = lambda x: (-float(np.sum(np.cosh(x - 3))), -np.sinh(x - 3))
    x, f, diag = projected_gradient_ascent(fun, lambda y: y, np.zeros(2),
                                           SolverConfig(max_iters=2))
    assert not diag.converged and diag.reason == "iteration cap"
    err = ConvergenceError("x", point=x, grad_norm=diag.grad_norm)
    assert err.point is x


def test_finite_diff_check():
    f = lambda x: float(np.sum(np.sin(x)))
    assert finite_diff_check(f, np.cos, np.array([0.3, 1.2])) < 1e-8
    assert finite_diff_check(f, lambda x: np.cos(x) * 1.01, np.array([0.3, 1.2])) > 1e-3
