import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigenlab import eigenmodes as em
from eigenlab.errors import QuadratureTooCoarse, Underresolved

FOURPI = 4 * np.pi


# ---------------------------------------------------------------------------
# zonal: two independent routes and frozen values


def test_zonal_integral_at_origin_is_norm_constant():
    for k in [0, 3, 17]:
        v = em.eval_zonal_integral(k, 0.0, 4 * k + 16)
        assert v == pytest.approx(em.norm_zonal(k), rel=1e-12)


def test_zonal_degree_zero_is_constant_mode():
    for r in [0.0, 0.7, 2.9]:
        assert em.eval_zonal_integral(0, r, 16) == pytest.approx(1 / math.sqrt(FOURPI))


def test_zonal_k2_equator_value():
    # oracle: P_2(cos pi/2) = P_2(0) = -1/2 by the recurrence
    expect = -0.5 * em.norm_zonal(2)
    assert expect == pytest.approx(-0.31539156525252005)
    assert em.eval_zonal_integral(2, np.pi / 2, 64) == pytest.approx(expect, abs=1e-14)


def test_zonal_legendre_frozen_values():
    assert em.eval_zonal_legendre(1, np.pi / 3) == pytest.approx(
        math.sqrt(3 / FOURPI) * 0.5, rel=1e-12
    )
    assert em.eval_zonal_legendre(5, 0.0) == pytest.approx(em.norm_zonal(5), rel=1e-12)


def test_zonal_pole_value_and_growth_constant():
    # exact pole value sqrt((2k+1)/4pi); h^(1/2)|u(pole)| -> (2pi)^(-1/2)
    for k in [100, 400]:
        pole = em.eval_zonal_legendre(k, 0.0)
        assert pole == pytest.approx(math.sqrt((2 * k + 1) / FOURPI), rel=1e-12)
        scaled = pole / math.sqrt(em.sphere_lambda(k))
        assert scaled == pytest.approx(1 / math.sqrt(2 * np.pi), rel=valid_rel(k))


def valid_rel(k):
    return 2.0 / k  # (1 + O(1/k)) convergence of the scaled pole value


def test_zonal_underresolved_raises():
    with pytest.raises(Underresolved):
        em.eval_zonal_integral(50, 1.0, 4 * 50 + 15)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(min_value=0, max_value=400),
    st.floats(min_value=0.0, max_value=np.pi),
)
def test_zonal_dual_route_agreement(k, r):
    a = em.eval_zonal_integral(k, r, 4 * k + 16)
    b = em.eval_zonal_legendre(k, r)
    assert a == pytest.approx(b, abs=1e-8)


# ---------------------------------------------------------------------------
# highest weight


def test_highest_weight_vanishes_at_pole():
    assert em.eval_highest_weight(40, [[0.0, 1.0]])[0] == 0.0


def test_highest_weight_modulus_theta_independent():
    k = 31
    th = np.linspace(0, 2 * np.pi, 9)
    X = np.stack([np.full_like(th, 1.1), th], axis=-1)
    mags = np.abs(em.eval_highest_weight(k, X))
    assert np.allclose(mags, mags[0], rtol=1e-12)


def test_highest_weight_norm_constant_matches_gamma_ratio():
    got = em._hw_log_norm(10)
    assert got == pytest.approx(em.hw_log_norm_gamma(10), abs=1e-8)


def test_highest_weight_sup_exponent_quarter():
    # oracle: direct grid maximization of |u| after quadrature normalization
    ks = np.array([20, 40, 80, 160])
    sups = []
    for k in ks:
        g = em.sphere_gauss_grid(k + 12, 8)
        hw = em.l2_normalize(em.HighestWeight(k), g)
        r = np.linspace(0.2, np.pi - 0.2, 4001)
        X = np.stack([r, np.zeros_like(r)], axis=-1)
        sups.append(np.abs(hw.values(X)).max())
    slope = np.polyfit(np.log(ks), np.log(sups), 1)[0]
    assert slope == pytest.approx(0.25, abs=0.05)


# ---------------------------------------------------------------------------
# torus waves


def test_torus_wave_flat_modulus():
    tw = em.TorusWave([5, -2])
    X = np.array([[0.0, 0.0], [1.0, 4.0], [3.3, 2.2]])
    assert np.allclose(np.abs(tw.values(X)), 1 / (2 * np.pi), rtol=1e-14)
    assert tw.values(np.array([[0.0, 0.0]]))[0] == pytest.approx(1 / (2 * np.pi))
    assert tw.lam == pytest.approx(math.sqrt(29))


def test_torus_wave_unit_l2():
    assert em.l2_norm(em.TorusWave([7, 1]), em.torus_grid(32)) == pytest.approx(1.0, abs=1e-12)


def test_torus_wave_rejects_zero_vector():
    with pytest.raises(ValueError):
        em.TorusWave([0, 0])


# ---------------------------------------------------------------------------
# random waves


def test_random_wave_deterministic():
    X = np.array([[1.2, 0.3]])
    assert em.eval_random_wave(25, 9, X) == em.eval_random_wave(25, 9, X)


def test_random_wave_different_seeds_differ():
    X = np.array([[1.2, 0.3]])
    assert em.eval_random_wave(25, 9, X) != em.eval_random_wave(25, 10, X)


def test_random_wave_unit_l2():
    for seed in [1, 2]:
        rw = em.SphereRandomWave(40, seed)
        g = em.sphere_gauss_grid(60, 100)
        assert em.l2_norm(rw, g) == pytest.approx(1.0, abs=1e-8)


def test_random_wave_rows_match_pointwise():
    rw = em.SphereRandomWave(24, 4)
    rvals = np.array([0.5, 1.5, 2.5])
    nth = 64
    rows = rw.rows(rvals, nth)
    th = np.arange(nth) * 2 * np.pi / nth
    X = np.stack([np.repeat(rvals, nth), np.tile(th, 3)], axis=-1)
    assert np.allclose(rows.ravel(), rw.values(X), atol=1e-12)


def test_addition_theorem_normalization():
    # sum over the degree-k basis of |values|^2 is (2k+1)/4pi at every point
    k = 37
    x = np.linspace(-0.95, 0.95, 7)
    pk = em.assoc_legendre_normalized(k, x)
    tot = pk[0] ** 2 + 2 * np.sum(pk[1:] ** 2, axis=0)
    assert np.allclose(tot, (2 * k + 1) / FOURPI, rtol=1e-10)


# ---------------------------------------------------------------------------
# quadrature and normalization


def test_sphere_grid_total_weight():
    g = em.sphere_gauss_grid(48, 36)
    assert g.total_weight() == pytest.approx(FOURPI, rel=1e-12)
    assert np.all(g.weights > 0)


def test_torus_grid_total_weight():
    g = em.torus_grid(24)
    assert g.total_weight() == pytest.approx((2 * np.pi) ** 2, rel=1e-12)


def test_l2_normalize_idempotent():
    g = em.sphere_gauss_grid(64, 16)
    z = em.l2_normalize(em.Zonal(10), g)
    assert z.norm_constant == pytest.approx(1.0, abs=1e-10)


def test_l2_normalize_homogeneous():
    g = em.sphere_gauss_grid(64, 16)
    z = em.l2_normalize(em.Zonal(10, norm_constant=2.0), g)
    assert z.norm_constant == pytest.approx(1.0, abs=1e-10)


def test_l2_normalize_rejects_coarse_quadrature():
    with pytest.raises(QuadratureTooCoarse):
        em.l2_normalize(em.Zonal(100), em.sphere_gauss_grid(20, 8))


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=1, max_value=120))
def test_norm_stable_under_refinement(k):
    g = em.sphere_gauss_grid(k + 12, 8)
    n0 = em.l2_norm(em.Zonal(k), g)
    n1 = em.l2_norm(em.Zonal(k), em.sphere_gauss_grid(2 * (k + 12), 16))
    assert abs(n0 - n1) <= 1e-8


# ---------------------------------------------------------------------------
# eigenvalue residual against a discrete Laplace-Beltrami stencil


def _sphere_residual(u_grid, r, dr, dth, lam2):
    """4th-order stencil residual |Lap u + lam^2 u| / (lam^2 sup|u|)."""
    u = u_grid
    u_rr = (-u[4:] + 16 * u[3:-1] - 30 * u[2:-2] + 16 * u[1:-3] - u[:-4]) / (12 * dr**2)
    u_r = (-u[4:] + 8 * u[3:-1] - 8 * u[1:-3] + u[:-4]) / (12 * dr)
    rin = r[2:-2]
    uin = u[2:-2]
    u_tt = (
        -np.roll(uin, -2, axis=1)
        + 16 * np.roll(uin, -1, axis=1)
        - 30 * uin
        + 16 * np.roll(uin, 1, axis=1)
        - np.roll(uin, 2, axis=1)
    ) / (12 * dth**2)
    lap = u_rr + (np.cos(rin) / np.sin(rin))[:, None] * u_r + u_tt / np.sin(rin)[:, None] ** 2
    res = np.abs(lap + lam2 * uin)
    return res.max() / (lam2 * np.abs(u_grid).max())


def test_eigenvalue_residual_random_wave_fine_grid():
    k = 50
    n = 2048
    r = np.linspace(0.25, np.pi - 0.25, n)
    dr = r[1] - r[0]
    dth = 2 * np.pi / n
    rw = em.SphereRandomWave(k, seed=3)
    u = rw.rows(r, n)
    assert _sphere_residual(u, r, dr, dth, k * (k + 1)) <= 1e-3


def test_eigenvalue_residual_zonal():
    k = 50
    n = 2048
    r = np.linspace(0.25, np.pi - 0.25, n)
    dr = r[1] - r[0]
    u = np.repeat(em.eval_zonal_legendre(k, r)[:, None], 8, axis=1).astype(complex)
    assert _sphere_residual(u, r, dr, 2 * np.pi / 8, k * (k + 1)) <= 1e-3
