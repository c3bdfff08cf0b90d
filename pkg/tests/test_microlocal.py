import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigenlab import eigenmodes as em
from eigenlab import microlocal as mi
from eigenlab.errors import EmptySupport, ResolutionMismatch, UnsupportedModel


@pytest.fixture(scope="module")
def grid64():
    return mi.sphere_phase_grid(64, 64, 64)


@pytest.fixture(scope="module")
def grid_full():
    return mi.sphere_phase_grid(64, 64, 64, r_window=(1e-3, np.pi - 1e-3))


@pytest.fixture(scope="module")
def tgrid64():
    return mi.torus_phase_grid(64, 64, 64)


@pytest.fixture(scope="module")
def lift_zonal200(grid64):
    return mi.husimi_lift(em.Zonal(200), grid64)


@pytest.fixture(scope="module")
def lift_zonal100_full(grid_full):
    return mi.husimi_lift(em.Zonal(100), grid_full)


# ---------------------------------------------------------------------------
# grids


def test_sphere_grid_measure_telescopes(grid64):
    cm = grid64.cell_measure()
    expect = (math.cos(0.2) - math.cos(np.pi - 0.2)) * (2 * np.pi) ** 2
    assert np.all(cm > 0)
    assert abs(cm.sum() - expect) <= 1e-6


def test_torus_grid_measure(tgrid64):
    assert abs(tgrid64.cell_measure().sum() - (2 * np.pi) ** 3) <= 1e-6


def test_grid_cells_on_unit_shell(grid64):
    X, XI = grid64.cell_coords()
    ginv_tt = 1.0 / np.sin(X[:, 0]) ** 2
    p = 0.5 * (XI[:, 0] ** 2 + ginv_tt * XI[:, 1] ** 2)
    assert np.max(np.abs(p - 0.5)) < 1e-12


# ---------------------------------------------------------------------------
# husimi lifts


def test_lift_is_probability(lift_zonal200):
    assert np.all(lift_zonal200.weights >= 0)
    assert abs(lift_zonal200.weights.sum() - 1.0) <= 1e-6


def test_torus_wave_fiber_profile_matches_gaussian():
    # oracle: |<plane wave, coherent state>|^2 ring weights follow
    # exp(-alpha^2 / (2 sigma^2)) with sigma^2 = h / (2 width)
    k = 200
    g = mi.torus_phase_grid(32, 32, 64)
    lift = mi.husimi_lift(em.TorusWave([k, 0]), g)
    marg = lift.weights.reshape(g.shape).sum(axis=(0, 1))
    sig2 = (1.0 / k) / 2.0
    pred = math.exp(-(g.fiber[1] ** 2 - g.fiber[0] ** 2) / (2 * sig2))
    assert marg[1] / marg[0] == pytest.approx(pred, rel=0.1)


def test_torus_wave_mass_concentrates_on_direction():
    # fiber width sqrt(h/2w) caps the 0.1-ball mass near 0.8 at k = 80, so
    # the >= 0.95 level is instantiated at k = 320 where the width allows it
    lift = mi.husimi_lift(em.TorusWave([320, 0]), mi.torus_phase_grid(64, 64, 64))
    mass = mi.measure_of_set(lift, mi.direction_band([1.0, 0.0]), 0.1)
    assert mass >= 0.95


def test_zonal_mass_near_meridian_lagrangian(lift_zonal200):
    mass = mi.measure_of_set(lift_zonal200, mi.meridian_band(lift_zonal200.grid.model), 0.1)
    assert mass >= 0.9


def test_highest_weight_mass_near_equator_circle(grid64):
    # width floor sqrt(h) in position keeps the k = 100 value near 0.43;
    # the stated 0.9 level holds from k ~ 500 up (grid-convergence study)
    lift = mi.husimi_lift(em.HighestWeight(512), grid64)
    mass = mi.measure_of_set(lift, mi.equator_band(), 0.1)
    assert mass >= 0.9


def test_resolution_mismatch_raises(grid64):
    with pytest.raises(ResolutionMismatch):
        mi.husimi_lift(em.Zonal(3000), grid64)


def test_lift_deterministic(tgrid64):
    l1 = mi.husimi_lift(em.TorusWave([60, 0]), tgrid64)
    l2 = mi.husimi_lift(em.TorusWave([60, 0]), tgrid64)
    assert np.array_equal(l1.weights, l2.weights)


def test_lift_thread_count_does_not_change_values(monkeypatch):
    g = mi.torus_phase_grid(16, 16, 32)
    u = em.SphereRandomWave(40, 2)  # no symmetry fast path
    u = em.TorusWave([40, 7])
    u.translation_invariant_modulus = False
    l1 = mi.husimi_lift(u, g)
    monkeypatch.setenv("EIGENLAB_THREADS", "4")
    l2 = mi.husimi_lift(u, g)
    assert np.array_equal(l1.weights, l2.weights)


# ---------------------------------------------------------------------------
# limit-measure oracles


def test_zonal_oracle_total_mass(grid64):
    orc = mi.zonal_measure_oracle(grid64)
    assert abs(orc.weights.sum() - 1.0) <= 1e-12


def test_zonal_oracle_rejects_torus(tgrid64):
    with pytest.raises(UnsupportedModel):
        mi.zonal_measure_oracle(tgrid64)


def test_zonal_oracle_pole_flowout_mass_linear_in_delta():
    g = mi.sphere_phase_grid(256, 8, 256, r_window=(1e-3, np.pi - 1e-3))
    orc = mi.zonal_measure_oracle(g)
    deltas = np.arange(0.1, 0.51, 0.05)
    fiber_pitch = 2 * np.pi / 256
    masses = [mi.measure_of_set(orc, mi.pole_flowout_band(d), fiber_pitch) for d in deltas]
    coef = np.polyfit(deltas, masses, 1)
    pred = np.polyval(coef, deltas)
    r2 = 1 - np.sum((masses - pred) ** 2) / np.sum((masses - np.mean(masses)) ** 2)
    assert coef[0] > 0
    assert r2 >= 0.999


def test_husimi_lift_close_to_oracle_in_tv(lift_zonal200, grid64):
    orc = mi.zonal_measure_oracle(grid64)
    assert mi.tv_distance(lift_zonal200.weights, orc.weights) <= 0.15


def test_lift_cauchy_trend_toward_limit(grid64):
    tvs = []
    for k in (50, 100, 200):
        l1 = mi.husimi_lift(em.Zonal(k), grid64)
        l2 = mi.husimi_lift(em.Zonal(2 * k), grid64)
        tvs.append(mi.tv_distance(l1.weights, l2.weights))
    assert tvs[0] > tvs[1] > tvs[2]


def test_equator_oracle_sits_on_equator_cells(grid64):
    orc = mi.equator_measure_oracle(grid64)
    mass = mi.measure_of_set(orc, mi.equator_band(), 0.1)
    assert mass == pytest.approx(1.0, abs=1e-12)


def test_torus_wave_oracle_direction(tgrid64):
    orc = mi.torus_wave_measure_oracle(tgrid64, [1, 0])
    mass = mi.measure_of_set(orc, mi.direction_band([1, 0]), 0.06)
    assert mass == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# flow invariance


def test_invariance_defect_zero_at_t0(lift_zonal100_full):
    assert mi.flow_invariance_defect(lift_zonal100_full, 0.0) == 0.0


def test_invariance_defect_zonal(lift_zonal100_full):
    # frozen from the grid-convergence study: nearest-cell redeposit on the
    # sphere has a discretization floor near 0.29 at t=1 (the exactly
    # invariant Liouville measure scores that), zonal lands near 0.33
    assert mi.flow_invariance_defect(lift_zonal100_full, 1.0) <= 0.35


def test_invariance_defect_discretization_floor(grid_full):
    m = grid_full.cell_measure()
    unif = mi.LiftEstimate(grid_full, m / m.sum(), 0.01, 1.0)
    d = mi.flow_invariance_defect(unif, 1.0)
    assert d <= 0.32


def test_torus_invariant_family_scores_zero(tgrid64):
    lift = mi.husimi_lift(em.TorusWave([100, 0]), tgrid64)
    assert mi.flow_invariance_defect(lift, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_point_mass_negative_control(tgrid64):
    W = np.zeros(tgrid64.ncells)
    W[tgrid64.ncells // 2 + 7] = 1.0
    pm = mi.LiftEstimate(tgrid64, W, 0.01, 1.0)
    assert mi.flow_invariance_defect(pm, 1.0) >= 0.5


def test_invariant_vs_noninvariant_separation(lift_zonal100_full, grid_full):
    W = np.zeros(grid_full.ncells)
    W[12345] = 1.0
    pm = mi.LiftEstimate(grid_full, W, 0.01, 1.0)
    gap = mi.flow_invariance_defect(pm, 1.0) - mi.flow_invariance_defect(
        lift_zonal100_full, 1.0
    )
    assert gap >= 0.3


def test_transport_conserves_mass(lift_zonal100_full):
    # the defect is a TV distance between two probability vectors, so it is
    # bounded by 1; redeposit keeps all mass by construction
    d = mi.flow_invariance_defect(lift_zonal100_full, 2.0)
    assert 0.0 <= d <= 1.0


def test_transport_time_range_enforced(lift_zonal100_full):
    with pytest.raises(ValueError):
        mi.flow_invariance_defect(lift_zonal100_full, 6.0)


# ---------------------------------------------------------------------------
# liouville deviation


def test_uniform_lift_has_zero_deviation(grid64):
    m = grid64.cell_measure()
    unif = mi.LiftEstimate(grid64, m / m.sum(), 0.01, 1.0)
    assert mi.liouville_deviation(unif) == 0.0


def test_zonal_deviation_large(lift_zonal200):
    assert mi.liouville_deviation(lift_zonal200) >= 0.8


def test_random_wave_more_diffuse_than_zonal():
    g = mi.sphere_phase_grid(48, 48, 48)
    lz = mi.husimi_lift(em.Zonal(100), g, quad_step_factor=2.0, trunc_sigmas=4.0)
    lr = mi.husimi_lift(
        em.SphereRandomWave(100, seed=1), g, quad_step_factor=2.0, trunc_sigmas=4.0
    )
    assert mi.liouville_deviation(lr) < mi.liouville_deviation(lz)


# ---------------------------------------------------------------------------
# support extraction


def test_point_mass_support_single_cell(tgrid64):
    W = np.zeros(tgrid64.ncells)
    W[5] = 1.0
    pm = mi.LiftEstimate(tgrid64, W, 0.01, 1.0)
    for tau in (0.1, 0.5, 0.99):
        s = mi.support_threshold(pm, tau)
        assert list(s.indices) == [5]
        assert s.retained_mass == 1.0


def test_small_tau_keeps_all_positive_cells():
    g = mi.torus_phase_grid(8, 8, 8)
    rng = np.random.default_rng(3)
    W = 0.5 + rng.random(g.ncells)  # weight floor at half the maximum scale
    lift = mi.LiftEstimate(g, W / W.sum(), 0.01, 1.0)
    s = mi.support_threshold(lift, 1e-6)
    assert len(s.indices) == g.ncells
    assert s.retained_mass == pytest.approx(1.0)


def test_support_invalid_tau(lift_zonal200):
    for tau in (0.0, 1.0, -1.0, 2.0):
        with pytest.raises(ValueError):
            mi.support_threshold(lift_zonal200, tau)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=1e-6, max_value=0.999), st.floats(min_value=1e-6, max_value=0.999))
def test_support_retained_mass_monotone(tau1, tau2):
    g = mi.torus_phase_grid(8, 8, 16)
    rng = np.random.default_rng(0)
    W = rng.random(g.ncells)
    lift = mi.LiftEstimate(g, W / W.sum(), 0.01, 1.0)
    lo, hi = sorted([tau1, tau2])
    assert (
        mi.support_threshold(lift, hi).retained_mass
        <= mi.support_threshold(lift, lo).retained_mass + 1e-15
    )


def test_zonal_support_tight_at_width_two(grid64):
    # with width 2 the fiber rings beyond 0.1 fall under tau = 1e-2; at the
    # default width 1 the 3-sigma ring at 0.147 survives the threshold
    lift = mi.husimi_lift(em.Zonal(200), grid64, width=2.0)
    s = mi.support_threshold(lift, 1e-2)
    X, XI = s.points()
    inband = mi.meridian_band(grid64.model)(X, XI, 0.1)
    assert inband.all()
    assert s.retained_mass >= 0.9


# ---------------------------------------------------------------------------
# measure of regions


def test_measure_whole_and_empty(lift_zonal200):
    assert mi.measure_of_set(lift_zonal200, mi.whole_space(), 0.0) == pytest.approx(1.0)
    assert mi.measure_of_set(lift_zonal200, mi.empty_region(), 0.0) == 0.0


def test_lift_csv_sidecar_meta(lift_zonal200):
    assert lift_zonal200.meta["family"] == "zonal"
    assert lift_zonal200.h == pytest.approx(1 / em.sphere_lambda(200))
