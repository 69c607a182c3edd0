import numpy as np
import pytest
from cases import DEFOCUSING_A, LOCAL_ONLY, TWO_BRANCH_A, TWO_BRANCH_B

from norm_soliton import (RadialField, RegimeError, SolverError, SolverOptions, energy,
                          energy_minimizer, ground_state_local_min, mountain_pass, thresholds)
from norm_soliton.functionals import dilate, fiber_map, fiber_profile
from norm_soliton.grid import sample
from norm_soliton.solvers import (critical_mass_witness, el_gradient, extract_lambda,
                                  fiber_ascend_init, fiber_descend_init, h1_distance, solver_grid)

GRID = solver_grid()


def random_sphere_field(a, rng, terms=3):
    r = GRID.r
    vals = np.zeros(GRID.n)
    for _ in range(terms):
        c, w, x0 = rng.uniform(0.2, 1.0), rng.uniform(0.4, 2.0), rng.uniform(0.0, 2.0)
        vals += c * np.exp(-((r - x0) / w) ** 2)
    return RadialField(GRID, vals).normalized(a)


def test_gradient_matches_directional_derivatives():
    rng = np.random.default_rng(0)
    prm = TWO_BRANCH_A
    u = random_sphere_field(prm.a, rng)
    g = el_gradient(u, prm).values
    for _ in range(5):
        v = random_sphere_field(1.0, rng).values
        h = 1e-5
        up = energy(u.with_values(u.values + h * v), prm).J
        dn = energy(u.with_values(u.values - h * v), prm).J
        fd = (up - dn) / (2 * h)
        exact = float(np.sum(GRID.weights * g * v))
        assert abs(fd - exact) < 1e-5 * abs(exact)


def test_local_min_invariants(local_min_a):
    rep = local_min_a
    rho0 = thresholds(TWO_BRANCH_A).rho0
    assert rep.kind == "local-min"
    assert rep.level < 0
    assert np.sqrt(rep.energy.T) <= rho0
    assert fiber_map(rep.profile, TWO_BRANCH_A).d2psi(0.0) > 0
    assert abs(rep.profile.mass2() / TWO_BRANCH_A.a**2 - 1) < 1e-12
    assert np.all(rep.profile.values > 0)
    assert rep.residuals["euler_lagrange_L2"] < 1e-8
    assert rep.residuals["pohozaev_P"] < 1e-6
    assert rep.residuals["nehari"] < 1e-8
    assert rep.residuals["pohozaev_identity"] < 1e-5
    assert np.isfinite(rep.lam)


def test_local_min_descent_is_monotone(local_min_a):
    levels = np.array([h[0] for h in local_min_a.history])
    assert np.all(np.diff(levels) <= 1e-12 * np.abs(levels[1:]))


def test_local_min_boundary_gap(local_min_a):
    rep = local_min_a
    prm = TWO_BRANCH_A
    rho0 = thresholds(prm).rho0
    rng = np.random.default_rng(1)
    for _ in range(10):
        v = rep.profile.with_values(rep.profile.values * (1 + 0.2 * rng.normal() * np.exp(-GRID.r)))
        v = v.normalized(prm.a)
        s = np.log(rho0 / np.sqrt(energy(v, prm).T))
        w = dilate(v, s)
        assert np.sqrt(energy(w, prm).T) == pytest.approx(rho0, rel=1e-4)
        assert energy(w, prm).J > 0 > rep.level


def test_local_min_init_robustness(local_min_a):
    bump = sample(GRID, lambda r: np.exp(-r / 1.5))
    other = ground_state_local_min(TWO_BRANCH_A, bump)
    assert abs(other.level / local_min_a.level - 1) < 1e-6


def test_fiber_inits_land_on_branches():
    prm = TWO_BRANCH_B
    u = sample(GRID, lambda r: np.exp(-r * r)).normalized(prm.a)
    lo, hi = fiber_descend_init(u, prm), fiber_ascend_init(u, prm)
    assert abs(fiber_profile(lo, prm).s_u) < 1e-3
    assert abs(fiber_profile(hi, prm).t_u) < 1e-3


def test_mountain_pass_invariants(mountain_a):
    rep = mountain_a
    prm = TWO_BRANCH_A
    assert rep.kind == "mountain-pass"
    assert rep.level > 0
    assert fiber_map(rep.profile, prm).d2psi(0.0) < 0
    assert rep.lam > 0
    assert abs(rep.profile.mass2() / prm.a**2 - 1) < 1e-12
    for key, tol in (("euler_lagrange_L2", 1e-8), ("pohozaev_P", 1e-6), ("pohozaev_identity", 1e-5)):
        assert rep.residuals[key] < tol


def test_mountain_pass_fiber_max_decreases(mountain_a):
    levels = np.array([h[0] for h in mountain_a.history])
    assert np.all(np.diff(levels) <= 1e-12 * np.abs(levels[1:]))


def test_defocusing_level_is_inf_of_fiber_maxima():
    prm = DEFOCUSING_A
    rep = mountain_pass(prm)
    assert rep.level > 0 and rep.fiber.regime == "one-critical"
    rng = np.random.default_rng(2)
    for _ in range(10):
        fp = fiber_profile(random_sphere_field(prm.a, rng), prm)
        assert fp.psi_t >= rep.level * (1 - 1e-9)


def test_regime_errors():
    with pytest.raises(RegimeError):
        ground_state_local_min(DEFOCUSING_A)
    with pytest.raises(RegimeError):
        mountain_pass(LOCAL_ONLY)
    with pytest.raises(RegimeError):
        ground_state_local_min(TWO_BRANCH_A.replace(a=10.0))
    with pytest.raises(RegimeError):
        critical_mass_witness(TWO_BRANCH_A)


def test_solver_failure_is_reported():
    opts = SolverOptions(max_iter=2, newton=False)
    with pytest.raises(SolverError) as info:
        mountain_pass(TWO_BRANCH_B, opts=opts)
    assert info.value.exit_code == 3


def test_uncertified_run_allowed():
    rep = mountain_pass(TWO_BRANCH_B.replace(mu=0.0), certify=False)
    assert rep.level > 0 and rep.lam > 0


def test_energy_minimizer_matches_local_min_when_global(local_min_a):
    # the two-branch local minimizer is not the global one, so the unconstrained
    # descent from the same start must not go above it
    rep = energy_minimizer(TWO_BRANCH_A, local_min_a.profile)
    assert rep.level <= local_min_a.level + 1e-9
    assert h1_distance(rep.profile, local_min_a.profile) < 1e-6


def test_multiplier_is_nehari_annihilator():
    rng = np.random.default_rng(4)
    u = random_sphere_field(1.0, rng)
    prm = TWO_BRANCH_B
    e = energy(u, prm)
    lam = extract_lambda(u, prm, e)
    assert lam == pytest.approx(-float(np.sum(GRID.weights * el_gradient(u, prm).values * u.values)) / e.mass2,
                                rel=1e-12)
