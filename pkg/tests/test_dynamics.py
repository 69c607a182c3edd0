import numpy as np
import pytest
from cases import TWO_BRANCH_A, TWO_BRANCH_B

from norm_soliton import ParameterError, RegimeError, evolve
from norm_soliton.dynamics import (LOG_COLUMNS, blowup_envelope, h1_norm, orbit_distance,
                                   perturbations, second_differences, stability_experiment,
                                   virial_diagnostics)
from norm_soliton.grid import gaussian, kinetic_energy
from norm_soliton.solvers import solver_grid

GRID = solver_grid()


@pytest.mark.parametrize("scheme", ["strang", "cn"])
def test_mass_conserved(scheme):
    u = gaussian(GRID, 1.2, TWO_BRANCH_B.a)
    st = evolve(u, TWO_BRANCH_B, 0.5, 1e-3, scheme, log_every=50)
    m = st.column("mass2")
    assert np.max(np.abs(m / m[0] - 1)) < 1e-10
    J = st.column("J")
    assert np.max(np.abs(J / J[0] - 1)) < 1e-4


@pytest.mark.parametrize("scheme", ["strang", "cn"])
def test_time_reversal(scheme):
    u = gaussian(GRID, 1.2, TWO_BRANCH_B.a)
    fwd = evolve(u, TWO_BRANCH_B, 0.3, 1e-3, scheme, log_every=100)
    back = evolve(fwd.phi, TWO_BRANCH_B, -0.3, 1e-3, scheme, log_every=100)
    assert back.t == pytest.approx(-0.3)
    assert h1_norm(GRID, back.phi.values - u.values) / h1_norm(GRID, u.values) < 1e-6


def test_free_dispersion_variance():
    """Without interactions the variance grows as H0 + 4 |grad u|^2 t^2."""
    u = gaussian(GRID, 1.0, 1.0)
    T0 = kinetic_energy(u)
    H0, Hp0, _ = virial_diagnostics(u, TWO_BRANCH_B)
    assert abs(Hp0) < 1e-14
    st = evolve(u, TWO_BRANCH_B, 2.0, 1e-3, "cn", log_every=100, free=True)
    t, H = st.column("t"), st.column("H")
    exact = H0 + 4 * T0 * t**2
    assert np.max(np.abs(H / exact - 1)) < 1e-3


def test_phase_rotated_datum_is_on_orbit(local_min_a):
    g = local_min_a.profile
    rotated = g.with_values(np.exp(0.83j) * g.values)
    assert orbit_distance(rotated, g) < 1e-6 * h1_norm(GRID, g.values)
    assert orbit_distance(g, g) < 1e-6


def test_perturbation_size(local_min_a):
    g = local_min_a.profile
    rng = np.random.default_rng(0)
    for v in perturbations(g, 4, 0.0, rng):
        assert orbit_distance(v, g) < 1e-6
    for v in perturbations(g, 4, 1e-3, rng):
        assert abs(v.mass2() / g.mass2() - 1) < 1e-12
        d = orbit_distance(v, g) / h1_norm(GRID, g.values)
        assert 1e-4 < d < 2e-3


def test_standing_wave_virial_flat(local_min_a):
    g = local_min_a.profile
    H, Hp, Hpp = virial_diagnostics(g, TWO_BRANCH_A)
    assert abs(Hp) < 1e-12 and abs(Hpp) < 1e-5
    st = evolve(g, TWO_BRANCH_A, 0.5, 1e-3, log_every=50)
    assert np.max(np.abs(st.column("H") / H - 1)) < 1e-6


def test_log_columns_and_csv():
    u = gaussian(GRID, 1.0, 1.0)
    st = evolve(u, TWO_BRANCH_B, 0.01, 1e-3, log_every=5)
    assert LOG_COLUMNS == ("t", "mass2", "J", "H", "Hp", "P", "grad_norm")
    lines = st.log_csv().splitlines()
    assert lines[0] == ",".join(LOG_COLUMNS)
    assert len(lines) == 1 + len(st.log) == 4
    assert st.column("t")[-1] == pytest.approx(0.01)
    assert set(st.drifts()) == {"mass_rel_per_time", "energy_rel_per_time"}


def test_blowup_factor_stops_run(mountain_a):
    from norm_soliton.functionals import dilate
    u = dilate(mountain_a.profile, 0.1)
    st = evolve(u, TWO_BRANCH_A, 1.0, 1e-5, log_every=5, blowup_factor=2.0, adaptive=True)
    assert st.blown_up and st.t < 1.0
    grad = st.column("grad_norm")
    assert grad[-1] >= 2.0 * grad[0]


def test_evolve_rejects_bad_step():
    u = gaussian(GRID, 1.0, 1.0)
    with pytest.raises(ParameterError):
        evolve(u, TWO_BRANCH_B, 1.0, 0.0)
    with pytest.raises(ParameterError):
        evolve(u, TWO_BRANCH_B, float("nan"), 1e-3)


def test_stability_needs_local_min(mountain_a):
    with pytest.raises(RegimeError):
        stability_experiment(mountain_a, 1, T=0.01)


def test_helpers():
    t = np.array([0.0, 0.1, 0.3, 0.6])
    tc, d2 = second_differences(t, 3 * t**2 + t)
    assert np.allclose(d2, 6.0) and np.allclose(tc, t[1:-1])
    root = blowup_envelope(2.0, 1.0, 0.5)
    assert 2.0 + root - 4 * 0.5 * root**2 == pytest.approx(0.0, abs=1e-12)
