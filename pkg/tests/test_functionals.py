import numpy as np
import pytest
from cases import DEFOCUSING_A, ORACLE_GAUSSIAN, TWO_BRANCH_A, TWO_BRANCH_B
from hypothesis import given, settings
from hypothesis import strategies as st

from norm_soliton import (ParameterError, ProblemParams, RadialField, energy, fiber_profile,
                          nehari_residual, pohozaev, pohozaev_identity_residual, thresholds)
from norm_soliton.functionals import (dilate, fiber_components, fiber_map,
                                      fiber_second_derivative, fiber_table)
from norm_soliton.grid import gaussian, make_grid
from norm_soliton.solvers import extract_lambda, solver_grid

GRID = solver_grid()


def random_sphere_field(grid, a, rng, terms=3):
    r = grid.r
    vals = np.zeros(grid.n)
    for _ in range(terms):
        c, w, x0 = rng.uniform(0.2, 1.0), rng.uniform(0.5, 2.5), rng.uniform(0.0, 2.0)
        vals += c * np.exp(-((r - x0) / w) ** 2)
    return RadialField(grid, vals).normalized(a)


def test_zero_field():
    z = RadialField(GRID, np.zeros(GRID.n))
    e = energy(z, TWO_BRANCH_B)
    assert (e.T, e.D, e.Pp, e.Qq, e.mass2, e.J) == (0, 0, 0, 0, 0, 0)
    assert pohozaev(z, TWO_BRANCH_B) == 0.0
    assert nehari_residual(z, 3.7, TWO_BRANCH_B) == 0.0
    assert pohozaev_identity_residual(z, 3.7, TWO_BRANCH_B) == 0.0


def test_energy_term_by_term():
    prm = ProblemParams(a=1.0, mu=1.0, p=4.0, q=2.2)
    g = make_grid(40.0, 2048, "uniform")
    u = gaussian(g, 1.0, prm.a)
    e = energy(u, prm)
    c = 1.0 / ORACLE_GAUSSIAN["mass2"]  # amplitude^2 of the normalized Gaussian
    T, D, P4 = ORACLE_GAUSSIAN["kinetic"] * c, ORACLE_GAUSSIAN["double"] * c**2, ORACLE_GAUSSIAN["power4"] * c**2
    # |u|_q^q for q = 2.2 in closed form: amplitude^q (pi / q)^{3/2}
    Qq = c ** (prm.q / 2) * (np.pi / prm.q) ** 1.5
    assert e.T == pytest.approx(T, rel=1e-7)
    assert e.D == pytest.approx(D, rel=1e-7)
    assert e.Pp == pytest.approx(P4, rel=1e-12)
    assert e.Qq == pytest.approx(Qq, rel=1e-12)
    assert e.J == pytest.approx(T / 2 + D / 4 - P4 / 4 - Qq / 2.2, rel=1e-7)
    assert e.J == e.T / 2 + e.D / 4 - e.Pp / prm.p - prm.mu * e.Qq / prm.q


def test_zero_coupling_drops_lower_power():
    u = gaussian(GRID, 1.0, 1.0)
    e1 = energy(u, ProblemParams(1.0, 0.0, 4.0, 2.2))
    e2 = energy(u, ProblemParams(1.0, 0.0, 4.0, 2.5))
    assert e1.J == e2.J


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pohozaev_is_fiber_derivative(seed):
    rng = np.random.default_rng(seed)
    u = random_sphere_field(GRID, 1.3, rng)
    prm = TWO_BRANCH_A
    fm = fiber_map(u, prm)
    h = 1e-4
    fd = (fm.psi(h) - fm.psi(-h)) / (2 * h)
    assert abs(fd - pohozaev(u, prm)) < 1e-6 * fm.scale
    fd2 = (fm.psi(h) - 2 * fm.psi(0.0) + fm.psi(-h)) / h**2
    assert abs(fd2 - fiber_second_derivative(u, prm)) < 1e-5 * fm.scale


def test_identity_combination_and_multiplier():
    rng = np.random.default_rng(3)
    u = random_sphere_field(GRID, 1.0, rng)
    prm = TWO_BRANCH_B
    lam = 0.37
    combo = 1.5 * nehari_residual(u, lam, prm) - pohozaev_identity_residual(u, lam, prm)
    assert combo == pytest.approx(pohozaev(u, prm), rel=1e-12, abs=1e-14)
    lam = extract_lambda(u, prm)
    e = energy(u, prm)
    assert abs(nehari_residual(u, lam, prm)) < 1e-14 * (e.T + e.D + e.Pp + e.Qq + abs(lam) * e.mass2)


def test_dilation_mass_and_fiber_consistency():
    """psi'(s) from the scalar formula against P of the resampled field."""
    rng = np.random.default_rng(5)
    u = random_sphere_field(GRID, 1.0, rng)
    prm = TWO_BRANCH_B
    fm = fiber_map(u, prm)
    for s in rng.uniform(-1.0, 1.0, 10):
        v = dilate(u, s)
        assert abs(v.mass2() / u.mass2() - 1) < 1e-8
        assert abs(pohozaev(v, prm) - fm.dpsi(s)) < 1e-4 * fm.magnitude(s)
        assert abs(energy(v, prm).J - fm.psi(s)) < 1e-4 * fm.magnitude(s)


def test_two_critical_regime():
    prm = TWO_BRANCH_B
    assert prm.a < thresholds(prm).abar0
    u = gaussian(GRID, 1.0, prm.a)
    fp = fiber_profile(u, prm)
    assert fp.regime == "two-critical"
    assert fp.s_u < fp.c_u < fp.t_u < fp.d_u
    assert fp.psi_s < 0 < fp.psi_t
    assert fp.d2psi_s > 0 > fp.d2psi_t
    fm = fiber_map(u, prm)
    scale = fm.scale
    for s in fp.critical_points:
        assert abs(fm.dpsi(s)) < 1e-10 * scale
    for z in fp.zeros:
        assert abs(fm.psi(z)) < 1e-10 * scale
    # psi -> 0 from below as s -> -infinity when q gamma_q < 1
    lead = prm.mu * np.exp(-10.0 * prm.q_gamma_q) * fm.Qq / prm.q
    assert -1.01 * lead < fm.psi(-10.0) < 0.0
    assert fm.psi(-10.0) == pytest.approx(-lead, rel=1e-2)


def test_one_critical_regime():
    prm = ProblemParams(a=1.0, mu=-0.5, p=4.0, q=2.5)
    fp = fiber_profile(gaussian(GRID, 1.0, prm.a), prm)
    assert fp.regime == "one-critical"
    assert fp.psi_t > 0 and fp.d2psi_t < 0
    assert len(fp.critical_points) == 1


@pytest.mark.parametrize("sigma", [-0.7, 0.25, 1.1])
def test_fiber_shift_covariance(sigma):
    prm = TWO_BRANCH_A
    u = gaussian(GRID, 1.0, prm.a)
    base = fiber_profile(u, prm)
    shifted = fiber_profile(dilate(u, sigma), prm)
    assert shifted.regime == base.regime
    for x, y in zip(base.critical_points, shifted.critical_points):
        assert y == pytest.approx(x - sigma, abs=1e-5)


def test_fiber_components_and_table():
    prm = DEFOCUSING_A
    u = gaussian(GRID, 1.0, prm.a)
    T, D, Pp, Qq = fiber_components(u, prm)
    e = energy(u, prm)
    assert (T, D, Pp, Qq) == (e.T, e.D, e.Pp, e.Qq)
    tab = fiber_table(u, prm, np.linspace(-1, 1, 5))
    assert tab.shape == (5, 3)
    assert tab[2, 1] == pytest.approx(e.J, rel=1e-14)
    assert tab[2, 2] == pytest.approx(pohozaev(u, prm), rel=1e-14)


def test_parameter_validation():
    with pytest.raises(ParameterError):
        ProblemParams(1.0, 1.0, 4.0, 4.0)
    with pytest.raises(ParameterError):
        ProblemParams(-1.0, 1.0, 4.0, 2.2)
    with pytest.raises(ParameterError):
        ProblemParams(1.0, 1.0, 7.0, 2.2)
    with pytest.raises(ParameterError):
        ProblemParams(1.0, float("nan"), 4.0, 2.2)
    assert ProblemParams(1.0, 1.0, 10 / 3, 2.2).p_gamma_p == 2.0
    assert ProblemParams(1.0, 1.0, 4.0, 8 / 3).q_gamma_q == pytest.approx(1.0, abs=1e-15)
