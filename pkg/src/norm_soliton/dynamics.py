"""Time evolution of the focusing Schrodinger-Poisson flow on the radial grid.

The semi-discrete system  i W phi_t = K phi + W V(phi) phi  is Hamiltonian for the
discrete energy, with V = Phi_phi - |phi|^{p-2} - mu |phi|^{q-2}.  Two integrators:

* "strang": half-step phase rotation by V, Crank-Nicolson step of the linear
  part, half-step rotation.  Both substeps are unitary in the weighted norm, so
  mass is conserved to round-off, and the scheme is time-symmetric.
* "cn": the implicit midpoint rule on the full system, solved by fixed-point
  iteration around the linear Crank-Nicolson factorization.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NumericError, ParameterError, RegimeError
from .functionals import dilate, energy, pohozaev_from
from .grid import RadialField, RadialGrid, hartree_values, kinetic_energy_values
from .params import ProblemParams

SCHEMES = ("strang", "cn")
LOG_COLUMNS = ("t", "mass2", "J", "H", "Hp", "P", "grad_norm")


# --- diagnostics -----------------------------------------------------------------

def radial_derivative(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    """d/dr on the nodes, using the even extension through r = 0 and the zero at r_max."""
    r = np.concatenate((-grid.r[::-1], grid.r, [grid.r_max]))
    v = np.concatenate((values[::-1], values, [0.0]))
    return np.gradient(v, r, edge_order=2)[grid.n:2 * grid.n]


def virial_diagnostics(phi: RadialField, prm: ProblemParams) -> tuple[float, float, float]:
    """(H, H', H'') with H = int |x|^2 |phi|^2, H' = 4 Im int conj(phi) x.grad(phi), H'' = 8 P(phi)."""
    grid = phi.grid
    w = grid.weights
    vals = phi.values
    H = float(np.sum(w * grid.r**2 * np.abs(vals) ** 2))
    Hp = float(4.0 * np.imag(np.sum(w * np.conj(vals) * grid.r * radial_derivative(grid, vals))))
    Hpp = 8.0 * pohozaev_from(energy(phi, prm), prm)
    return H, Hp, float(Hpp)


def _log_row(t: float, phi: RadialField, prm: ProblemParams) -> tuple:
    e = energy(phi, prm)
    H, Hp, _ = virial_diagnostics(phi, prm)
    return (t, e.mass2, e.J, H, Hp, pohozaev_from(e, prm), float(np.sqrt(e.T)))


@dataclass
class EvolutionState:
    """Final field plus the sampled diagnostics (t, mass2, J, H, Hp, P, grad_norm)."""

    t: float
    phi: RadialField
    log: list = field(default_factory=list)
    blown_up: bool = False
    steps: int = 0
    wall_time: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([row[LOG_COLUMNS.index(name)] for row in self.log])

    def drifts(self) -> dict:
        """Largest departures of mass and energy from their initial values, per unit time."""
        t = self.column("t")
        span = max(t[-1] - t[0], 1e-300)
        m, J = self.column("mass2"), self.column("J")
        return {"mass_rel_per_time": float(np.max(np.abs(m - m[0])) / m[0] / span),
                "energy_rel_per_time": float(np.max(np.abs(J - J[0])) / max(abs(J[0]), 1.0) / span)}

    def log_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(LOG_COLUMNS)
        for row in self.log:
            wr.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


# --- integrators -----------------------------------------------------------------

def _potential(grid: RadialGrid, vals: np.ndarray, prm: ProblemParams) -> np.ndarray:
    mod = np.abs(vals)
    return hartree_values(grid, mod**2) - mod ** (prm.p - 2) - prm.mu * mod ** (prm.q - 2)


class _Stepper:
    def __init__(self, grid: RadialGrid, prm: ProblemParams, dt: float, scheme: str, free: bool = False):
        if scheme not in SCHEMES:
            raise ParameterError("unknown scheme", scheme=scheme, allowed=list(SCHEMES))
        self.grid, self.prm, self.dt, self.scheme, self.free = grid, prm, dt, scheme, free
        W = sp.diags(grid.weights.astype(complex))
        K = grid.kinetic_matrix.astype(complex)
        self.lhs = splu((W + 0.5j * dt * K).tocsc())
        self.rhs = (W - 0.5j * dt * K).tocsr()

    def linear(self, vals: np.ndarray) -> np.ndarray:
        return self.lhs.solve(self.rhs @ vals)

    def potential(self, vals: np.ndarray) -> np.ndarray:
        if self.free:
            return np.zeros(vals.shape)
        return _potential(self.grid, vals, self.prm)

    def rotate(self, vals: np.ndarray, h: float) -> np.ndarray:
        return np.exp(-1j * h * self.potential(vals)) * vals

    def __call__(self, vals: np.ndarray) -> np.ndarray:
        if self.scheme == "strang":
            half = self.rotate(vals, 0.5 * self.dt)
            return self.rotate(self.linear(half), 0.5 * self.dt)
        return self._midpoint(vals)

    def _midpoint(self, vals: np.ndarray, tol: float = 1e-14, max_iter: int = 50) -> np.ndarray:
        w = self.grid.weights
        base = self.rhs @ vals
        new = self.linear(vals)
        scale = np.sqrt(np.sum(w * np.abs(vals) ** 2))
        for _ in range(max_iter):
            mid = 0.5 * (vals + new)
            nxt = self.lhs.solve(base - 1j * self.dt * w * self.potential(mid) * mid)
            change = np.sqrt(np.sum(w * np.abs(nxt - new) ** 2)) / scale
            new = nxt
            if change < tol:
                return new
        raise NumericError("implicit midpoint iteration did not converge", change=float(change))


def evolve(phi0: RadialField, prm: ProblemParams, T: float, dt: float, scheme: str = "strang",
           log_every: int = 10, blowup_factor: float | None = None, monitor=None,
           adaptive: bool = False, phase_step: float = 0.01, max_halvings: int = 16,
           free: bool = False) -> EvolutionState:
    """Integrate from phi0 over [0, T] (T < 0 runs backward).

    blowup_factor: stop with blown_up set once |grad phi|_2 exceeds this multiple
    of its initial value; the default guard is the grid's resolution limit.
    An adaptive run that would need more than max_halvings step halvings also
    stops with blown_up set.
    monitor(t, phi) may return True to stop early.
    adaptive: shrink the step by powers of two so that dt * max|V| <= phase_step,
    which keeps the splitting accurate while a profile concentrates.
    free: drop the Hartree and power terms from the flow (diagnostics still use prm).
    """
    if not (np.isfinite(T) and np.isfinite(dt) and dt > 0):
        raise ParameterError("need finite T and dt > 0", T=T, dt=dt)
    t0 = time.perf_counter()
    grid = phi0.grid
    sign = 1.0 if T >= 0 else -1.0
    steppers: dict[int, _Stepper] = {}

    def stepper(m: int) -> _Stepper:
        if m not in steppers:
            steppers[m] = _Stepper(grid, prm, sign * dt / 2**m, scheme, free)
        return steppers[m]

    vals = np.asarray(phi0.values, dtype=complex)
    phi = RadialField(grid, vals)
    g0 = np.sqrt(kinetic_energy_values(grid, vals))
    # a collapsing profile saturates on the grid near a tenth of the Nyquist wavenumber
    limit = 0.1 * np.pi / grid.h_min
    guard = limit if blowup_factor is None else min(blowup_factor * g0, limit)
    state = EvolutionState(0.0, phi, [_log_row(0.0, phi, prm)])
    # time is counted in units of the finest admissible step to stay exact
    unit = 2**max_halvings
    total = int(round(abs(T) / dt)) * unit
    ticks = k = 0
    m = 0
    while ticks < total:
        if adaptive:
            vmax = float(np.max(np.abs(_potential(grid, vals, prm))))
            m = 0
            while m < max_halvings and dt / 2**m * vmax > phase_step:
                m += 1
            if dt / 2**m * vmax > phase_step:
                # the potential outran the finest step: the profile is collapsing
                state.blown_up = True
                if state.steps != k:
                    t = sign * ticks / unit * dt
                    phi = RadialField(grid, vals)
                    state.log.append(_log_row(t, phi, prm))
                    state.t, state.phi, state.steps = t, phi, k
                break
            # land exactly on the horizon
            while ticks + unit // 2**m > total:
                m += 1
        vals = stepper(m)(vals)
        ticks += unit // 2**m
        k += 1
        t = sign * ticks / unit * dt
        if k % log_every == 0 or ticks >= total:
            if not np.all(np.isfinite(vals)):
                raise NumericError("evolution produced non-finite values", t=t)
            phi = RadialField(grid, vals)
            row = _log_row(t, phi, prm)
            state.log.append(row)
            state.t, state.phi, state.steps = t, phi, k
            if row[-1] > guard:
                state.blown_up = True
                break
            if monitor is not None and monitor(t, phi):
                break
    state.wall_time = time.perf_counter() - t0
    return state


# --- stability experiments -------------------------------------------------------

@dataclass
class StabilityVerdict:
    kind: str
    """orbit-stable, blow-up or inconclusive"""
    evidence: dict
    epsilon: float | None = None
    delta: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def h1_inner(grid: RadialGrid, u: np.ndarray, v: np.ndarray) -> complex:
    """<u, v> in H^1: the weighted L2 product plus the kinetic form."""
    du = grid.diff @ (grid.r * u)
    dv = grid.diff @ (grid.r * v)
    return complex(np.sum(grid.weights * np.conj(u) * v) + np.sum(grid.flux * np.conj(du) * dv))


def h1_norm(grid: RadialGrid, u: np.ndarray) -> float:
    return float(np.sqrt(max(h1_inner(grid, u, u).real, 0.0)))


def orbit_distance(phi: RadialField, ground: RadialField) -> float:
    """min over theta of |phi - e^{i theta}|ground||_{H^1}, in closed form."""
    g = np.abs(ground.values)
    grid = phi.grid
    d2 = (h1_inner(grid, phi.values, phi.values).real + h1_inner(grid, g, g).real
          - 2.0 * abs(h1_inner(grid, g, phi.values)))
    return float(np.sqrt(max(d2, 0.0)))


def hermite_bumps(grid: RadialGrid, width: float, count: int = 4) -> list[np.ndarray]:
    """Even Hermite functions H_{2k}(r/width) exp(-r^2/(2 width^2)), k < count."""
    x = grid.r / width
    env = np.exp(-0.5 * x * x)
    return [np.polynomial.hermite.hermval(x, [0] * (2 * k) + [1]) * env for k in range(count)]


def perturbations(ground: RadialField, n: int, delta: float, rng: np.random.Generator,
                  modes: int = 4) -> list[RadialField]:
    """Random complex bump combinations at H^1 distance delta*|ground|_{H^1}, projected to the mass sphere."""
    grid = ground.grid
    w = grid.weights
    u = np.abs(ground.values)
    a = ground.norm()
    width = np.sqrt(np.sum(w * grid.r**2 * u * u) / (3.0 * a * a))
    basis = hermite_bumps(grid, width, modes)
    size = delta * h1_norm(grid, u)
    out = []
    for _ in range(n):
        c = rng.normal(size=modes) + 1j * rng.normal(size=modes)
        b = sum(ci * bi for ci, bi in zip(c, basis))
        v = u + size * b / h1_norm(grid, b)
        out.append(RadialField(grid, v).normalized(a))
    return out


def stability_experiment(report, n_perturbations: int = 8, delta: float = 1e-3, T: float = 20.0,
                         dt: float = 1e-3, epsilon_factor: float = 10.0, seed: int = 0,
                         rho0: float | None = None, scheme: str = "strang",
                         log_every: int = 100) -> StabilityVerdict:
    """Evolve perturbations of a local minimizer and track the H^1 distance to its orbit."""
    if report.kind != "local-min":
        raise RegimeError("stability experiment needs a local-min solution", kind=report.kind)
    ground = report.profile
    prm = report.prm
    rng = np.random.default_rng(seed)
    eps = epsilon_factor * delta * h1_norm(ground.grid, np.abs(ground.values))
    runs = []
    for phi0 in perturbations(ground, n_perturbations, delta, rng):
        dist = [orbit_distance(phi0, ground)]
        peak_grad = [np.sqrt(kinetic_energy_values(ground.grid, phi0.values))]

        def monitor(t, phi):
            dist.append(orbit_distance(phi, ground))
            peak_grad.append(np.sqrt(kinetic_energy_values(phi.grid, phi.values)))
            return False

        st = evolve(phi0, prm, T, dt, scheme, log_every=log_every, monitor=monitor)
        runs.append({"initial_distance": dist[0], "max_distance": max(dist),
                     "max_grad": max(peak_grad), "J0": energy(phi0, prm).J,
                     "left_ball": bool(rho0 is not None and max(peak_grad) >= rho0),
                     "blown_up": st.blown_up, **st.drifts()})
    sup = max(r["max_distance"] for r in runs)
    left = any(r["left_ball"] for r in runs)
    kind = "orbit-stable" if sup <= eps and not left and not any(r["blown_up"] for r in runs) else "inconclusive"
    evidence = {"max_orbit_distance": sup, "runs": runs, "T": T, "dt": dt, "left_ball": left,
                "ground_h1": h1_norm(ground.grid, np.abs(ground.values))}
    return StabilityVerdict(kind, evidence, epsilon=eps, delta=delta)


def blowup_envelope(H0: float, Hp0: float, eta: float) -> float:
    """Positive root of H0 + Hp0 t - 4 eta t^2, an upper bound on the blow-up time."""
    return float((Hp0 + np.sqrt(Hp0 * Hp0 + 16.0 * eta * H0)) / (8.0 * eta))


def second_differences(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centered second differences of a (possibly non-uniformly) sampled series."""
    h1, h2 = t[1:-1] - t[:-2], t[2:] - t[1:-1]
    d2 = 2.0 * (h1 * y[2:] - (h1 + h2) * y[1:-1] + h2 * y[:-2]) / (h1 * h2 * (h1 + h2))
    return t[1:-1], d2


def instability_experiment(report, rho: float = 0.1, T: float = 1.0, dt: float = 1e-5,
                           growth: float = 10.0, scheme: str = "strang",
                           log_every: int = 5) -> tuple[StabilityVerdict, EvolutionState]:
    """Evolve the dilated mountain-pass profile rho*u and test the blow-up certificate."""
    if report.kind != "mountain-pass":
        raise RegimeError("instability experiment needs a mountain-pass solution", kind=report.kind)
    if not rho > 0:
        raise ParameterError("rho must be positive", rho=rho)
    prm = report.prm
    u_rho = dilate(report.profile, rho).normalized(prm.a)
    e0 = energy(u_rho, prm)
    eta = report.level - e0.J
    if not eta > 0:
        raise RegimeError("dilated datum is not below the mountain-pass level", eta=eta)
    H0, Hp0, _ = virial_diagnostics(u_rho, prm)
    t_env = blowup_envelope(H0, Hp0, eta)
    st = evolve(u_rho, prm, T, dt, scheme, log_every=log_every, blowup_factor=growth, adaptive=True)
    t, H, P, J = st.column("t"), st.column("H"), st.column("P"), st.column("J")
    grad = st.column("grad_norm")
    reached = bool(grad[-1] >= growth * grad[0])
    tc, d2 = second_differences(t, H)
    concave = bool(np.all(d2 <= 0.0))
    p_max = float(np.max(P))
    evidence = {"eta": eta, "J_datum": e0.J, "level": report.level,
                "envelope_root": t_env, "growth_time": float(t[-1]) if reached else None,
                "growth_reached": reached, "H_concave": concave, "max_P": p_max,
                "P_bound_held": bool(p_max <= -eta), "max_H_second_difference": float(np.max(d2)),
                "P_datum": float(pohozaev_from(e0, prm)),
                "energy_drift": float(np.max(np.abs(J - J[0])) / abs(J[0])), "steps": st.steps}
    ok = reached and concave and p_max <= -eta and t[-1] <= t_env
    return StabilityVerdict("blow-up" if ok else "inconclusive", evidence), st
