"""Constrained critical points of the energy on the mass sphere.

Two globalizations feed a common Newton polish:

* local minimization on the gradient ball by preconditioned projected
  gradient descent with Armijo backtracking;
* mountain-pass search by minimizing the fiber maximum, alternating a
  rescale onto the fiber's maximum with a projected gradient step.

The polish solves the discrete Euler-Lagrange system (u, lambda) with Newton's
method and GMRES, so converged profiles are critical points of the discrete
energy to round-off.  Kind-specific invariants are re-checked afterwards.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, splu

from .constants import ThresholdReport, thresholds
from .errors import (BoundaryTrapError, BranchCaptureError, NumericError,
                     RegimeError, SolverError, StagnationError)
from .functionals import (EnergyBreakdown, FiberProfile, dilate, energy,
                          fiber_map, fiber_profile, fiber_profile_from_map,
                          identity_scales, nehari_residual,
                          pohozaev_from, pohozaev_identity_residual)
from .grid import (RadialField, RadialGrid, gaussian, hartree_values,
                   kinetic_energy_values, neg_laplacian_values)
from .params import ProblemParams
from .regimes import classify_regime

LOCAL_MIN = "local-min"
MOUNTAIN_PASS = "mountain-pass"
GLOBAL_MIN = "global-min"


@dataclass(frozen=True)
class ConstraintSet:
    """Mass sphere S_a intersected with the gradient ball |grad u|_2 <= rho0."""

    a: float
    rho0: float | None = None

    def contains(self, u: RadialField, rtol: float = 1e-10) -> bool:
        ok = abs(u.norm() - self.a) <= rtol * self.a
        if self.rho0 is not None:
            ok = ok and np.sqrt(kinetic_energy_values(u.grid, u.values)) <= self.rho0
        return bool(ok)


@dataclass
class SolverOptions:
    tol: float = 1e-8
    """projected-gradient stopping threshold, times (1 + |level|)"""
    max_iter: int = 5000
    tau_min: float = 1e-6
    tau_max: float = 1.0
    armijo: float = 1e-4
    trap_steps: int = 60
    """consecutive cap rejections that count as a boundary trap"""
    newton: bool = True
    newton_switch: float = 1e-4
    """relative projected-gradient size at which the Newton polish takes over"""
    stall_switch: float = 1e-2
    """relative gradient below which a stalled mountain-pass search is handed to Newton"""
    rescale_above: float = 0.1
    """|t_u| beyond which the mountain-pass iterate is physically rescaled"""
    newton_tol: float = 1e-12
    newton_max_iter: int = 30
    pohozaev_tol: float = 1e-6


@dataclass
class SolveReport:
    profile: RadialField
    level: float
    lam: float
    residuals: dict
    fiber: FiberProfile
    kind: str
    prm: ProblemParams
    energy: EnergyBreakdown
    iterations: int = 0
    newton_iterations: int = 0
    wall_time: float = 0.0
    grad_norm: float = 0.0
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.prm.to_dict(),
            "grid": self.profile.grid.to_dict(),
            "level": self.level,
            "lambda": self.lam,
            "grad_norm": self.grad_norm,
            "residuals": dict(self.residuals),
            "energy": self.energy.to_dict(),
            "fiber": self.fiber.to_dict(),
            "iterations": self.iterations,
            "newton_iterations": self.newton_iterations,
            "wall_time": self.wall_time,
        }


def solver_grid() -> RadialGrid:
    """Default grid for solves: r_max = 40, n = 2048, graded toward the origin.

    Mountain-pass profiles are narrow (width ~ 1/sqrt(lambda)), and the grading
    resolves them without giving up the far field.
    """
    return RadialGrid(40.0, 2048, "graded", 6.0)


# --- gradient and multiplier ------------------------------------------------------

def _nonlinearity(values: np.ndarray, prm: ProblemParams) -> np.ndarray:
    mod = np.abs(values)
    return mod ** (prm.p - 2) * values + prm.mu * mod ** (prm.q - 2) * values


def el_gradient_values(grid: RadialGrid, values: np.ndarray, prm: ProblemParams) -> np.ndarray:
    phi = hartree_values(grid, np.abs(values) ** 2)
    return neg_laplacian_values(grid, values) + phi * values - _nonlinearity(values, prm)


def el_gradient(u: RadialField, prm: ProblemParams) -> RadialField:
    """G(u) = -Delta u + Phi_u u - |u|^{p-2}u - mu |u|^{q-2}u, the L2 gradient of J."""
    return u.with_values(el_gradient_values(u.grid, u.values, prm))


def extract_lambda(u: RadialField, prm: ProblemParams, e: EnergyBreakdown | None = None) -> float:
    """Multiplier that annihilates the Nehari combination."""
    e = e or energy(u, prm)
    if e.mass2 == 0.0:
        raise NumericError("multiplier undefined for the zero field")
    return (-e.T - e.D + e.Pp + prm.mu * e.Qq) / e.mass2


def solution_residuals(u: RadialField, lam: float, prm: ProblemParams,
                       e: EnergyBreakdown | None = None) -> dict:
    e = e or energy(u, prm)
    g = el_gradient_values(u.grid, u.values, prm) + lam * u.values
    w = u.grid.weights
    scales = identity_scales(e, lam, prm)
    return {
        "euler_lagrange_L2": float(np.sqrt(np.sum(w * np.abs(g) ** 2) / e.mass2)),
        "nehari": abs(nehari_residual(u, lam, prm, e)) / scales["nehari"],
        "pohozaev_identity": abs(pohozaev_identity_residual(u, lam, prm, e)) / scales["pohozaev_identity"],
        "pohozaev_P": abs(pohozaev_from(e, prm)) / scales["pohozaev_P"],
    }


# --- discrete machinery -------------------------------------------------------

class _Precond:
    """(-Delta + sigma)^{-1} in the weighted inner product, by sparse LU."""

    def __init__(self, grid: RadialGrid, sigma: float):
        self.grid, self.sigma = grid, sigma
        mat = grid.kinetic_matrix + sp.diags(sigma * grid.weights)
        self.lu = splu(mat.tocsc())

    def __call__(self, g: np.ndarray) -> np.ndarray:
        return self.lu.solve(self.grid.weights * g)


@dataclass
class _State:
    values: np.ndarray
    e: EnergyBreakdown
    lam: float
    grad: np.ndarray
    """tangent gradient G + lambda u"""
    gnorm: float


def _state(grid: RadialGrid, values: np.ndarray, prm: ProblemParams) -> _State:
    u = RadialField(grid, values)
    e = energy(u, prm)
    lam = extract_lambda(u, prm, e)
    g = el_gradient_values(grid, values, prm) + lam * values
    return _State(values, e, lam, g, float(np.sqrt(np.sum(grid.weights * g * g))))


def _direction(grid: RadialGrid, st: _State, pre: _Precond) -> np.ndarray:
    """Preconditioned descent direction tangent to the mass sphere."""
    w = grid.weights
    pg = pre(st.grad)
    pu = pre(st.values)
    c = np.sum(w * st.values * pg) / np.sum(w * st.values * pu)
    return -(pg - c * pu)


def _normalize(grid: RadialGrid, values: np.ndarray, a: float) -> np.ndarray:
    return values * (a / np.sqrt(np.sum(grid.weights * values * values)))


def _sigma(st: _State) -> float:
    # shift keeps the preconditioner positive and on the scale of the operator
    return max(abs(st.lam), 0.1 * st.e.T / st.e.mass2, 1e-3)


FLOOR_ACCEPT = 1e3
"""a stalled Newton residual within this factor of the tolerance counts as converged"""


def newton_polish(u: RadialField, prm: ProblemParams, lam: float | None = None,
                  tol: float = 1e-12, max_iter: int = 30) -> tuple[RadialField, float, int]:
    """Newton-Krylov solve of G(u) + lambda u = 0 with |u|_2 = a for real u."""
    grid = u.grid
    w = grid.weights
    x = np.array(u.values, dtype=float)
    a2 = prm.a**2
    lam = extract_lambda(u, prm) if lam is None else lam

    def residual(x, lam):
        f1 = w * (el_gradient_values(grid, x, prm) + lam * x)
        f2 = 0.5 * (np.sum(w * x * x) - a2)
        return f1, f2

    def scale_of(x):
        return np.sqrt(np.sum(w * x * x))

    it = 0
    prev = np.inf
    for it in range(1, max_iter + 1):
        f1, f2 = residual(x, lam)
        rn = np.sqrt(np.sum(f1 * f1 / w)) / scale_of(x)
        target = tol * max(1.0, abs(lam))
        if rn < target and abs(f2) < tol * a2:
            break
        # quadratic convergence has ended at the round-off floor of the operator
        if rn < FLOOR_ACCEPT * target and rn > 0.5 * prev and abs(f2) < tol * a2:
            break
        prev = rn
        mod = np.abs(x)
        phi = hartree_values(grid, mod**2)
        fprime = (prm.p - 1) * mod ** (prm.p - 2) + prm.mu * (prm.q - 1) * mod ** (prm.q - 2)
        local = phi + lam - fprime
        K = grid.kinetic_matrix
        n = grid.n

        def matvec(z):
            du, dl = z[:n], z[n]
            top = K @ du + w * (local * du + x * hartree_values(grid, 2 * x * du) + dl * x)
            return np.concatenate((top, [np.sum(w * x * du)]))

        # local part plus 2 u^2 times the diagonal of the Hartree kernel, bordered by u
        self_term = 2 * x * x * (w / grid.r - grid.kink)
        loc = (K + sp.diags(w * (local + self_term))).tocsc()
        wx = sp.csc_matrix((w * x).reshape(-1, 1))
        border = sp.bmat([[loc, wx], [wx.T, None]], format="csc")
        try:
            lu = splu(border)
        except RuntimeError:
            lu = splu(border + sp.diags(np.r_[1e-10 * w, 0.0]).tocsc())
        M = LinearOperator((n + 1, n + 1), matvec=lu.solve)
        A = LinearOperator((n + 1, n + 1), matvec=matvec)
        rhs = -np.concatenate((f1, [f2]))
        dz, info = gmres(A, rhs, M=M, rtol=1e-11, atol=0.0, restart=60, maxiter=3)
        if info < 0 or not np.all(np.isfinite(dz)):
            raise SolverError("Newton linear solve failed", info=info, iteration=it)
        # damped step on the residual norm
        step = 1.0
        r0 = np.sqrt(np.sum(f1 * f1 / w) + f2 * f2)
        while True:
            xt, lt = x + step * dz[:n], lam + step * dz[n]
            g1, g2 = residual(xt, lt)
            if np.sqrt(np.sum(g1 * g1 / w) + g2 * g2) < (1 - 1e-4 * step) * r0 or step < 1e-3:
                break
            step *= 0.5
        x, lam = xt, lt
    else:
        raise SolverError("Newton polish did not converge", iterations=max_iter)
    x = _normalize(grid, x, prm.a)
    return RadialField(grid, x), float(lam), it


def _finish(grid: RadialGrid, values: np.ndarray, prm: ProblemParams, kind: str,
            opts: SolverOptions, iters: int, t0: float, history: list) -> SolveReport:
    u = RadialField(grid, values)
    newton_its = 0
    if opts.newton:
        u, _, newton_its = newton_polish(u, prm, tol=opts.newton_tol, max_iter=opts.newton_max_iter)
    e = energy(u, prm)
    lam = extract_lambda(u, prm, e)
    st = _state(grid, u.values, prm)
    return SolveReport(profile=u, level=e.J, lam=lam, residuals=solution_residuals(u, lam, prm, e),
                       fiber=fiber_profile(u, prm), kind=kind, prm=prm, energy=e,
                       iterations=iters, newton_iterations=newton_its,
                       wall_time=time.perf_counter() - t0, grad_norm=st.gnorm, history=history)


# --- initial data ---------------------------------------------------------------

def default_init(grid: RadialGrid, prm: ProblemParams, width: float = 1.0) -> RadialField:
    return gaussian(grid, width, prm.a)


def fiber_descend_init(u: RadialField, prm: ProblemParams) -> RadialField:
    """Move u along its fiber to the local minimum s_u of the fiber map."""
    u = u.normalized(prm.a)
    fp = fiber_profile(u, prm)
    if fp.s_u is None:
        raise RegimeError("fiber map has no local minimum", regime=fp.regime)
    return dilate(u, fp.s_u)


def fiber_ascend_init(u: RadialField, prm: ProblemParams) -> RadialField:
    """Move u along its fiber to the maximum t_u of the fiber map."""
    u = u.normalized(prm.a)
    fp = fiber_profile(u, prm)
    if fp.t_u is None:
        raise RegimeError("fiber map has no maximum", regime=fp.regime)
    return dilate(u, fp.t_u)


# --- local minimization -----------------------------------------------------------

def _minimize(grid: RadialGrid, values: np.ndarray, prm: ProblemParams, opts: SolverOptions,
              rho0: float | None, history: list) -> tuple[np.ndarray, int]:
    st = _state(grid, _normalize(grid, values, prm.a), prm)
    if rho0 is not None and st.e.T > rho0**2:
        raise RegimeError("initial field lies outside the gradient ball", grad=np.sqrt(st.e.T), rho0=rho0)
    pre = _Precond(grid, _sigma(st))
    tau = opts.tau_max
    pinned = 0
    it = 0
    for it in range(1, opts.max_iter + 1):
        history.append((st.e.J, st.gnorm))
        scale = 1.0 + abs(st.e.J)
        if st.gnorm < opts.tol * scale or (opts.newton and st.gnorm < opts.newton_switch * scale):
            return st.values, it
        if it % 50 == 0:
            pre = _Precond(grid, _sigma(st))
        d = _direction(grid, st, pre)
        slope = float(np.sum(grid.weights * st.grad * d))
        tau = min(2.0 * tau, opts.tau_max)
        capped = False
        while True:
            trial = _normalize(grid, st.values + tau * d, prm.a)
            nt = _state(grid, trial, prm)
            capped = rho0 is not None and nt.e.T > rho0**2
            if not capped and nt.e.J <= st.e.J + opts.armijo * tau * slope:
                break
            tau *= 0.5
            if tau < opts.tau_min:
                if capped:
                    pinned += 1
                    if pinned >= opts.trap_steps:
                        raise BoundaryTrapError("iterate pinned at the gradient cap",
                                                iterations=it, rho0=rho0)
                    break
                raise StagnationError("line search failed to decrease the energy",
                                      iterations=it, grad_norm=st.gnorm)
        if capped:
            tau = opts.tau_min
            continue
        pinned = 0
        st = nt
    raise SolverError("projected gradient did not converge", iterations=opts.max_iter,
                      grad_norm=st.gnorm, recent=history[-5:])


def _check_local_min_regime(prm: ProblemParams, report: ThresholdReport) -> None:
    tag = classify_regime(prm, report)
    if not tag.local_min:
        raise RegimeError("local minimizer requires mu > 0, q in (2, 8/3), p in (10/3, 6), a < abar0",
                          regime=tag.tag, thresholds=report.to_dict())


def ground_state_local_min(prm: ProblemParams, init: RadialField | None = None,
                           opts: SolverOptions | None = None, grid: RadialGrid | None = None,
                           report: ThresholdReport | None = None) -> SolveReport:
    """Minimize the energy on S_a within the gradient ball of radius rho0."""
    t0 = time.perf_counter()
    opts = opts or SolverOptions()
    report = report or thresholds(prm)
    _check_local_min_regime(prm, report)
    if init is None:
        init = default_init(grid or solver_grid(), prm)
    grid = init.grid
    u0 = fiber_descend_init(init, prm)
    history: list = []
    values, iters = _minimize(grid, np.real(u0.values).astype(float), prm, opts, report.rho0, history)
    rep = _finish(grid, values, prm, LOCAL_MIN, opts, iters, t0, history)
    cap = report.rho0
    psi2 = fiber_map(rep.profile, prm).d2psi(0.0)
    if not (rep.level < 0 and rep.energy.T <= cap**2 and psi2 > 0):
        raise BranchCaptureError("polished solution left the local-minimum branch",
                                 level=rep.level, grad=np.sqrt(rep.energy.T), rho0=cap, d2psi=float(psi2))
    return rep


def energy_minimizer(prm: ProblemParams, init: RadialField | None = None,
                     opts: SolverOptions | None = None, grid: RadialGrid | None = None) -> SolveReport:
    """Minimize the energy over the whole mass sphere (bounded-below cases)."""
    t0 = time.perf_counter()
    opts = opts or SolverOptions()
    if init is None:
        init = default_init(grid or solver_grid(), prm)
    grid = init.grid
    u0 = init.normalized(prm.a)
    fp = fiber_profile(u0, prm)
    if fp.s_u is not None:
        u0 = dilate(u0, fp.s_u)
    history: list = []
    values, iters = _minimize(grid, np.real(u0.values).astype(float), prm, opts, None, history)
    return _finish(grid, values, prm, GLOBAL_MIN, opts, iters, t0, history)


# --- mountain pass --------------------------------------------------------------

def _fiber_state(grid: RadialGrid, values: np.ndarray, prm: ProblemParams) -> tuple[_State, float]:
    """Fiber maximum M(u) = max_s psi_u(s) and its tangent gradient.

    M is a smooth function of the grid values: by the envelope theorem its
    gradient is the component gradients weighted by the fiber factors at t_u,
    so no resampling enters the line search.
    """
    u = RadialField(grid, values)
    e = energy(u, prm)
    fm = fiber_map(u, prm)
    fp = fiber_profile_from_map(fm)
    if fp.t_u is None:
        raise RegimeError("fiber map lost its maximum", regime=fp.regime)
    t = fp.t_u
    mod = np.abs(values)
    g = (np.exp(2 * t) * neg_laplacian_values(grid, values)
         + np.exp(t) * hartree_values(grid, mod**2) * values
         - np.exp(prm.p_gamma_p * t) * mod ** (prm.p - 2) * values
         - prm.mu * np.exp(prm.q_gamma_q * t) * mod ** (prm.q - 2) * values)
    w = grid.weights
    lam = -float(np.sum(w * g * values)) / e.mass2
    g = g + lam * values
    st = _State(values, e, lam, g, float(np.sqrt(np.sum(w * g * g))))
    return st, t, fp.psi_t


def _drop_dilation(grid: RadialGrid, values: np.ndarray, d: np.ndarray, eps: float = 1e-4) -> np.ndarray:
    """Remove from d its components along u and along the dilation generator 1.5u + r u'.

    M is flat along dilations in the continuum, so on the grid that direction
    only carries discretization error and descent must not follow it.
    """
    w = grid.weights
    u = RadialField(grid, values)
    gen = (dilate(u, eps).values - dilate(u, -eps).values) / (2 * eps)
    for b in (values, gen - np.sum(w * gen * values) / np.sum(w * values * values) * values):
        d = d - np.sum(w * d * b) / np.sum(w * b * b) * b
    return d


def _check_mountain_regime(prm: ProblemParams, report: ThresholdReport) -> None:
    tag = classify_regime(prm, report)
    allowed = tag.mountain_pass or tag.tag in ("TH5-defocusing", "T1-both-supercritical")
    if not allowed:
        raise RegimeError("mountain-pass solution is not certified for these parameters",
                          regime=tag.tag, thresholds=report.to_dict())


def mountain_pass(prm: ProblemParams, init: RadialField | None = None,
                  opts: SolverOptions | None = None, grid: RadialGrid | None = None,
                  report: ThresholdReport | None = None, certify: bool = True) -> SolveReport:
    """Minimize M(u) = max_s J(s*u) over S_a, then rescale onto the fiber maximum.

    The iterate is physically rescaled only when its fiber maximum drifts past
    opts.rescale_above, which keeps it resolved on the grid.
    """
    t0 = time.perf_counter()
    opts = opts or SolverOptions()
    if certify:
        _check_mountain_regime(prm, report or thresholds(prm))
    if init is None:
        init = default_init(grid or solver_grid(), prm)
    grid = init.grid
    w = grid.weights

    def rescaled(values, t):
        return _normalize(grid, dilate(RadialField(grid, values), t).values, prm.a)

    values = np.real(fiber_ascend_init(init, prm).values).astype(float)
    st, t_u, top = _fiber_state(grid, _normalize(grid, values, prm.a), prm)
    pre = _Precond(grid, _sigma(st))
    history: list = []
    tau = opts.tau_max
    it = 0
    for it in range(1, opts.max_iter + 1):
        if abs(t_u) > opts.rescale_above:
            st, t_u, top = _fiber_state(grid, rescaled(st.values, t_u), prm)
        if top < 0:
            raise BranchCaptureError("mountain-pass level fell below zero", level=top, iterations=it)
        # the dilation component of the gradient is discretization error, not slope
        gnorm = float(np.sqrt(np.sum(w * _drop_dilation(grid, st.values, st.grad) ** 2)))
        history.append((top, gnorm))
        scale = 1.0 + abs(top)
        if gnorm < opts.tol * scale or (opts.newton and gnorm < opts.newton_switch * scale):
            break
        if it % 50 == 0:
            pre = _Precond(grid, _sigma(st))
        d = _drop_dilation(grid, st.values, _direction(grid, st, pre))
        slope = float(np.sum(w * st.grad * d))
        if slope >= 0:
            d = _drop_dilation(grid, st.values, -st.grad)
            slope = float(np.sum(w * st.grad * d))
        tau = min(2.0 * tau, opts.tau_max)
        while True:
            trial = _normalize(grid, st.values + tau * d, prm.a)
            try:
                nt, nt_u, m_trial = _fiber_state(grid, trial, prm)
            except RegimeError:
                m_trial = np.inf
            if m_trial <= top + opts.armijo * tau * slope:
                break
            tau *= 0.5
            if tau < opts.tau_min:
                break
        if tau < opts.tau_min:
            # the line search has hit the noise floor; Newton can take over if close
            if opts.newton and gnorm < opts.stall_switch * scale:
                break
            raise StagnationError("fiber maximum does not decrease", iterations=it,
                                  grad_norm=gnorm, level=top)
        st, t_u, top = nt, nt_u, m_trial
    else:
        raise SolverError("mountain-pass descent did not converge", iterations=opts.max_iter,
                          grad_norm=st.gnorm, recent=history[-5:])
    values = rescaled(st.values, t_u) if t_u != 0.0 else st.values
    rep = _finish(grid, values, prm, MOUNTAIN_PASS, opts, it, t0, history)
    psi2 = fiber_map(rep.profile, prm).d2psi(0.0)
    if not (rep.level > 0 and psi2 < 0):
        raise BranchCaptureError("polished solution left the mountain-pass branch",
                                 level=rep.level, d2psi=float(psi2))
    return rep


# --- continuation ---------------------------------------------------------------

def h1_distance(u: RadialField, v: RadialField) -> float:
    d = u.values - v.values
    return float(np.sqrt(kinetic_energy_values(u.grid, d) + np.sum(u.grid.weights * np.abs(d) ** 2)))


@dataclass
class ContinuationResult:
    values: list
    """continuation parameter at each step"""
    reports: list
    distances: list
    """H1 distance between consecutive profiles"""
    lambda_gaps: list
    limit: SolveReport | None = None
    """direct solve at the limiting parameter"""

    @property
    def ratios(self) -> list:
        return [a / b for a, b in zip(self.distances, self.distances[1:]) if b > 0]

    @property
    def lambda_ratios(self) -> list:
        return [a / b for a, b in zip(self.lambda_gaps, self.lambda_gaps[1:]) if b > 0]

    def to_dict(self) -> dict:
        return {"values": list(self.values), "distances": self.distances,
                "lambda_gaps": self.lambda_gaps, "ratios": self.ratios,
                "lambda_ratios": self.lambda_ratios,
                "levels": [r.level for r in self.reports],
                "lambdas": [r.lam for r in self.reports],
                "limit": None if self.limit is None else self.limit.to_dict()}


def _continue(prm_of, params: list, init: RadialField, opts: SolverOptions) -> tuple[list, list, list]:
    reports = []
    u = init
    for x in params:
        rep = mountain_pass(prm_of(x), u, opts, certify=False)
        reports.append(rep)
        u = rep.profile
    dist = [h1_distance(a.profile, b.profile) for a, b in zip(reports, reports[1:])]
    gaps = [abs(a.lam - b.lam) for a, b in zip(reports, reports[1:])]
    return reports, dist, gaps


def continuation_mu_to_zero(prm: ProblemParams, steps: int = 5, init: RadialField | None = None,
                            opts: SolverOptions | None = None, grid: RadialGrid | None = None,
                            ) -> ContinuationResult:
    """Mountain-pass family along mu_k = mu / 2^k, warm-started, plus the mu = 0 endpoint."""
    opts = opts or SolverOptions()
    if init is None:
        init = default_init(grid or solver_grid(), prm)
    mus = [prm.mu / 2**k for k in range(steps)]
    reports, dist, gaps = _continue(lambda m: prm.replace(mu=m), mus, init, opts)
    limit = mountain_pass(prm.replace(mu=0.0), reports[-1].profile, opts, certify=False)
    return ContinuationResult(mus, reports, dist, gaps, limit)


def continuation_q_to_critical(prm: ProblemParams, steps: int = 5, init: RadialField | None = None,
                               opts: SolverOptions | None = None, grid: RadialGrid | None = None,
                               ) -> ContinuationResult:
    """Mountain-pass family along q_k = 10/3 + (q - 10/3)/2^k, plus a cold q = 10/3 solve."""
    from .params import L2_CRITICAL
    opts = opts or SolverOptions()
    if not prm.q > L2_CRITICAL:
        raise RegimeError("q continuation starts above 10/3", q=prm.q)
    if init is None:
        init = default_init(grid or solver_grid(), prm)
    qs = [L2_CRITICAL + (prm.q - L2_CRITICAL) / 2**k for k in range(steps)]
    reports, dist, gaps = _continue(lambda q: prm.replace(q=q), qs, init, opts)
    limit = mountain_pass(prm.replace(q=L2_CRITICAL), default_init(init.grid, prm), opts, certify=False)
    return ContinuationResult(qs, reports, dist, gaps, limit)


# --- L2-critical dichotomy ---------------------------------------------------------

def critical_mass_witness(prm: ProblemParams, grid: RadialGrid | None = None,
                          s_max: float = 8.0, samples: int = 33) -> dict:
    """Witness of an unbounded-below energy for p = 10/3 and a > a*.

    w is the L2-critical soliton rescaled to mass a, so the local part of the
    energy E0(w) = |grad w|^2/2 - |w|_p^p/p is negative once a > a*; its fiber
    J(s*w) is then sampled on [0, s_max] through the exact scaling of the
    discrete integrals (large s would not be resolvable by resampling).
    """
    from .constants import solve_soliton
    from .params import L2_CRITICAL
    if prm.p != L2_CRITICAL:
        raise RegimeError("the witness applies to the L2-critical power", p=prm.p)
    grid = grid or solver_grid()
    w = solve_soliton(L2_CRITICAL, grid=grid).profile.normalized(prm.a)
    e = energy(w, prm)
    s = np.linspace(0.0, s_max, samples)
    psi = fiber_map(w, prm).psi(s)
    return {"E0": e.T / 2 - e.Pp / prm.p, "s": s.tolist(), "psi": psi.tolist(),
            "decreasing": bool(np.all(np.diff(psi[-5:]) < 0))}
