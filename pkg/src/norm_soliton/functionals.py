"""Energy, Nehari-Pohozaev functional, stationarity identities and fiber-map geometry."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import NumericError
from .grid import (RadialField, RadialGrid, double_energy_values,
                   kinetic_energy_values)
from .params import ProblemParams


@dataclass(frozen=True)
class EnergyBreakdown:
    T: float
    """kinetic term |grad u|_2^2"""
    D: float
    """Hartree double energy"""
    Pp: float
    """|u|_p^p"""
    Qq: float
    """|u|_q^q"""
    mass2: float
    J: float

    def to_dict(self) -> dict:
        return asdict(self)


def _components(grid: RadialGrid, values: np.ndarray, prm: ProblemParams):
    if not np.all(np.isfinite(values)):
        raise NumericError("non-finite field samples")
    w = grid.weights
    mod = np.abs(values)
    T = kinetic_energy_values(grid, values)
    D = double_energy_values(grid, values)
    Pp = float(np.sum(w * mod**prm.p))
    Qq = float(np.sum(w * mod**prm.q))
    mass2 = float(np.sum(w * mod**2))
    return T, D, Pp, Qq, mass2


def energy_from(T, D, Pp, Qq, prm: ProblemParams) -> float:
    return T / 2.0 + D / 4.0 - Pp / prm.p - prm.mu * Qq / prm.q


def energy(u: RadialField, prm: ProblemParams) -> EnergyBreakdown:
    T, D, Pp, Qq, mass2 = _components(u.grid, u.values, prm)
    J = energy_from(T, D, Pp, Qq, prm)
    if not np.isfinite(J):
        raise NumericError("energy is not finite", T=T, D=D, Pp=Pp, Qq=Qq)
    return EnergyBreakdown(T, D, Pp, Qq, mass2, J)


def pohozaev_from(e: EnergyBreakdown, prm: ProblemParams) -> float:
    return e.T + e.D / 4.0 - prm.gamma_p * e.Pp - prm.mu * prm.gamma_q * e.Qq


def pohozaev(u: RadialField, prm: ProblemParams) -> float:
    """Nehari-Pohozaev functional P(u) = d/ds J(s*u) at s = 0."""
    return pohozaev_from(energy(u, prm), prm)


def pohozaev_scale(e: EnergyBreakdown, prm: ProblemParams) -> float:
    return e.T + e.D + e.Pp + abs(prm.mu) * e.Qq


def nehari_residual(u: RadialField, lam: float, prm: ProblemParams,
                    e: EnergyBreakdown | None = None) -> float:
    e = e or energy(u, prm)
    return e.T + lam * e.mass2 + e.D - e.Pp - prm.mu * e.Qq


def pohozaev_identity_residual(u: RadialField, lam: float, prm: ProblemParams,
                               e: EnergyBreakdown | None = None) -> float:
    e = e or energy(u, prm)
    return (0.5 * e.T + 1.5 * lam * e.mass2 + 1.25 * e.D
            - 3.0 * e.Pp / prm.p - 3.0 * prm.mu * e.Qq / prm.q)


def identity_scales(e: EnergyBreakdown, lam: float, prm: ProblemParams) -> dict:
    """Sum of absolute term sizes, used to make the identity residuals relative."""
    return {
        "nehari": e.T + abs(lam) * e.mass2 + e.D + e.Pp + abs(prm.mu) * e.Qq,
        "pohozaev_identity": (0.5 * e.T + 1.5 * abs(lam) * e.mass2 + 1.25 * e.D
                              + 3.0 * e.Pp / prm.p + 3.0 * abs(prm.mu) * e.Qq / prm.q),
        "pohozaev_P": pohozaev_scale(e, prm),
    }


# --- dilation --------------------------------------------------------------------

def dilate(u: RadialField, s: float, grid: RadialGrid | None = None) -> RadialField:
    """Mass-preserving dilation (s*u)(r) = e^{3s/2} u(e^s r), resampled by cubic spline.

    The spline is built on the even extension of u so it stays smooth at r = 0;
    values beyond r_max are zero.
    """
    src = u.grid
    grid = grid or src
    nodes = np.concatenate((-src.r[::-1], src.r, [src.r_max]))
    nodes = np.concatenate(([-src.r_max], nodes))
    x = np.exp(s) * grid.r
    inside = x < src.r_max

    def resample(y):
        ext = np.concatenate(([0.0], y[::-1], y, [0.0]))
        out = np.zeros(grid.n)
        out[inside] = CubicSpline(nodes, ext, bc_type="not-a-knot")(x[inside])
        return out

    vals = np.asarray(u.values)
    if np.iscomplexobj(vals):
        out = resample(vals.real) + 1j * resample(vals.imag)
    else:
        out = resample(vals)
    return RadialField(grid, np.exp(1.5 * s) * out)


# --- fiber map -------------------------------------------------------------------

@dataclass(frozen=True)
class FiberMap:
    """psi_u(s) = J(s*u) as an exponential sum in the four base integrals."""

    T: float
    D: float
    Pp: float
    Qq: float
    prm: ProblemParams

    @property
    def scale(self) -> float:
        return abs(self.T) + abs(self.D) + abs(self.Pp) + abs(self.prm.mu * self.Qq)

    def _terms(self, s):
        s = np.asarray(s, dtype=float)
        prm = self.prm
        return (np.exp(2.0 * s) * self.T, np.exp(s) * self.D,
                np.exp(prm.p_gamma_p * s) * self.Pp, prm.mu * np.exp(prm.q_gamma_q * s) * self.Qq)

    def psi(self, s):
        t, d, pp, qq = self._terms(s)
        return t / 2.0 + d / 4.0 - pp / self.prm.p - qq / self.prm.q

    def dpsi(self, s):
        t, d, pp, qq = self._terms(s)
        return t + d / 4.0 - self.prm.gamma_p * pp - self.prm.gamma_q * qq

    def d2psi(self, s):
        t, d, pp, qq = self._terms(s)
        prm = self.prm
        return (2.0 * t + d / 4.0 - prm.p_gamma_p * prm.gamma_p * pp
                - prm.q_gamma_q * prm.gamma_q * qq)

    def magnitude(self, s) -> float:
        """Sum of absolute term sizes at s; the natural scale for residuals there."""
        return float(sum(np.abs(x) for x in self._terms(s)))


def fiber_components(u: RadialField, prm: ProblemParams) -> tuple[float, float, float, float]:
    T, D, Pp, Qq, _ = _components(u.grid, u.values, prm)
    return T, D, Pp, Qq


def fiber_map(u: RadialField, prm: ProblemParams) -> FiberMap:
    return FiberMap(*fiber_components(u, prm), prm)


def fiber_second_derivative(u: RadialField, prm: ProblemParams, s: float = 0.0) -> float:
    return float(fiber_map(u, prm).d2psi(s))


@dataclass(frozen=True)
class FiberProfile:
    """Critical points and zeros of the fiber map.

    regime: "two-critical" (local min s_u then max t_u), "one-critical" (single
    strict max t_u), "one-minimum" (single min s_u), "none", or "degenerate".
    """

    regime: str
    s_u: float | None = None
    t_u: float | None = None
    c_u: float | None = None
    d_u: float | None = None
    psi_s: float | None = None
    psi_t: float | None = None
    d2psi_s: float | None = None
    d2psi_t: float | None = None
    critical_points: tuple = ()
    zeros: tuple = ()
    residual: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["critical_points"] = list(self.critical_points)
        d["zeros"] = list(self.zeros)
        return d


SCAN_RANGE = (-20.0, 20.0)
SCAN_STEP = 0.05
DEGENERATE_TOL = 1e-9


def _roots(f, df, lattice: np.ndarray) -> list[float]:
    vals = f(lattice)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        x = brentq(f, lattice[i], lattice[i + 1], xtol=1e-15, rtol=1e-15, maxiter=200)
        if df is not None:
            # safeguarded Newton polish; keep the bracketed value if a step leaves it
            for _ in range(3):
                d = df(x)
                if d == 0.0:
                    break
                y = x - f(x) / d
                if not lattice[i] <= y <= lattice[i + 1]:
                    break
                x = y
        roots.append(float(x))
    roots.extend(float(x) for x in lattice[vals == 0.0])
    return sorted(roots)


def fiber_profile_from_map(fm: FiberMap, step: float = SCAN_STEP) -> FiberProfile:
    lo, hi = SCAN_RANGE
    crit = _roots(fm.dpsi, fm.d2psi, np.arange(lo, hi + step / 2, step))
    if len(crit) > 2 and step > 1e-3:
        return fiber_profile_from_map(fm, step / 10.0)
    zeros = _roots(fm.psi, fm.dpsi, np.arange(lo, hi + step / 2, step))
    res = max((abs(float(fm.dpsi(s))) for s in crit), default=0.0) / max(fm.scale, 1e-300)
    second = [float(fm.d2psi(s)) for s in crit]
    degenerate = any(abs(d2) < DEGENERATE_TOL * fm.magnitude(s) for s, d2 in zip(crit, second))
    base = dict(critical_points=tuple(crit), zeros=tuple(zeros), residual=res)
    if degenerate or len(crit) > 2:
        return FiberProfile("degenerate", **base)
    if len(crit) == 0:
        return FiberProfile("none", **base)
    if len(crit) == 1:
        s0 = crit[0]
        if second[0] < 0:
            d = next((z for z in zeros if z > s0), None)
            c = next((z for z in reversed(zeros) if z < s0), None)
            return FiberProfile("one-critical", t_u=s0, psi_t=float(fm.psi(s0)),
                                d2psi_t=second[0], c_u=c, d_u=d, **base)
        return FiberProfile("one-minimum", s_u=s0, psi_s=float(fm.psi(s0)),
                            d2psi_s=second[0], **base)
    s_u, t_u = crit
    if not (second[0] > 0 > second[1]):
        return FiberProfile("degenerate", **base)
    c = next((z for z in zeros if s_u < z < t_u), None)
    d = next((z for z in zeros if z > t_u), None)
    return FiberProfile("two-critical", s_u=s_u, t_u=t_u, c_u=c, d_u=d,
                        psi_s=float(fm.psi(s_u)), psi_t=float(fm.psi(t_u)),
                        d2psi_s=second[0], d2psi_t=second[1], **base)


def fiber_profile(u: RadialField, prm: ProblemParams) -> FiberProfile:
    return fiber_profile_from_map(fiber_map(u, prm))


def fiber_table(u: RadialField, prm: ProblemParams, s: np.ndarray) -> np.ndarray:
    """Columns s, psi(s), psi'(s)."""
    fm = fiber_map(u, prm)
    s = np.asarray(s, dtype=float)
    return np.column_stack((s, fm.psi(s), fm.dpsi(s)))
