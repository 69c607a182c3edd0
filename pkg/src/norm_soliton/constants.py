"""Ground-state solitons Q_t, sharp Gagliardo-Nirenberg constants and explicit thresholds."""

from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import ParameterError, SolverError
from .grid import FOUR_PI, RadialField, RadialGrid
from .params import L2_CRITICAL, ProblemParams, gamma

CACHE_ENV = "NORM_SOLITON_CACHE"
SHOOT_RMAX = 30.0
_R0 = 1e-6
_SPLIT_TOL = 1e-10


def cache_dir() -> Path:
    d = os.environ.get(CACHE_ENV)
    path = Path(d) if d else Path.home() / ".cache" / "norm_soliton"
    return path


def _cache_path(t: float, tol: float) -> Path:
    return cache_dir() / f"soliton_t{float(t)!r}_tol{float(tol)!r}.json"


def _cache_load(t: float, tol: float) -> dict | None:
    try:
        return json.loads(_cache_path(t, tol).read_text())
    except (OSError, ValueError):
        return None


def _cache_store(t: float, tol: float, data: dict) -> None:
    path = _cache_path(t, tol)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        with os.fdopen(fd, "w") as fh:
            json.dump(data, fh)
        os.replace(tmp, path)
    except OSError:
        pass  # caching is an optimization only


# --- shooting -------------------------------------------------------------------

def _rhs(t: float):
    def f(r, y):
        Q, dQ = y[0], y[1]
        aq = abs(Q)
        w = FOUR_PI * r * r
        return [dQ, -2.0 * dQ / r + Q - np.sign(Q) * aq ** (t - 1.0),
                w * Q * Q, w * dQ * dQ, w * aq**t]
    return f


def _shoot_from(t: float, r0: float, y0, rmax: float):
    """+1 if the profile crosses zero, -1 if it turns up, 0 if neither happens by rmax."""
    def cross(r, y):
        return y[0]
    cross.terminal, cross.direction = True, -1

    def turn(r, y):
        return y[1]
    turn.terminal, turn.direction = True, 1

    sol = solve_ivp(_rhs(t), (r0, rmax), y0, method="DOP853", rtol=1e-12, atol=1e-16 * max(abs(y0[0]), 1e-280),
                    events=[cross, turn], dense_output=True)
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def _stage_start(t: float, stage: dict, x: float):
    """Initial state of a stage for bisection variable x (Q(0) or minus the slope)."""
    if stage["r0"] == 0.0:
        q2 = (x - x ** (t - 1.0)) / 6.0
        return _R0, [x + q2 * _R0**2, 2.0 * q2 * _R0, 0.0, 0.0, 0.0]
    return stage["r0"], [stage["q0"], -x, 0.0, 0.0, 0.0]


def _shoot(t: float, stage: dict, x: float):
    r0, y0 = _stage_start(t, stage, x)
    return _shoot_from(t, r0, y0, r0 + SHOOT_RMAX)


def _bracket(t: float, stage: dict, lo: float, hi: float):
    for _ in range(60):
        s_lo, _ = _shoot(t, stage, lo)
        s_hi, _ = _shoot(t, stage, hi)
        if s_lo < 0 and s_hi > 0:
            return lo, hi
        if s_lo >= 0:
            lo /= 2.0
        if s_hi <= 0:
            hi *= 2.0
    raise SolverError("no shooting bracket for the soliton", t=t, lo=lo, hi=hi, r0=stage["r0"])


def _bisect(t: float, stage: dict, lo: float, hi: float, tol: float):
    lo, hi = _bracket(t, stage, lo, hi)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        s, _ = _shoot(t, stage, mid)
        if s > 0:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _stage_pair(t: float, stage: dict):
    """Dense shots from both ends of a stage bracket and the radius where they part."""
    _, s_lo = _shoot(t, stage, stage["lo"])
    _, s_hi = _shoot(t, stage, stage["hi"])
    r0 = _stage_start(t, stage, stage["lo"])[0]
    end = min(s_lo.t[-1], s_hi.t[-1])
    rr = np.linspace(r0, end, 6001)
    q_lo, q_hi = s_lo.sol(rr)[0], s_hi.sol(rr)[0]
    apart = np.abs(q_hi - q_lo) > _SPLIT_TOL * 0.5 * np.abs(q_lo + q_hi)
    stop = int(np.argmax(apart)) if np.any(apart) else rr.size - 1
    return s_lo, s_hi, float(rr[max(stop - 1, 1)])


class _Spliced:
    """Soliton profile stitched from successive shooting stages on the decaying branch.

    Stage 0 shoots from the origin on Q(0); each later stage restarts from the
    previous stage's trusted end value and shoots on the slope, so the growing
    mode never exceeds round-off relative to the local amplitude.
    """

    def __init__(self, t: float, stages: list[dict]):
        self.t = t
        self.stages = stages
        self.pieces = []
        for st in stages:
            s_lo, s_hi, _ = _stage_pair(t, st)
            self.pieces.append((s_lo, s_hi))
        self.amp = 0.5 * (stages[0]["lo"] + stages[0]["hi"])

    @classmethod
    def build(cls, t: float, tol: float, r_end: float = 45.0) -> "_Spliced":
        stages = []
        st = {"r0": 0.0, "q0": None}
        st["lo"], st["hi"] = _bisect(t, st, 1.0, 10.0, tol)
        while True:
            s_lo, s_hi, split = _stage_pair(t, st)
            st["r1"] = split
            stages.append(st)
            q1 = 0.5 * (s_lo.sol(split)[0] + s_hi.sol(split)[0])
            if split >= r_end or q1 < 1e-280 or len(stages) > 40:
                break
            st = {"r0": split, "q0": float(q1)}
            st["lo"], st["hi"] = _bisect(t, st, 0.9 * q1, 1.5 * q1, tol)
        return cls(t, stages)

    @property
    def r_end(self) -> float:
        return self.stages[-1]["r1"]

    def _index(self, r):
        edges = np.array([st["r1"] for st in self.stages[:-1]])
        return np.searchsorted(edges, r, side="left")

    def state(self, r, k: int):
        s_lo, s_hi = self.pieces[k]
        return 0.5 * (s_lo.sol(r) + s_hi.sol(r))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        idx = self._index(r)
        q2 = (self.amp - self.amp ** (self.t - 1.0)) / 6.0
        for k in range(len(self.stages)):
            sel = (idx == k) & (r <= self.r_end)
            if not np.any(sel):
                continue
            rk = r[sel]
            r0 = max(self.stages[k]["r0"], _R0)
            out[sel] = np.where(rk < r0, self.amp + q2 * rk**2, self.state(np.clip(rk, r0, None), k)[0])
        return out

    def integrals(self):
        M = T = P = 0.0
        for k, st in enumerate(self.stages):
            y = self.state(st["r1"], k)
            M, T, P = M + y[2], T + y[3], P + y[4]
        return float(M), float(T), float(P)

    def residual(self) -> float:
        """L2 norm of the equation defect, differencing each stage's dense derivative."""
        t, h = self.t, 5e-4
        c = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / (60.0 * h)
        total = 0.0
        for k, st in enumerate(self.stages):
            a = max(st["r0"], 0.05) + 4 * h
            rr = np.arange(a, st["r1"] - 4 * h, h)
            if rr.size == 0:
                continue
            y = self.state(rr, k)
            Q, dQ = y[0], y[1]
            # 6th-order central difference of the dense Q'
            d2Q = sum(cj * self.state(rr + j * h, k)[1] for j, cj in zip(range(-3, 4), c) if cj)
            res = -d2Q - 2 * dQ / rr + Q - np.abs(Q) ** (t - 1) * np.sign(Q)
            total += np.sum(FOUR_PI * rr**2 * res**2) * h
        return float(np.sqrt(total))


@dataclass(frozen=True)
class GNSoliton:
    t: float
    amplitude: float
    """Q_t(0)"""
    mass2: float
    kinetic: float
    power: float
    """|Q_t|_t^t"""
    C_t_pow: float
    residual: float
    """L2 norm of -Q'' - 2Q'/r + Q - Q^{t-1} for the spliced profile"""
    r_end: float
    """profile is resolved on [0, r_end] and set to zero beyond"""
    stages: tuple = ()
    profile: RadialField | None = None

    @property
    def C_t(self) -> float:
        return self.C_t_pow ** (1.0 / self.t)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return _Spliced(self.t, list(self.stages))(r)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("profile")
        d["stages"] = list(self.stages)
        return d


def gn_prefactor(t: float) -> float:
    """C_t^t |Q_t|_2^{t-2}."""
    return (2.0 * t / (6.0 - t)) * ((6.0 - t) / (3.0 * (t - 2.0))) ** (3.0 * (t - 2.0) / 4.0)


def _solve_raw(t: float, tol: float) -> dict:
    prof = _Spliced.build(t, tol)
    M, T, P = prof.integrals()
    return {"t": t, "stages": prof.stages, "mass2": M, "kinetic": T, "power": P,
            "r_end": prof.r_end, "residual": prof.residual()}


def solve_soliton(t: float, tol: float = 1e-15, grid: RadialGrid | None = None,
                  use_cache: bool = True) -> GNSoliton:
    """Positive radial solution of -Q'' - (2/r)Q' + Q = Q^{t-1} by shooting on Q(0)."""
    if not 2.0 < t < 6.0:
        raise ParameterError("soliton exponent must lie in (2, 6)", t=t)
    t = float(t)
    data = _cache_load(t, tol) if use_cache else None
    if data is None:
        data = _solve_raw(t, tol)
        if use_cache:
            _cache_store(t, tol, data)
    profile = None
    if grid is not None:
        profile = RadialField(grid, _Spliced(t, data["stages"])(grid.r))
    c_pow = gn_prefactor(t) / data["mass2"] ** ((t - 2.0) / 2.0)
    amp = 0.5 * (data["stages"][0]["lo"] + data["stages"][0]["hi"])
    return GNSoliton(t, amp, data["mass2"], data["kinetic"], data["power"],
                     c_pow, data["residual"], data["r_end"], tuple(data["stages"]), profile)


def _solve_task(args):
    t, tol = args
    return solve_soliton(t, tol).to_dict()


def solve_solitons(ts, tol: float = 1e-15, workers: int | None = None) -> dict[float, GNSoliton]:
    """Solve several exponents concurrently; results land in the shared cache."""
    ts = [float(t) for t in ts]
    todo = [t for t in ts if _cache_load(t, tol) is None]
    if len(todo) > 1 and (workers is None or workers > 1):
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_solve_task, [(t, tol) for t in todo]))
    return {t: solve_soliton(t, tol) for t in ts}


def gn_constant_pow(t: float, tol: float = 1e-15) -> float:
    """C_t^t."""
    return solve_soliton(t, tol).C_t_pow


def gn_constant(t: float, tol: float = 1e-15) -> float:
    """Sharp constant in |u|_t <= C_t |u|_2^{1-g} |grad u|_2^{g}, g = gamma(t)."""
    return gn_constant_pow(t, tol) ** (1.0 / t)


def gn_ratio(T: float, mass2: float, power: float, t: float) -> float:
    """|u|_t^t / (|u|_2^{(1-g)t} |grad u|_2^{g t}); bounded by C_t^t."""
    g = gamma(t)
    return power / (mass2 ** ((1 - g) * t / 2) * T ** (g * t / 2))


# --- thresholds ---------------------------------------------------------------

def _pw(x: float, e: float) -> float:
    """x**e evaluated in log space."""
    if x <= 0.0:
        raise ParameterError("non-positive base in threshold formula", base=x, exponent=e)
    return float(np.exp(e * np.log(x)))


def f_of(a: float, t_grad, prm: ProblemParams, Cp_pow: float, Cq_pow: float):
    """Threshold function f(a, t) in the gradient-norm variable t."""
    t_grad = np.asarray(t_grad, dtype=float)
    gp, gq = prm.gamma_p, prm.gamma_q
    return (0.5 - prm.mu * (Cq_pow / prm.q) * a ** ((1 - gq) * prm.q) * t_grad ** (prm.q_gamma_q - 2)
            - (Cp_pow / prm.p) * a ** ((1 - gp) * prm.p) * t_grad ** (prm.p_gamma_p - 2))


def h_of(a: float, t_grad, prm: ProblemParams, Cp_pow: float, Cq_pow: float):
    """Barrier h(t) = t^2 f(a, t), written without the division."""
    t_grad = np.asarray(t_grad, dtype=float)
    gp, gq = prm.gamma_p, prm.gamma_q
    return (0.5 * t_grad**2 - prm.mu * (Cq_pow / prm.q) * a ** ((1 - gq) * prm.q) * t_grad ** prm.q_gamma_q
            - (Cp_pow / prm.p) * a ** ((1 - gp) * prm.p) * t_grad ** prm.p_gamma_p)


def rho_of(a: float, prm: ProblemParams, Cp_pow: float, Cq_pow: float) -> float:
    """Unique maximizer of t -> f(a, t)."""
    pg, qg = prm.p_gamma_p, prm.q_gamma_q
    if pg == qg or prm.mu <= 0 or not (qg < 2 < pg):
        raise ParameterError("maximizer of f needs mu > 0 and q*gamma_q < 2 < p*gamma_p",
                             mu=prm.mu, p=prm.p, q=prm.q)
    base = (prm.mu * prm.p * (2 - qg) * Cq_pow / (prm.q * (pg - 2) * Cp_pow)
            * _pw(a, prm.q * (1 - prm.gamma_q) - prm.p * (1 - prm.gamma_p)))
    return _pw(base, 1.0 / (pg - qg))


def k3_bound(p: float, Cp_pow: float, C125_pow: float) -> float:
    gp = gamma(p)
    pg = p * gp
    e = 2 * pg + p - 6
    return (_pw(3 / (4 * Cp_pow), 1 / e) * _pw(4 / (4 * gp - 1), (pg - 1) / e)
            * _pw((1 - gp) / C125_pow, (pg - 2) / e))


def k201_holds(prm: ProblemParams, Cp_pow: float, Cqbar_pow: float, C125_pow: float) -> bool:
    """Condition for the critical-q mountain-pass solution (q = 10/3)."""
    a, gp = prm.a, prm.gamma_p
    pg = prm.p * gp
    base = 1.0 - 0.6 * Cqbar_pow * prm.mu * a ** (4.0 / 3.0)
    if base <= 0.0:
        return False
    lhs = (_pw(1.0 / (Cp_pow * gp * _pw(a, prm.p * (1 - gp))), 1 / (pg - 2))
           * _pw(base, 1 / (pg - 2)) / a**3)
    return bool(lhs >= (4 * gp - 1) / (4 * (1 - gp)) * C125_pow)


def a_star(Cpbar_pow: float) -> float:
    """Critical mass for the L2-critical power."""
    return _pw(L2_CRITICAL / (2 * Cpbar_pow), 0.75)


@dataclass(frozen=True)
class ThresholdReport:
    a: float
    mu: float
    p: float
    q: float
    Cp_pow: float
    Cq_pow: float
    C125_pow: float
    K: float | None = None
    a0: float | None = None
    rho_a: float | None = None
    rho0: float | None = None
    abar0: float | None = None
    abar0_second: float | None = None
    exponent_B: float | None = None
    R0: float | None = None
    R1: float | None = None
    f_at_a0: float | None = None
    a_star: float | None = None
    k3_bound: float | None = None
    cond_k3: bool | None = None
    cond_k201: bool | None = None
    mu_a43_bound: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def two_power_constants(prm: ProblemParams, Cp_pow: float, Cq_pow: float) -> dict:
    """K, a0, the second term of abar0, and B for mu > 0, q gamma_q < 2 < p gamma_p."""
    p, q, mu = prm.p, prm.q, prm.mu
    pg, qg = prm.p_gamma_p, prm.q_gamma_q
    d = pg - qg
    e1, e2 = (pg - 2) / d, (qg - 2) / d
    K = (_pw(mu * Cq_pow / q, e1) * _pw(p * (2 - qg) / ((pg - 2) * Cp_pow), e2)
         + _pw(p / Cp_pow, e2) * _pw(mu * (2 - qg) * Cq_pow / (q * (pg - 2)), e1))
    B = (q - qg) * (pg - 2) + (p - pg) * (2 - qg)
    a0 = _pw(1 / (2 * K), d / B)
    second = (_pw(p * (2 - qg) / (2 * Cp_pow * d), (2 - qg) / B)
              * _pw(q * (pg - 2) / (2 * mu * Cq_pow * d), (pg - 2) / B))
    return {"K": K, "B": B, "a0": a0, "abar0_second": second}


def barrier_roots(a: float, prm: ProblemParams, Cp_pow: float, Cq_pow: float):
    """Roots R0 < R1 of h(t) = t^2 f(a, t), or (None, None) when f_a < 0 everywhere."""
    rho = rho_of(a, prm, Cp_pow, Cq_pow)
    if f_of(a, rho, prm, Cp_pow, Cq_pow) <= 0:
        return None, None

    def f(x):
        return float(f_of(a, x, prm, Cp_pow, Cq_pow))
    lo = rho
    while f(lo) > 0:
        lo /= 2.0
    hi = rho
    while f(hi) > 0:
        hi *= 2.0
    R0 = brentq(f, lo, rho, xtol=1e-14 * rho, rtol=1e-15)
    R1 = brentq(f, rho, hi, xtol=1e-14 * rho, rtol=1e-15)
    return R0, R1


def thresholds(prm: ProblemParams, tol: float = 1e-15) -> ThresholdReport:
    """Evaluate every explicit threshold that applies to (p, q, mu)."""
    Cp, Cq = gn_constant_pow(prm.p, tol), gn_constant_pow(prm.q, tol)
    C125 = gn_constant_pow(12.0 / 5.0, tol)
    out: dict = {"a": prm.a, "mu": prm.mu, "p": prm.p, "q": prm.q,
                 "Cp_pow": Cp, "Cq_pow": Cq, "C125_pow": C125}
    pg, qg = prm.p_gamma_p, prm.q_gamma_q
    if prm.mu > 0 and qg < 2 < pg:
        c = two_power_constants(prm, Cp, Cq)
        a0 = c["a0"]
        rho0 = rho_of(a0, prm, Cp, Cq)
        R0, R1 = barrier_roots(prm.a, prm, Cp, Cq)
        out.update(K=c["K"], a0=a0, exponent_B=c["B"], abar0_second=c["abar0_second"],
                   abar0=min(a0, c["abar0_second"]), rho_a=rho_of(prm.a, prm, Cp, Cq),
                   rho0=rho0, R0=R0, R1=R1, f_at_a0=float(f_of(a0, rho0, prm, Cp, Cq)))
    if prm.p == L2_CRITICAL:
        out["a_star"] = a_star(Cp)
    if prm.q == L2_CRITICAL:
        out["a_star"] = a_star(Cq)
    if 2 < pg:
        out["k3_bound"] = k3_bound(prm.p, Cp, C125)
        out["cond_k3"] = bool(prm.a < out["k3_bound"])
    if prm.q == L2_CRITICAL and prm.mu > 0 and pg > 2:
        out["cond_k201"] = k201_holds(prm, Cp, Cq, C125)
        out["mu_a43_bound"] = L2_CRITICAL / (2 * Cq)
    return ThresholdReport(**out)
