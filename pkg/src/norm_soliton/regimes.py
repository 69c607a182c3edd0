"""Classification of (a, mu, p, q) into the known existence regimes."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .constants import ThresholdReport, thresholds
from .params import L2_CRITICAL, ProblemParams

Q_MASS_SUB = 8.0 / 3.0   # q gamma_q = 1
Q_LOCAL = 12.0 / 5.0     # upper end of the certified mountain-pass range

TWO_BRANCH = "TH1-two-branch"
LOCAL_ONLY = "TH1-local-only"
DEFOCUSING = "TH5-defocusing"
CRITICAL_P = "TH7-critical-p"
CRITICAL_Q = "TH15-critical-q"
SUPERCRITICAL = "T1-both-supercritical"
OPEN = "open-region"


@dataclass(frozen=True)
class RegimeTag:
    tag: str
    case: int | None = None
    """sub-case 1..4 for the L2-critical leading power"""
    local_min: bool = False
    """a local minimizer on the gradient ball is guaranteed"""
    mountain_pass: bool = False
    """a mountain-pass solution is guaranteed"""
    global_min: bool = False
    """inf over the mass sphere is finite, negative and attained"""
    unbounded: bool = False
    """inf over the mass sphere is -infinity"""
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def classify_regime(prm: ProblemParams, report: ThresholdReport | None = None) -> RegimeTag:
    report = report or thresholds(prm)
    a, mu, p, q = prm.a, prm.mu, prm.p, prm.q
    p_super = L2_CRITICAL < p < 6.0
    q_sub = 2.0 < q < Q_MASS_SUB

    if p == L2_CRITICAL and q_sub and mu != 0:
        astar = report.a_star
        if mu > 0:
            if a <= astar:
                return RegimeTag(CRITICAL_P, 1, global_min=a < astar or q <= Q_LOCAL,
                                 notes=["inf over S_a is negative"])
            return RegimeTag(CRITICAL_P, 2, unbounded=True)
        if a <= astar:
            return RegimeTag(CRITICAL_P, 3, notes=["inf over S_a is 0 and no solution exists"])
        return RegimeTag(CRITICAL_P, 4, unbounded=True)

    if q == L2_CRITICAL and p_super and mu > 0:
        if report.cond_k201:
            return RegimeTag(CRITICAL_Q, mountain_pass=True, unbounded=True)
        return RegimeTag(OPEN, unbounded=True, notes=["critical q without the k201 smallness condition"])

    if p_super and L2_CRITICAL < q < p and mu > 0:
        return RegimeTag(SUPERCRITICAL, unbounded=True,
                         notes=["mountain pass for a below an implicit smallness bound"])

    if p_super and q_sub:
        if mu <= 0:
            return RegimeTag(DEFOCUSING, unbounded=True,
                             notes=["mountain pass for a below an existential bound"])
        if report.abar0 is not None and a < report.abar0:
            if q <= Q_LOCAL and report.cond_k3:
                return RegimeTag(TWO_BRANCH, local_min=True, mountain_pass=True, unbounded=True)
            why = "q above 12/5" if q > Q_LOCAL else "k3 bound fails"
            return RegimeTag(LOCAL_ONLY, local_min=True, unbounded=True,
                             notes=[f"mountain pass not certified: {why}"])
        return RegimeTag(OPEN, unbounded=True, notes=["a at or above abar0"])

    note = "q between 8/3 and 10/3 is unresolved" if Q_MASS_SUB < q < L2_CRITICAL else "no theorem covers these exponents"
    return RegimeTag(OPEN, notes=[note])
