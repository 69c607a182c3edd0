"""Scalar problem data."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError

L2_CRITICAL = 10.0 / 3.0


def gamma(t: float) -> float:
    """Gagliardo-Nirenberg interpolation exponent 3(t-2)/(2t)."""
    return 3.0 * (t - 2.0) / (2.0 * t)


@dataclass(frozen=True)
class ProblemParams:
    """Mass a, coupling mu and the two power exponents p (leading) and q."""

    a: float
    mu: float
    p: float
    q: float

    def __post_init__(self):
        for name in ("a", "mu", "p", "q"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if not self.a > 0:
            raise ParameterError("mass a must be positive", a=self.a)
        for name in ("p", "q"):
            t = getattr(self, name)
            if not 2.0 < t <= 6.0:
                raise ParameterError(f"{name} must lie in (2, 6]", **{name: t})
        if self.p == self.q:
            raise ParameterError("p and q must differ", p=self.p, q=self.q)

    @property
    def gamma_p(self) -> float:
        return gamma(self.p)

    @property
    def gamma_q(self) -> float:
        return gamma(self.q)

    @property
    def p_gamma_p(self) -> float:
        # exact 2 at the L2-critical power
        return 2.0 if self.p == L2_CRITICAL else self.p * self.gamma_p

    @property
    def q_gamma_q(self) -> float:
        return 2.0 if self.q == L2_CRITICAL else self.q * self.gamma_q

    def replace(self, **changes) -> "ProblemParams":
        d = asdict(self)
        d.update(changes)
        return ProblemParams(**d)

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}
