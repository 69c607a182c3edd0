"""Independent oracles whose outputs are frozen into the test suite.

Nothing here imports norm_soliton: each value is produced by a separate method
(second-order finite differences, closed forms) so the tests compare two
unrelated computations.

    python scripts/oracles.py
"""

from __future__ import annotations

import json

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu


def soliton_mass_imaginary_time(t: float = 4.0, r_max: float = 25.0, n: int = 5000,
                                dtau: float = 0.05, steps: int = 4000) -> float:
    """|Q_t|_2^2 for -Q'' - 2Q'/r + Q = Q^{t-1} by imaginary time with Nehari rescaling.

    The flow u <- (1 + dtau(-Lap + 1))^{-1}(u + dtau u^{t-1}) is followed by the
    rescaling u <- c u that puts u on the Nehari set |grad u|^2 + |u|^2 = |u|_t^t,
    whose energy minimum is the ground state.  Works on v = r u with a uniform
    second-order stencil and the rectangle rule.
    """
    h = r_max / (n + 1)
    r = h * np.arange(1, n + 1)
    lap = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h**2
    solver = splu((sp.identity(n) + dtau * (sp.identity(n) - lap)).tocsc())
    v = r * np.exp(-r * r)

    def integrals(v):
        u = v / r
        grad = np.sum(np.diff(np.concatenate(([0.0], v, [0.0]))) ** 2) / h  # int v'^2 dr
        mass = np.sum(v * v) * h
        power = np.sum(r * r * np.abs(u) ** t) * h
        return 4 * np.pi * grad, 4 * np.pi * mass, 4 * np.pi * power

    for _ in range(steps):
        u = v / r
        v = solver.solve(v + dtau * r * np.abs(u) ** (t - 2) * u)
        T, M, P = integrals(v)
        v *= ((T + M) / P) ** (1.0 / (t - 2))
    return integrals(v)[1]


def richardson_soliton_mass(t: float = 4.0) -> dict:
    """Second-order oracle at two resolutions plus its Richardson extrapolation."""
    coarse = soliton_mass_imaginary_time(t, n=2500)
    fine = soliton_mass_imaginary_time(t, n=5000)
    return {"coarse": coarse, "fine": fine, "extrapolated": fine + (fine - coarse) / 3.0}


def gaussian_closed_forms(width: float = 1.0) -> dict:
    """Integrals of u = exp(-r^2/width^2) over R^3."""
    w = width
    mass2 = np.pi**1.5 * w**3 / 2**1.5
    kinetic = 3 * np.pi**1.5 * w / 2**1.5
    # density |u|^2 is a normal law with per-axis sigma = w/2 and total charge mass2
    sigma = w / 2
    double = mass2**2 / (sigma * np.sqrt(np.pi))
    return {"mass2": mass2, "kinetic": kinetic, "double": double,
            "power4": np.pi**1.5 * w**3 / 8.0}


def main() -> None:
    out = {"soliton_mass_t4": richardson_soliton_mass(4.0), "gaussian_w1": gaussian_closed_forms(1.0)}
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
