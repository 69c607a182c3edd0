"""Radial discretization of R^3: grids, weighted integrals, Laplacian, Hartree potential.

Fields live on interior nodes r_1 < ... < r_n of (0, r_max); the Dirichlet node
r_max and the regular node r = 0 are implicit.  Nodes are images of a uniform
lattice xi_i = i/(n+1) under a smooth odd map r(xi), so sums in xi inherit the
trapezoid rule's high accuracy for smooth radial integrands.

The kinetic energy is a symmetric quadratic form in v = r*u built from a
staggered difference of v; the Laplacian is its weighted gradient, which keeps
the discrete problem variational (energy, gradient and Hessian are consistent).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import NumericError, ParameterError

FOUR_PI = 4.0 * np.pi

# Gregory end weights (exact for polynomials of degree <= 5 in xi).
_GREGORY_END = np.array([95 / 288, 317 / 240, 23 / 30, 793 / 720, 157 / 160])

# staggered first-difference stencils on v_{k-1}, v_k, v_{k+1}, v_{k+2}
_STENCILS = {
    2: np.array([0.0, -1.0, 1.0, 0.0]),
    4: np.array([1.0, -27.0, 27.0, -1.0]) / 24.0,
}


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Radial grid on (0, r_max] with n interior nodes.

    spacing: "uniform" (r = r_max*xi) or "graded" (r = r_max*sinh(g*xi)/sinh(g),
    which clusters nodes near the origin by a factor ~cosh(g)).
    order: 2 or 4, the consistency order of the kinetic stencil.
    """

    r_max: float = 40.0
    n: int = 2048
    spacing: str = "uniform"
    grading: float = 5.0
    order: int = 4

    dxi: float = field(init=False, repr=False)
    r: np.ndarray = field(init=False, repr=False)
    jac: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    flux: np.ndarray = field(init=False, repr=False)
    diff: sp.csr_matrix = field(init=False, repr=False)
    kinetic_matrix: sp.csr_matrix = field(init=False, repr=False)
    kink: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.r_max) and self.r_max > 0):
            raise ParameterError("r_max must be positive", r_max=self.r_max)
        if int(self.n) != self.n or self.n < 16:
            raise ParameterError("n must be an integer >= 16", n=self.n)
        if self.spacing not in ("uniform", "graded"):
            raise ParameterError("spacing must be 'uniform' or 'graded'", spacing=self.spacing)
        if self.spacing == "graded" and not self.grading > 0:
            raise ParameterError("graded spacing needs grading > 0", grading=self.grading)
        if self.order not in _STENCILS:
            raise ParameterError("order must be 2 or 4", order=self.order)
        n = int(self.n)
        object.__setattr__(self, "n", n)
        dxi = 1.0 / (n + 1)
        r, jac = self.map(np.arange(1, n + 1) * dxi)
        _, jac_half = self.map((np.arange(0, n + 1) + 0.5) * dxi)
        diff = _staggered_difference(n, self.order) / dxi
        flux = FOUR_PI * dxi / jac_half
        stiff = diff.T @ sp.diags(flux) @ diff
        rr = sp.diags(r)
        object.__setattr__(self, "dxi", dxi)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "jac", jac)
        object.__setattr__(self, "weights", FOUR_PI * r**2 * jac * dxi)
        object.__setattr__(self, "flux", flux)
        object.__setattr__(self, "diff", diff.tocsr())
        object.__setattr__(self, "kinetic_matrix", (rr @ stiff @ rr).tocsr())
        # trapezoid error at the kink of min(1/r, 1/s) is removed for the 4th-order stencil
        kink = FOUR_PI * (dxi * jac) ** 2 / 12.0 if self.order == 4 else np.zeros(n)
        object.__setattr__(self, "kink", kink)

    def map(self, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Node map r(xi) and its derivative dr/dxi."""
        xi = np.asarray(xi, dtype=float)
        if self.spacing == "uniform":
            return self.r_max * xi, np.full_like(xi, self.r_max)
        g = self.grading
        return (self.r_max * np.sinh(g * xi) / np.sinh(g),
                self.r_max * g * np.cosh(g * xi) / np.sinh(g))

    @property
    def h_min(self) -> float:
        return float(np.min(np.diff(np.concatenate(([0.0], self.r, [self.r_max])))))

    @property
    def ball_nodes(self) -> np.ndarray:
        """Closed node set 0, r_1, ..., r_n, r_max."""
        return np.concatenate(([0.0], self.r, [self.r_max]))

    @property
    def ball_weights(self) -> np.ndarray:
        """Closed-ball weights on ball_nodes for integrands that do not vanish at r_max.

        Gregory-corrected trapezoid in xi; exact for degree <= 5 polynomials in r
        on uniform grids.
        """
        xi = np.arange(self.n + 2) * self.dxi
        r, jac = self.map(xi)
        g = np.ones(self.n + 2)
        k = len(_GREGORY_END)
        g[:k] = _GREGORY_END
        g[-k:] = _GREGORY_END[::-1]
        return FOUR_PI * r**2 * jac * self.dxi * g

    def compatible(self, other: "RadialGrid") -> bool:
        return self is other or self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        return {"r_max": float(self.r_max), "n": self.n, "spacing": self.spacing,
                "grading": float(self.grading), "order": self.order}

    @classmethod
    def from_dict(cls, d: dict) -> "RadialGrid":
        return cls(float(d["r_max"]), int(d["n"]), d.get("spacing", "uniform"),
                   float(d.get("grading", 5.0)), int(d.get("order", 4)))


def _staggered_difference(n: int, order: int) -> sp.coo_matrix:
    """Map v_1..v_n to differences at half nodes 1/2..n+1/2 (times dxi).

    Ghost values use the odd reflections v_0 = 0, v_{-1} = -v_1 (v = r*u is odd
    at the origin) and v_{n+1} = 0, v_{n+2} = -v_n (Dirichlet at r_max).
    """
    coef = _STENCILS[order]
    rows, cols, vals = [], [], []
    for k in range(n + 1):
        for off, c in zip((-1, 0, 1, 2), coef):
            if c == 0.0:
                continue
            j = k + off
            sign = 1.0
            if j == -1:
                j, sign = 1, -1.0
            elif j == n + 2:
                j, sign = n, -1.0
            if 1 <= j <= n:
                rows.append(k)
                cols.append(j - 1)
                vals.append(sign * c)
    return sp.coo_matrix((vals, (rows, cols)), shape=(n + 1, n)).tocsr().tocoo()


def make_grid(r_max: float = 40.0, n: int = 2048, spacing: str = "uniform",
              grading: float = 5.0, order: int = 4) -> RadialGrid:
    return RadialGrid(r_max, n, spacing, grading, order)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples of a radial function at the interior nodes of a grid.

    The Dirichlet value at r_max is zero by construction and not stored.
    """

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        if v.shape != (self.grid.n,):
            raise ParameterError("field length does not match grid", shape=v.shape, n=self.grid.n)
        if not np.all(np.isfinite(v)):
            raise NumericError("non-finite field samples")
        object.__setattr__(self, "values", v)

    @property
    def real(self) -> bool:
        return not np.iscomplexobj(self.values) or not np.any(self.values.imag)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def with_values(self, values: np.ndarray) -> "RadialField":
        return RadialField(self.grid, values)

    def mass2(self) -> float:
        return float(np.sum(self.grid.weights * np.abs(self.values) ** 2))

    def norm(self) -> float:
        return float(np.sqrt(self.mass2()))

    def normalized(self, a: float) -> "RadialField":
        m = self.norm()
        if m == 0.0:
            raise NumericError("cannot normalize the zero field")
        return self.with_values(self.values * (a / m))

    def __add__(self, other: "RadialField") -> "RadialField":
        _check(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "RadialField") -> "RadialField":
        _check(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "RadialField":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _check(u: RadialField, v: RadialField) -> None:
    if not u.grid.compatible(v.grid):
        raise ParameterError("fields live on different grids")


def sample(grid: RadialGrid, f) -> RadialField:
    """Field with values f(r_i)."""
    return RadialField(grid, np.asarray(f(grid.r)))


def gaussian(grid: RadialGrid, width: float = 1.0, a: float | None = None) -> RadialField:
    u = sample(grid, lambda r: np.exp(-(r / width) ** 2))
    return u if a is None else u.normalized(a)


def inner(u: RadialField, v: RadialField) -> complex:
    """Weighted L2 inner product <u, v> = sum w conj(u) v."""
    _check(u, v)
    return complex(np.sum(u.grid.weights * np.conj(u.values) * v.values))


def kinetic_energy_values(grid: RadialGrid, values: np.ndarray) -> float:
    g = grid.diff @ (grid.r * values)
    return float(np.sum(grid.flux * np.abs(g) ** 2))


def kinetic_energy(u: RadialField) -> float:
    """|grad u|_2^2."""
    return kinetic_energy_values(u.grid, u.values)


def neg_laplacian_values(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    return (grid.kinetic_matrix @ values) / grid.weights


def laplacian_radial(u: RadialField) -> RadialField:
    """Discrete Delta u = v''/r with v = r u, Dirichlet at r_max, regular at 0."""
    return u.with_values(-neg_laplacian_values(u.grid, u.values))


def hartree_values(grid: RadialGrid, rho: np.ndarray) -> np.ndarray:
    """(1/|x| * rho)(r_i) for a radial density rho by prefix/suffix sums.

    Uses the shell-averaged kernel min(1/r_i, 1/r_j); on 4th-order grids the
    trapezoid error from the kernel's kink at r_j = r_i is subtracted.
    """
    m = grid.weights * rho
    inside = np.cumsum(m) / grid.r
    outside = np.cumsum((m / grid.r)[::-1])[::-1] - m / grid.r
    return inside + outside - grid.kink * rho


def hartree_potential(u: RadialField) -> RadialField:
    """Coulomb potential Phi_u = |x|^{-1} * |u|^2 sampled on the grid."""
    return RadialField(u.grid, hartree_values(u.grid, np.abs(u.values) ** 2))


def double_energy_values(grid: RadialGrid, values: np.ndarray) -> float:
    rho = np.abs(values) ** 2
    return float(np.sum(grid.weights * rho * hartree_values(grid, rho)))


def double_energy(u: RadialField) -> float:
    """D(u) = int int |u(x)|^2 |u(y)|^2 / |x - y|."""
    return double_energy_values(u.grid, u.values)


def power_integral(u: RadialField, t: float) -> float:
    """|u|_t^t."""
    return float(np.sum(u.grid.weights * np.abs(u.values) ** t))


# --- serialization -------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def field_to_csv(u: RadialField, path: str | Path | None = None) -> str:
    """CSV with a JSON grid header line, then columns r, re, im at full precision."""
    buf = io.StringIO()
    buf.write("# grid " + json.dumps(u.grid.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "re", "im"])
    vals = np.asarray(u.values, dtype=complex)
    for r, z in zip(u.grid.r, vals):
        w.writerow([_fmt(r), _fmt(z.real), _fmt(z.imag)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def field_from_csv(source: str | Path, grid: RadialGrid | None = None) -> RadialField:
    """Inverse of field_to_csv; accepts a path or the CSV text itself."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    lines = text.splitlines()
    if lines and lines[0].startswith("# grid "):
        header = RadialGrid.from_dict(json.loads(lines[0][len("# grid "):]))
        grid = grid or header
        lines = lines[1:]
    if grid is None:
        raise ParameterError("CSV has no grid header and no grid was supplied")
    rows = list(csv.reader(lines[1:]))
    data = np.array([[float(x) for x in row] for row in rows if row])
    if data.shape[0] != grid.n:
        raise ParameterError("profile length does not match grid", rows=data.shape[0], n=grid.n)
    if not np.allclose(data[:, 0], grid.r, rtol=1e-12, atol=0.0):
        raise ParameterError("profile nodes do not match grid")
    if np.any(data[:, 2]) or np.any(np.signbit(data[:, 2])):
        # assign parts separately so signed zeros survive
        values = np.empty(grid.n, dtype=complex)
        values.real, values.imag = data[:, 1], data[:, 2]
    else:
        values = data[:, 1].copy()
    return RadialField(grid, values)
