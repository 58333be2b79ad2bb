"""The discrete solution operator K and its principal spectral data.

K g solves the assembled linear system (the discrete analogue of Lz = g with
homogeneous boundary values), so K inherits positivity from the M-matrix
structure of the assembly.  The module also computes K(1) with its sup norm,
the spectral radius r(K) with the principal eigenfunction by power iteration,
and the sharpest constants sandwiching K g between multiples of e = K(1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (DegenerateE, GridMismatch, NoConvergence, NotPositive,
                     SolverFailure)
from .geometry import Grid
from .operator import DiscreteOperator

SOLVE_RTOL = 1e-12           # relative residual contract for apply_K
DIRECT_SOLVE_LIMIT = 100_000  # above this many unknowns, solve iteratively


@dataclass(eq=False)
class GridFunction:
    """Real values on the interior nodes of a grid (one per unknown)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.interior_count,):
            raise ValueError(
                f"expected {self.grid.interior_count} values, "
                f"got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        self.values = vals

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.interior_count, float(value)))

    @classmethod
    def zeros(cls, grid):
        return cls.constant(grid, 0.0)

    @classmethod
    def from_callable(cls, grid, fn):
        return cls(grid, np.asarray(fn(grid.xs, grid.ys), dtype=float)
                   + np.zeros(grid.interior_count))

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def copy(self):
        return GridFunction(self.grid, self.values.copy())

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def le(self, other, slack=0.0) -> bool:
        """Nodewise <= comparison with additive slack."""
        self._check(other)
        return bool(np.all(self.values <= other.values + slack))

    def _check(self, other):
        if other.grid is not self.grid:
            raise GridMismatch("grid functions live on different grids")


@dataclass(eq=False)
class SpectralEstimate:
    """Principal spectral data of K: r = r(K), mu1 = 1/r, and the
    nonnegative eigenfunction normalized to sup norm 1."""

    r: float
    mu1: float
    eigenfunction: GridFunction
    iterations: int
    residual: float


def _solve(op: DiscreteOperator, rhs: np.ndarray) -> np.ndarray:
    n = op.matrix.shape[0]
    if n <= DIRECT_SOLVE_LIMIT:
        return op.factorization().solve(rhs)
    try:
        ilu = spla.spilu(op.matrix.tocsc(), drop_tol=1e-6, fill_factor=20)
        pre = spla.LinearOperator((n, n), ilu.solve)
        z, info = spla.gmres(op.matrix, rhs, M=pre, rtol=1e-13, atol=0.0)
        if info == 0:
            return z
    except RuntimeError:
        pass
    return op.factorization().solve(rhs)


def apply_K(op: DiscreteOperator, g: GridFunction) -> GridFunction:
    """Solve the assembled system for right-hand side g.

    The solve is refined until the relative residual is at most 1e-12;
    SolverFailure is raised if refinement cannot reach it.
    """
    if g.grid is not op.grid:
        raise GridMismatch("right-hand side lives on a different grid")
    rhs = g.values
    scale = float(np.abs(rhs).max())
    if scale == 0.0:
        return GridFunction.zeros(op.grid)
    z = _solve(op, rhs)
    for _ in range(3):
        residual = rhs - op.matrix @ z
        if float(np.abs(residual).max()) <= SOLVE_RTOL * scale:
            return GridFunction(op.grid, z)
        z = z + _solve(op, residual)
    raise SolverFailure(
        f"relative residual {float(np.abs(rhs - op.matrix @ z).max()) / scale:.3e} "
        f"exceeds {SOLVE_RTOL:.0e} after iterative refinement")


def k_one_norm(op: DiscreteOperator):
    """Return (K(1), ||K(1)||_inf)."""
    k1 = apply_K(op, GridFunction.constant(op.grid, 1.0))
    return k1, k1.sup_norm()


def spectral_radius(op: DiscreteOperator, tol: float = 1e-10,
                    max_iter: int = 10_000) -> SpectralEstimate:
    """Estimate r(K) and mu1 = 1/r(K) by power iteration on K.

    Starts from the constant-1 function (which has a component along the
    positive principal eigenfunction).  Terminates when successive estimates
    agree to a relative tol and the sup-norm eigen-residual is below tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not op.diagnostics.is_m_matrix:
        warnings.warn("operator matrix is not an M-matrix; the power "
                      "iteration may not converge to a positive eigenpair",
                      stacklevel=2)
    phi = GridFunction.constant(op.grid, 1.0)
    r_prev = None
    for it in range(1, max_iter + 1):
        w = apply_K(op, phi)
        r = w.sup_norm()
        if r <= 0.0:
            raise NoConvergence("power iteration collapsed to zero")
        residual = float(np.abs(w.values - r * phi.values).max())
        if (r_prev is not None and abs(r - r_prev) <= tol * r
                and residual <= tol):
            return SpectralEstimate(r=r, mu1=1.0 / r, eigenfunction=phi,
                                    iterations=it, residual=residual)
        phi = GridFunction(op.grid, w.values / r)
        r_prev = r
    raise NoConvergence(
        f"power iteration did not converge in {max_iter} iterations "
        "(possibly defective or near-degenerate spectrum)")


def e_positivity_probe(op: DiscreteOperator, g: GridFunction):
    """Sharpest alpha_g, beta_g with alpha_g * e <= K g <= beta_g * e
    nodewise, where e = K(1)."""
    if np.any(g.values < 0):
        raise NotPositive("g must be nonnegative")
    if not np.any(g.values > 0):
        raise NotPositive("g must not be identically zero")
    e = apply_K(op, GridFunction.constant(op.grid, 1.0))
    if float(e.values.min()) <= 0.0:
        raise DegenerateE("K(1) vanishes at an interior node")
    kg = apply_K(op, g)
    ratios = kg.values / e.values
    return float(ratios.min()), float(ratios.max())
