"""Monotone fixed-point iteration for u = T u with
T(u) = (lambda_1 K F_1 u, ..., lambda_n K F_n u).

A constant vector beta with T beta <= beta (supersolution) starts a nodewise
non-increasing sequence converging to the greatest fixed point below beta;
a subsolution alpha with T alpha >= alpha starts a non-decreasing one.  The
subsolution is constructed by placing a small multiple of the principal
eigenfunction of K in one component and sweeping the amplitude downward.
Monotonicity of every step is asserted, so a broken hypothesis (non-monotone
f, loss of positivity of K) surfaces as MonotonicityViolation instead of a
silently wrong answer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import MonotonicityViolation, NoConvergence
from .greens import GridFunction, SpectralEstimate, apply_K
from .nonlinearity import Nonlinearity, VectorGridFunction, nemytskii_apply
from .operator import DiscreteOperator

ORDER_SLACK = 1e-12      # tolerated roundoff in nodewise comparisons
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000


class Direction(enum.Enum):
    FROM_BELOW = "from_below"
    FROM_ABOVE = "from_above"


@dataclass(frozen=True)
class ProblemInstance:
    op: DiscreteOperator
    nl: Nonlinearity
    lambdas: tuple

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        if len(lam) != self.nl.n:
            raise ValueError("need one lambda per component")
        if any(not (v > 0) for v in lam):
            raise ValueError("lambdas must be strictly positive")
        object.__setattr__(self, "lambdas", lam)


@dataclass
class IterationReport:
    solution: VectorGridFunction
    residual: float
    iterations: int
    history: list
    direction: Direction
    converged_to_zero: bool
    iterates: list | None = None

    def to_text(self) -> str:
        lines = [
            f"direction:         {self.direction.value}",
            f"iterations:        {self.iterations}",
            f"residual |u - Tu|: {self.residual:.3e}",
            f"solution norm:     {self.solution.norm():.12g}",
            f"converged to zero: {'yes' if self.converged_to_zero else 'no'}",
        ]
        return "\n".join(lines)


@dataclass
class Certificate:
    residual: float
    min_value: float
    norm: float
    in_box: bool
    positive: bool
    nonzero: bool
    certified: bool
    tol: float

    def verdict(self) -> str:
        if self.certified:
            return "certified nonzero positive solution"
        if self.residual <= self.tol and not self.nonzero:
            return "trivial solution (fixed point with negligible norm)"
        return "not certified"

    def to_text(self) -> str:
        return "\n".join([
            f"residual |u - Tu|:  {self.residual:.3e} (tol {self.tol:.1e})",
            f"min nodewise value: {self.min_value:.3e}",
            f"norm |u|:           {self.norm:.12g}",
            f"inside box:         {'yes' if self.in_box else 'no'}",
            f"verdict:            {self.verdict()}",
        ])


def apply_T(p: ProblemInstance, u: VectorGridFunction) -> VectorGridFunction:
    """One application of T: componentwise lambda_i * K(F_i u)."""
    comps = []
    for i in range(p.nl.n):
        fu = nemytskii_apply(p.nl, i, u)
        comps.append(p.lambdas[i] * apply_K(p.op, fu))
    return VectorGridFunction(tuple(comps))


def check_supersolution(p: ProblemInstance, beta: VectorGridFunction):
    """Return (ok, margin) for T beta <= beta; margin is the worst nodewise
    value of beta - T beta over all components."""
    t_beta = apply_T(p, beta)
    margin = min(float((b.values - tb.values).min())
                 for b, tb in zip(beta.components, t_beta.components))
    return margin >= -ORDER_SLACK, margin


def construct_subsolution(p: ProblemInstance, spectrum: SpectralEstimate,
                          i0: int, delta: float, rho0: float):
    """Search for alpha with T alpha >= alpha of the form eps * phi in
    component i0 (phi the principal eigenfunction) and zero elsewhere.

    eps sweeps rho0, rho0/2, ..., rho0 * 2^-20; the first admissible alpha
    is returned, or None if the sweep fails.  `delta` is the growth constant
    the construction relies on (f_{i0} >= delta u_{i0} near zero); the sweep
    itself decides admissibility.
    """
    if not (0 < rho0 < min(p.nl.box)):
        raise ValueError("need 0 < rho0 < min box bound")
    grid = p.op.grid
    phi = spectrum.eigenfunction
    if phi.grid is not grid:
        raise ValueError("spectral estimate computed on a different grid")
    for k in range(21):
        eps = rho0 * 0.5 ** k
        comps = [GridFunction.zeros(grid) for _ in range(p.nl.n)]
        comps[i0] = GridFunction(grid, np.clip(eps * phi.values, 0.0, None))
        alpha = VectorGridFunction(tuple(comps))
        if alpha.le(apply_T(p, alpha), ORDER_SLACK):
            return alpha
    return None


def _check_step(prev: VectorGridFunction, nxt: VectorGridFunction,
                direction: Direction, what: str):
    if direction is Direction.FROM_ABOVE:
        ok = nxt.le(prev, ORDER_SLACK)
    else:
        ok = prev.le(nxt, ORDER_SLACK)
    if not ok:
        raise MonotonicityViolation(
            f"{what}: iterate ordering broken for direction "
            f"{direction.value} (non-monotone nonlinearity or "
            "non-M-matrix operator?)")


def monotone_iterate(p: ProblemInstance, start: VectorGridFunction,
                     direction: Direction, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER,
                     record_iterates: bool = False) -> IterationReport:
    """Iterate u_{k+1} = T u_k from a sub- or supersolution.

    FROM_ABOVE requires T start <= start and produces a nodewise
    non-increasing sequence; FROM_BELOW the mirror image.  Each step is
    checked.  The returned solution v satisfies both
    |v - previous iterate| <= tol and |v - T v| <= tol in the product sup
    norm, with the exact residual reported.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    u = start
    tu = apply_T(p, u)
    _check_step(u, tu, direction, "start is not admissible")
    history = [u.norm()]
    iterates = [u] if record_iterates else None
    for it in range(1, max_iter + 1):
        v = tu                      # v = T^it(start)
        history.append(v.norm())
        if record_iterates:
            iterates.append(v)
        diff = v.diff_norm(u)
        tv = apply_T(p, v)
        _check_step(v, tv, direction, f"iteration {it}")
        residual = v.diff_norm(tv)
        if diff <= tol and residual <= tol:
            return IterationReport(
                solution=v, residual=residual, iterations=it,
                history=history, direction=direction,
                converged_to_zero=v.norm() <= 10.0 * tol,
                iterates=iterates)
        u, tu = v, tv
    raise NoConvergence(
        f"monotone iteration did not converge in {max_iter} iterations")


@dataclass
class BracketReport:
    lower: IterationReport
    upper: IterationReport
    sandwich_ok: bool


def bracket_iterate(p: ProblemInstance, alpha: VectorGridFunction,
                    beta: VectorGridFunction, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER,
                    record_iterates: bool = False) -> BracketReport:
    """Interleaved iteration from a subsolution alpha and supersolution beta.

    Maintains alpha_k <= alpha_{k+1} <= beta_{k+1} <= beta_k nodewise at
    every step (raising MonotonicityViolation otherwise) and returns both
    limits; the lower limit is the smallest fixed point in [alpha, beta],
    the upper one the greatest.
    """
    if not alpha.le(beta, ORDER_SLACK):
        raise MonotonicityViolation("bracket requires alpha <= beta")
    a, b = alpha, beta
    ta, tb = apply_T(p, a), apply_T(p, b)
    _check_step(a, ta, Direction.FROM_BELOW, "alpha is not a subsolution")
    _check_step(tb, b, Direction.FROM_BELOW, "beta is not a supersolution")
    hist_a, hist_b = [a.norm()], [b.norm()]
    iters_a = [a] if record_iterates else None
    iters_b = [b] if record_iterates else None
    for it in range(1, max_iter + 1):
        a_next, b_next = ta, tb
        _check_step(a, a_next, Direction.FROM_BELOW, f"iteration {it}")
        _check_step(b, b_next, Direction.FROM_ABOVE, f"iteration {it}")
        if not a_next.le(b_next, ORDER_SLACK):
            raise MonotonicityViolation(
                f"iteration {it}: lower iterate exceeded upper iterate")
        hist_a.append(a_next.norm())
        hist_b.append(b_next.norm())
        if record_iterates:
            iters_a.append(a_next)
            iters_b.append(b_next)
        da, db = a_next.diff_norm(a), b_next.diff_norm(b)
        ta, tb = apply_T(p, a_next), apply_T(p, b_next)
        ra, rb = a_next.diff_norm(ta), b_next.diff_norm(tb)
        if max(da, ra) <= tol and max(db, rb) <= tol:
            low = IterationReport(a_next, ra, it, hist_a,
                                  Direction.FROM_BELOW,
                                  a_next.norm() <= 10.0 * tol, iters_a)
            high = IterationReport(b_next, rb, it, hist_b,
                                   Direction.FROM_ABOVE,
                                   b_next.norm() <= 10.0 * tol, iters_b)
            return BracketReport(low, high,
                                 sandwich_ok=a_next.le(b_next, ORDER_SLACK))
        a, b = a_next, b_next
    raise NoConvergence(
        f"bracket iteration did not converge in {max_iter} iterations")


def certify(p: ProblemInstance, u: VectorGridFunction,
            tol: float = DEFAULT_TOL) -> Certificate:
    """Recompute T u and certify u as a nonzero positive fixed point."""
    tu = apply_T(p, u)
    residual = u.diff_norm(tu)
    min_value = min(float(c.values.min()) for c in u.components)
    norm = u.norm()
    in_box = all(float(c.values.max()) <= rho + 1e-10
                 for c, rho in zip(u.components, p.nl.box)) \
        and min_value >= -1e-10
    positive = min_value >= -1e-10
    nonzero = norm >= 10.0 * tol
    return Certificate(
        residual=residual, min_value=min_value, norm=norm, in_box=in_box,
        positive=positive, nonzero=nonzero,
        certified=bool(residual <= tol and positive and nonzero), tol=tol)
