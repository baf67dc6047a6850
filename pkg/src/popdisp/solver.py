"""Positive steady states of  d*Lap(u/P) + r*u*(1 - u/K) = 0  with no-flux ends.

The unknown is u itself; the Laplacian acts on the nodewise quotient u/P.
Two independent routes are provided: damped Newton on a tridiagonal
Jacobian (Thomas elimination) and pseudo-transient time marching whose
implicit diffusion solve goes through scipy's banded LU.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from .grid import GridMismatch, GridSpec, ScalarField, laplacian_array

log = logging.getLogger(__name__)

__all__ = [
    "Problem", "Tridiagonal", "SolveResult", "SolverOptions",
    "SingularJacobian", "NoConvergence", "SweepFailure",
    "residual", "jacobian", "thomas_solve", "newton_solve",
    "pseudo_transient", "continuation_sweep", "roundoff_floor",
]

_EPS = np.finfo(float).eps


class SingularJacobian(ArithmeticError):
    pass


class NoConvergence(RuntimeError):
    def __init__(self, message: str, cause: str = "iterations", result=None):
        super().__init__(f"{message} [{cause}]")
        self.cause = cause
        self.result = result


class SweepFailure(RuntimeError):
    def __init__(self, d: float, lam: float | None = None, detail: str = ""):
        where = f"d={d:.17g}" if lam is None else f"lambda={lam:.17g}, d={d:.17g}"
        super().__init__(f"both solvers failed at {where}" + (f": {detail}" if detail else ""))
        self.d = d
        self.lam = lam


@dataclass(frozen=True)
class SolverOptions:
    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    min_damping: float = 2.0**-20
    pt_tol: float = 1e-8
    pt_max_steps: int = 200_000

    def __post_init__(self):
        for name in ("newton_tol", "max_newton_iters", "min_damping", "pt_tol", "pt_max_steps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.min_damping < 1:
            raise ValueError("min_damping must be < 1")


@dataclass(frozen=True)
class Problem:
    d: float
    K: ScalarField
    P: ScalarField
    r: ScalarField

    def __post_init__(self):
        if not self.d >= 0:
            raise ValueError("d must be non-negative")
        if not (self.K.grid == self.P.grid == self.r.grid):
            raise GridMismatch("K, P and r must share one grid")
        for name in "KPr":
            if getattr(self, name).min() <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def grid(self) -> GridSpec:
        return self.K.grid

    def with_d(self, d: float) -> "Problem":
        return Problem(d, self.K, self.P, self.r)


@dataclass(frozen=True)
class Tridiagonal:
    sub: np.ndarray    # sub[i] multiplies x[i] in row i+1
    diag: np.ndarray
    sup: np.ndarray    # sup[i] multiplies x[i+1] in row i

    def __post_init__(self):
        n = len(self.diag)
        if len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise ValueError("sub/sup must have one entry fewer than diag")

    @classmethod
    def identity(cls, n: int) -> "Tridiagonal":
        return cls(np.zeros(n - 1), np.ones(n), np.zeros(n - 1))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.sup * v[1:]
        out[1:] += self.sub * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sup, 1) + np.diag(self.sub, -1)


@dataclass(frozen=True)
class SolveResult:
    u: ScalarField
    iterations: int
    residual_norm: float
    converged: bool
    method: str  # "newton" | "pseudo_transient"


def _residual(u, d, K, P, r, h):
    return d * laplacian_array(u / P, h) + r * u * (1.0 - u / K)


def roundoff_floor(u: np.ndarray, p: Problem) -> float:
    """Size of the rounding noise in the residual for the state ``u``.

    The diffusion term amplifies the relative rounding of u/P by about
    4d/h^2, which dominates the attainable residual once d/h^2 is large.
    """
    h = p.grid.h
    return 16.0 * _EPS * (4.0 * p.d / h**2 * np.abs(u / p.P.values).max()
                          + np.abs(p.r.values * u).max())


def residual(u: ScalarField, p: Problem) -> ScalarField:
    """F(u) = d*L(u/P) + r*u*(1 - u/K), nodewise."""
    if u.grid != p.grid:
        raise GridMismatch("u is not on the problem grid")
    return ScalarField(u.grid, _residual(u.values, p.d, p.K.values, p.P.values, p.r.values, p.grid.h))


def _jacobian(u, d, K, P, r, h) -> Tridiagonal:
    c = d / h**2
    diag = -2.0 * c / P + r * (1.0 - 2.0 * u / K)
    sup = c / P[1:]
    sub = c / P[:-1]
    sup[0] *= 2.0
    sub[-1] *= 2.0
    return Tridiagonal(sub, diag, sup)


def jacobian(u: ScalarField, p: Problem) -> Tridiagonal:
    """dF/du as a tridiagonal matrix (mirror rows at both ends)."""
    if u.grid != p.grid:
        raise GridMismatch("u is not on the problem grid")
    return _jacobian(u.values, p.d, p.K.values, p.P.values, p.r.values, p.grid.h)


def thomas_solve(m: Tridiagonal, rhs: Sequence[float]) -> np.ndarray:
    """Solve m @ x = rhs by forward elimination and back substitution.

    No pivoting.  A pivot whose magnitude falls to 1e-13 of its original
    row's largest entry raises SingularJacobian.
    """
    a = m.sub.tolist()
    b = m.diag.tolist()
    c = m.sup.tolist()
    y = [float(v) for v in rhs]
    n = len(b)
    if len(y) != n:
        raise ValueError(f"rhs has length {len(y)}, matrix has {n} rows")

    def guard(i, piv):
        row = max(abs(b[i]), abs(a[i - 1]) if i > 0 else 0.0, abs(c[i]) if i < n - 1 else 0.0)
        if abs(piv) <= 1e-13 * row or piv == 0.0:
            raise SingularJacobian(f"pivot {piv!r} in row {i}")

    cp = [0.0] * n
    dp = [0.0] * n
    guard(0, b[0])
    if n > 1:
        cp[0] = c[0] / b[0]
    dp[0] = y[0] / b[0]
    for i in range(1, n):
        piv = b[i] - a[i - 1] * cp[i - 1]
        guard(i, piv)
        if i < n - 1:
            cp[i] = c[i] / piv
        dp[i] = (y[i] - a[i - 1] * dp[i - 1]) / piv
    x = [0.0] * n
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x)


def _check_start(u0: ScalarField, p: Problem):
    if u0.grid != p.grid:
        raise GridMismatch("initial guess is not on the problem grid")
    if u0.min() <= 0:
        raise ValueError("initial guess must be strictly positive")


def newton_solve(p: Problem, u0: ScalarField, opts: SolverOptions = SolverOptions()) -> SolveResult:
    """Damped Newton from ``u0``.

    Each step halves the length from 1 until the sup-norm residual drops and
    the iterate stays positive.  Convergence means ||F||_inf <= newton_tol, or,
    when the residual has reached the rounding floor and no step can reduce
    it further, stagnation at that floor (large d/h^2 makes 1e-10 unreachable).
    Raises NoConvergence otherwise.
    """
    _check_start(u0, p)
    K, P, r, h, d = p.K.values, p.P.values, p.r.values, p.grid.h, p.d
    u = u0.values.copy()
    f = _residual(u, d, K, P, r, h)
    fn = float(np.abs(f).max())
    for it in range(opts.max_newton_iters + 1):
        if fn <= opts.newton_tol:
            return SolveResult(ScalarField(p.grid, u), it, fn, True, "newton")
        if it == opts.max_newton_iters:
            break
        try:
            step = thomas_solve(_jacobian(u, d, K, P, r, h), -f)
        except SingularJacobian as exc:
            raise NoConvergence(str(exc), cause="singular_jacobian") from exc
        s = 1.0
        while s >= opts.min_damping:
            trial = u + s * step
            if trial.min() > 0:
                f_trial = _residual(trial, d, K, P, r, h)
                fn_trial = float(np.abs(f_trial).max())
                if fn_trial < fn:
                    break
            s *= 0.5
        else:
            if fn <= roundoff_floor(u, p):
                return SolveResult(ScalarField(p.grid, u), it, fn, True, "newton")
            raise NoConvergence(f"line search failed at d={d:.6g}, |F|={fn:.3e}", cause="damping")
        u, f, fn = trial, f_trial, fn_trial
    raise NoConvergence(f"no convergence in {opts.max_newton_iters} iterations at d={d:.6g}, "
                        f"|F|={fn:.3e}", cause="iterations")


def pseudo_transient(p: Problem, u0: ScalarField, opts: SolverOptions = SolverOptions()) -> SolveResult:
    """March du/dt = d*L(u/P) + r*u*(1-u/K) to steady state.

    Diffusion is implicit, the logistic term explicit.  The step follows
    switched evolution relaxation, dt_k = dt_0*|F(u0)|/|F(u_k)| with
    dt_0 = 0.1/max(r), capped by the explicit-reaction stability limit
    1/max|r*(1 - 2u/K)|.  Stops when |F| <= max(pt_tol, rounding floor).
    """
    _check_start(u0, p)
    K, P, r, h, d = p.K.values, p.P.values, p.r.values, p.grid.h, p.d
    n = p.grid.size
    c = d / h**2
    # banded rows of d*L*diag(1/P)
    off_up = np.zeros(n)
    off_up[1:] = c / P[1:]
    off_up[1] *= 2.0
    off_lo = np.zeros(n)
    off_lo[:-1] = c / P[:-1]
    off_lo[-2] *= 2.0
    main = -2.0 * c / P

    u = u0.values.copy()
    f = _residual(u, d, K, P, r, h)
    f0 = fn = float(np.abs(f).max())
    dt0 = 0.1 / r.max()
    ab = np.empty((3, n))
    for k in range(opts.pt_max_steps + 1):
        if fn <= max(opts.pt_tol, roundoff_floor(u, p)):
            return SolveResult(ScalarField(p.grid, u), k, fn, True, "pseudo_transient")
        if k == opts.pt_max_steps:
            break
        dt = dt0 * f0 / fn
        stiff = float(np.abs(r * (1.0 - 2.0 * u / K)).max())
        if stiff > 0.0:
            dt = min(dt, 1.0 / stiff)
        ab[0] = -dt * off_up
        ab[1] = 1.0 - dt * main
        ab[2] = -dt * off_lo
        u = solve_banded((1, 1), ab, u + dt * r * u * (1.0 - u / K))
        if not np.all(np.isfinite(u)):
            break
        f = _residual(u, d, K, P, r, h)
        fn = float(np.abs(f).max())
    raise NoConvergence(f"pseudo-transient stalled at d={d:.6g}, |F|={fn:.3e}", cause="steps")


def continuation_sweep(K: ScalarField, P: ScalarField, r: ScalarField, d_grid: Sequence[float],
                       opts: SolverOptions = SolverOptions(), lam: float | None = None) -> list[SolveResult]:
    """Solve at every d in ``d_grid`` (ascending), warm-starting from the last state.

    The first solve starts from K.  Newton is tried first; the
    pseudo-transient march is the fallback.
    """
    d_grid = [float(d) for d in d_grid]
    if not d_grid:
        return []
    if d_grid[0] <= 0 or any(b <= a for a, b in zip(d_grid, d_grid[1:])):
        raise ValueError("d_grid must be positive and strictly increasing")
    p = Problem(d_grid[0], K, P, r)
    u = K
    out = []
    for d in d_grid:
        p = p.with_d(d)
        try:
            res = newton_solve(p, u, opts)
        except NoConvergence as exc:
            log.info("newton failed at d=%g (%s); falling back to pseudo-transient", d, exc.cause)
            try:
                res = pseudo_transient(p, u, opts)
            except NoConvergence as exc2:
                raise SweepFailure(d, lam, str(exc2)) from exc2
        out.append(res)
        u = res.u
    return out
