"""Damped Gauss-Newton (Levenberg-Marquardt) for small dense problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class ConvergenceError(RuntimeError):
    pass


class DegenerateError(RuntimeError):
    """The Jacobian lost rank; the problem has no unique solution."""


@dataclass
class LMResult:
    x: np.ndarray
    cost: float  # sum of squared residuals
    iterations: int
    converged: bool


def levenberg_marquardt(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    x0,
    *,
    max_iter: int = 100,
    cost_tol: float = 1e-10,
    step_tol: float = 1e-12,
    lam0: float = 1e-3,
    lam_up: float = 10.0,
    lam_down: float = 10.0,
    rcond: float = 1e-12,
) -> LMResult:
    """Minimise ``sum(residual(x)**2)``.

    The damping term is Marquardt's ``lam * diag(J^T J)`` so parameters of
    different physical scale are handled without manual rescaling. A trial
    step that lowers the cost is accepted and ``lam`` divided by
    ``lam_down``; otherwise ``lam`` is multiplied by ``lam_up`` and the step
    retried.

    Stops when the cost drops below ``cost_tol``, or when an accepted step is
    relatively smaller than ``step_tol`` (a non-zero local minimum).

    Raises:
        DegenerateError: ``J^T J`` is numerically singular.
        ConvergenceError: ``max_iter`` exhausted.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    cost = float(r @ r)
    lam = lam0
    for it in range(1, max_iter + 1):
        if cost <= cost_tol:
            return LMResult(x, cost, it - 1, True)
        J = jacobian(x)
        JtJ = J.T @ J
        g = J.T @ r
        d = np.diag(JtJ).copy()
        if d.min() <= 0 or np.linalg.cond(JtJ / np.sqrt(np.outer(d, d))) > 1 / rcond:
            raise DegenerateError("rank-deficient Jacobian")
        while True:
            step = np.linalg.solve(JtJ + lam * np.diag(d), -g)
            x_new = x + step
            r_new = residual(x_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                lam = max(lam / lam_down, 1e-15)
                small = np.linalg.norm(step) <= step_tol * (np.linalg.norm(x) + step_tol)
                x, r, cost = x_new, r_new, cost_new
                if small:
                    return LMResult(x, cost, it, True)
                break
            lam *= lam_up
            if lam > 1e16:
                # no descent direction left at machine precision: a minimum
                return LMResult(x, cost, it, True)
    if cost <= cost_tol:
        return LMResult(x, cost, max_iter, True)
    raise ConvergenceError(f"no convergence after {max_iter} iterations (cost {cost:.3g})")
