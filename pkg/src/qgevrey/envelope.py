"""Minimal log-linear envelopes fitted by linear programming."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog


@dataclass(frozen=True)
class EnvelopeFit:
    """Solution of ``min c.x`` subject to ``A x >= y`` and box bounds."""

    x: np.ndarray
    feasible: bool
    max_violation: float
    slacks: np.ndarray
    message: str = ""


def fit_envelope(A, y, cost, bounds, shift_index: int = 0) -> EnvelopeFit:
    """Fit the smallest envelope ``A x`` dominating ``y``.

    After the LP solve, any residual violation (solver tolerance) is removed
    by raising ``x[shift_index]`` (a log-constant whose column is all ones),
    provided the box allows it.  ``feasible`` is False when the LP is
    infeasible inside the box.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float)
    res = linprog(
        np.asarray(cost, dtype=float),
        A_ub=-A,
        b_ub=-y,
        bounds=bounds,
        method="highs",
    )
    if res.status != 0:
        x = np.full(A.shape[1], np.nan)
        return EnvelopeFit(x, False, float("inf"), np.full(y.shape, -np.inf), res.message)
    x = np.array(res.x, dtype=float)
    viol = float(np.max(y - A @ x)) if y.size else 0.0
    if viol > 0:
        x[shift_index] += viol
        hi = bounds[shift_index][1]
        if hi is not None and x[shift_index] > hi + 1e-9:
            slacks = A @ x - y
            return EnvelopeFit(x, False, viol, slacks, "constant cap exceeded")
    slacks = A @ x - y
    return EnvelopeFit(x, True, float(max(0.0, -slacks.min())) if slacks.size else 0.0, slacks, res.message)
