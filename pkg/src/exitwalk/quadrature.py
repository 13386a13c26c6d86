"""Adaptive Simpson quadrature with interval bisection and absolute-tolerance stopping."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError

_MAX_EVALS = 10**7


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_bound: float
    evaluations: int


def adaptive_simpson(f, a: float, b: float, tol: float, max_evals: int = _MAX_EVALS) -> QuadratureResult:
    """Integrate ``f`` over [a, b] to absolute tolerance ``tol``.

    Classic recursive bisection with the Richardson correction; an interval is
    accepted once the two-panel refinement moves the estimate by at most
    ``15 * local_tol``.  Raises :class:`ConvergenceError` if the integrand is
    non-finite or the evaluation cap is hit.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0

    evals = 0

    def ev(x):
        nonlocal evals
        evals += 1
        if evals > max_evals:
            raise ConvergenceError(f"quadrature exceeded {max_evals} integrand evaluations")
        y = f(x)
        if not math.isfinite(y):
            raise ConvergenceError(f"integrand not finite at x={x!r}")
        return y

    fa, fb = ev(a), ev(b)
    m = 0.5 * (a + b)
    fm = ev(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    total = 0.0
    err = 0.0
    # stack entries: (a, fa, m, fm, b, fb, whole, tol)
    stack = [(a, fa, m, fm, b, fb, whole, tol)]
    while stack:
        a0, f0, m0, fm0, b0, f1, w0, t0 = stack.pop()
        lm = 0.5 * (a0 + m0)
        rm = 0.5 * (m0 + b0)
        flm, frm = ev(lm), ev(rm)
        left = (m0 - a0) / 6.0 * (f0 + 4.0 * flm + fm0)
        right = (b0 - m0) / 6.0 * (fm0 + 4.0 * frm + f1)
        delta = left + right - w0
        # subinterval narrower than float spacing: accept what we have
        if abs(delta) <= 15.0 * t0 or (m0 - a0) <= abs(a0) * 1e-15 + 5e-324:
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
        else:
            stack.append((a0, f0, lm, flm, m0, fm0, left, 0.5 * t0))
            stack.append((m0, fm0, rm, frm, b0, f1, right, 0.5 * t0))
    return QuadratureResult(sign * total, err, evals)
