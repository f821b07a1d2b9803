"""Adaptive Dormand-Prince 4(5) integrator with PI step control and dense output.

All time evolution in this package (master equation, mean field, product-space
oracle) runs through :func:`integrate_adaptive`.  The quantum-trajectory module
uses a numba twin of the same scheme (same tableau, same controller) for its
inner loop; see ``_kernels.py``.

The propagated solution is 5th order, the embedded error estimate 4th order,
and sample values between accepted steps come from the 4th-order Shampine
interpolant, so arbitrary output grids cost no extra steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = ["IntegrationResult", "StepSizeUnderflow", "integrate_adaptive"]

# Dormand-Prince 5(4) tableau.
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
DP_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# Difference between the 4th- and 5th-order weights (7 entries, k7 = FSAL stage).
DP_E = np.array(
    [-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40]
)
# Shampine 4th-order dense-output coefficients: y(t0 + x*h) = y0 + h*K.T P p(x),
# p(x) = (x, x^2, x^3, x^4).
DP_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

# Step controller constants (Hairer's DOPRI5 defaults).
SAFETY = 0.9
BETA = 0.04
EXPO1 = 0.2 - 0.75 * BETA
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


class StepSizeUnderflow(RuntimeError):
    """Step size shrank below the representable resolution of the time axis."""

    def __init__(self, t_reached: float):
        super().__init__(f"step size underflow at t = {t_reached!r}")
        self.t_reached = t_reached


@dataclass
class IntegrationResult:
    t: np.ndarray                     # requested sample times
    y: np.ndarray                     # (len(t), n) solution samples
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    h_final: float = 0.0
    post_step_max_dev: float = 0.0    # largest correction applied by post_step
    diagnostics: dict = field(default_factory=dict)


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol, max_step):
    """Hairer's starting-step heuristic (two extra RHS evaluations)."""
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = rhs(t0 + h0 * direction, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step)


def integrate_adaptive(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: np.ndarray,
    t_eval: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    post_step: Callable[[float, np.ndarray], tuple[np.ndarray, float]] | None = None,
    h0: float | None = None,
    max_step: float = np.inf,
    breakpoints: Sequence[float] = (),
) -> IntegrationResult:
    """Integrate ``dy/dt = rhs(t, y)`` over ``t_span`` and sample at ``t_eval``.

    Parameters
    ----------
    rhs : callable
        Right-hand side; gets and returns 1-D complex arrays.
    t_span : (t0, t1) with t1 >= t0.
    y0 : initial state, flattened to 1-D complex128.
    t_eval : ascending sample times inside ``t_span``.
    rtol, atol : per-entry error tolerances (RMS-combined).
    post_step : optional hook applied to every accepted step value, returning
        the (possibly corrected) state and a scalar deviation that is tracked.
        The master-equation solver uses this to re-hermitize the density
        matrix.  A hook disables FSAL reuse (7 instead of 6 evaluations).
    h0 : optional initial step; estimated when omitted.
    breakpoints : interior times the integrator must hit exactly (drive
        envelope kinks); steps never straddle them.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise ValueError("t_span must be ascending")
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size and (t_eval[0] < t0 - 1e-12 or t_eval[-1] > t1 + 1e-12):
        raise ValueError("t_eval must lie within t_span")
    if t_eval.size > 1 and np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be strictly ascending")

    y = np.asarray(y0, dtype=np.complex128).ravel().copy()
    n = y.size
    out = np.empty((t_eval.size, n), dtype=np.complex128)
    eval_idx = 0
    while eval_idx < t_eval.size and t_eval[eval_idx] <= t0:
        out[eval_idx] = y
        eval_idx += 1

    result = IntegrationResult(t=t_eval, y=out)
    if t1 == t0:
        result.h_final = 0.0
        return result

    stops = [b for b in sorted(set(float(b) for b in breakpoints)) if t0 < b < t1]
    stops.append(t1)

    f = rhs(t0, y)
    result.n_rhs += 1
    if h0 is None:
        h = _initial_step(rhs, t0, y, f, 1.0, rtol, atol, max_step)
        result.n_rhs += 1
    else:
        h = float(h0)

    t = t0
    err_old = 1e-4
    K = np.empty((7, n), dtype=np.complex128)
    tiny = np.finfo(float).tiny

    for stop in stops:
        while t < stop:
            eps_t = 16 * np.spacing(max(abs(t), 1.0))
            if stop - t <= eps_t:
                t = stop
                break
            if h < eps_t:
                raise StepSizeUnderflow(t)
            h = min(h, max_step, stop - t)

            K[0] = f
            for s in range(1, 6):
                ys = y + h * (K[:s].T @ DP_A[s, :s])
                K[s] = rhs(t + DP_C[s] * h, ys)
            y_new = y + h * (K[:6].T @ DP_B)
            t_new = t + h
            K[6] = rhs(t_new, y_new)
            result.n_rhs += 6

            err = _error_norm(h * (K.T @ DP_E), y, y_new, rtol, atol)
            if err > 1.0:
                result.n_rejected += 1
                factor = max(MIN_FACTOR, SAFETY / err**EXPO1)
                h *= factor
                continue

            # Accepted: PI controller for the next step.
            fac = err**EXPO1 / max(err_old, 1e-10) ** BETA
            factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY / max(fac, tiny)))
            err_old = max(err, 1e-4)
            result.n_steps += 1

            if eval_idx < t_eval.size and t_eval[eval_idx] <= t_new:
                # Dense output on this step interval.
                Q = K.T @ DP_P
                while eval_idx < t_eval.size and t_eval[eval_idx] <= t_new:
                    x = (t_eval[eval_idx] - t) / h
                    p = np.array([x, x * x, x**3, x**4])
                    out[eval_idx] = y + h * (Q @ p)
                    eval_idx += 1

            if post_step is not None:
                y_new, dev = post_step(t_new, y_new)
                if dev > result.post_step_max_dev:
                    result.post_step_max_dev = dev
                f = rhs(t_new, y_new)
                result.n_rhs += 1
            else:
                f = K[6].copy()  # FSAL (copy: K rows are overwritten by retries)
            t, y = t_new, y_new
            h *= factor
        # Re-seed FSAL across a breakpoint: the RHS may be non-smooth there.
        if post_step is None and t < t1:
            f = rhs(t, y)
            result.n_rhs += 1

    # Grid points that coincide with t1 within rounding.
    while eval_idx < t_eval.size:
        out[eval_idx] = y
        eval_idx += 1

    result.h_final = h
    result.diagnostics["t_end"] = t
    return result
