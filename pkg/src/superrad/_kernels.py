"""Compiled inner loop for quantum-trajectory integration.

One segment = evolution under the effective non-Hermitian drift

    d psi / dt = (A + f(t) B) psi ,   f(t) = amp * sin^2(pi t / period)

from ``t_start`` until either ``t_end`` is reached or the squared norm decays
to the jump threshold.  The scheme is the same Dormand-Prince 4(5) pair with
PI step control and Shampine dense output used by ``integrators.py``; sample
states at grid times are written raw (unnormalized) together with their
squared norms, and the jump time is refined by bisection on the interpolated
squared norm.

Status codes: 0 = reached t_end, 1 = threshold crossed, 2 = step underflow.
"""

import numpy as np
from numba import njit

# Dormand-Prince tableau (identical to integrators.py).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array(
    [-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40]
)
_P = np.array(
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

_SAFETY = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0

JUMP_TIME_RELTOL = 1e-10

STATUS_END = 0
STATUS_JUMP = 1
STATUS_UNDERFLOW = 2


@njit(cache=True)
def _rhs(a_mat, b_mat, use_drive, amp, period, t, y):
    out = np.dot(a_mat, y)
    if use_drive:
        s = np.sin(np.pi * t / period)
        f = amp * s * s
        if f != 0.0:
            out = out + f * np.dot(b_mat, y)
    return out


@njit(cache=True)
def _norm2(y):
    acc = 0.0
    for i in range(y.size):
        acc += y[i].real * y[i].real + y[i].imag * y[i].imag
    return acc


@njit(cache=True)
def _err_norm(err, y0, y1, rtol, atol):
    acc = 0.0
    for i in range(err.size):
        sc = atol + rtol * max(abs(y0[i]), abs(y1[i]))
        v = abs(err[i]) / sc
        acc += v * v
    return np.sqrt(acc / err.size)


@njit(cache=True)
def _dense_eval(y0, stages, h, x, out):
    # out = y0 + h * sum_i stages[i] * (sum_j P[i, j] x^(j+1))
    for k in range(y0.size):
        out[k] = y0[k]
    xx = np.array([x, x * x, x**3, x**4])
    for i in range(7):
        w = 0.0
        for j in range(4):
            w += _P[i, j] * xx[j]
        w *= h
        if w != 0.0:
            for k in range(y0.size):
                out[k] += w * stages[i, k]
    return out


@njit(cache=True)
def _initial_step(a_mat, b_mat, use_drive, amp, period, t0, y0, f0, rtol, atol, span):
    d0 = 0.0
    d1 = 0.0
    for i in range(y0.size):
        sc = atol + rtol * abs(y0[i])
        d0 += (abs(y0[i]) / sc) ** 2
        d1 += (abs(f0[i]) / sc) ** 2
    d0 = np.sqrt(d0 / y0.size)
    d1 = np.sqrt(d1 / y0.size)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = _rhs(a_mat, b_mat, use_drive, amp, period, t0 + h0, y1)
    d2 = 0.0
    for i in range(y0.size):
        sc = atol + rtol * abs(y0[i])
        d2 += (abs(f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / y0.size) / h0
    dmax = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dmax <= 1e-15 else (0.01 / dmax) ** 0.2
    return min(100 * h0, h1, span)


@njit(cache=True)
def trajectory_segment(
    a_mat,
    b_mat,
    use_drive,
    env_amp,
    env_period,
    t_start,
    t_end,
    psi0,
    threshold,
    t_grid,
    grid_pos,
    out_states,
    out_norm2,
    rtol,
    atol,
    h_start,
):
    """Integrate one between-jump segment; see module docstring."""
    dim = psi0.size
    y = psi0.copy()
    t = t_start
    stages = np.empty((7, dim), dtype=np.complex128)
    y_tmp = np.empty(dim, dtype=np.complex128)
    y_mid = np.empty(dim, dtype=np.complex128)
    n_steps = 0
    n_rejected = 0
    err_old = 1e-4

    f = _rhs(a_mat, b_mat, use_drive, env_amp, env_period, t, y)
    h = h_start
    if h <= 0.0:
        h = _initial_step(
            a_mat, b_mat, use_drive, env_amp, env_period, t, y, f, rtol, atol, t_end - t_start
        )

    while t < t_end:
        eps_t = 16.0 * (np.nextafter(max(abs(t), 1.0), np.inf) - max(abs(t), 1.0))
        if t_end - t <= eps_t:
            t = t_end
            break
        if h < eps_t:
            return STATUS_UNDERFLOW, t, h, grid_pos, n_steps, n_rejected, y
        if h > t_end - t:
            h = t_end - t

        stages[0] = f
        for s in range(1, 6):
            for k in range(dim):
                y_tmp[k] = y[k]
            for i in range(s):
                coef = _A[s, i] * h
                if coef != 0.0:
                    for k in range(dim):
                        y_tmp[k] += coef * stages[i, k]
            stages[s] = _rhs(a_mat, b_mat, use_drive, env_amp, env_period, t + _C[s] * h, y_tmp)

        for k in range(dim):
            y_tmp[k] = y[k]
        for i in range(6):
            coef = _B[i] * h
            if coef != 0.0:
                for k in range(dim):
                    y_tmp[k] += coef * stages[i, k]
        t_new = t + h
        stages[6] = _rhs(a_mat, b_mat, use_drive, env_amp, env_period, t_new, y_tmp)

        err_acc = 0.0
        for k in range(dim):
            ev = 0.0j
            for i in range(7):
                if _E[i] != 0.0:
                    ev += _E[i] * stages[i, k]
            sc = atol + rtol * max(abs(y[k]), abs(y_tmp[k]))
            v = abs(ev) * h / sc
            err_acc += v * v
        err = np.sqrt(err_acc / dim)

        if err > 1.0:
            n_rejected += 1
            fac = max(_MIN_FACTOR, _SAFETY / err**_EXPO1)
            h *= fac
            continue

        n_steps += 1
        fac = err**_EXPO1 / max(err_old, 1e-10) ** _BETA
        factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY / max(fac, 1e-300)))
        err_old = max(err, 1e-4)

        n_new = _norm2(y_tmp)
        jumped = n_new <= threshold
        t_limit = t_new
        if jumped:
            # Bisection for ||psi(t)||^2 = threshold on the dense interpolant.
            lo = 0.0
            hi = 1.0
            tol_t = JUMP_TIME_RELTOL * max(abs(t), h)
            it = 0
            while (hi - lo) * h > tol_t and it < 80:
                mid = 0.5 * (lo + hi)
                _dense_eval(y, stages, h, mid, y_mid)
                if _norm2(y_mid) > threshold:
                    lo = mid
                else:
                    hi = mid
                it += 1
            x_jump = 0.5 * (lo + hi)
            t_limit = t + x_jump * h

        while grid_pos < t_grid.size and t_grid[grid_pos] <= t_limit:
            x = (t_grid[grid_pos] - t) / h
            _dense_eval(y, stages, h, x, y_mid)
            for k in range(dim):
                out_states[grid_pos, k] = y_mid[k]
            out_norm2[grid_pos] = _norm2(y_mid)
            grid_pos += 1

        if jumped:
            _dense_eval(y, stages, h, (t_limit - t) / h, y_mid)
            return STATUS_JUMP, t_limit, h * factor, grid_pos, n_steps, n_rejected, y_mid.copy()

        t = t_new
        for k in range(dim):
            y[k] = y_tmp[k]
        f = stages[6].copy()  # FSAL (copy: stage rows are overwritten by retries)
        h *= factor

    while grid_pos < t_grid.size and t_grid[grid_pos] <= t + 16.0 * np.nextafter(
        max(abs(t), 1.0), np.inf
    ) - 16.0 * max(abs(t), 1.0):
        for k in range(dim):
            out_states[grid_pos, k] = y[k]
        out_norm2[grid_pos] = _norm2(y)
        grid_pos += 1

    return STATUS_END, t, h, grid_pos, n_steps, n_rejected, y
