"""Dormand-Prince 5(4) embedded Runge-Kutta step with FSAL.

Only the single step and the step-size controller live here; the soliton
driver owns the loop because its events (slope switch, axis return, turning
points) are problem specific.
"""
from __future__ import annotations

import numpy as np

ORDER = 5

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4


def dopri_step(fun, t, y, h, f0):
    """One DP5(4) step.

    Returns ``(y_new, err, f_new)`` where ``err`` is the componentwise
    difference between the 5th and 4th order solutions and ``f_new`` is
    ``fun(t + h, y_new)`` (reused as the next step's first stage).
    """
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(A[i], k))
        k.append(fun(t + C[i] * h, yi))
    y_new = y + h * sum(b * kj for b, kj in zip(B5, k) if b != 0.0)
    err = h * sum(e * kj for e, kj in zip(E, k) if e != 0.0)
    return y_new, err, k[6]


def error_norm(err, y, y_new, tol):
    scale = tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
    return float(np.max(np.abs(err) / scale))


def next_step(h, err_norm, safety=0.9, grow=5.0, shrink=0.2):
    if err_norm == 0:
        return h * grow
    return h * min(grow, max(shrink, safety * err_norm ** (-1.0 / ORDER)))
