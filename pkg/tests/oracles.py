"""Reference computations that share no code with the package under test."""

import itertools
import math

import numpy as np


def svm_dual_bruteforce(X, y, C):
    """Exact solution of the bias-augmented SVM dual by active-set enumeration.

    Maximises ``sum(a) - 0.5 a^T Q a`` with ``Q_ij = y_i y_j (x_i.x_j + 1)``
    and ``0 <= a <= C``. Every assignment of each coordinate to
    {lower bound, upper bound, free} is tried; free coordinates solve the
    stationarity equations, and the assignment must satisfy all KKT
    conditions. Returns ``(w, b, alpha)`` with ``w = sum a_i y_i x_i`` and
    ``b = sum a_i y_i``.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    n = len(y)
    Xa = np.hstack([X, np.ones((n, 1))])
    Q = (y[:, None] * y[None, :]) * (Xa @ Xa.T)
    best, best_obj = None, -np.inf
    for states in itertools.product((0, 1, 2), repeat=n):
        a = np.zeros(n)
        upper = [i for i, s in enumerate(states) if s == 1]
        free = [i for i, s in enumerate(states) if s == 2]
        a[upper] = C
        if free:
            rhs = 1.0 - Q[np.ix_(free, upper)] @ a[upper]
            sol, *_ = np.linalg.lstsq(Q[np.ix_(free, free)], rhs, rcond=None)
            if np.max(np.abs(Q[np.ix_(free, free)] @ sol - rhs)) > 1e-9:
                continue
            if np.any(sol < -1e-12) or np.any(sol > C + 1e-12):
                continue
            a[free] = np.clip(sol, 0, C)
        grad = 1.0 - Q @ a
        ok = True
        for i, s in enumerate(states):
            if s == 0 and grad[i] > 1e-9:
                ok = False
            elif s == 1 and grad[i] < -1e-9:
                ok = False
            elif s == 2 and abs(grad[i]) > 1e-7:
                ok = False
        if not ok:
            continue
        obj = a.sum() - 0.5 * a @ Q @ a
        if obj > best_obj:
            best_obj, best = obj, a
    w_aug = (best * y) @ Xa
    return w_aug[:-1], w_aug[-1], best


def butterworth_lowpass_magnitude(f, cutoff, order, rate):
    """|H| of a bilinear (pre-warped) digital Butterworth lowpass."""
    ratio = np.tan(np.pi * np.asarray(f, float) / rate) / math.tan(math.pi * cutoff / rate)
    return 1.0 / np.sqrt(1.0 + ratio ** (2 * order))


def butterworth_bandpass_magnitude(f, lo, hi, order, rate):
    """|H| of a bilinear (pre-warped) digital Butterworth bandpass.

    In the warped analog domain the bandpass maps to the lowpass prototype
    through ``Omega_p = (Omega^2 - Omega_0^2) / (Omega * BW)``.
    """
    w = 2 * rate * np.tan(np.pi * np.asarray(f, float) / rate)
    w1 = 2 * rate * math.tan(math.pi * lo / rate)
    w2 = 2 * rate * math.tan(math.pi * hi / rate)
    with np.errstate(divide="ignore"):
        proto = (w * w - w1 * w2) / (w * (w2 - w1))
    return 1.0 / np.sqrt(1.0 + proto ** (2 * order))


def butterworth_bandstop_magnitude(f, lo, hi, order, rate):
    w = 2 * rate * np.tan(np.pi * np.asarray(f, float) / rate)
    w1 = 2 * rate * math.tan(math.pi * lo / rate)
    w2 = 2 * rate * math.tan(math.pi * hi / rate)
    with np.errstate(divide="ignore"):
        proto = (w * (w2 - w1)) / (w * w - w1 * w2)
    return 1.0 / np.sqrt(1.0 + proto ** (2 * order))


def loglog_slope(freqs, power, lo, hi):
    m = (freqs >= lo) & (freqs <= hi)
    return np.polyfit(np.log10(freqs[m]), np.log10(power[m]), 1)[0]
