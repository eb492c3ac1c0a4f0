"""Dual coordinate descent for the L2-regularised hinge-loss SVM.

Solves ``max_a sum(a) - 0.5 * ||sum_i a_i y_i x_i||^2`` subject to
``0 <= a_i <= C``. The bias is handled by the caller appending a constant
feature, so there is no equality constraint and every coordinate step is an
exact, clipped Newton step.

Plain coordinate descent stalls when C is large and the data are not
separable: the Hessian ``Z Z^T`` has rank at most ``d + 1`` while hundreds
of multipliers must travel to the upper bound. Every few epochs the driver
therefore tries one projected, Levenberg-damped Newton step on the
non-fixed coordinates and keeps it only if the dual objective increases.
"""

import numpy as np
from numba import njit

NEWTON_EVERY = 3
DAMPING = 1e-8
BACKTRACK = 60


@njit(cache=True)
def _next(state):
    # xorshift64* step; state is a length-1 uint64 array
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * np.uint64(0x2545F4914F6CDD1D)


@njit(cache=True)
def _shuffle(order, state):
    for i in range(order.shape[0] - 1, 0, -1):
        j = np.int64(_next(state) % np.uint64(i + 1))
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp


@njit(cache=True)
def kkt_violation(X, y, alpha, w, C):
    """Largest projected-gradient magnitude over all coordinates."""
    worst = 0.0
    for i in range(X.shape[0]):
        g = y[i] * np.dot(w, X[i]) - 1.0
        if alpha[i] <= 0.0:
            pg = min(g, 0.0)
        elif alpha[i] >= C:
            pg = max(g, 0.0)
        else:
            pg = g
        if abs(pg) > worst:
            worst = abs(pg)
    return worst


@njit(cache=True)
def _epochs(X, y, C, alpha, w, qii, order, state, n_epochs, tol, objectives, start):
    """Up to ``n_epochs`` randomly ordered sweeps; updates ``alpha``/``w`` in place."""
    n, d = X.shape
    done = 0
    viol = kkt_violation(X, y, alpha, w, C)
    while done < n_epochs and viol >= tol:
        _shuffle(order, state)
        for k in range(n):
            i = order[k]
            if qii[i] <= 0.0:
                continue
            g = y[i] * np.dot(w, X[i]) - 1.0
            a_old = alpha[i]
            if a_old <= 0.0:
                pg = min(g, 0.0)
            elif a_old >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg == 0.0:
                continue
            a_new = min(max(a_old - g / qii[i], 0.0), C)
            delta = (a_new - a_old) * y[i]
            if delta != 0.0:
                alpha[i] = a_new
                for j in range(d):
                    w[j] += delta * X[i, j]
        objectives[start + done] = np.sum(alpha) - 0.5 * np.dot(w, w)
        done += 1
        viol = kkt_violation(X, y, alpha, w, C)
    return done, viol


def _damped_solve(ZF, g, mu):
    """``(ZF ZF^T + mu I)^-1 g``, through the smaller of the two Gram matrices."""
    m, d = ZF.shape
    if m <= d:
        return np.linalg.solve(ZF @ ZF.T + mu * np.eye(m), g)
    inner = np.linalg.solve(ZF.T @ ZF + mu * np.eye(d), ZF.T @ g)
    return (g - ZF @ inner) / mu


def _newton_step(Z, C, alpha, w):
    """Projected damped Newton step; returns the improved ``alpha`` or ``None``."""
    g = 1.0 - Z @ w
    fixed = ((alpha <= 0.0) & (g <= 0.0)) | ((alpha >= C) & (g >= 0.0))
    F = np.flatnonzero(~fixed)
    if F.size == 0:
        return None
    ZF = Z[F]
    mu = DAMPING * np.einsum("ij,ij->", ZF, ZF) / F.size + 1e-300
    step = _damped_solve(ZF, g[F], mu)
    base = alpha.sum() - 0.5 * w @ w
    t = 1.0
    for _ in range(BACKTRACK):
        trial = alpha.copy()
        trial[F] = np.clip(alpha[F] + t * step, 0.0, C)
        wt = trial @ Z
        if trial.sum() - 0.5 * wt @ wt > base:
            return trial
        t *= 0.5
    return None


def solve(X, y, C, tol, max_epochs, seed, alpha0=None):
    """Run coordinate descent; returns ``(alpha, w, epochs, violation, objectives)``.

    ``X`` already carries the constant bias column. ``objectives[k]`` is the
    dual objective after epoch ``k``; it never decreases. Convergence means
    the KKT violation, recomputed after an epoch, is below ``tol``.
    ``alpha0`` warm-starts the multipliers (clipped into the box).
    """
    n, d = X.shape
    alpha = np.zeros(n) if alpha0 is None else np.clip(np.asarray(alpha0, float), 0.0, C)
    Z = X * y[:, None]
    w = alpha @ Z
    qii = np.einsum("ij,ij->i", X, X)
    order = np.arange(n)
    state = np.array([(seed ^ 0x9E3779B97F4A7C15) or 1], dtype=np.uint64)
    objectives = np.empty(max_epochs)
    epochs = 0
    violation = kkt_violation(X, y, alpha, w, C)
    while epochs < max_epochs and violation >= tol:
        done, violation = _epochs(X, y, C, alpha, w, qii, order, state,
                                  min(NEWTON_EVERY, max_epochs - epochs), tol,
                                  objectives, epochs)
        epochs += done
        if violation < tol or epochs >= max_epochs:
            break
        better = _newton_step(Z, C, alpha, w)
        if better is not None:
            alpha[:] = better
            w[:] = better @ Z
            violation = kkt_violation(X, y, alpha, w, C)
    return alpha, w, epochs, violation, objectives[:epochs]
