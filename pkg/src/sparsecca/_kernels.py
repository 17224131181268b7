"""Compiled inner loops: cyclic Jacobi rotations and Lasso coordinate descent.

Both kernels release the GIL so callers can fan rows/replicates out over a
thread pool.  Neither kernel allocates per iteration.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def jacobi_sweeps(a, v, max_sweeps, rel_tol):
    """In-place cyclic Jacobi on symmetric ``a``; rotations accumulate in ``v``.

    Returns the number of sweeps used, or -1 if ``max_sweeps`` ran out.
    Off-diagonal target is ``rel_tol * ||a||_F``.
    """
    d = a.shape[0]
    total = 0.0
    for i in range(d):
        for j in range(d):
            total += a[i, j] * a[i, j]
    if total == 0.0:
        return 0
    target = rel_tol * rel_tol * total
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(d):
            for j in range(i + 1, d):
                off += 2.0 * a[i, j] * a[i, j]
        if off <= target:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(d):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(d):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(d):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return -1


@njit(cache=True, nogil=True)
def lasso_cd(x, y, lam, beta, max_iters, tol, history, record):
    """Cyclic coordinate descent for ``sum (y - x^T beta)^2 + lam * |beta|_1``.

    ``x`` is p x n (features as rows), ``beta`` is updated in place.  After a
    full sweep that moved something, sweeps run over the active set only
    until it settles; convergence is only declared after a *full* sweep whose
    largest ``|delta| / max(1, |beta_j|)`` is below ``tol``.

    Returns ``(sweeps, converged)``.  When ``record`` is true the objective
    after each sweep is written to ``history[sweep - 1]``.
    """
    p, n = x.shape
    half = 0.5 * lam
    norms2 = np.empty(p)
    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += x[j, i] * x[j, i]
        norms2[j] = acc
    res = y.copy()
    for j in range(p):
        bj = beta[j]
        if bj != 0.0:
            if norms2[j] == 0.0:
                beta[j] = 0.0
                continue
            for i in range(n):
                res[i] -= bj * x[j, i]

    sweeps = 0
    converged = False
    active_only = False
    while sweeps < max_iters:
        sweeps += 1
        max_change = 0.0
        for j in range(p):
            old = beta[j]
            if active_only and old == 0.0:
                continue
            nj = norms2[j]
            if nj == 0.0:
                continue
            rho = nj * old
            for i in range(n):
                rho += x[j, i] * res[i]
            if rho > half:
                new = (rho - half) / nj
            elif rho < -half:
                new = (rho + half) / nj
            else:
                new = 0.0
            if new != old:
                delta = new - old
                for i in range(n):
                    res[i] -= delta * x[j, i]
                beta[j] = new
                scale = abs(new)
                if scale < 1.0:
                    scale = 1.0
                change = abs(delta) / scale
                if change > max_change:
                    max_change = change
        if record:
            obj = 0.0
            for i in range(n):
                obj += res[i] * res[i]
            pen = 0.0
            for j in range(p):
                pen += abs(beta[j])
            history[sweeps - 1] = obj + lam * pen
        if max_change < tol:
            if active_only:
                active_only = False
            else:
                converged = True
                break
        else:
            active_only = True
    return sweeps, converged


@njit(cache=True, nogil=True)
def lasso_cd_gram(g, c, yy, lam, beta, max_iters, tol, history, record):
    """Covariance-update form of :func:`lasso_cd` for ``n >= p``.

    ``g = x x^T``, ``c = x y``, ``yy = y^T y``.  Same cyclic order, active-set
    schedule and stopping rule; each untouched coordinate costs O(1) and each
    change O(p) instead of O(n).
    """
    p = g.shape[0]
    half = 0.5 * lam
    q = np.zeros(p)
    for j in range(p):
        if g[j, j] == 0.0:
            beta[j] = 0.0
    for k in range(p):
        bk = beta[k]
        if bk != 0.0:
            for j in range(p):
                q[j] += g[j, k] * bk

    sweeps = 0
    converged = False
    active_only = False
    while sweeps < max_iters:
        sweeps += 1
        max_change = 0.0
        for j in range(p):
            old = beta[j]
            if active_only and old == 0.0:
                continue
            nj = g[j, j]
            if nj == 0.0:
                continue
            rho = c[j] - q[j] + nj * old
            if rho > half:
                new = (rho - half) / nj
            elif rho < -half:
                new = (rho + half) / nj
            else:
                new = 0.0
            if new != old:
                delta = new - old
                for k in range(p):
                    q[k] += g[k, j] * delta
                beta[j] = new
                scale = abs(new)
                if scale < 1.0:
                    scale = 1.0
                change = abs(delta) / scale
                if change > max_change:
                    max_change = change
        if record:
            obj = yy
            pen = 0.0
            for j in range(p):
                obj += beta[j] * (q[j] - 2.0 * c[j])
                pen += abs(beta[j])
            history[sweeps - 1] = obj + lam * pen
        if max_change < tol:
            if active_only:
                active_only = False
            else:
                converged = True
                break
        else:
            active_only = True
    return sweeps, converged
