"""Compiled inner loops for the sparse precision solver.

The whole block-coordinate sweep lives here so the hot path runs
without Python-level allocation.  Falls back to plain Python when numba
is unavailable (correct, but far slower).
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func
        return wrap


@njit(cache=True, fastmath=True)
def glasso_sweep(s, rho, omega, w, inner_tol, max_pass):
    """One cyclic pass of exact column minimizations, in place.

    ``omega`` is the current precision iterate and ``w`` its inverse
    (refreshed by the caller at sweep start, kept in sync here via the
    partitioned-inverse identities).  For column j the subproblem

        min_b  s12'b + ((s_jj + rho)/2) b' Theta b + rho*||b||_1,
        Theta = inverse of omega with row/col j deleted,

    is solved by coordinate descent with soft-thresholding (exact
    zeros), after which omega_jj = 1/(s_jj + rho) + b'Theta b restores
    positive definiteness.  Returns the max elementwise change in omega.
    """
    p = s.shape[0]
    m = p - 1
    theta = np.empty((m, m))
    beta = np.empty(m)
    resid = np.empty(m)
    s12 = np.empty(m)
    wcol = np.empty(m)
    delta = 0.0
    for j in range(p):
        scale = s[j, j] + rho
        wjj = w[j, j]
        for a in range(m):
            ia = a if a < j else a + 1
            beta[a] = omega[ia, j]
            s12[a] = s[ia, j]
            wcol[a] = w[ia, j]
        for a in range(m):
            ia = a if a < j else a + 1
            waj = wcol[a] / wjj
            wrow = w[ia]
            trow = theta[a]
            for b in range(m):
                ib = b if b < j else b + 1
                trow[b] = wrow[ib] - waj * wcol[b]
        for a in range(m):
            acc = 0.0
            trow = theta[a]
            for b in range(m):
                acc += trow[b] * beta[b]
            resid[a] = acc
        for _ in range(max_pass):
            dmax = 0.0
            for k in range(m):
                b_old = beta[k]
                dkk = theta[k, k]
                z = s12[k] + scale * (resid[k] - dkk * b_old)
                if z > rho:
                    b_new = -(z - rho) / (scale * dkk)
                elif z < -rho:
                    b_new = -(z + rho) / (scale * dkk)
                else:
                    b_new = 0.0
                d = b_new - b_old
                if d != 0.0:
                    beta[k] = b_new
                    for l in range(m):
                        resid[l] += d * theta[l, k]
                    if abs(d) > dmax:
                        dmax = abs(d)
            if dmax <= inner_tol:
                break
        acc = 0.0
        for a in range(m):
            acc += beta[a] * resid[a]
        ojj_new = 1.0 / scale + acc
        for a in range(m):
            ia = a if a < j else a + 1
            d = abs(beta[a] - omega[ia, j])
            if d > delta:
                delta = d
            omega[ia, j] = beta[a]
            omega[j, ia] = beta[a]
        d = abs(ojj_new - omega[j, j])
        if d > delta:
            delta = d
        omega[j, j] = ojj_new
        for a in range(m):
            ia = a if a < j else a + 1
            ra = resid[a]
            w[ia, j] = -scale * ra
            w[j, ia] = -scale * ra
            wrow = w[ia]
            trow = theta[a]
            sra = scale * ra
            for b in range(m):
                ib = b if b < j else b + 1
                wrow[ib] = trow[b] + sra * resid[b]
        w[j, j] = scale
    return delta
