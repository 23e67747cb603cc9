"""Compiled kernels for the Monte Carlo root finder.

Everything here works on plain arrays so it can run under numba with the
GIL released. The public wrapper is ``montecarlo.find_roots``.
"""
import numpy as np
from numba import njit

_EPS = np.finfo(np.float64).eps

STATUS_OK = 0
STATUS_QR_FAILED = 1


@njit(cache=True, nogil=True)
def comrade_hessenberg(A, B, C, eta):
    """Upper Hessenberg matrix whose eigenvalues are the zeros of sum eta_j p_j.

    From ``z p_j = (p_{j+1} - B_j p_j + C_j p_{j-1}) / A_j`` for ``j < n``
    and ``p_n = -sum_{j<n} eta_j p_j / eta_n``; the transpose of that
    lower Hessenberg operator is returned.
    """
    n = eta.shape[0] - 1
    H = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        H[j, j] = -B[j] / A[j]
        if j + 1 < n:
            H[j + 1, j] = 1.0 / A[j]
        if j >= 1:
            H[j - 1, j] = C[j] / A[j]
    scale = 1.0 / (A[n - 1] * eta[n])
    for j in range(n):
        H[j, n - 1] -= scale * eta[j]
    return H


@njit(cache=True, nogil=True)
def balance(H):
    """Parlett-Reinsch diagonal scaling by powers of two, in place."""
    n = H.shape[0]
    done = False
    while not done:
        done = True
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += abs(H[j, i])
                    r += abs(H[i, j])
            if c == 0.0 or r == 0.0:
                continue
            g = r / 2.0
            f = 1.0
            s = c + r
            while c < g:
                f *= 2.0
                c *= 4.0
            g = r * 2.0
            while c > g:
                f /= 2.0
                c /= 4.0
            if (c + r) / f < 0.95 * s:
                done = False
                for j in range(n):
                    H[i, j] /= f
                    H[j, i] *= f


@njit(cache=True, nogil=True)
def _givens(x, y):
    ax = abs(x)
    ay = abs(y)
    if ay == 0.0:
        return 1.0, 0.0j
    if ax == 0.0:
        return 0.0, np.conj(y) / ay
    nrm = np.hypot(ax, ay)
    return ax / nrm, (x / ax) * np.conj(y) / nrm


@njit(cache=True, nogil=True)
def hessenberg_eigvals(H, max_iter):
    """Eigenvalues of upper Hessenberg ``H`` (destroyed) by shifted QR.

    Implicit single-shift bulge chasing on the active block, Wilkinson
    shifts, exceptional shifts after 10 and 20 stalled sweeps. Returns
    ``(eigs, ok)``.
    """
    n = H.shape[0]
    eig = np.zeros(n, dtype=np.complex128)
    hi = n - 1
    its = 0
    total = 0
    while hi >= 0:
        if hi == 0:
            eig[0] = H[0, 0]
            break
        l = hi
        while l > 0:
            s = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if s == 0.0:
                for i in range(hi + 1):
                    s += abs(H[i, l])
            if abs(H[l, l - 1]) <= _EPS * s:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            eig[hi] = H[hi, hi]
            hi -= 1
            its = 0
            continue
        if total >= max_iter:
            return eig, False
        its += 1
        total += 1

        if its == 10 or its == 20:
            mu = H[hi, hi] + 1.5 * abs(H[hi, hi - 1]) * (0.6 + 0.8j)
        else:
            a = H[hi - 1, hi - 1]
            b = H[hi - 1, hi]
            c = H[hi, hi - 1]
            d = H[hi, hi]
            m = 0.5 * (a + d)
            disc = np.sqrt(0.25 * (a - d) * (a - d) + b * c)
            mu1 = m + disc
            mu2 = m - disc
            mu = mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2

        for k in range(l, hi):
            if k == l:
                x = H[l, l] - mu
                y = H[l + 1, l]
            else:
                x = H[k, k - 1]
                y = H[k + 1, k - 1]
            cs, sn = _givens(x, y)
            j0 = l if k == l else k - 1
            for j in range(j0, hi + 1):
                p = H[k, j]
                q = H[k + 1, j]
                H[k, j] = cs * p + sn * q
                H[k + 1, j] = -np.conj(sn) * p + cs * q
            if k > l:
                H[k + 1, k - 1] = 0.0
            i1 = min(k + 2, hi)
            csn = np.conj(sn)
            for i in range(l, i1 + 1):
                p = H[i, k]
                q = H[i, k + 1]
                H[i, k] = p * cs + q * csn
                H[i, k + 1] = -p * sn + q * cs
    return eig, True


@njit(cache=True, nogil=True)
def eval_sum(A, B, C, c0, eta, z):
    """``(P(z), P'(z))`` by the forward recurrence."""
    n = eta.shape[0] - 1
    p_prev = 0.0j
    d_prev = 0.0j
    p = c0 + 0.0j
    d = 0.0j
    P = eta[0] * p
    dP = 0.0j
    for j in range(n):
        lin = A[j] * z + B[j]
        p_next = lin * p - C[j] * p_prev
        d_next = A[j] * p + lin * d - C[j] * d_prev
        p_prev = p
        d_prev = d
        p = p_next
        d = d_next
        P += eta[j + 1] * p
        dP += eta[j + 1] * d
    return P, dP


@njit(cache=True, nogil=True)
def newton_polish(A, B, C, c0, eta, roots, resid, steps):
    """Safeguarded Newton: a step is kept only if it lowers ``|P|`` and
    stays well inside the gap to the nearest other root.

    ``resid`` gets the size of the next Newton correction relative to
    ``1 + |z|``, an estimate of each root's forward error.
    """
    n = roots.shape[0]
    for i in range(n):
        z = roots[i]
        sep = np.inf
        for k in range(n):
            if k != i:
                sep = min(sep, abs(roots[k] - z))
        P, dP = eval_sum(A, B, C, c0, eta, z)
        for _ in range(steps):
            if P == 0.0 or dP == 0.0:
                break
            dz = P / dP
            if abs(dz) > 0.25 * sep:
                break
            zn = z - dz
            Pn, dPn = eval_sum(A, B, C, c0, eta, zn)
            if not abs(Pn) < abs(P):
                break
            z = zn
            P = Pn
            dP = dPn
        roots[i] = z
        if P == 0.0:
            resid[i] = 0.0
        elif dP == 0.0:
            resid[i] = np.inf
        else:
            resid[i] = abs(P / dP) / (1.0 + abs(z))


@njit(cache=True, nogil=True)
def solve_one(A, B, C, c0, eta, jitter, roots, resid):
    """Roots of one sum into ``roots``/``resid``; returns a status code.

    ``jitter`` (length n, positive) applies a diagonal similarity after
    balancing; pass ones for the plain solve.
    """
    n = eta.shape[0] - 1
    H = comrade_hessenberg(A, B, C, eta)
    balance(H)
    for i in range(n):
        for j in range(n):
            H[i, j] *= jitter[i] / jitter[j]
    eig, ok = hessenberg_eigvals(H, 30 * n)
    if not ok:
        return STATUS_QR_FAILED
    for i in range(n):
        roots[i] = eig[i]
    newton_polish(A, B, C, c0, eta, roots, resid, 5)
    return STATUS_OK


@njit(cache=True, nogil=True)
def solve_block(A, B, C, c0, etas, roots, resid, status):
    ones = np.ones(etas.shape[1] - 1)
    for t in range(etas.shape[0]):
        status[t] = solve_one(A, B, C, c0, etas[t], ones, roots[t], resid[t])
