"""Diagonal reproducing kernels of a basis.

For a family ``{f_j}`` real on the real line,

    K(z, z)      = sum |f_j(z)|^2
    K01(z, z)    = sum f_j(z) conj(f_j'(z))
    K11(z, z)    = sum |f_j'(z)|^2

``kernel_direct`` sums these term by term. For orthonormal recurrence
families the ``cd_*`` functions collapse the sums with the
Christoffel-Darboux identity, needing only ``p_n`` and ``p_{n+1}``.
Values at ``conj(z)`` come from conjugation because the recurrence
coefficients are real.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Basis, eval_basis, leading_ratio, top_pair

# cd_* refuse points this close to the axis; the 1/Im(z) factors blow up
CD_HARD_FLOOR = 1e-300


class NearAxisError(ValueError):
    """A closed form with a 1/Im(z) factor was asked for a (near-)real point."""


class NotOrthonormalError(TypeError):
    """A Christoffel-Darboux path was requested for a non-OPRL basis."""


@dataclass(frozen=True)
class KernelTriple:
    k: complex
    k01: complex
    k11: complex
    n: int


def axis_threshold(z):
    """Distance from the real axis below which direct sums replace CD forms."""
    return 1e-4 * (1.0 + np.abs(z))


def kernel_direct(basis: Basis, n: int, z) -> KernelTriple:
    """``K, K01, K11`` at ``(z, z)`` summed from one ``eval_basis`` call."""
    ev = eval_basis(basis, n, z)
    v, d = ev.values, ev.derivs
    k = np.sum(v * v.conj(), axis=0)
    k01 = np.sum(v * d.conj(), axis=0)
    k11 = np.sum(d * d.conj(), axis=0)
    if np.ndim(k) == 0:
        k, k01, k11 = complex(k), complex(k01), complex(k11)
    return KernelTriple(k, k01, k11, n)


def direct_sums_scaled(basis: Basis, n: int, z):
    """Kernel sums with a shared rescaling, for ratio-only consumers.

    Returns ``(k, k01, k11, log_scale)``; true kernels equal the returned
    sums times ``exp(2 * log_scale)``. Unlike ``kernel_direct`` this never
    overflows for large ``n`` and ``|z|``.
    """
    basis.check_degree(n)
    zz = np.asarray(z, dtype=complex)
    A, B, C = basis.A, basis.B, basis.C
    root = basis.common_root
    lin_root = None if root is None else zz - root

    p_prev = np.zeros_like(zz)
    d_prev = np.zeros_like(zz)
    p = np.full_like(zz, basis.c0)
    d = np.zeros_like(zz)
    k = np.zeros(zz.shape)
    k01 = np.zeros_like(zz)
    k11 = np.zeros(zz.shape)
    log_scale = np.zeros(zz.shape)

    def accumulate(p, d):
        if lin_root is not None:
            p, d = p * lin_root, p + lin_root * d
        return (p.real ** 2 + p.imag ** 2, p * d.conj(),
                d.real ** 2 + d.imag ** 2)

    a, b, c = accumulate(p, d)
    k += a
    k01 += b
    k11 += c
    for j in range(n):
        lin = A[j] * zz + B[j]
        p_next = lin * p - C[j] * p_prev
        d_next = A[j] * p + lin * d - C[j] * d_prev
        p_prev, d_prev, p, d = p, d, p_next, d_next
        a, b, c = accumulate(p, d)
        k += a
        k01 += b
        k11 += c
        if j % 16 == 15:
            mag = np.maximum(np.abs(p), np.abs(d))
            big = mag > 1e100
            if np.any(big):
                s = np.where(big, mag, 1.0)
                p, p_prev, d, d_prev = p / s, p_prev / s, d / s, d_prev / s
                s2 = s * s
                k, k01, k11 = k / s2, k01 / s2, k11 / s2
                log_scale += np.log(s)
    return k, k01, k11, log_scale


def _require_oprl(basis: Basis) -> None:
    if not basis.is_oprl:
        raise NotOrthonormalError(
            f"{basis.name} is not an orthonormal recurrence family")


def _imag_checked(z):
    y = np.imag(z)
    bad = np.abs(y) < CD_HARD_FLOOR
    if np.any(bad):
        zz = np.asarray(z)[bad] if np.ndim(z) else z
        raise NearAxisError(
            f"Im(z) too small for the Christoffel-Darboux form at z={zz}; "
            "use kernel_direct")
    return y


def _unscale(x, log_scale, power=2):
    if np.ndim(x) == 0:
        return complex(x) * float(np.exp(power * log_scale))
    return x * np.exp(power * log_scale)


def cd_diag_scaled(basis: Basis, n: int, z):
    """``K_n(z, z)`` by Christoffel-Darboux, sharing ``top_pair``'s scale."""
    y = _imag_checked(z)
    pn, pn1, _, _, ls = top_pair(basis, n, z)
    r = leading_ratio(basis, n)
    return r * np.imag(pn1 * np.conj(pn)) / y, ls


def cd_diag(basis: Basis, n: int, z):
    """``K_n(z, z) = (k_n/k_{n+1}) Im(p_{n+1}(z) p_n(conj z)) / Im z``."""
    _require_oprl(basis)
    k, ls = cd_diag_scaled(basis, n, z)
    return _unscale(k + 0j, ls)


def cd_offdiag(basis: Basis, n: int, z):
    """``K_n(z, conj z) = sum p_j(z)^2``, valid on the real axis too."""
    _require_oprl(basis)
    pn, pn1, dpn, dpn1, ls = top_pair(basis, n, z)
    r = leading_ratio(basis, n)
    return _unscale(r * (dpn1 * pn - dpn * pn1), ls)


def cd_deriv_kernels(basis: Basis, n: int, z):
    """``(K01(z, z), K11(z, z))`` from the differentiated CD identity.

    A cross-check path: the intensity code uses ``cd_diag`` and
    ``cd_offdiag`` only.
    """
    _require_oprl(basis)
    y = _imag_checked(z)
    pn, pn1, dpn, dpn1, ls = top_pair(basis, n, z)
    r = leading_ratio(basis, n)
    k = r * np.imag(pn1 * np.conj(pn)) / y
    two_iy = 2j * y
    k01 = r * (pn1 * np.conj(dpn) - pn * np.conj(dpn1)) / two_iy + k / two_iy
    k01_bar = (r * (np.conj(pn) * dpn1 - np.conj(pn1) * dpn) / two_iy
               - k / two_iy)
    k11 = ((k01_bar - k01) / two_iy
           + r * np.imag(dpn1 * np.conj(dpn)) / y)
    return _unscale(k01, ls), _unscale(k11, ls)
