"""Expected zero density of random sums with complex Gaussian coefficients.

Three evaluators:

* general  -- (K11 K - |K01|^2) / (pi K^2) from direct kernel sums, any basis
* oprl     -- 1/(4 pi Im(z)^2) (1 - |K(z, conj z)|^2 / K(z, z)^2) from the
              Christoffel-Darboux forms, orthonormal families only
* limit    -- the n -> infinity density for weights of Szego class on
              [-1, 1], written through the exterior Joukowski inverse xi

Array-valued ``*_density`` functions drive grids and quadrature; the
``intensity_*`` functions wrap them for a single point.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import Basis, eval_basis, leading_ratio, top_pair
from .kernels import NotOrthonormalError, axis_threshold, direct_sums_scaled

NEGATIVE_TOLERANCE = 1e-12
BRANCH_CUT_TOLERANCE = 1e-12
DEFAULT_SZEGO_POINTS = 4096


class SingularPointError(ValueError):
    """K_n(z, z) vanished, so the density is undefined at z."""


class NegativeIntensityError(ArithmeticError):
    """A computed density fell below -1e-12: a kernel evaluation is broken."""


class BranchCutError(ValueError):
    """Point lies on (or within 1e-12 of) the segment [-1, 1]."""


class UnsupportedPointError(ValueError):
    """The limiting density formula is not stated at this point."""


class WeightClassError(ValueError):
    """Angular weight is not positive at a quadrature node."""


class ResolutionError(ValueError):
    """Too few quadrature points for the requested distance to the unit circle."""


class IntensityPath(enum.Enum):
    GENERAL_DIRECT = "general"
    OPRL_CD = "oprl"
    SZEGO_LIMIT = "limit"


@dataclass(frozen=True)
class IntensityValue:
    h: float
    path: IntensityPath


@dataclass(frozen=True)
class JoukowskiPoint:
    z: complex
    xi: complex


def _finalize(h, z):
    h = np.asarray(h, dtype=float)
    bad = h < -NEGATIVE_TOLERANCE
    if np.any(bad):
        where = np.asarray(z)[bad] if np.ndim(z) else z
        raise NegativeIntensityError(
            f"density below -{NEGATIVE_TOLERANCE:g} at z={where}: {h[bad] if h.ndim else h}")
    return np.where(h < 0.0, 0.0, h)


def general_density(basis: Basis, n: int, z) -> np.ndarray:
    """Density from direct kernel sums, vectorized over ``z``."""
    zz = np.asarray(z, dtype=complex)
    k, k01, k11, _ = direct_sums_scaled(basis, n, zz)
    zero = k <= 0.0
    if np.any(zero):
        where = zz[zero] if zz.ndim else zz
        raise SingularPointError(f"K_n(z, z) = 0 at z={where}")
    ratio01 = np.abs(k01) / k
    h = (k11 / k - ratio01 * ratio01) / math.pi
    return _finalize(h, zz)


def knn_density(basis: Basis, n: int, z):
    """Christoffel-Darboux density and an estimate of its relative error.

    The closed form subtracts nearly equal quantities close to the real
    axis: ``1 - q^2`` is ``O(Im(z)^2)`` while ``K`` and ``|K(z, conj z)|``
    are each formed by a cancelling difference of products of ``p_n``,
    ``p_{n+1}`` and derivatives. The estimate multiplies those two
    cancellation factors by ``(n + 1) eps`` (rounding carried in from the
    recurrence) and divides by ``1 - q^2``.
    """
    zz = np.asarray(z, dtype=complex)
    y = zz.imag
    pn, pn1, dpn, dpn1, _ = top_pair(basis, n, zz)
    r = leading_ratio(basis, n)
    w_diag = np.imag(pn1 * np.conj(pn))
    a, b = dpn1 * pn, dpn * pn1
    k_diag = r * w_diag / y
    k_off = r * (a - b)
    q = np.abs(k_off) / k_diag
    one_minus_q2 = (1.0 - q) * (1.0 + q)
    h = one_minus_q2 / (4.0 * math.pi * y * y)

    cancel_diag = (np.abs(pn1.imag * pn.real) + np.abs(pn1.real * pn.imag)) / np.abs(w_diag)
    cancel_off = (np.abs(a) + np.abs(b)) / np.abs(a - b)
    with np.errstate(divide="ignore", invalid="ignore"):
        err = ((n + 1) * np.finfo(float).eps * (cancel_diag + cancel_off)
               / np.abs(one_minus_q2))
    err = np.where(np.isfinite(err), err, np.inf)
    return h, err


# CD values whose estimated relative error exceeds this are replaced by the
# direct-sum value; see knn_density
CD_ERROR_BUDGET = 1e-11


def oprl_density(basis: Basis, n: int, z, *, return_mask: bool = False):
    """Density from the Christoffel-Darboux form.

    Points with ``|Im z| <= axis_threshold(z)`` are handed to the direct
    formula, where the CD expression degenerates to 0/0, as are points
    whose CD value is too ill-conditioned to trust (``CD_ERROR_BUDGET``).
    With ``return_mask`` also returns a boolean array marking the points
    served by the CD form.
    """
    if not basis.is_oprl:
        raise NotOrthonormalError(
            f"{basis.name} is not an orthonormal recurrence family")
    zz = np.asarray(z, dtype=complex)
    flat = zz.reshape(-1)
    out = np.zeros(flat.shape)
    use_cd = np.abs(flat.imag) > axis_threshold(flat)
    if n > 0:
        if np.any(use_cd):
            idx = np.flatnonzero(use_cd)
            h, err = knn_density(basis, n, flat[idx])
            ok = err <= CD_ERROR_BUDGET
            out[idx[ok]] = h[ok]
            use_cd[idx[~ok]] = False
        if not np.all(use_cd):
            out[~use_cd] = general_density(basis, n, flat[~use_cd])
    else:
        use_cd[:] = False
    out = _finalize(out.reshape(zz.shape), zz)
    if return_mask:
        return out, use_cd.reshape(zz.shape)
    return out


def intensity_general(basis: Basis, n: int, z: complex) -> IntensityValue:
    return IntensityValue(float(general_density(basis, n, complex(z))),
                          IntensityPath.GENERAL_DIRECT)


def intensity_oprl(basis: Basis, n: int, z: complex) -> IntensityValue:
    """Single-point OPRL density; ``path`` records which formula ran."""
    h, cd = oprl_density(basis, n, complex(z), return_mask=True)
    path = IntensityPath.OPRL_CD if cd else IntensityPath.GENERAL_DIRECT
    return IntensityValue(float(h), path)


def _segment_distance(z: np.ndarray) -> np.ndarray:
    return np.abs(z - np.clip(z.real, -1.0, 1.0))


def joukowski_xi_array(z) -> np.ndarray:
    """Exterior inverse of ``z = (xi + 1/xi)/2``; NaN on the cut."""
    zz = np.asarray(z, dtype=complex)
    s = np.sqrt(zz * zz - 1.0)
    xi = zz + s
    inside = np.abs(xi) <= 1.0
    xi = np.where(inside, zz - s, xi)
    return np.where(_segment_distance(zz) <= BRANCH_CUT_TOLERANCE, np.nan, xi)


def joukowski_xi(z: complex) -> JoukowskiPoint:
    """``xi = z + sqrt(z^2 - 1)`` with the root chosen so that ``|xi| > 1``."""
    z = complex(z)
    if _segment_distance(np.asarray(z)) <= BRANCH_CUT_TOLERANCE:
        raise BranchCutError(f"z={z} lies on the cut [-1, 1]")
    return JoukowskiPoint(z, complex(joukowski_xi_array(z)))


def limit_density(z, *, on_invalid: str = "raise") -> np.ndarray:
    """Limiting density, vectorized.

    ``on_invalid="nan"`` maps points on ``[-1, 1]`` or the real axis to NaN
    instead of raising.
    """
    zz = np.asarray(z, dtype=complex)
    on_cut = _segment_distance(zz) <= BRANCH_CUT_TOLERANCE
    on_axis = zz.imag == 0.0
    if on_invalid == "raise":
        if np.any(on_cut):
            raise BranchCutError(f"z={zz[on_cut] if zz.ndim else zz} lies on [-1, 1]")
        if np.any(on_axis):
            raise UnsupportedPointError(
                f"limit density needs Im z != 0; got z={zz[on_axis] if zz.ndim else zz}")
    bad = on_cut | on_axis
    safe = np.where(bad, 2.0 + 1.0j, zz)
    xi = joukowski_xi_array(safe)
    y = safe.imag
    w = np.abs(safe * safe - 1.0)
    frac = (y * y * np.abs(xi) ** 2) / (w * xi.imag ** 2)
    h = (1.0 - frac) / (4.0 * math.pi * y * y)
    h = _finalize(np.where(bad, 0.0, h), safe)
    return np.where(bad, np.nan, h)


def intensity_limit(z: complex) -> IntensityValue:
    return IntensityValue(float(limit_density(complex(z))),
                          IntensityPath.SZEGO_LIMIT)


def szego_function(f: Callable[[np.ndarray], np.ndarray], xi_inv: complex,
                   m: Optional[int] = None) -> complex:
    """Szego function ``D(f; xi_inv)`` for ``|xi_inv| < 1``.

    Uniform (midpoint-offset) trapezoidal rule on ``[-pi, pi)``; the offset
    keeps the nodes off ``theta = 0, +-pi`` where weights such as
    ``|sin theta|`` vanish. Convergence is spectral for smooth positive
    weights but only ``O(1/m)`` when ``log f`` has singularities, as for
    the Legendre weight.
    """
    r = abs(xi_inv)
    if r > 0.999:
        raise ResolutionError(f"|xi_inv|={r} too close to the unit circle")
    needed = math.ceil(50.0 / (1.0 - r))
    if m is None:
        m = max(DEFAULT_SZEGO_POINTS, needed)
    elif m < needed:
        raise ResolutionError(
            f"m={m} points cannot resolve |xi_inv|={r}; need m >= {needed}")
    t = -math.pi + (np.arange(m) + 0.5) * (2.0 * math.pi / m)
    ft = np.asarray(f(t), dtype=float)
    if np.any(~np.isfinite(ft)) or np.any(ft <= 0.0):
        raise WeightClassError("weight must be positive and finite on [-pi, pi]")
    e = xi_inv * np.exp(-1j * t)
    integral = np.sum(np.log(ft) * (1.0 + e) / (1.0 - e)) * (2.0 * math.pi / m)
    return complex(np.exp(integral / (4.0 * math.pi)))


def asymptotic_pn(basis: Basis, f: Optional[Callable], n: int, z: complex,
                  m: Optional[int] = None) -> tuple[complex, float]:
    """Exterior asymptotic ``xi^n / (sqrt(2 pi) D(1/xi))`` and its relative error.

    ``f`` defaults to the basis' own angular weight ``w(cos t)|sin t|``.
    """
    if f is None:
        f = basis.angular_weight
        if f is None:
            raise ValueError(f"{basis.name} carries no angular weight")
    xi = joukowski_xi(z).xi
    d = szego_function(f, 1.0 / xi, m)
    approx = xi ** n / (math.sqrt(2.0 * math.pi) * d)
    exact = complex(eval_basis(basis, n, complex(z)).values[n])
    return approx, abs(exact - approx) / abs(exact)
