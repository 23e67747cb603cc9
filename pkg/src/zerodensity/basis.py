"""Basis families evaluated through a three-term recurrence.

Every family is stored as coefficient arrays ``(A_j, B_j, C_j)`` with

    p_{j+1}(z) = (A_j z + B_j) p_j(z) - C_j p_{j-1}(z),   p_{-1} = 0,  p_0 = c0.

The monomials fit the same mould (A=1, B=C=0, c0=1), so one evaluator
serves every family. Orthonormal presets are built from Jacobi-matrix
parameters (diagonal ``b_j`` and off-diagonal ``a_j``).
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from numba import njit

DEFAULT_MAX_DEGREE = 512


class DegreeOutOfRangeError(ValueError):
    """Requested degree exceeds the coefficients stored in a basis."""


class BasisKind(enum.Enum):
    MONOMIAL = "monomial"
    RECURRENCE_OPRL = "oprl"
    # real recurrence that is not orthonormal (or carries a common root);
    # only the direct-sum formulas apply
    GENERAL = "general"


@dataclass(frozen=True, eq=False)
class Basis:
    """Immutable description of a family ``{f_j}``.

    ``common_root`` (real, optional) multiplies every member by ``(z - x0)``;
    all members then vanish at ``x0``, which is the only way a shipped
    family can produce ``K_n(z, z) = 0``.
    """

    name: str
    kind: BasisKind
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    c0: float
    common_root: Optional[float] = None
    angular_weight: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False)
    weight: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False)
    support: Optional[tuple[float, float]] = None

    def __post_init__(self):
        for arr in (self.A, self.B, self.C):
            arr.setflags(write=False)
        if not (len(self.A) == len(self.B) == len(self.C)):
            raise ValueError("recurrence arrays must share one length")
        if np.any(self.A <= 0):
            raise ValueError("A_j must be positive so that deg p_j = j")
        if not self.c0 > 0:
            raise ValueError("p_0 must be a positive constant")

    @property
    def max_degree(self) -> int:
        # p_{j+1} needs A_j, so len(A) coefficients reach degree len(A)
        return len(self.A)

    @property
    def is_oprl(self) -> bool:
        return self.kind is BasisKind.RECURRENCE_OPRL

    @functools.cached_property
    def leading(self) -> np.ndarray:
        """Leading coefficients ``k_0 .. k_max`` (``k_{j+1} = A_j k_j``)."""
        k = np.empty(self.max_degree + 1)
        k[0] = self.c0
        k[1:] = self.c0 * np.cumprod(self.A)
        k.setflags(write=False)
        return k

    def check_degree(self, n: int, extra: int = 0) -> None:
        if n < 0 or n + extra > self.max_degree:
            raise DegreeOutOfRangeError(
                f"{self.name}: degree {n + extra} requested, "
                f"coefficients available up to {self.max_degree}")


@dataclass(frozen=True)
class BasisEval:
    values: np.ndarray
    derivs: np.ndarray


def _from_jacobi(name, a, b, c0, *, max_degree, **extra) -> Basis:
    """Orthonormal family from ``x p_j = a_{j+1} p_{j+1} + b_j p_j + a_j p_{j-1}``.

    ``a`` is indexed so that ``a[j]`` is a_j (``a[0]`` unused); it must hold
    ``max_degree + 1`` entries.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    A = 1.0 / a[1:max_degree + 1]
    B = -b[:max_degree] / a[1:max_degree + 1]
    C = np.zeros(max_degree)
    C[1:] = a[1:max_degree] / a[2:max_degree + 1]
    return Basis(name, BasisKind.RECURRENCE_OPRL, A, B, C, float(c0), **extra)


@functools.lru_cache(maxsize=None)
def monomial(max_degree: int = DEFAULT_MAX_DEGREE) -> Basis:
    return Basis("monomial", BasisKind.MONOMIAL, np.ones(max_degree),
                 np.zeros(max_degree), np.zeros(max_degree), 1.0)


@functools.lru_cache(maxsize=None)
def legendre(max_degree: int = DEFAULT_MAX_DEGREE) -> Basis:
    """Orthonormal Legendre polynomials on [-1, 1], weight 1."""
    j = np.arange(max_degree + 1, dtype=float)
    a = np.zeros(max_degree + 1)
    a[1:] = j[1:] / np.sqrt(4.0 * j[1:] ** 2 - 1.0)
    return _from_jacobi(
        "legendre", a, np.zeros(max_degree + 1), 1.0 / math.sqrt(2.0),
        max_degree=max_degree,
        weight=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        angular_weight=lambda t: np.abs(np.sin(t)),
        support=(-1.0, 1.0))


@functools.lru_cache(maxsize=None)
def chebyshev(max_degree: int = DEFAULT_MAX_DEGREE) -> Basis:
    """Orthonormal Chebyshev polynomials of the first kind.

    ``p_0 = 1/sqrt(pi)``, ``p_n = sqrt(2/pi) T_n``; weight ``1/sqrt(1-x^2)``.
    """
    a = np.full(max_degree + 1, 0.5)
    a[0] = 0.0
    a[1] = 1.0 / math.sqrt(2.0)
    return _from_jacobi(
        "chebyshev", a, np.zeros(max_degree + 1), 1.0 / math.sqrt(math.pi),
        max_degree=max_degree,
        weight=lambda x: 1.0 / np.sqrt(1.0 - np.asarray(x, dtype=float) ** 2),
        angular_weight=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        support=(-1.0, 1.0))


@functools.lru_cache(maxsize=None)
def hermite(max_degree: int = DEFAULT_MAX_DEGREE) -> Basis:
    """Orthonormal physicists' Hermite polynomials, weight ``exp(-x^2)`` on R."""
    j = np.arange(max_degree + 1, dtype=float)
    a = np.sqrt(j / 2.0)
    return _from_jacobi(
        "hermite", a, np.zeros(max_degree + 1), math.pi ** -0.25,
        max_degree=max_degree,
        weight=lambda x: np.exp(-np.asarray(x, dtype=float) ** 2),
        support=(-math.inf, math.inf))


PRESETS: dict[str, Callable[..., Basis]] = {
    "monomial": monomial,
    "legendre": legendre,
    "chebyshev": chebyshev,
    "hermite": hermite,
}


def get_basis(name: str, max_degree: int = DEFAULT_MAX_DEGREE) -> Basis:
    """Preset by name, or a custom basis file when ``name`` is a path."""
    if name in PRESETS:
        return PRESETS[name](max_degree)
    path = Path(name)
    if path.exists():
        return load_basis_file(path)
    raise ValueError(f"unknown basis {name!r}; presets: {sorted(PRESETS)}")


def classical_legendre_scale(n: int) -> float:
    """Factor turning orthonormal ``p_n`` into classical ``P_n``."""
    return math.sqrt(2.0 / (2 * n + 1))


def classical_chebyshev_scale(n: int) -> float:
    """Factor turning orthonormal ``p_n`` into ``T_n``."""
    return math.sqrt(math.pi) if n == 0 else math.sqrt(math.pi / 2.0)


def classical_hermite_scale(n: int) -> float:
    """Factor turning orthonormal ``p_n`` into physicists' ``H_n``."""
    return math.sqrt(math.sqrt(math.pi) * 2.0 ** n * math.factorial(n))


def load_basis_file(path, *, rtol: float = 1e-12) -> Basis:
    """Parse a custom recurrence file.

    Format::

        # comments allowed
        p0 <c0>
        zero <x0>          (optional: common real root of every member)
        A_0 B_0 C_0
        A_1 B_1 C_1
        ...

    The family is tagged orthonormal when ``C_j = A_j / A_{j-1}`` for
    ``j >= 1`` (symmetric Jacobi matrix) and no common root is given.
    """
    path = Path(path)
    c0 = None
    root = None
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "p0":
                c0 = float(parts[1])
            elif parts[0] == "zero":
                root = float(parts[1])
            else:
                if len(parts) != 3:
                    raise ValueError("expected 'A B C'")
                rows.append([float(p) for p in parts])
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if c0 is None:
        raise ValueError(f"{path}: missing 'p0 <c0>' header")
    if not rows:
        raise ValueError(f"{path}: no recurrence rows")
    A, B, C = (np.array(col) for col in zip(*rows))
    orthonormal = root is None and np.allclose(
        C[1:], A[1:] / A[:-1], rtol=rtol, atol=0.0)
    kind = BasisKind.RECURRENCE_OPRL if orthonormal else BasisKind.GENERAL
    return Basis(path.stem, kind, A, B, C, c0, common_root=root)


def _recurrence(basis: Basis, n: int, z: np.ndarray):
    """Yield ``(j, p_j, p_j')`` for j = 0..n, vectorized over ``z``."""
    A, B, C = basis.A, basis.B, basis.C
    p_prev = np.zeros_like(z)
    d_prev = np.zeros_like(z)
    p = np.full_like(z, basis.c0)
    d = np.zeros_like(z)
    yield 0, p, d
    for j in range(n):
        lin = A[j] * z + B[j]
        p_next = lin * p - C[j] * p_prev
        d_next = A[j] * p + lin * d - C[j] * d_prev
        p_prev, d_prev, p, d = p, d, p_next, d_next
        yield j + 1, p, d


def eval_basis(basis: Basis, n: int, z) -> BasisEval:
    """Values and first derivatives of ``f_0 .. f_n`` at ``z``.

    ``z`` may be a scalar or an array; the output arrays have shape
    ``(n + 1,) + shape(z)``.
    """
    basis.check_degree(n)
    zz = np.asarray(z, dtype=complex)
    values = np.empty((n + 1,) + zz.shape, dtype=complex)
    derivs = np.empty_like(values)
    for j, p, d in _recurrence(basis, n, zz):
        values[j] = p
        derivs[j] = d
    if basis.common_root is not None:
        lin = zz - basis.common_root
        derivs = values + lin * derivs
        values = values * lin
    return BasisEval(values, derivs)


@njit(cache=True, nogil=True)
def _top_pair_kernel(A, B, C, c0, n, z):
    m = z.shape[0]
    out = np.empty((4, m), dtype=np.complex128)
    log_scale = np.zeros(m)
    for i in range(m):
        zi = z[i]
        p_prev = 0.0j
        d_prev = 0.0j
        p = c0 + 0.0j
        d = 0.0j
        ls = 0.0
        for j in range(n + 1):
            lin = A[j] * zi + B[j]
            p_next = lin * p - C[j] * p_prev
            d_next = A[j] * p + lin * d - C[j] * d_prev
            p_prev = p
            d_prev = d
            p = p_next
            d = d_next
            if j % 16 == 15:
                mag = max(abs(p), abs(p_prev))
                if mag > 1e100:
                    p /= mag
                    p_prev /= mag
                    d /= mag
                    d_prev /= mag
                    ls += np.log(mag)
        out[0, i] = p_prev
        out[1, i] = p
        out[2, i] = d_prev
        out[3, i] = d
        log_scale[i] = ls
    return out, log_scale


def top_pair(basis: Basis, n: int, z):
    """``p_n, p_{n+1}, p_n', p_{n+1}'`` at ``z`` without storing lower degrees.

    The four outputs share a common positive scale ``exp(-log_scale)``;
    the true values are ``out * exp(log_scale)``. Rescaling keeps degree
    hundreds usable far from the support, where ``|p_n|`` overflows.
    """
    basis.check_degree(n, extra=1)
    zz = np.asarray(z, dtype=complex)
    out, ls = _top_pair_kernel(basis.A, basis.B, basis.C, float(basis.c0), n,
                               np.ascontiguousarray(zz.reshape(-1)))
    shape = zz.shape
    pn, pn1, dpn, dpn1 = (out[k].reshape(shape) for k in range(4))
    return pn, pn1, dpn, dpn1, ls.reshape(shape)


def leading_ratio(basis: Basis, n: int) -> float:
    """``k_n / k_{n+1}``, the Christoffel-Darboux prefactor."""
    basis.check_degree(n, extra=1)
    return 1.0 / float(basis.A[n])
