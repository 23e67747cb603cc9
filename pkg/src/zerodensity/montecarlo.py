"""Monte Carlo oracle: sample coefficient vectors, find every zero, count.

Random numbers come from a counter-based generator, so trial ``t`` draws
the same coefficients whatever thread runs it and in whatever order.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _eigen
from .basis import Basis
from .quadrature import Region

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-9
MAX_FAILURE_FRACTION = 1e-3
CHUNK = 4096

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
# lane tags keep the retry jitter stream apart from coefficient draws
_LANE_COEFF = 0
_LANE_JITTER = 1


class RootFailureError(RuntimeError):
    """The eigen-solver did not converge, even after a perturbed retry."""

    def __init__(self, message, trials=()):
        super().__init__(message)
        self.trials = list(trials)


def _mix(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _uniform_pairs(seed: int, trials: np.ndarray, width: int, lane: int):
    """Two independent (0, 1] uniforms per (trial, j); shape (T, width)."""
    s = np.array([seed & _MASK64], dtype=np.uint64)
    base = _mix(_mix(s) ^ np.uint64(lane))
    t = _mix(base ^ trials.astype(np.uint64))[:, None]
    j = np.arange(width, dtype=np.uint64)[None, :]
    k1 = _mix(t ^ (j * np.uint64(2)))
    k2 = _mix(t ^ (j * np.uint64(2) + np.uint64(1)))
    scale = 2.0 ** -53
    u1 = ((k1 >> np.uint64(11)).astype(np.float64) + 1.0) * scale
    u2 = ((k2 >> np.uint64(11)).astype(np.float64) + 1.0) * scale
    return u1, u2


def gaussian_block(n: int, trials, seed: int) -> np.ndarray:
    """Complex Gaussian coefficients for a batch of trial indices, shape (T, n+1).

    Box-Muller on one uniform pair gives the real and imaginary parts,
    two independent standard normals.
    """
    with np.errstate(over="ignore"):
        u1, u2 = _uniform_pairs(seed, np.atleast_1d(np.asarray(trials, dtype=np.int64)),
                                n + 1, _LANE_COEFF)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    return r * np.cos(theta) + 1j * (r * np.sin(theta))


@dataclass(frozen=True)
class CoefficientSample:
    eta: np.ndarray
    trial: int = -1
    seed: int = 0

    @property
    def n(self) -> int:
        return len(self.eta) - 1


def sample_coeffs(n: int, trial_index: int, seed: int) -> CoefficientSample:
    eta = gaussian_block(n, [trial_index], seed)[0]
    eta.setflags(write=False)
    return CoefficientSample(eta, trial_index, seed)


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray
    residuals: np.ndarray

    def __len__(self) -> int:
        return len(self.roots)


@dataclass(frozen=True)
class MCResult:
    mean: float
    stderr: float
    trials: int
    seed: int
    failed: tuple[int, ...] = ()


def _jitter(n: int, trial: int, seed: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        u, _ = _uniform_pairs(seed, np.array([trial]), n, _LANE_JITTER)
    return 2.0 ** (4.0 * u[0] - 2.0)


def _coeff_arrays(basis: Basis):
    return (np.ascontiguousarray(basis.A, dtype=float),
            np.ascontiguousarray(basis.B, dtype=float),
            np.ascontiguousarray(basis.C, dtype=float), float(basis.c0))


def _append_common_root(basis: Basis, roots, resid):
    if basis.common_root is None:
        return roots, resid
    extra = np.full(roots.shape[:-1] + (1,), complex(basis.common_root))
    return (np.concatenate([roots, extra], axis=-1),
            np.concatenate([resid, np.zeros(extra.shape)], axis=-1))


def find_roots(basis: Basis, eta, *, trial: int = -1, seed: int = 0) -> RootSet:
    """All zeros of ``sum eta_j f_j`` via the comrade matrix.

    A basis with a common root ``x0`` contributes that root on top of the
    ``n`` eigenvalues. Residuals are ``|P(z)| / sum |eta_j f_j(z)|``.
    """
    if isinstance(eta, CoefficientSample):
        trial, seed = eta.trial, eta.seed
        eta = eta.eta
    eta = np.ascontiguousarray(eta, dtype=complex)
    n = len(eta) - 1
    basis.check_degree(n)
    if n == 0:
        r, e = _append_common_root(basis, np.zeros(0, complex), np.zeros(0))
        return RootSet(r, e)
    if eta[n] == 0:
        raise ValueError("leading coefficient eta[n] is zero")
    A, B, C, c0 = _coeff_arrays(basis)
    roots = np.empty(n, complex)
    resid = np.empty(n)
    status = _eigen.solve_one(A, B, C, c0, eta, np.ones(n), roots, resid)
    if status != _eigen.STATUS_OK:
        status = _eigen.solve_one(A, B, C, c0, eta, _jitter(n, trial, seed), roots, resid)
        if status != _eigen.STATUS_OK:
            raise RootFailureError(
                f"QR iteration did not converge (basis={basis.name}, n={n}, "
                f"trial={trial}, seed={seed})", [trial])
    roots, resid = _append_common_root(basis, roots, resid)
    return RootSet(roots, resid)


def _inside_with_boundary(region: Region, z: np.ndarray) -> np.ndarray:
    inside = region.contains(z)
    near = region.boundary_distance(z) <= BOUNDARY_TOL
    if np.any(near):
        log.warning("%d root(s) within %g of the region boundary counted as inside",
                    int(np.sum(near)), BOUNDARY_TOL)
    return inside | near


def count_in_region(roots: RootSet, region: Region) -> int:
    """Roots strictly inside, plus any within 1e-9 of the boundary (logged)."""
    if len(roots) == 0:
        return 0
    return int(np.sum(_inside_with_boundary(region, roots.roots)))


def _solve_trials(basis: Basis, n: int, trials: np.ndarray, seed: int):
    """Roots for a batch of trial indices; failed trials are retried once."""
    A, B, C, c0 = _coeff_arrays(basis)
    etas = gaussian_block(n, trials, seed)
    roots = np.empty((len(trials), n), complex)
    resid = np.empty((len(trials), n))
    status = np.empty(len(trials), np.int64)
    _eigen.solve_block(A, B, C, c0, etas, roots, resid, status)
    for i in np.flatnonzero(status != _eigen.STATUS_OK):
        status[i] = _eigen.solve_one(A, B, C, c0, etas[i], _jitter(n, int(trials[i]), seed),
                                     roots[i], resid[i])
    return roots, resid, status == _eigen.STATUS_OK


def _chunks(trials: int):
    return [np.arange(s, min(s + CHUNK, trials)) for s in range(0, trials, CHUNK)]


def _run_chunks(fn, trials: int, threads: Optional[int]):
    chunks = _chunks(trials)
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def sample_roots(basis: Basis, n: int, trials: int, seed: int,
                 threads: Optional[int] = None):
    """Roots of ``trials`` independent sums, shape ``(trials, n)``, plus an ok-mask."""
    basis.check_degree(n)
    if n == 0:
        return np.zeros((trials, 0), complex), np.ones(trials, bool)
    parts = _run_chunks(lambda idx: _solve_trials(basis, n, idx, seed), trials, threads)
    roots = np.concatenate([p[0] for p in parts])
    ok = np.concatenate([p[2] for p in parts])
    return roots, ok


def _summarize(counts: np.ndarray, ok: np.ndarray, seed: int, trials: int) -> MCResult:
    failed = tuple(int(i) for i in np.flatnonzero(~ok))
    if failed:
        if len(failed) >= MAX_FAILURE_FRACTION * trials:
            raise RootFailureError(
                f"{len(failed)} of {trials} trials failed root finding", failed)
        log.warning("%d trial(s) failed root finding and were dropped: %s",
                    len(failed), failed)
    c = counts[ok].astype(float)
    if len(c) < 2:
        raise RootFailureError("fewer than two surviving trials", failed)
    mean = math.fsum(c) / len(c)
    sd = float(np.std(c, ddof=1))
    return MCResult(mean, sd / math.sqrt(len(c)), len(c), seed, failed)


def mc_expectation(basis: Basis, n: int, region: Region, trials: int, seed: int,
                   threads: Optional[int] = None) -> MCResult:
    """Mean and standard error of the zero count in ``region``.

    Per-trial counts land in an array indexed by trial, so the reduction
    does not depend on how chunks were scheduled.
    """
    if trials < 2:
        raise ValueError("trials must be at least 2")
    basis.check_degree(n)
    if n == 0 and basis.common_root is None:
        return MCResult(0.0, 0.0, trials, seed)

    def work(idx):
        if n == 0:
            roots, ok = np.zeros((len(idx), 0), complex), np.ones(len(idx), bool)
        else:
            roots, _, ok = _solve_trials(basis, n, idx, seed)
        roots, _ = _append_common_root(basis, roots, np.zeros(roots.shape))
        inside = _inside_with_boundary(region, roots.reshape(-1)).reshape(roots.shape)
        return inside.sum(axis=1), ok

    parts = _run_chunks(work, trials, threads)
    counts = np.concatenate([p[0] for p in parts])
    ok = np.concatenate([p[1] for p in parts])
    return _summarize(counts, ok, seed, trials)


def mc_density(basis: Basis, n: int, center: complex, radius: float, trials: int,
               seed: int, threads: Optional[int] = None) -> MCResult:
    """Empirical density: zeros per unit area in the disk ``|z - center| < radius``."""
    if trials < 2:
        raise ValueError("trials must be at least 2")
    roots, ok = sample_roots(basis, n, trials, seed, threads)
    counts = np.sum(np.abs(roots - center) < radius, axis=1)
    res = _summarize(counts, ok, seed, trials)
    area = math.pi * radius * radius
    return MCResult(res.mean / area, res.stderr / area, res.trials, seed, res.failed)
