"""Expected zero counts over a region, computed two independent ways.

``area_expectation`` integrates the density over the region with a
globally adaptive tensor Gauss-Legendre rule. ``contour_expectation``
integrates ``F(z) = conj(K01(z, z)) / K(z, z)`` around the boundary and
divides by ``2 pi i``. Green's theorem makes the two agree, so each is an
oracle for the other.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import Basis
from .intensity import SingularPointError, general_density, oprl_density
from .kernels import direct_sums_scaled

GL_ORDER = 7
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
# nodes and weights on [0, 1]
_U = 0.5 * (_GL_X + 1.0)
_UW = 0.5 * _GL_W


class NonConvergenceError(RuntimeError):
    """Adaptive refinement ran out of depth or panels.

    ``estimate`` and ``error_bound`` hold the best values reached.
    """

    def __init__(self, message, estimate, error_bound):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


class InconsistencyError(ArithmeticError):
    """The contour integral kept a non-negligible imaginary part."""


class RegionKind(enum.Enum):
    RECTANGLE = "rect"
    POLYGON = "poly"


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p1, p2, q1, q2) -> np.ndarray:
    """Proper or touching intersection of segment arrays ``p1p2`` and ``q1q2``."""
    def orient(a, b, c):
        return np.sign((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
                       - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))
    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return (o1 * o2 <= 0) & (o3 * o4 <= 0)


@dataclass(frozen=True, eq=False)
class Region:
    """Rectangle or simple polygon; vertices are stored counterclockwise."""

    kind: RegionKind
    vertices: np.ndarray
    rectangle: Optional[tuple[float, float, float, float]] = None

    @classmethod
    def rect(cls, x_min: float, x_max: float, y_min: float, y_max: float) -> "Region":
        if not (x_min < x_max and y_min < y_max):
            raise ValueError(
                f"rectangle needs x_min < x_max and y_min < y_max, got "
                f"{(x_min, x_max, y_min, y_max)}")
        v = np.array([[x_min, y_min], [x_max, y_min], [x_max, y_max], [x_min, y_max]],
                     dtype=float)
        return cls(RegionKind.RECTANGLE, v, (float(x_min), float(x_max),
                                             float(y_min), float(y_max)))

    @classmethod
    def poly(cls, vertices) -> "Region":
        """Simple polygon; clockwise input is reversed, a repeated closing vertex dropped."""
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("polygon vertices must be an (m, 2) array")
        if len(v) > 1 and np.array_equal(v[0], v[-1]):
            v = v[:-1]
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        area = _signed_area(v)
        if abs(area) <= 0.0:
            raise ValueError("polygon has zero area")
        if area < 0:
            v = v[::-1].copy()
        m = len(v)
        a, b = v, np.roll(v, -1, axis=0)
        i, j = np.triu_indices(m, k=2)
        keep = ~((i == 0) & (j == m - 1))  # first and last edges share a vertex
        i, j = i[keep], j[keep]
        if np.any(_segments_cross(a[i], b[i], a[j], b[j])):
            raise ValueError("polygon is not simple (edges intersect)")
        return cls(RegionKind.POLYGON, v)

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        v = self.vertices
        return (float(v[:, 0].min()), float(v[:, 0].max()),
                float(v[:, 1].min()), float(v[:, 1].max()))

    def edges(self):
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def boundary_distance(self, z) -> np.ndarray:
        zz = np.asarray(z, dtype=complex).reshape(-1)
        p = np.stack([zz.real, zz.imag], axis=-1)[:, None, :]
        a, b = self.edges()
        ab = b - a
        t = np.clip(np.sum((p - a) * ab, axis=-1) / np.sum(ab * ab, axis=-1), 0.0, 1.0)
        d = np.linalg.norm(p - (a + t[..., None] * ab), axis=-1)
        return d.min(axis=1).reshape(np.shape(z))

    def contains(self, z) -> np.ndarray:
        """Strict interior test (even-odd rule), vectorized over ``z``."""
        zz = np.asarray(z, dtype=complex)
        if self.kind is RegionKind.RECTANGLE:
            x0, x1, y0, y1 = self.rectangle
            return (zz.real > x0) & (zz.real < x1) & (zz.imag > y0) & (zz.imag < y1)
        flat = zz.reshape(-1)
        x, y = flat.real[:, None], flat.imag[:, None]
        a, b = self.edges()
        ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
        straddle = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = ax + (y - ay) * (bx - ax) / (by - ay)
        inside = (np.sum(straddle & (x < xcross), axis=1) % 2) == 1
        return inside.reshape(zz.shape)

    def __str__(self) -> str:
        if self.kind is RegionKind.RECTANGLE:
            return "rect:" + ",".join(repr(c) for c in self.rectangle)
        return "poly:" + ";".join(f"{x!r},{y!r}" for x, y in self.vertices)


def parse_region(text: str) -> Region:
    """``rect:xmin,xmax,ymin,ymax`` or ``poly:x1,y1;x2,y2;...``."""
    kind, _, body = text.partition(":")
    try:
        if kind == "rect":
            vals = [float(s) for s in body.split(",")]
            if len(vals) != 4:
                raise ValueError("rect needs 4 numbers")
            return Region.rect(*vals)
        if kind == "poly":
            pts = [[float(s) for s in pair.split(",")] for pair in body.split(";") if pair]
            return Region.poly(pts)
    except ValueError as exc:
        raise ValueError(f"bad region {text!r}: {exc}") from None
    raise ValueError(f"bad region {text!r}: expected 'rect:' or 'poly:' prefix")


def disk_polygon(center: complex, radius: float, m: int = 256) -> Region:
    """Regular ``m``-gon inscribed in a circle (a disk stand-in)."""
    t = 2.0 * np.pi * np.arange(m) / m
    return Region.poly(np.stack([center.real + radius * np.cos(t),
                                 center.imag + radius * np.sin(t)], axis=1))


@dataclass(frozen=True)
class QuadConfig:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-7
    max_depth: int = 30
    contour_panels: int = 256
    # uniform pre-split of each root cell, 4**min_depth cells, so a narrow
    # peak cannot slip between the nodes of a single coarse rule
    min_depth: int = 3
    max_contour_doublings: int = 12

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1 or self.min_depth < 0 or self.min_depth > self.max_depth:
            raise ValueError("need 0 <= min_depth <= max_depth and max_depth >= 1")
        if self.contour_panels < 1:
            raise ValueError("contour_panels must be positive")


@dataclass(frozen=True)
class Expectation:
    """Estimate of ``E[N_n(region)]`` with its error bound.

    ``imag`` is the leftover imaginary part of a contour integral (zero
    for area integrals).
    """

    value: float
    error: float
    evaluations: int
    imag: float = 0.0

    def __float__(self) -> float:
        return self.value


def density_function(basis: Basis, n: int) -> Callable[[np.ndarray], np.ndarray]:
    if basis.is_oprl:
        return lambda z: oprl_density(basis, n, z)
    return lambda z: general_density(basis, n, z)


# ---------------------------------------------------------------- clipping

def _clip_halfplane(v: np.ndarray, axis: int, bound: float, keep_above: bool) -> np.ndarray:
    if len(v) == 0:
        return v
    s = v[:, axis] - bound
    if not keep_above:
        s = -s
    w = np.roll(v, -1, axis=0)
    sw = np.roll(s, -1)
    ins, insw = s >= 0, sw >= 0
    cross = ins != insw
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(cross, s / (s - sw), 0.0)
    hit = v + t[:, None] * (w - v)
    hit[cross, axis] = bound
    out = np.stack([v, hit], axis=1)
    mask = np.stack([ins, cross], axis=1)
    return out[mask]


def _clip_to_box(v, x0, x1, y0, y1) -> np.ndarray:
    v = _clip_halfplane(v, 0, x0, True)
    v = _clip_halfplane(v, 0, x1, False)
    v = _clip_halfplane(v, 1, y0, True)
    return _clip_halfplane(v, 1, y1, False)


def _split_on_axis(region: Region) -> list[np.ndarray]:
    """Pieces of the region on either side of the real axis (as polygons)."""
    v = region.vertices
    y0, y1 = v[:, 1].min(), v[:, 1].max()
    if not (y0 < 0.0 < y1):
        return [v]
    pieces = []
    for above in (True, False):
        piece = _clip_halfplane(v, 1, 0.0, above)
        if len(piece) >= 3 and abs(_signed_area(piece)) > 0.0:
            pieces.append(piece)
    return pieces


# --------------------------------------------------------- cell integration

_TX, _TY = np.meshgrid(_U, _U, indexing="ij")
_TW = np.outer(_UW, _UW).ravel()
_TX, _TY = _TX.ravel(), _TY.ravel()


def _rect_nodes(cells: np.ndarray):
    """Tensor nodes (k, 49) and weights for cells ``[x0, x1, y0, y1]``."""
    x0, x1, y0, y1 = cells.T
    dx, dy = x1 - x0, y1 - y0
    z = (x0[:, None] + dx[:, None] * _TX) + 1j * (y0[:, None] + dy[:, None] * _TY)
    w = (dx * dy)[:, None] * _TW
    return z, w


def _triangle_nodes(tri: np.ndarray):
    """Collapsed tensor rule on triangles ``(k, 3, 2)``; weights carry orientation."""
    p0, p1, p2 = tri[:, 0], tri[:, 1], tri[:, 2]
    e1, e2 = p1 - p0, p2 - p1
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    u, v = _TX, _TY
    px = p0[:, 0, None] + u * e1[:, 0, None] + (u * v) * e2[:, 0, None]
    py = p0[:, 1, None] + u * e1[:, 1, None] + (u * v) * e2[:, 1, None]
    w = det[:, None] * (_TW * u)
    return px + 1j * py, w


class _CellIntegrator:
    """Integrates a density over ``cell ∩ piece`` for batches of cells."""

    def __init__(self, density, piece: np.ndarray, is_box: bool):
        self.density = density
        self.piece = piece
        self.is_box = is_box
        self.a = piece
        self.b = np.roll(piece, -1, axis=0)
        self.evaluations = 0

    def _boundary_cells(self, cells):
        if self.is_box:
            return np.zeros(len(cells), dtype=bool)
        x0, x1, y0, y1 = (c[:, None] for c in cells.T)
        ex0 = np.minimum(self.a[:, 0], self.b[:, 0])
        ex1 = np.maximum(self.a[:, 0], self.b[:, 0])
        ey0 = np.minimum(self.a[:, 1], self.b[:, 1])
        ey1 = np.maximum(self.a[:, 1], self.b[:, 1])
        overlap = (ex0 <= x1) & (ex1 >= x0) & (ey0 <= y1) & (ey1 >= y0)
        return overlap.any(axis=1)

    def _inside(self, z):
        x, y = z.real[:, None], z.imag[:, None]
        ax, ay, bx, by = self.a[:, 0], self.a[:, 1], self.b[:, 0], self.b[:, 1]
        straddle = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = ax + (y - ay) * (bx - ax) / (by - ay)
        return (np.sum(straddle & (x < xc), axis=1) % 2) == 1

    def __call__(self, cells: np.ndarray) -> np.ndarray:
        out = np.zeros(len(cells))
        if len(cells) == 0:
            return out
        boundary = self._boundary_cells(cells)
        interior = np.flatnonzero(~boundary)
        if len(interior) and not self.is_box:
            centers = (0.5 * (cells[interior, 0] + cells[interior, 1])
                       + 0.5j * (cells[interior, 2] + cells[interior, 3]))
            interior = interior[self._inside(centers)]
        node_sets, weight_sets, owners = [], [], []
        if len(interior):
            z, w = _rect_nodes(cells[interior])
            node_sets.append(z.ravel())
            weight_sets.append(w.ravel())
            owners.append(np.repeat(interior, z.shape[1]))
        for i in np.flatnonzero(boundary):
            clipped = _clip_to_box(self.piece, *cells[i])
            if len(clipped) < 3:
                continue
            fan = np.stack([np.broadcast_to(clipped[0], clipped[1:-1].shape),
                            clipped[1:-1], clipped[2:]], axis=1)
            z, w = _triangle_nodes(fan)
            node_sets.append(z.ravel())
            weight_sets.append(w.ravel())
            owners.append(np.full(z.size, i))
        if not node_sets:
            return out
        z = np.concatenate(node_sets)
        w = np.concatenate(weight_sets)
        owner = np.concatenate(owners)
        self.evaluations += z.size
        np.add.at(out, owner, w * self.density(z))
        return out


def _quarter(cells: np.ndarray) -> np.ndarray:
    """Children in fixed order (SW, SE, NW, NE) -> shape (4k, 4)."""
    x0, x1, y0, y1 = cells.T
    xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    kids = np.stack([
        np.stack([x0, xm, y0, ym], axis=1),
        np.stack([xm, x1, y0, ym], axis=1),
        np.stack([x0, xm, ym, y1], axis=1),
        np.stack([xm, x1, ym, y1], axis=1),
    ], axis=1)
    return kids.reshape(-1, 4)


def _adaptive_piece(density, piece, is_box, cfg: QuadConfig, tol_share: float):
    integ = _CellIntegrator(density, piece, is_box)
    x0, x1 = piece[:, 0].min(), piece[:, 0].max()
    y0, y1 = piece[:, 1].min(), piece[:, 1].max()
    cells = np.array([[x0, x1, y0, y1]])
    depth = np.zeros(1, dtype=int)
    for _ in range(cfg.min_depth):
        cells = _quarter(cells)
        depth = np.repeat(depth, 4) + 1
    coarse = integ(cells)
    fine = integ(_quarter(cells)).reshape(-1, 4)
    sub = fine
    fine = fine.sum(axis=1)
    err = np.abs(fine - coarse)
    done_val, done_err = [], []
    while True:
        total = math.fsum(done_val) + math.fsum(fine)
        total_err = math.fsum(done_err) + math.fsum(err)
        target = tol_share * max(cfg.abs_tol, cfg.rel_tol * abs(total))
        if total_err <= target or len(cells) == 0:
            return math.fsum(done_val) + math.fsum(fine), total_err, integ.evaluations
        order = np.argsort(-err, kind="stable")
        csum = np.cumsum(err[order])
        need = total_err - 0.5 * target
        k = int(np.searchsorted(csum, need) + 1)
        split = np.sort(order[:min(k, len(order))])
        if np.any(depth[split] >= cfg.max_depth):
            raise NonConvergenceError("adaptive area quadrature exceeded max_depth",
                                      total, total_err)
        keep = np.ones(len(cells), dtype=bool)
        keep[split] = False
        # tiny-error cells retire so the working set stays small
        retire = keep & (err <= 1e-3 * target / max(len(cells), 1))
        done_val.extend(fine[retire].tolist())
        done_err.extend(err[retire].tolist())
        keep &= ~retire

        kids = _quarter(cells[split])
        kid_coarse = sub[split].reshape(-1)
        kid_sub = integ(_quarter(kids)).reshape(-1, 4)
        kid_fine = kid_sub.sum(axis=1)
        cells = np.concatenate([cells[keep], kids])
        depth = np.concatenate([depth[keep], np.repeat(depth[split] + 1, 4)])
        sub = np.concatenate([sub[keep], kid_sub])
        fine = np.concatenate([fine[keep], kid_fine])
        err = np.concatenate([err[keep], np.abs(kid_fine - kid_coarse)])


def area_expectation(basis: Basis, n: int, region: Region,
                     cfg: QuadConfig = QuadConfig()) -> Expectation:
    """Integral of the zero density over ``region``.

    The region is cut along the real axis first so that every cell sees
    one smooth branch of the OPRL density evaluator.
    """
    basis.check_degree(n, extra=1 if basis.is_oprl else 0)
    if n == 0:
        return Expectation(0.0, 0.0, 0)
    density = density_function(basis, n)
    pieces = _split_on_axis(region)
    is_box = region.kind is RegionKind.RECTANGLE
    total_area = sum(abs(_signed_area(p)) for p in pieces)
    values, errors, evals = [], [], 0
    for piece in pieces:
        share = abs(_signed_area(piece)) / total_area
        v, e, k = _adaptive_piece(density, piece, is_box, cfg, share)
        values.append(v)
        errors.append(e)
        evals += k
    return Expectation(math.fsum(values), math.fsum(errors), evals)


# ---------------------------------------------------------------- contour

def contour_integrand(basis: Basis, n: int, z) -> np.ndarray:
    """``F(z) = K01(conj z, conj z) / K(z, z) = conj(K01(z, z)) / K(z, z)``."""
    zz = np.asarray(z, dtype=complex)
    k, k01, _, _ = direct_sums_scaled(basis, n, zz)
    bad = ~(np.isfinite(k) & (k > 0.0))
    if np.any(bad):
        where = zz[bad] if zz.ndim else zz
        raise SingularPointError(f"K_n(z, z) vanishes on the contour at z={where}")
    return np.conj(k01) / k


def _contour_nodes(region: Region, panels: int):
    a, b = region.edges()
    lengths = np.hypot(*(b - a).T)
    per_edge = np.maximum(1, np.round(panels * lengths / lengths.sum())).astype(int)
    nodes, weights = [], []
    for (pa, pb, m) in zip(a, b, per_edge):
        za, zb = complex(*pa), complex(*pb)
        t0 = np.arange(m)[:, None] / m
        t = (t0 + _U[None, :] / m).ravel()
        nodes.append(za + (zb - za) * t)
        weights.append(np.tile(_UW / m, m) * (zb - za))
    return np.concatenate(nodes), np.concatenate(weights)


def contour_expectation(basis: Basis, n: int, region: Region,
                        cfg: QuadConfig = QuadConfig()) -> Expectation:
    """``(1 / 2 pi i)`` times the boundary integral of ``F``, panels doubled to convergence."""
    basis.check_degree(n)
    if n == 0:
        return Expectation(0.0, 0.0, 0)
    panels = cfg.contour_panels
    evals = 0
    prev = None
    for _ in range(cfg.max_contour_doublings + 1):
        z, w = _contour_nodes(region, panels)
        evals += z.size
        val = np.sum(w * contour_integrand(basis, n, z)) / (2j * math.pi)
        if prev is not None:
            diff = abs(val - prev)
            if diff < max(cfg.abs_tol, cfg.rel_tol * abs(val.real)):
                break
        prev = val
        panels *= 2
    else:
        raise NonConvergenceError("contour panels did not converge",
                                  float(val.real), float(diff))
    result = float(val.real)
    if abs(val.imag) >= 1e-8 * (1.0 + abs(result)):
        raise InconsistencyError(
            f"contour integral imaginary part {val.imag:.3e} is too large")
    return Expectation(result, float(diff), evals, float(val.imag))
