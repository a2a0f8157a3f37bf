"""Internal-space windows: graph-directed IFS, certified rasters and classification.

The windows satisfy ``W_i = U_j U_{t in T[i][j]} (sigma W_j + t*)``.  Rasters
live on the box ``[-half, half]^d`` with ``R`` pixels per axis; pixel ``c``
covers the closed interval ``[x0 + c h, x0 + (c + 1) h]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull

from .golden import (
    SIGMA,
    SIGMA_G,
    TAU,
    GoldenNumber,
    GoldenVec,
    golden_round,
    sign,
)
from .inflation import InflationRule, all_dpv_codes, dpv_rule, pf_data, verify_stone_inflation

ABS_SIGMA = -SIGMA
BOX_HALF = TAU * TAU
_EPS = 1e-9

DIMENSIONS = {"castle": 1.875, "cross": 1.756, "island": 1.561}
BOUNDARY_POLYNOMIALS = {
    "castle": (1, -4, 5, -3),
    "cross": (1, -2, -2, 2, 4, -3, -5, 1, 5, 2, -2, -3, -1),
    "island": (1, -2, -1, 2, 1, -4),
}
WINDOW_TAGS = ("original-rectangle", "parallelogram", "castle", "cross", "island")
ORIGINAL_CODES = ((0, 0, 0), (0, 1, 9), (1, 0, 3), (1, 1, 6))
DIMENSION_RESOLUTION = 4096


class AmbiguousClassification(RuntimeError):
    pass


@dataclass(frozen=True)
class Branch:
    source: int
    shift: tuple[float, ...]
    exact: GoldenVec | None = None


@dataclass(frozen=True)
class GraphIFS:
    """For each target window, the maps ``x -> sigma x + shift`` feeding it."""

    dim: int
    branches: tuple[tuple[Branch, ...], ...]
    name: str = ""
    contraction: float = SIGMA

    @property
    def size(self) -> int:
        return len(self.branches)

    def counts(self) -> np.ndarray:
        M = np.zeros((self.size, self.size), dtype=np.int64)
        for i, brs in enumerate(self.branches):
            for br in brs:
                M[i, br.source] += 1
        return M

    def translated(self, offset: Sequence[float]) -> "GraphIFS":
        """Same maps with every shift moved by ``offset``; windows move by ``offset / tau``."""
        off = np.asarray(offset, dtype=float)
        return GraphIFS(
            self.dim,
            tuple(
                tuple(Branch(b.source, tuple(np.add(b.shift, off).tolist())) for b in brs)
                for brs in self.branches
            ),
            self.name,
            self.contraction,
        )

    def max_shift(self) -> float:
        return max(abs(s) for brs in self.branches for b in brs for s in b.shift)

    def invariant_half_width(self) -> float:
        """Smallest ``b`` with ``[-b, b]^d`` mapped into itself by every branch."""
        return self.max_shift() / (1.0 - abs(self.contraction))

    def box_is_invariant(self, half: float = BOX_HALF) -> bool:
        """``|sigma| half + |s| <= half`` for every shift; exact when shifts are golden."""
        if all(b.exact is not None for brs in self.branches for b in brs) and half == BOX_HALF:
            # tau^2 (1 - |sigma|) = 1, so the condition is |s| <= 1
            for brs in self.branches:
                for b in brs:
                    for s in b.exact:
                        if sign(GoldenNumber(1, 0) - (s if sign(s) >= 0 else -s)) < 0:
                            return False
            return True
        return abs(self.contraction) * half + self.max_shift() <= half * (1 + 1e-12)


def window_ifs(rule: InflationRule) -> GraphIFS:
    """Star the displacement matrix: branch ``(j, t*)`` for every ``t in T[i][j]``."""
    report = verify_stone_inflation(rule)
    if not report:
        raise ValueError(f"rule {rule.name} is not a stone inflation: {report.failures[0]}")
    out = []
    for i in range(rule.size):
        brs = []
        for j in range(rule.size):
            for t in rule.displacements[i][j]:
                ts = t.star()
                brs.append(Branch(j, ts.to_float(), ts))
        out.append(tuple(brs))
    return GraphIFS(rule.dim, tuple(out), rule.name)


# --- raster kernels --------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    R: int
    half: float
    dim: int

    @property
    def h(self) -> float:
        return 2.0 * self.half / self.R

    @property
    def x0(self) -> float:
        return -self.half

    def centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.R) + 0.5) * self.h

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.R,) * self.dim


def _preimage_ranges(grid: Grid, shift: float, sigma: float):
    """Source pixel index ranges meeting the preimage of each target pixel.

    Returns ``(lo, hi)`` unclipped; the preimage of pixel ``c`` under
    ``x -> sigma x + shift`` is padded by a relative epsilon so that float
    error can only enlarge it.
    """
    a = grid.x0 + np.arange(grid.R) * grid.h
    b = a + grid.h
    p, q = (a - shift) / sigma, (b - shift) / sigma
    lo = np.minimum(p, q) - _EPS * grid.half
    hi = np.maximum(p, q) + _EPS * grid.half
    ilo = np.floor((lo - grid.x0) / grid.h).astype(np.int64) - 1
    ihi = np.floor((hi - grid.x0) / grid.h).astype(np.int64)
    # pixel k meets [lo, hi] iff k <= (hi - x0)/h and k + 1 >= (lo - x0)/h
    ilo = np.where(grid.x0 + (ilo + 1) * grid.h < lo, ilo + 1, ilo)
    return ilo, ihi


class _BranchGeometry:
    """Per-branch preimage index runs and masks for the outer and inward tests."""

    def __init__(self, grid: Grid, ifs: GraphIFS):
        self.grid = grid
        self.dim = ifs.dim
        self.items = []
        R = grid.R
        for i, brs in enumerate(ifs.branches):
            for br in brs:
                axes = []
                for axis in range(ifs.dim):
                    lo, hi = _preimage_ranges(grid, br.shift[axis], ifs.contraction)
                    axes.append((lo, hi))
                # raster arrays are indexed [y, x]
                axes = axes[::-1]
                meet = [(hi >= 0) & (lo <= R - 1) for lo, hi in axes]
                inside = [(lo >= 0) & (hi <= R - 1) for lo, hi in axes]
                clipped = [(np.clip(lo, 0, R - 1), np.clip(hi, 0, R - 1)) for lo, hi in axes]
                self.items.append((i, br.source, clipped, _outer(meet), _outer(inside)))

    def reduce(self, runs, raster: np.ndarray, any_: bool) -> np.ndarray:
        """OR (``any_``) or AND of the source pixels in each target pixel's preimage box.

        Both reductions are separable, so each axis is one pass of gathers
        over the runs ``lo..hi`` (a few pixels long since the maps contract).
        """
        out = raster
        for axis, (lo, hi) in enumerate(runs):
            acc = np.take(out, lo, axis=axis)
            for k in range(1, int((hi - lo).max(initial=0)) + 1):
                idx = np.minimum(lo + k, hi)
                if any_:
                    acc = acc | np.take(out, idx, axis=axis)
                else:
                    acc = acc & np.take(out, idx, axis=axis)
            out = acc
        return out


def _outer(masks):
    if len(masks) == 1:
        return masks[0]
    return masks[0][:, None] & masks[1][None, :]


def hutchinson_outer(geom: _BranchGeometry, rasters: np.ndarray) -> np.ndarray:
    """Pixels meeting some branch image of the given rasters."""
    out = np.zeros_like(rasters)
    for i, j, runs, meet, _ in geom.items:
        out[i] |= meet & geom.reduce(runs, rasters[j], True)
    return out


def hutchinson_inner(geom: _BranchGeometry, rasters: np.ndarray) -> np.ndarray:
    """Pixels lying inside a single branch image of the given rasters."""
    out = np.zeros_like(rasters)
    for i, j, runs, _, inside in geom.items:
        out[i] |= inside & geom.reduce(runs, rasters[j], False)
    return out


def _upsample(rasters: np.ndarray) -> np.ndarray:
    out = rasters
    for axis in range(1, rasters.ndim):
        out = np.repeat(out, 2, axis=axis)
    return out


def _iterate_to_fixpoint(step, geom, rasters, cap):
    for it in range(1, cap + 1):
        new = rasters & step(geom, rasters)
        if np.array_equal(new, rasters):
            return new, it, True
        rasters = new
    return rasters, cap, False


# --- exact hulls and polygons -------------------------------------------------


def support_points(ifs: GraphIFS, n_dirs: int = 96, iterations: int = 90):
    """Extreme points of every window in ``2 n_dirs`` generic directions.

    Uses ``h_i(n) = max_{j,t} n.t* + |sigma| h_j(-n)``, a max-plus contraction,
    then follows the maximising branches to recover the extreme points.
    """
    if ifs.dim != 2:
        raise ValueError("support points are defined for planar windows")
    K = n_dirs
    ang = 2 * math.pi * (np.arange(2 * K) + 0.5) / (2 * K) + 0.0123
    D = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    opp = (np.arange(2 * K) + K) % (2 * K)
    N = ifs.size
    s = abs(ifs.contraction)
    shifts = [np.array([b.shift for b in brs]) for brs in ifs.branches]
    srcs = [np.array([b.source for b in brs]) for brs in ifs.branches]
    hval = np.zeros((N, 2 * K))
    choice = [np.zeros(2 * K, dtype=np.int64) for _ in range(N)]
    for _ in range(iterations):
        new = np.empty_like(hval)
        for i in range(N):
            cand = shifts[i] @ D.T + s * hval[srcs[i]][:, opp]
            choice[i] = np.argmax(cand, axis=0)
            new[i] = cand[choice[i], np.arange(2 * K)]
        hval = new
    pts = np.zeros((N, 2 * K, 2))
    for _ in range(iterations):
        new = np.empty_like(pts)
        for i in range(N):
            c = choice[i]
            new[i] = shifts[i][c] + ifs.contraction * pts[srcs[i][c], opp]
        pts = new
    return D, hval, pts


@dataclass
class Hull:
    vertices: np.ndarray  # counter-clockwise
    area: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edge_slopes(self) -> list[float]:
        out = []
        v = self.vertices
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            dx, dy = b - a
            out.append(math.inf if abs(dx) < 1e-12 else dy / dx)
        return out

    def axis_parallel(self, tol: float = 1e-9) -> bool:
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        return bool(np.all((np.abs(e[:, 0]) < tol) | (np.abs(e[:, 1]) < tol)))


def window_hulls(ifs: GraphIFS, n_dirs: int = 96) -> list[Hull]:
    _, _, pts = support_points(ifs, n_dirs)
    hulls = []
    for i in range(ifs.size):
        p = np.unique(np.round(pts[i], 10), axis=0)
        if len(p) < 3:
            hulls.append(Hull(p, 0.0))
            continue
        hull = ConvexHull(p)
        v = p[hull.vertices]
        # drop collinear vertices
        keep = []
        for k in range(len(v)):
            a, b, c = v[k - 1], v[k], v[(k + 1) % len(v)]
            cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
            if abs(cross) > 1e-10:
                keep.append(b)
        v = np.array(keep)
        hulls.append(Hull(v, float(hull.volume)))
    return hulls


GPoint = tuple[GoldenNumber, GoldenNumber]


def _orient(a: GPoint, b: GPoint, c: GPoint) -> int:
    return sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def _twice_area(poly: Sequence[GPoint]) -> GoldenNumber:
    total = GoldenNumber(0, 0)
    for a, b in zip(poly, list(poly[1:]) + [poly[0]]):
        total = total + a[0] * b[1] - a[1] * b[0]
    return total


def _inside_convex(poly: Sequence[GPoint], q: GPoint) -> bool:
    return all(_orient(a, b, q) >= 0 for a, b in zip(poly, list(poly[1:]) + [poly[0]]))


def _separated(p: Sequence[GPoint], q: Sequence[GPoint]) -> bool:
    """Interiors of two convex ccw polygons are disjoint (exact separating edge test)."""
    for poly, other in ((p, q), (q, p)):
        for a, b in zip(poly, list(poly[1:]) + [poly[0]]):
            if all(_orient(a, b, x) <= 0 for x in other):
                return True
    return False


def _map_point(q: GPoint, t: GoldenVec) -> GPoint:
    return (SIGMA_G * q[0] + t[0], SIGMA_G * q[1] + t[1])


@dataclass
class PolygonCertificate:
    polygons: list[list[GPoint]]
    twice_areas: list[GoldenNumber]

    def areas(self) -> list[float]:
        return [float(a) / 2.0 for a in self.twice_areas]

    def float_polygons(self) -> list[np.ndarray]:
        return [np.array([[float(x), float(y)] for x, y in p]) for p in self.polygons]


def certify_polygons(ifs: GraphIFS, hulls: list[Hull], max_vertices: int = 8) -> PolygonCertificate | None:
    """Exact proof that the hull polygons are the windows, or ``None``.

    Vertices are snapped to ``Z[tau]^2``; then every piece ``sigma P_j + t*``
    must lie in ``P_i``, pieces of one window must have disjoint interiors and
    their areas must add up to ``area(P_i)``.  A family passing all three is
    invariant under the Hutchinson operator, hence equals the attractor.
    """
    if ifs.dim != 2 or any(b.exact is None for brs in ifs.branches for b in brs):
        return None
    polys = []
    for hull in hulls:
        if not 3 <= hull.n_vertices <= max_vertices:
            return None
        poly = []
        for x, y in hull.vertices:
            gx, gy = golden_round(x, max_b=8, tol=1e-7), golden_round(y, max_b=8, tol=1e-7)
            if gx is None or gy is None:
                return None
            poly.append((gx, gy))
        if sign(_twice_area(poly)) <= 0:
            return None
        polys.append(poly)
    sigma2 = SIGMA_G * SIGMA_G
    areas = [_twice_area(p) for p in polys]
    for i, brs in enumerate(ifs.branches):
        pieces = []
        for br in brs:
            # sigma < 0 is a point reflection composed with scaling: orientation is kept
            piece = [_map_point(q, br.exact) for q in polys[br.source]]
            if not all(_inside_convex(polys[i], q) for q in piece):
                return None
            pieces.append(piece)
        for a in range(len(pieces)):
            for b in range(a + 1, len(pieces)):
                if not _separated(pieces[a], pieces[b]):
                    return None
        total = GoldenNumber(0, 0)
        for br in brs:
            total = total + sigma2 * areas[br.source]
        if total != areas[i]:
            return None
    return PolygonCertificate(polys, areas)


def window_intervals(ifs: GraphIFS, iterations: int = 120) -> np.ndarray:
    """Convex hulls ``[lo_i, hi_i]`` of one-dimensional windows, shape ``(N, 2)``."""
    if ifs.dim != 1:
        raise ValueError("intervals are defined for one-dimensional windows")
    lo = np.zeros(ifs.size)
    hi = np.zeros(ifs.size)
    for _ in range(iterations):
        ends = [
            [(b.shift[0] + ifs.contraction * lo[b.source], b.shift[0] + ifs.contraction * hi[b.source]) for b in brs]
            for brs in ifs.branches
        ]
        lo = np.array([min(min(e) for e in es) for es in ends])
        hi = np.array([max(max(e) for e in es) for es in ends])
    return np.stack([lo, hi], axis=1)


@dataclass
class IntervalCertificate:
    intervals: list[tuple[GoldenNumber, GoldenNumber]]

    def areas(self) -> list[float]:
        return [float(b - a) for a, b in self.intervals]

    def float_intervals(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in self.intervals]


def certify_intervals(ifs: GraphIFS) -> IntervalCertificate | None:
    """Exact proof that the hull intervals are the windows, or ``None``.

    Same three checks as for polygons: pieces inside, pairwise disjoint
    interiors, lengths adding up.
    """
    if ifs.dim != 1 or any(b.exact is None for brs in ifs.branches for b in brs):
        return None
    ivs = []
    for lo, hi in window_intervals(ifs):
        a, b = golden_round(lo, max_b=8, tol=1e-7), golden_round(hi, max_b=8, tol=1e-7)
        if a is None or b is None or sign(b - a) <= 0:
            return None
        ivs.append((a, b))
    for i, brs in enumerate(ifs.branches):
        pieces = []
        for br in brs:
            a, b = ivs[br.source]
            ends = sorted((SIGMA_G * a + br.exact[0], SIGMA_G * b + br.exact[0]))
            if ends[0] < ivs[i][0] or ivs[i][1] < ends[1]:
                return None
            pieces.append(ends)
        pieces.sort()
        if any(pieces[k + 1][0] < pieces[k][1] for k in range(len(pieces) - 1)):
            return None
        total = GoldenNumber(0, 0)
        for br in brs:
            a, b = ivs[br.source]
            total = total - SIGMA_G * (b - a)
        if total != ivs[i][1] - ivs[i][0]:
            return None
    return IntervalCertificate(ivs)


# --- point samples -------------------------------------------------------------


def _terminal_points(ifs: GraphIFS, iterations: int = 120) -> np.ndarray:
    """One point of each window: fixed point of the sub-IFS using each window's first branch."""
    x = np.zeros((ifs.size, ifs.dim))
    first = [brs[0] for brs in ifs.branches]
    for _ in range(iterations):
        x = np.array([ifs.contraction * x[b.source] + np.array(b.shift) for b in first])
    return x


def sample_depth(grid: Grid, per_pixel: float = 4.0) -> int:
    """Depth whose pieces are about ``h / per_pixel`` across."""
    return max(1, math.ceil(math.log(per_pixel / grid.h) / math.log(1.0 / abs(SIGMA))))


def _prefix_maps(ifs: GraphIFS, k: int):
    """For each target, composed maps ``x -> sigma^k x + offset`` of all length-``k`` branch paths."""
    maps = [[(j, np.zeros(ifs.dim))] for j in range(ifs.size)]
    for _ in range(k):
        maps = [
            [(src, np.array(b.shift) + ifs.contraction * off) for b in brs for src, off in maps[b.source]]
            for brs in ifs.branches
        ]
    return maps


def sample_counts(
    ifs: GraphIFS,
    grid: Grid,
    depth: int | None = None,
    weights: Sequence[float] | None = None,
    max_points: int = 1 << 22,
) -> np.ndarray:
    """Weighted histogram of exact window points ``sum_k sigma^k t_k* + sigma^n w_j``.

    Each point stands for one depth-``n`` piece ``sigma^n W_j + p``; weighting
    it by ``weights[j]`` (the window areas up to a common factor, i.e. the PF
    frequencies) makes the histogram proportional to Lebesgue measure when
    the pieces do not overlap.  Only a base level of at most ``max_points``
    points is stored; the last levels are streamed as composed prefix maps.
    """
    if depth is None:
        depth = sample_depth(grid)
    w = np.ones(ifs.size) if weights is None else np.asarray(weights, dtype=float)
    pts = [p[None, :] for p in _terminal_points(ifs)]
    wts = [np.array([w[j]]) for j in range(ifs.size)]
    level = 0
    while level < depth and sum(
        len(pts[b.source]) for brs in ifs.branches for b in brs
    ) <= max_points:
        pts, wts = (
            [np.concatenate([ifs.contraction * pts[b.source] + np.array(b.shift) for b in brs]) for brs in ifs.branches],
            [np.concatenate([wts[b.source] for b in brs]) for brs in ifs.branches],
        )
        level += 1
    scale = ifs.contraction ** (depth - level)
    counts = np.zeros((ifs.size,) + grid.shape)
    size = grid.R**ifs.dim
    for i, maps in enumerate(_prefix_maps(ifs, depth - level)):
        flat = np.zeros(size)
        for src, off in maps:
            q = scale * pts[src] + off
            idx = np.floor((q - grid.x0) / grid.h).astype(np.int64)
            np.clip(idx, 0, grid.R - 1, out=idx)
            lin = idx[:, 0] if ifs.dim == 1 else idx[:, 1] * grid.R + idx[:, 0]
            flat += np.bincount(lin, weights=wts[src], minlength=size)
        counts[i] = flat.reshape(grid.shape)
    return counts


def full_pixel_count(counts: np.ndarray, block: int | None = None) -> float:
    """Weight carried by one fully covered pixel.

    Block means over ``block x block`` pixels are averaged down to a small
    relative noise; blocks lying wholly inside a window form the top cluster
    of that distribution, whose median is returned.
    """
    R = counts.shape[-1]
    if block is None:
        block = max(8, R // 256)
    block = min(block, R)
    if counts.ndim == 3:
        n = counts.shape[0]
        means = counts.reshape(n, R // block, block, R // block, block).mean(axis=(2, 4))
    else:
        means = counts.reshape(-1, R // block, block).mean(axis=2)
    means = means[means > 0]
    if len(means) == 0:
        raise ValueError("empty sample")
    top = np.percentile(means, 99)
    return float(np.median(means[means >= 0.95 * top]))


def threshold_sample(counts: np.ndarray, rho: float | None = None) -> np.ndarray:
    """Pixels at least half covered."""
    rho = full_pixel_count(counts) if rho is None else rho
    return counts >= 0.5 * rho


def coverage_areas(counts: np.ndarray, pixel_area: float, rho: float | None = None) -> list[float]:
    """Area estimates ``sum min(1, count / rho)`` in units of the pixel area."""
    rho = full_pixel_count(counts) if rho is None else rho
    return [float(np.minimum(1.0, c / rho).sum()) * pixel_area for c in counts]


# --- window sets ----------------------------------------------------------------


@dataclass
class WindowSet:
    ifs: GraphIFS
    grid: Grid
    outer: np.ndarray
    inner: np.ndarray
    iterations: int
    inner_certified: bool
    sample: np.ndarray | None = field(default=None, repr=False)
    coverage: list[float] | None = None
    hulls: list[Hull] | None = field(default=None, repr=False)
    # exact certificate: polygons in the plane, intervals on the line
    polygons: PolygonCertificate | IntervalCertificate | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.ifs.size

    def pixel_area(self) -> float:
        return self.grid.h**self.ifs.dim

    def bitmap(self) -> np.ndarray:
        """Best-estimate raster: the half-coverage sample when present, else the outer raster."""
        return self.sample if self.sample is not None else self.outer

    def bitmap_areas(self) -> list[float]:
        return [float(b.sum()) * self.pixel_area() for b in self.bitmap()]


def solve_windows(
    ifs: GraphIFS,
    resolution: int = 1024,
    tol: float | None = None,
    half: float | None = None,
    inner: bool = True,
    sample: bool = True,
    max_iter: int = 200,
) -> WindowSet:
    """Outer and inner rasters by Hutchinson iteration from the invariant box.

    The outer raster starts from the full box and is refined coarse to fine;
    every generation keeps only pixels meeting some branch image of the
    previous one, so it stays a superset of the attractor.  The inner raster
    is the largest raster contained in its own (inward rounded) Hutchinson
    image, which certifies it as a subset.
    """
    R = int(resolution)
    if R < 8 or R & (R - 1):
        raise ValueError("resolution must be a power of two >= 8")
    if abs(ifs.contraction) >= 1:
        raise ValueError("IFS is not contractive")
    if half is None:
        half = max(BOX_HALF, ifs.invariant_half_width())
    if not ifs.box_is_invariant(half):
        raise ValueError("bounding box is not invariant")
    if tol is not None and tol < 2 * half / R:
        raise ValueError("tol must be at least one pixel")
    level = min(R, 16)
    rasters = np.ones((ifs.size,) + (level,) * ifs.dim, dtype=bool)
    total = 0
    while True:
        grid = Grid(level, half, ifs.dim)
        geom = _BranchGeometry(grid, ifs)
        rasters, its, _ = _iterate_to_fixpoint(hutchinson_outer, geom, rasters, max_iter)
        total += its
        if level == R:
            break
        rasters = _upsample(rasters)
        level *= 2
    outer = rasters
    if inner:
        inn, its, converged = _iterate_to_fixpoint(hutchinson_inner, geom, outer.copy(), max_iter)
        if not converged:
            inn = np.zeros_like(outer)
        total += its
    else:
        inn, converged = np.zeros_like(outer), True
    ws = WindowSet(ifs, grid, outer, inn, total, converged)
    if sample:
        _attach_sample(ws)
    if ifs.dim == 2:
        ws.hulls = window_hulls(ifs)
        ws.polygons = certify_polygons(ifs, ws.hulls)
    else:
        ws.polygons = certify_intervals(ifs)
    return ws


def _attach_sample(ws: WindowSet, per_pixel: float = 4.0) -> None:
    # window areas are proportional to the PF frequencies
    weights = pf_data(ws.ifs.counts()).v
    counts = sample_counts(ws.ifs, ws.grid, depth=sample_depth(ws.grid, per_pixel), weights=weights)
    rho = full_pixel_count(counts)
    ws.sample = threshold_sample(counts, rho)
    ws.coverage = coverage_areas(counts, ws.pixel_area(), rho)


def window_areas(ws: WindowSet) -> list[tuple[float, float]]:
    """Certified ``(lower, upper)`` area bounds per window.

    Exact polygon certificates give zero-width brackets; otherwise the bounds
    are the inner and outer pixel counts.
    """
    if ws.polygons is not None:
        return [(a, a) for a in ws.polygons.areas()]
    px = ws.pixel_area()
    return [
        (float(i.sum()) * px, float(o.sum()) * px) for i, o in zip(ws.inner, ws.outer)
    ]


def invariance_defect(ws: WindowSet) -> float:
    """Hausdorff distance in pixels between the outer raster and its Hutchinson image."""
    geom = _BranchGeometry(ws.grid, ws.ifs)
    image = hutchinson_outer(geom, ws.outer)
    worst = 0.0
    for a, b in zip(ws.outer, image):
        worst = max(worst, _raster_hausdorff(a, b))
    return worst


def _raster_hausdorff(a: np.ndarray, b: np.ndarray, metric: str = "euclidean") -> float:
    if not a.any() and not b.any():
        return 0.0
    if not a.any() or not b.any():
        return math.inf
    if metric == "euclidean":
        da = ndimage.distance_transform_edt(~a)
        db = ndimage.distance_transform_edt(~b)
    elif metric in ("chessboard", "taxicab"):
        da = ndimage.distance_transform_cdt(~a, metric=metric)
        db = ndimage.distance_transform_cdt(~b, metric=metric)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return float(max(da[b].max(), db[a].max()))


def raster_hausdorff(a: np.ndarray, b: np.ndarray, metric: str = "euclidean") -> float:
    """Hausdorff distance in pixels between two boolean rasters of equal shape.

    ``metric="chessboard"`` counts a diagonal neighbour as one pixel away.
    """
    return _raster_hausdorff(a, b, metric)


def rasterize_intervals(grid: Grid, intervals: Sequence[tuple[float, float]]) -> np.ndarray:
    """1D raster of pixels meeting each closed interval."""
    c = np.arange(grid.R)
    lo = grid.x0 + c * grid.h
    return np.array([(lo <= b) & (lo + grid.h >= a) for a, b in intervals])


def rasterize_boxes(grid: Grid, boxes: Sequence[tuple[tuple[float, float], tuple[float, float]]]) -> np.ndarray:
    """2D rasters of pixels meeting each axis-parallel box ``((x0, x1), (y0, y1))``."""
    out = []
    for bx, by in boxes:
        rx = rasterize_intervals(Grid(grid.R, grid.half, 1), [bx])[0]
        ry = rasterize_intervals(Grid(grid.R, grid.half, 1), [by])[0]
        out.append(ry[:, None] & rx[None, :])
    return np.array(out)


def rasterize_polygon(grid: Grid, poly: np.ndarray) -> np.ndarray:
    """Pixels whose centre lies in the convex ccw polygon."""
    c = grid.centers()
    X, Y = np.meshgrid(c, c)
    inside = np.ones(X.shape, dtype=bool)
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        inside &= (b[0] - a[0]) * (Y - a[1]) - (b[1] - a[1]) * (X - a[0]) >= -1e-12
    return inside


# --- dimensions and classification -----------------------------------------------


def _poly_eval(coeffs: Sequence[int], x: float) -> tuple[float, float]:
    p, dp = 0.0, 0.0
    for c in coeffs:
        dp = dp * x + p
        p = p * x + c
    return p, dp


def largest_real_root(coeffs: Sequence[int]) -> float:
    """Largest real root by Cauchy bound, sign-change scan, bisection and Newton polish."""
    lead = coeffs[0]
    bound = 1.0 + max(abs(c / lead) for c in coeffs[1:])
    xs = np.linspace(-bound, bound, 20001)
    vals = np.array([_poly_eval(coeffs, x)[0] for x in xs])
    idx = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)
    if len(idx) == 0:
        raise ValueError("polynomial has no real root")
    lo, hi = xs[idx[-1]], xs[idx[-1] + 1]
    flo = _poly_eval(coeffs, lo)[0]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _poly_eval(coeffs, mid)[0]
        if fm == 0 or hi - lo < 1e-15:
            lo = hi = mid
            break
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(5):
        p, dp = _poly_eval(coeffs, x)
        if dp == 0 or p == 0:
            break
        x -= p / dp
    return x


def hausdorff_dimension(tag: str) -> float:
    """``log(alpha) / log(tau)`` with ``alpha`` the largest real root of the boundary polynomial."""
    if tag not in BOUNDARY_POLYNOMIALS:
        raise ValueError(f"no boundary polynomial for {tag!r}")
    alpha = largest_real_root(BOUNDARY_POLYNOMIALS[tag])
    return math.log(alpha) / math.log(TAU)


@dataclass
class BoxCount:
    scales: list[int]
    counts: list[int]
    slope: float


def boundary_pixels(bitmap: np.ndarray) -> np.ndarray:
    """Set pixels with an unset (or out-of-raster) 4-neighbour."""
    b = np.asarray(bitmap, dtype=bool)
    interior = ndimage.binary_erosion(b, border_value=0)
    return b & ~interior


def box_counts(bitmap: np.ndarray, scales: Sequence[int]) -> BoxCount:
    """Boxes meeting the boundary at dyadic scales and the slope of ``log N`` vs ``log(1/eps)``."""
    if len(scales) < 5:
        raise ValueError("fewer than 5 usable scales")
    edge = boundary_pixels(bitmap)
    R = edge.shape[0]
    counts = []
    for s in scales:
        if R % s:
            raise ValueError("scale must divide the resolution")
        counts.append(int(np.count_nonzero(edge.reshape(R // s, s, R // s, s).any(axis=(1, 3)))))
    if min(counts) == 0:
        raise ValueError("empty boundary at some scale")
    x = np.log(1.0 / np.asarray(scales, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    slope = float(np.polyfit(x, y, 1)[0])
    return BoxCount(list(scales), counts, slope)


def default_scales(R: int) -> list[int]:
    """Six dyadic scales in pixels, ``R/1024`` up to ``32 R/1024`` (4..128 at R = 4096)."""
    smin = max(1, R // 1024)
    return [smin * 2**k for k in range(6)]


def shift_variogram(bitmap: np.ndarray, shifts: Sequence[int]) -> np.ndarray:
    """Mean over the two axes of the number of pixel pairs ``delta`` apart that differ.

    For a set with boundary dimension ``D`` this is the area of the
    ``delta``-neighbourhood of the boundary in pixels, growing like
    ``delta^(2 - D)``.
    """
    b = np.asarray(bitmap, dtype=bool)
    out = []
    for d in shifts:
        if d < 1 or d >= min(b.shape):
            raise ValueError("shift out of range")
        out.append(0.5 * (np.count_nonzero(b[:, d:] != b[:, :-d]) + np.count_nonzero(b[d:, :] != b[:-d, :])))
    return np.asarray(out, dtype=float)


def boundary_dimension_estimate(
    ws: WindowSet, index: int, scales: Sequence[int] | None = None, method: str = "variogram"
) -> float:
    """Boundary dimension of window ``index`` from its bitmap.

    ``variogram``: ``D = 2 - slope`` of ``log S(delta)`` against ``log delta``,
    the growth of the ``delta``-neighbourhood of the boundary.  ``box``: slope
    of the boundary box count.  Both use at least five dyadic scales; box
    counting is biased low on porous fractal windows at desk resolution.
    """
    if ws.ifs.dim != 2:
        raise ValueError("boundary dimension estimates need planar windows")
    scales = list(scales or default_scales(ws.grid.R))
    if len(scales) < 5:
        raise ValueError("fewer than 5 usable scales")
    bitmap = ws.bitmap()[index]
    if method == "box":
        return box_counts(bitmap, scales).slope
    if method != "variogram":
        raise ValueError(f"unknown method {method!r}")
    S = shift_variogram(bitmap, scales)
    if np.any(S == 0):
        raise ValueError("empty boundary at some scale")
    slope = float(np.polyfit(np.log(scales), np.log(S), 1)[0])
    return 2.0 - slope


@dataclass
class WindowClass:
    tag: str
    hull_vertices: list[int]
    hull_areas: list[float]
    bitmap_areas: list[float]
    certified: bool
    dimension: float | None = None
    slopes: list[list[float]] | None = None


def classify(
    rule: InflationRule, ws: WindowSet, area_tol: float = 0.01, fine: WindowSet | None = None
) -> WindowClass:
    """Tag the window family of a planar rule.

    Convex windows (certified polygons, or hull quadrilateral with hull area
    within ``area_tol`` of the raster area) are parallelograms, or original rectangles when every edge
    is axis-parallel.  Otherwise the nearest reference boundary dimension
    wins, estimated on ``fine`` (a sampled set at ``DIMENSION_RESOLUTION``
    built on demand).
    """
    if ws.ifs.dim != 2 or ws.hulls is None:
        raise ValueError("classification needs planar windows")
    hulls = ws.hulls
    bmp = ws.bitmap_areas()
    nverts = [h.n_vertices for h in hulls]
    hareas = [h.area for h in hulls]
    certified = ws.polygons is not None
    if certified:
        # the certificate proves each window is its hull
        convex = all(n == 4 for n in nverts)
    else:
        convex = all(
            n == 4 and abs(ha - ba) <= area_tol * ha for n, ha, ba in zip(nverts, hareas, bmp)
        )
    if convex:
        tag = "original-rectangle" if all(h.axis_parallel() for h in hulls) else "parallelogram"
        return WindowClass(tag, nverts, hareas, bmp, certified, 1.0, [h.edge_slopes() for h in hulls])
    if fine is None:
        fine = (
            ws
            if ws.grid.R >= DIMENSION_RESOLUTION and ws.sample is not None
            else sampled_windows(rule, DIMENSION_RESOLUTION)
        )
    dims = [boundary_dimension_estimate(fine, i) for i in range(fine.size)]
    dim = float(np.mean(dims))
    ranked = sorted(DIMENSIONS.items(), key=lambda kv: abs(kv[1] - dim))
    if abs(abs(ranked[0][1] - dim) - abs(ranked[1][1] - dim)) < 1e-3:
        raise AmbiguousClassification(
            f"{rule.name}: dimension {dim:.4f} equidistant from {ranked[0][0]} and {ranked[1][0]}"
        )
    return WindowClass(ranked[0][0], nverts, hareas, bmp, certified, dim)


@dataclass
class CatalogEntry:
    code: tuple[int, int, int]
    window_class: WindowClass
    areas: list[tuple[float, float]]


def classify_code(code, resolution: int = 1024, brackets: bool = True) -> CatalogEntry:
    """Classify one DPV from its point sample.

    Area brackets are exact for certified polygons; otherwise, when
    ``brackets`` is set, they come from the Hutchinson outer raster (the
    inner raster is left empty since seams collapse it).
    """
    rule = dpv_rule(code)
    ws = sampled_windows(rule, resolution)
    wc = classify(rule, ws)
    if ws.polygons is None and brackets:
        ws = solve_windows(ws.ifs, resolution, inner=False, sample=False)
    return CatalogEntry(tuple(rule_code(rule)), wc, window_areas(ws))


def sampled_windows(
    rule: InflationRule, resolution: int = DIMENSION_RESOLUTION, per_pixel: float = 4.0
) -> WindowSet:
    """Windows from the weighted point sample only.

    No Hutchinson pass is run: the outer raster is the whole box and the
    inner raster is empty, which are trivially valid bounds.
    """
    ifs = window_ifs(rule)
    grid = Grid(resolution, BOX_HALF, ifs.dim)
    shape = (ifs.size,) + grid.shape
    ws = WindowSet(ifs, grid, np.ones(shape, dtype=bool), np.zeros(shape, dtype=bool), 0, True)
    _attach_sample(ws, per_pixel)
    if ifs.dim == 2:
        ws.hulls = window_hulls(ifs)
        ws.polygons = certify_polygons(ifs, ws.hulls)
    return ws


def rule_code(rule: InflationRule) -> tuple[int, int, int]:
    return tuple(int(x) for x in rule.name.split(":")[1].split(","))


def classification_census(entries: Sequence[CatalogEntry] | None = None, resolution: int = 1024) -> dict[str, int]:
    """Counts per tag over all 48 direct-product variations."""
    if entries is None:
        entries = [classify_code(c, resolution) for c in all_dpv_codes()]
    census = {t: 0 for t in WINDOW_TAGS}
    for e in entries:
        census[e.window_class.tag] += 1
    return census


def diagonal_reflection(rasters: np.ndarray) -> np.ndarray:
    """Mirror in the main diagonal: swap axes and the two rectangle windows."""
    out = np.swapaxes(rasters, -1, -2)
    return out[[0, 2, 1, 3]]
