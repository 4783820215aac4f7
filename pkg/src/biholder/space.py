"""Sampled metric measure spaces.

A :class:`SampledSpace` is a finite weighted point cloud standing in for a
metric measure space.  Distances come either from Euclidean coordinates or
from an explicit dense matrix, optionally raised to a snowflake exponent.
Unbounded model spaces (the plane, the integers) are represented by a finite
window whose boundary analyzers stay away from.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import (
    BudgetExceededError,
    DegenerateGeometryError,
    EmptySetError,
    InvalidExponentError,
    InvalidResolutionError,
    MissingPointError,
    ParameterError,
    WitnessNotFoundError,
)

ROW_CHUNK = 512
DEFAULT_POINT_BUDGET = 1 << 16


@dataclass(frozen=True)
class Window:
    center: tuple[float, ...]
    half_width: float


@dataclass(frozen=True, eq=False)
class SampledSpace:
    coords: np.ndarray
    weights: np.ndarray
    ids: tuple = ()
    base: str = "euclidean"
    matrix: np.ndarray | None = None
    exponent: float = 1.0
    window: Window | None = None
    name: str = ""

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        weights = np.asarray(self.weights, dtype=float)
        n = len(weights)
        if coords.shape[0] != n:
            raise ParameterError("coords and weights disagree on the point count")
        if n < 2:
            raise ParameterError("a sampled space needs at least two points")
        if not np.all(weights > 0) or not np.all(np.isfinite(weights)):
            raise ParameterError("weights must be positive and finite")
        ids = tuple(self.ids) if len(self.ids) else tuple(range(n))
        if len(ids) != n:
            raise ParameterError("ids and weights disagree on the point count")
        if len(set(ids)) != n:
            raise ParameterError("point ids must be unique")
        if self.base not in ("euclidean", "matrix"):
            raise ParameterError(f"unknown base metric {self.base!r}")
        matrix = self.matrix
        if self.base == "matrix":
            matrix = np.asarray(matrix, dtype=float)
            if matrix.shape != (n, n):
                raise ParameterError("metric matrix must be n x n")
            if not np.allclose(matrix, matrix.T, rtol=0, atol=0):
                raise ParameterError("metric matrix must be symmetric")
            if np.any(np.diag(matrix) != 0) or np.any(matrix < 0):
                raise ParameterError("metric matrix must be nonnegative with zero diagonal")
        if not (0 < self.exponent <= 1):
            raise InvalidExponentError(f"snowflake exponent must lie in (0, 1], got {self.exponent}")
        coords.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "matrix", matrix)

    # -- bookkeeping -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def metric_kind(self) -> str:
        if self.base == "matrix":
            return "matrix" if self.exponent == 1 else "snowflaked-matrix"
        return "euclidean" if self.exponent == 1 else "snowflaked-euclidean"

    @cached_property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    @cached_property
    def _index(self) -> dict:
        return {pid: k for k, pid in enumerate(self.ids)}

    def index(self, pid: Hashable) -> int:
        try:
            return self._index[pid]
        except KeyError:
            raise MissingPointError(f"no point with id {pid!r}") from None

    def indices(self, pids: Iterable[Hashable]) -> np.ndarray:
        return np.array([self.index(p) for p in pids], dtype=np.intp)

    def nearest(self, coord: Sequence[float]) -> Hashable:
        """Id of the sample point closest (in coordinates) to ``coord``."""
        _, k = self._tree.query(np.asarray(coord, dtype=float))
        return self.ids[int(k)]

    # -- distances ---------------------------------------------------------

    def _pow(self, d):
        return d if self.exponent == 1 else d ** self.exponent

    def _unpow(self, d):
        return d if self.exponent == 1 else d ** (1.0 / self.exponent)

    def dist_rows(self, idx) -> np.ndarray:
        """Distances from the points ``idx`` to every point, shape (len(idx), n)."""
        idx = np.atleast_1d(np.asarray(idx, dtype=np.intp))
        if self.base == "matrix":
            return self._pow(self.matrix[idx])
        diff = self.coords[idx][:, None, :] - self.coords[None, :, :]
        return self._pow(np.sqrt(np.sum(diff * diff, axis=-1)))

    def dist_pairs(self, i, j) -> np.ndarray:
        i = np.asarray(i, dtype=np.intp)
        j = np.asarray(j, dtype=np.intp)
        if self.base == "matrix":
            return self._pow(self.matrix[i, j])
        diff = self.coords[i] - self.coords[j]
        return self._pow(np.sqrt(np.sum(diff * diff, axis=-1)))

    def distance(self, x: Hashable, y: Hashable) -> float:
        return float(self.dist_pairs(self.index(x), self.index(y)))

    def distance_matrix(self) -> np.ndarray:
        return self.dist_rows(np.arange(self.n))

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(self.coords)

    def neighbor_pairs(self, centers, radius: float):
        """All (center position, j, d) with 0 < d(center, j) < radius and j != center.

        ``center position`` indexes into ``centers``.
        """
        centers = np.asarray(centers, dtype=np.intp)
        if self.base == "euclidean":
            lists = self._tree.query_ball_point(self.coords[centers], self._unpow(radius))
            counts = np.fromiter((len(l) for l in lists), dtype=np.intp, count=len(lists))
            pos = np.repeat(np.arange(len(centers)), counts)
            j = np.fromiter((k for l in lists for k in l), dtype=np.intp, count=int(counts.sum()))
            d = self.dist_pairs(centers[pos], j)
        else:
            pos_parts, j_parts, d_parts = [], [], []
            for start in range(0, len(centers), ROW_CHUNK):
                rows = self.dist_rows(centers[start:start + ROW_CHUNK])
                p, jj = np.nonzero(rows < radius)
                pos_parts.append(p + start)
                j_parts.append(jj)
                d_parts.append(rows[p, jj])
            pos = np.concatenate(pos_parts)
            j = np.concatenate(j_parts)
            d = np.concatenate(d_parts)
        keep = (d < radius) & (j != centers[pos])
        return pos[keep], j[keep], d[keep]

    @cached_property
    def diam_sample(self) -> float:
        if self.base == "matrix":
            return float(self._pow(self.matrix.max()))
        pts = self.coords
        if self.dim == 1:
            return float(self._pow(pts.max() - pts.min()))
        if self.n > 2000 and self.dim <= 3:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except QhullError:
                pass
        best = 0.0
        for start in range(0, len(pts), ROW_CHUNK):
            diff = pts[start:start + ROW_CHUNK][:, None, :] - pts[None, :, :]
            best = max(best, float(np.sqrt(np.sum(diff * diff, axis=-1)).max()))
        return float(self._pow(best))

    @cached_property
    def min_distance(self) -> float:
        """Smallest positive pairwise distance."""
        if self.base == "matrix":
            pos = self.matrix[self.matrix > 0]
            if pos.size == 0:
                raise DegenerateGeometryError("all points coincide")
            return float(self._pow(pos.min()))
        d, _ = self._tree.query(self.coords, k=2)
        nn = d[:, 1]
        if np.any(nn == 0):
            best = math.inf
            for start in range(0, self.n, ROW_CHUNK):
                rows = self.dist_rows(np.arange(start, min(start + ROW_CHUNK, self.n)))
                rows = rows[rows > 0]
                if rows.size:
                    best = min(best, float(rows.min()))
            if not math.isfinite(best):
                raise DegenerateGeometryError("all points coincide")
            return best
        return float(self._pow(nn.min()))

    @cached_property
    def boundary_distance(self) -> np.ndarray:
        """Metric distance from each point to the window boundary (inf without a window)."""
        if self.window is None or self.base != "euclidean":
            return np.full(self.n, np.inf)
        c = np.asarray(self.window.center, dtype=float)
        slack = self.window.half_width - np.abs(self.coords - c).max(axis=1)
        return self._pow(np.clip(slack, 0.0, None))

    def radius_band(self) -> tuple[float, float]:
        """Radii where estimators are trusted: [4 * min distance, diam / 4]."""
        return 4.0 * self.min_distance, self.diam_sample / 4.0


# -- builders ----------------------------------------------------------------


def build_grid(dim: int, half_width: float, resolution: int, offset=None) -> SampledSpace:
    """Uniform grid on the box offset + [-half_width, half_width]^dim, Euclidean metric."""
    if resolution < 2:
        raise InvalidResolutionError(f"resolution must be >= 2, got {resolution}")
    if half_width <= 0:
        raise ParameterError("half_width must be positive")
    if dim < 1:
        raise ParameterError("dim must be a positive integer")
    offset = np.zeros(dim) if offset is None else np.asarray(offset, dtype=float).reshape(dim)
    axis = np.linspace(-half_width, half_width, resolution)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=1) + offset
    # every point carries volume / count, so total_mass is the box volume
    cell = (2.0 * half_width / resolution) ** dim
    return SampledSpace(
        coords=coords,
        weights=np.full(len(coords), cell),
        window=Window(tuple(float(o) for o in offset), float(half_width)),
        name=f"grid{dim}d(hw={half_width:g},res={resolution})",
    )


def build_cantor(ratio: float, depth: int, dim: int = 1,
                 max_points: int = DEFAULT_POINT_BUDGET) -> SampledSpace:
    """Centers of the depth-level cells of the middle-gap Cantor set in [0,1]^dim.

    Each point carries the self-similar mass 2^(-depth*dim).
    """
    if not (0 < ratio < 0.5):
        raise ParameterError(f"ratio must lie in (0, 1/2), got {ratio}")
    if depth < 1 or dim < 1:
        raise ParameterError("depth and dim must be positive")
    if 2 ** (depth * dim) > max_points:
        raise BudgetExceededError(
            f"2^{depth * dim} points exceed the point budget {max_points}")
    digits = (np.arange(2 ** depth)[:, None] >> np.arange(depth - 1, -1, -1)) & 1
    steps = (1.0 - ratio) * ratio ** np.arange(depth)
    line = digits @ steps + 0.5 * ratio ** depth
    mesh = np.meshgrid(*([line] * dim), indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=1)
    return SampledSpace(
        coords=coords,
        weights=np.full(len(coords), 2.0 ** (-depth * dim)),
        name=f"cantor(ratio={ratio:g},depth={depth},dim={dim})",
    )


def from_matrix(matrix, weights, ids: Sequence[Hashable] = (), name: str = "") -> SampledSpace:
    matrix = np.asarray(matrix, dtype=float)
    return SampledSpace(coords=np.zeros((len(matrix), 1)), weights=weights, ids=tuple(ids),
                        base="matrix", matrix=matrix, name=name)


def snowflake(space: SampledSpace, epsilon: float) -> SampledSpace:
    """Same points and weights with metric d^epsilon."""
    if not (0 < epsilon <= 1):
        raise InvalidExponentError(f"epsilon must lie in (0, 1], got {epsilon}")
    return SampledSpace(
        coords=space.coords, weights=space.weights, ids=space.ids, base=space.base,
        matrix=space.matrix, exponent=space.exponent * epsilon, window=space.window,
        name=f"snowflake({space.name},{epsilon:g})",
    )


# -- balls -------------------------------------------------------------------


def ball(space: SampledSpace, center: Hashable, radius: float) -> set:
    """Open ball: ids y with d(center, y) < radius."""
    row = space.dist_rows([space.index(center)])[0]
    return {space.ids[k] for k in np.flatnonzero(row < radius)}


def ball_measure(space: SampledSpace, center: Hashable, radius: float) -> float:
    row = space.dist_rows([space.index(center)])[0]
    return math.fsum(space.weights[row < radius])


def diam_of(space: SampledSpace, subset: Iterable[Hashable]) -> float:
    idx = space.indices(subset)
    if idx.size == 0:
        raise EmptySetError("diameter of an empty set")
    return _diam_idx(space, idx)


def _diam_idx(space: SampledSpace, idx: np.ndarray) -> float:
    if idx.size < 2:
        return 0.0
    if space.base == "euclidean":
        return float(space._pow(coords_diameter(space.coords[idx])))
    return float(space.matrix[np.ix_(idx, idx)].max() ** space.exponent)


def coords_diameter(pts: np.ndarray) -> float:
    """Euclidean diameter of a coordinate cloud."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return 0.0
    if pts.shape[1] == 1:
        return float(pts.max() - pts.min())
    if len(pts) > 64 and pts.shape[1] <= 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    best = 0.0
    for start in range(0, len(pts), ROW_CHUNK):
        diff = pts[start:start + ROW_CHUNK][:, None, :] - pts[None, :, :]
        best = max(best, float(np.sqrt(np.sum(diff * diff, axis=-1)).max()))
    return best


# -- estimators --------------------------------------------------------------


@dataclass
class RegularityReport:
    Q_hat: float
    C_hat: float
    prefactor: float
    radii_used: list[float]
    residual: float
    n_samples: int
    seed: int


def _sorted_ball_mass(space: SampledSpace, center_idx: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """nu(B(x_k, r_k)) for paired arrays of centers and radii."""
    out = np.empty(len(center_idx))
    for start in range(0, len(center_idx), ROW_CHUNK):
        sl = slice(start, start + ROW_CHUNK)
        rows = space.dist_rows(center_idx[sl])
        out[sl] = np.sum(np.where(rows < radii[sl, None], space.weights[None, :], 0.0), axis=1)
    return out


def estimate_regularity(space: SampledSpace, n_centers: int = 64, n_radii: int = 16,
                        seed: int = 0) -> RegularityReport:
    """Fit nu(B(x, r)) ~ r^Q by pooled least squares in log-log coordinates."""
    if space.n < 16:
        raise ParameterError("estimate_regularity needs at least 16 points")
    lo, hi = space.radius_band()
    if not lo < hi:
        raise DegenerateGeometryError(f"empty radius band [{lo:g}, {hi:g}]")
    rng = np.random.default_rng(seed)
    eligible = np.flatnonzero(space.boundary_distance >= lo)
    if eligible.size == 0:
        raise DegenerateGeometryError("no center is far enough from the window boundary")
    centers = rng.choice(eligible, size=min(n_centers, eligible.size), replace=False)
    top = np.minimum(hi, space.boundary_distance[centers])
    u = rng.random((len(centers), n_radii))
    radii = np.exp(np.log(lo) + u * (np.log(top) - np.log(lo))[:, None])
    c_idx = np.repeat(centers, n_radii)
    r_flat = radii.ravel()
    mass = _sorted_ball_mass(space, c_idx, r_flat)
    logr, logm = np.log(r_flat), np.log(mass)
    slope, intercept = np.polyfit(logr, logm, 1)
    resid = logm - (slope * logr + intercept)
    worst = float(np.abs(resid).max())
    return RegularityReport(
        Q_hat=float(slope), C_hat=float(math.exp(worst)), prefactor=float(math.exp(intercept)),
        radii_used=sorted(float(r) for r in r_flat), residual=worst,
        n_samples=len(r_flat), seed=seed,
    )


@dataclass
class PerfectnessReport:
    kappa_hat: float | None
    tested_grid: list[float]
    failures: list[tuple]
    n_probes: int
    seed: int

    @property
    def verdict(self) -> str:
        return "pass" if self.kappa_hat is not None else "fail"


def check_uniform_perfectness(space: SampledSpace, kappa_grid: Sequence[float] = (1.5, 2, 3, 4, 8),
                              n_probes: int = 200, seed: int = 0,
                              radii: Sequence[float] | None = None) -> PerfectnessReport:
    """Probe the annulus condition B(x,r) \\ B(x,r/kappa) != empty for each kappa.

    Radii are drawn log-uniformly in the trusted band unless ``radii`` is given.
    Only probes whose ball misses part of the sample count.
    """
    kappa_grid = [float(k) for k in kappa_grid]
    if any(k <= 1 for k in kappa_grid) or kappa_grid != sorted(kappa_grid):
        raise ParameterError("kappa_grid must be sorted and > 1")
    rng = np.random.default_rng(seed)
    if radii is None:
        lo, hi = space.radius_band()
        if not lo < hi:
            raise DegenerateGeometryError(f"empty radius band [{lo:g}, {hi:g}]")
        r_probe = np.exp(rng.uniform(np.log(lo), np.log(hi), n_probes))
    else:
        r_probe = rng.choice(np.asarray(radii, dtype=float), size=n_probes)
    bdist = space.boundary_distance
    failures = []
    failed = set()
    used = 0
    for r in r_probe:
        eligible = np.flatnonzero(bdist >= r)
        if eligible.size == 0:
            continue
        x = int(rng.choice(eligible))
        row = space.dist_rows([x])[0]
        if not np.any(row >= r):
            continue
        used += 1
        for k in kappa_grid:
            if not np.any((row >= r / k) & (row < r)):
                failures.append((space.ids[x], float(r), k))
                failed.add(k)
    passing = [k for k in kappa_grid if k not in failed]
    return PerfectnessReport(
        kappa_hat=passing[0] if passing and used else None,
        tested_grid=kappa_grid, failures=failures, n_probes=used, seed=seed,
    )


def annulus_witness(space: SampledSpace, x: Hashable, r: float, kappa: float) -> Hashable:
    """A point z with r/mu <= d(x, z) < r, mu = max(8, kappa); the farthest such point."""
    if kappa <= 1:
        raise ParameterError("kappa must exceed 1")
    if not (0 < r < 2 * space.diam_sample):
        raise ParameterError("r must lie in (0, 2 diam)")
    mu = max(8.0, kappa)
    row = space.dist_rows([space.index(x)])[0]
    ok = np.flatnonzero((row >= r / mu) & (row < r))
    if ok.size == 0:
        raise WitnessNotFoundError(f"no sampled point in [{r / mu:g}, {r:g}) around {x!r}")
    return space.ids[int(ok[np.argmax(row[ok])])]
