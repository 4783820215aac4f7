"""Sampled homeomorphisms and the mapping-side analyzers.

A :class:`SampledMap` either pairs the points of two sampled spaces
(bijection mode) or carries image coordinates computed from a formula
(analytic mode), in which case codomain distances are Euclidean distances
between image coordinates raised to ``codomain_exponent``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DegenerateMapError,
    DimensionError,
    InsufficientPairsError,
    MismatchError,
    NonInjectiveError,
    ParameterError,
    UnsupportedModeError,
    WindowTooSmallError,
)
from .space import SampledSpace, _diam_idx, coords_diameter


# -- parameter bundles -------------------------------------------------------


@dataclass(frozen=True)
class HolderParams:
    theta1: float
    theta2: float
    r: float
    C: float

    def __post_init__(self):
        if self.theta1 <= 0 or self.theta2 <= 0:
            raise ParameterError("Hoelder exponents must be positive")
        if self.r <= 0:
            raise ParameterError("radius must be positive")
        if self.C < 1:
            raise ParameterError(f"coefficient must be >= 1, got {self.C}")


@dataclass(frozen=True)
class QsParams:
    theta: float
    lam: float

    def __post_init__(self):
        if self.theta < 1 or self.lam < 1:
            raise ParameterError("power quasisymmetry needs theta >= 1 and lambda >= 1")

    def eta(self, t):
        return self.lam * eta_unit(t, self.theta)


def eta_unit(t, theta: float):
    """The power gauge with lambda = 1: t^(1/theta) below 1, t^theta from 1 on."""
    t = np.asarray(t, dtype=float)
    return np.where(t < 1, t ** (1.0 / theta), t ** theta)


# -- maps --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledMap:
    domain: SampledSpace
    codomain: SampledSpace | None = None
    image: np.ndarray | None = None
    image_coords: np.ndarray | None = None
    codomain_exponent: float = 1.0
    name: str = ""

    @property
    def mode(self) -> str:
        return "bijection" if self.image is not None else "analytic"

    def image_dist_pairs(self, i, j) -> np.ndarray:
        if self.image is not None:
            return self.codomain.dist_pairs(self.image[i], self.image[j])
        diff = self.image_coords[i] - self.image_coords[j]
        d = np.sqrt(np.sum(diff * diff, axis=-1))
        return d if self.codomain_exponent == 1 else d ** self.codomain_exponent

    def image_diam(self, idx: np.ndarray) -> float:
        if self.image is not None:
            return _diam_idx(self.codomain, self.image[idx])
        d = coords_diameter(self.image_coords[idx])
        return d if self.codomain_exponent == 1 else d ** self.codomain_exponent


def make_analytic(domain: SampledSpace, fn: Callable[[np.ndarray], np.ndarray],
                  codomain: SampledSpace | None = None, name: str = "") -> SampledMap:
    """Map with image coordinates fn(coords) and Euclidean codomain metric."""
    if domain.base != "euclidean":
        raise DimensionError("analytic maps need a coordinate domain")
    img = np.asarray(fn(domain.coords), dtype=float)
    img.setflags(write=False)
    return SampledMap(domain=domain, codomain=codomain, image_coords=img, name=name)


def _require_plane(window: SampledSpace):
    if window.dim != 2 or window.base != "euclidean" or window.exponent != 1:
        raise DimensionError("expected a 2D Euclidean window")


def radial_stretch(x: np.ndarray) -> np.ndarray:
    return np.linalg.norm(x, axis=-1, keepdims=True) * x


def sqrt_radial(x: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    inner = (norm > 0) & (norm < 1)
    scale = np.ones_like(norm)
    scale[inner] = norm[inner] ** -0.5
    return np.where(norm == 0, 0.0, scale * x)


def make_radial_stretch(window: SampledSpace) -> SampledMap:
    """x -> |x| x on a planar window."""
    _require_plane(window)
    return make_analytic(window, radial_stretch, name="radial_stretch")


def make_sqrt_radial(window: SampledSpace) -> SampledMap:
    """x -> x |x|^(-1/2) inside the unit disk, identity outside.

    The map preserves every centered box of half-width >= 1, so the window
    itself serves as the codomain sample for function norms.
    """
    _require_plane(window)
    return make_analytic(window, sqrt_radial, codomain=window, name="sqrt_radial")


def make_scaling(space: SampledSpace, factor: float) -> SampledMap:
    if space.base != "euclidean":
        raise DimensionError("scaling needs coordinates")
    return make_analytic(space, lambda x: factor * x, name=f"scale({factor:g})")


def make_identity(space: SampledSpace, codomain: SampledSpace | None = None) -> SampledMap:
    codomain = space if codomain is None else codomain
    if codomain.ids != space.ids or not np.array_equal(codomain.coords, space.coords):
        raise MismatchError("identity map needs identical point sets")
    return SampledMap(domain=space, codomain=codomain, image=np.arange(space.n), name="identity")


def materialize(m: SampledMap) -> SampledMap:
    """Bijection-mode copy of an analytic map; the codomain sample is the image cloud
    carrying the pushed-forward weights."""
    if m.mode == "bijection":
        return m
    if m.codomain_exponent != 1:
        raise UnsupportedModeError("only Euclidean analytic codomains can be materialized")
    cod = SampledSpace(coords=m.image_coords, weights=m.domain.weights, ids=m.domain.ids,
                       name=f"image({m.name})")
    return SampledMap(domain=m.domain, codomain=cod, image=np.arange(m.domain.n), name=m.name)


def invert(m: SampledMap) -> SampledMap:
    if m.mode != "bijection":
        raise UnsupportedModeError("invert needs a bijection-mode map; see materialize()")
    if m.codomain.n != m.domain.n:
        raise MismatchError("bijection needs equal point counts")
    inv = np.empty_like(m.image)
    inv[m.image] = np.arange(len(m.image))
    return SampledMap(domain=m.codomain, codomain=m.domain, image=inv, name=f"inverse({m.name})")


def map_from_pairs(domain: SampledSpace, codomain: SampledSpace,
                   pairs: Sequence[tuple[Hashable, Hashable]]) -> SampledMap:
    image = np.full(domain.n, -1, dtype=np.intp)
    for a, b in pairs:
        image[domain.index(a)] = codomain.index(b)
    if np.any(image < 0):
        raise MismatchError("map file does not cover every domain point")
    if len(np.unique(image)) != len(image):
        raise NonInjectiveError("map file is not injective")
    return SampledMap(domain=domain, codomain=codomain, image=image, name="csv")


# -- local biHoelder continuity ------------------------------------------------


PAIR_CHUNK = 2_000_000


def _sample_close_pairs(m: SampledMap, r: float, n_pairs: int, seed: int, keep_below: float = 0.0):
    """Unordered pairs with d_Z < r: all of them when they fit the budget,
    otherwise each pair is kept independently with probability budget/total.
    Pairs closer than ``keep_below`` are always kept."""
    dom = m.domain
    if dom.base == "euclidean":
        counts = dom._tree.query_ball_point(dom.coords, dom._unpow(r), return_length=True)
    else:
        counts = np.concatenate([
            np.sum(dom.dist_rows(np.arange(k, min(k + 512, dom.n))) < r, axis=1)
            for k in range(0, dom.n, 512)])
    total = max(1.0, (float(np.sum(counts)) - dom.n) / 2)
    keep_prob = min(1.0, n_pairs / total)
    rng = np.random.default_rng(seed)
    step = max(1, int(PAIR_CHUNK // max(1.0, float(np.mean(counts)))))
    parts = []
    for start in range(0, dom.n, step):
        anchors = np.arange(start, min(start + step, dom.n))
        pos, j, d = dom.neighbor_pairs(anchors, r)
        i = anchors[pos]
        sel = i < j
        if keep_prob < 1:
            sel &= (rng.random(sel.size) < keep_prob) | (d < keep_below)
        parts.append((i[sel], j[sel], d[sel]))
    i, j, d = (np.concatenate(a) for a in zip(*parts))
    if i.size == 0:
        raise InsufficientPairsError(f"no sampled pair closer than r={r:g}")
    return i, j, d, m.image_dist_pairs(i, j)


@dataclass
class BiholderCheck:
    params: HolderParams
    verdict: str
    n_pairs: int
    violations: list[dict]
    seed: int


def check_local_biholder(m: SampledMap, params: HolderParams, n_pairs: int = 2_000_000,
                         seed: int = 0, max_violations: int = 1000) -> BiholderCheck:
    """Test C^-1 dZ^theta1 <= dW <= C dZ^theta2 on sampled pairs with dZ < r."""
    i, j, dz, dw = _sample_close_pairs(m, params.r, n_pairs, seed)
    lower = dz ** params.theta1 / params.C
    upper = params.C * dz ** params.theta2
    bad = np.flatnonzero((dw < lower) | (dw > upper))
    order = bad[np.argsort(-np.maximum(lower[bad] / dw[bad], dw[bad] / upper[bad]))][:max_violations]
    ids = m.domain.ids
    violations = [
        {"x": ids[i[k]], "y": ids[j[k]], "dZ": float(dz[k]), "dW": float(dw[k]),
         "bound": float(lower[k] if dw[k] < lower[k] else upper[k])}
        for k in order
    ]
    return BiholderCheck(params=params, verdict="pass" if bad.size == 0 else "fail",
                         n_pairs=int(i.size), violations=violations, seed=seed)


@dataclass
class BiholderFit:
    params: HolderParams
    fit_window: tuple[float, float]
    n_pairs: int
    seed: int


def _balanced_slope(lz: np.ndarray, lw: np.ndarray, upper: bool) -> float:
    """Slope of the support line of the scatter's upper (lower) envelope.

    The window is split at its log-midpoint and theta is chosen so that the
    extreme of log dW - theta log dZ is the same on both halves.  A sample can
    only undershoot a supremum, so under-resolved scales never drag the line.
    """
    mid = 0.5 * (lz.min() + lz.max())
    small = lz < mid
    agg = np.max if upper else np.min
    zs, ws, zl, wl = lz[small], lw[small], lz[~small], lw[~small]

    def gap(theta):
        return agg(ws - theta * zs) - agg(wl - theta * zl)

    lo, hi = 1e-6, 1e3
    if not gap(lo) < 0 < gap(hi):
        raise DegenerateMapError("envelope slope is not positive and finite")
    return float(brentq(gap, lo, hi, xtol=1e-12))


def fit_local_biholder(m: SampledMap, r: float, n_pairs: int = 5_000_000,
                       seed: int = 0) -> BiholderFit:
    """Fit (theta1, theta2, r, C) from the extremal envelopes of (log dZ, log dW).

    Exponents describe the small-scale law, so the envelopes are fitted on
    pairs with dZ in [d_min, max(r/4, 8 d_min)] (capped at r), all of which are
    enumerated; C is then the smallest coefficient covering every sampled pair
    with dZ < r.
    """
    top = min(r, max(r / 4, 8 * m.domain.min_distance))
    _, _, dz, dw = _sample_close_pairs(m, r, n_pairs, seed, keep_below=top)
    if np.any(dw <= 0):
        raise NonInjectiveError("two sampled points share an image")
    if np.ptp(dw) == 0:
        raise DegenerateMapError("all sampled image distances are equal")
    lz, lw = np.log(dz), np.log(dw)
    sel = dz <= top
    if np.ptp(lz[sel]) == 0:
        raise DegenerateMapError("sampled pairs span a single distance scale")
    theta2 = _balanced_slope(lz[sel], lw[sel], upper=True)
    theta1 = _balanced_slope(lz[sel], lw[sel], upper=False)
    C = max(1.0, float(np.max(np.exp(lw - theta2 * lz))), float(np.max(np.exp(theta1 * lz - lw))))
    return BiholderFit(params=HolderParams(theta1, theta2, float(r), C),
                       fit_window=(float(dz.min()), float(top)), n_pairs=int(dz.size), seed=seed)


def inverse_params(p: HolderParams) -> HolderParams:
    """Parameters under which the inverse map is locally biHoelder."""
    return HolderParams(
        theta1=1.0 / p.theta2,
        theta2=1.0 / p.theta1,
        r=p.r ** p.theta1 / p.C,
        C=max(p.C ** (1.0 / p.theta1), p.C ** (1.0 / p.theta2)),
    )


# -- quasisymmetry -----------------------------------------------------------


def _knn(dom: SampledSpace, k: int) -> np.ndarray:
    if dom.base == "euclidean":
        return dom._tree.query(dom.coords, k=k + 1)[1][:, 1:]
    out = np.empty((dom.n, k), dtype=np.intp)
    for start in range(0, dom.n, 512):
        rows = dom.dist_rows(np.arange(start, min(start + 512, dom.n)))
        out[start:start + 512] = np.argsort(rows, axis=1, kind="stable")[:, 1:k + 1]
    return out


def _sample_triples(m: SampledMap, n_triples: int, seed: int, t_range=(1e-3, 1e3),
                    local_k: int = 8):
    """Triples (x, y, z): every ordered pair of z's ``local_k`` nearest neighbors,
    plus ``n_triples`` draws with x and y taken around z at log-uniform scales.

    Scale-local triples reach the small configurations that dominate the
    quasisymmetry ratio; ratios t outside ``t_range`` are dropped.
    """
    dom = m.domain
    if dom.n < 3:
        raise ParameterError("need at least three points for triples")
    rng = np.random.default_rng(seed)
    parts = []
    k = min(local_k, dom.n - 1)
    if k >= 2:
        nn = _knn(dom, k)
        a, b = np.nonzero(~np.eye(k, dtype=bool))
        z = np.repeat(np.arange(dom.n), len(a))
        x, y = nn[:, a].ravel(), nn[:, b].ravel()
        t = dom.dist_pairs(x, z) / dom.dist_pairs(y, z)
        ok = (t >= t_range[0]) & (t <= t_range[1])
        parts.append((x[ok], y[ok], z[ok]))
    if dom.base == "euclidean":
        lo = np.log(dom._unpow(dom.min_distance))
        hi = np.log(dom._unpow(dom.diam_sample))

        def near(z):
            rho = np.exp(rng.uniform(lo, hi, len(z)))[:, None]
            step = rng.normal(size=(len(z), dom.dim))
            step *= rho * rng.random((len(z), 1)) ** (1 / dom.dim) / np.linalg.norm(step, axis=1, keepdims=True)
            return dom._tree.query(dom.coords[z] + step)[1]
    else:
        def near(z):
            return rng.integers(0, dom.n, len(z))
    got = 0
    for _ in range(50):
        if got >= n_triples:
            break
        z = rng.integers(0, dom.n, 2 * (n_triples - got) + 16)
        x, y = near(z), near(z)
        ok = (x != y) & (y != z) & (x != z)
        x, y, z = x[ok], y[ok], z[ok]
        t = dom.dist_pairs(x, z) / dom.dist_pairs(y, z)
        ok = np.flatnonzero((t >= t_range[0]) & (t <= t_range[1]))[:n_triples - got]
        parts.append((x[ok], y[ok], z[ok]))
        got += ok.size
    x, y, z = (np.concatenate(a) for a in zip(*parts))
    t = dom.dist_pairs(x, z) / dom.dist_pairs(y, z)
    den = m.image_dist_pairs(y, z)
    if np.any(den <= 0):
        raise NonInjectiveError("distinct points share an image")
    return x, y, z, t, m.image_dist_pairs(x, z) / den


@dataclass
class QsAudit:
    eta: QsParams
    max_excess: float
    worst: dict | None
    n_triples: int
    seed: int


def qs_ratio_audit(m: SampledMap, eta: QsParams, n_triples: int = 50000, seed: int = 0) -> QsAudit:
    """Largest amount by which an image distance ratio exceeds eta(t) on sampled triples."""
    x, y, z, t, ratio = _sample_triples(m, n_triples, seed)
    excess = ratio - eta.eta(t)
    k = int(np.argmax(excess))
    worst = None
    if excess[k] > 0:
        ids = m.domain.ids
        worst = {"x": ids[x[k]], "y": ids[y[k]], "z": ids[z[k]], "t": float(t[k]),
                 "ratio": float(ratio[k]), "bound": float(eta.eta(t[k]))}
    return QsAudit(eta=eta, max_excess=max(0.0, float(excess[k])), worst=worst,
                   n_triples=int(t.size), seed=seed)


@dataclass
class QsFit:
    params: QsParams
    table: list[tuple[float, float]]
    n_triples: int
    seed: int


def fit_power_qs(m: SampledMap, theta_grid: Sequence[float] = (1, 1.5, 2, 3, 4),
                 n_triples: int = 50000, seed: int = 0, rtol: float = 1e-9) -> QsFit:
    """lambda(theta) = max ratio / eta_{1,theta}(t); keep the smallest theta minimizing lambda.

    lambda values within ``rtol`` of the minimum count as ties (rounding in
    exact power laws would otherwise decide them).
    """
    if any(th < 1 for th in theta_grid):
        raise ParameterError("theta grid must be >= 1")
    _, _, _, t, ratio = _sample_triples(m, n_triples, seed)
    table = [(float(th), max(1.0, float(np.max(ratio / eta_unit(t, th))))) for th in theta_grid]
    lam_min = min(lam for _, lam in table)
    best = min((row for row in table if row[1] <= lam_min * (1 + rtol)), key=lambda row: row[0])
    return QsFit(params=QsParams(*best), table=table, n_triples=int(t.size), seed=seed)


# -- uniform boundedness -------------------------------------------------------


@dataclass
class UbReport:
    r: float
    a: float
    b: float
    centers_used: int
    verdict: str
    ratio_cap: float
    argmin: Hashable = None
    argmax: Hashable = None
    seed: int = 0


def check_uniform_boundedness(m: SampledMap, r: float, n_centers: int = 200, seed: int = 0,
                              centers: Sequence[Hashable] | None = None,
                              ratio_cap: float = 1e3) -> UbReport:
    """a = min, b = max of diam f(B(x, r)) over centers at distance >= r from the boundary."""
    dom = m.domain
    if not (0 < r < 2 * dom.diam_sample):
        raise ParameterError("r must lie in (0, 2 diam)")
    admissible = dom.boundary_distance >= r
    if centers is None:
        eligible = np.flatnonzero(admissible)
        if eligible.size == 0:
            raise WindowTooSmallError(f"no center at distance >= {r:g} from the window edge")
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(eligible, size=min(n_centers, eligible.size), replace=False))
    else:
        idx = dom.indices(centers)
        if not np.all(admissible[idx]):
            raise WindowTooSmallError("a requested center is within r of the window edge")
    diams = np.empty(len(idx))
    for k, x in enumerate(idx):
        row = dom.dist_rows([x])[0]
        diams[k] = m.image_diam(np.flatnonzero(row < r))
    a, b = float(diams.min()), float(diams.max())
    ok = a > 0 and math.isfinite(b) and b / a < ratio_cap
    return UbReport(r=float(r), a=a, b=b, centers_used=len(idx), verdict="pass" if ok else "fail",
                    ratio_cap=ratio_cap, argmin=dom.ids[idx[int(np.argmin(diams))]],
                    argmax=dom.ids[idx[int(np.argmax(diams))]], seed=seed)


def nested_ub_verdict(reports: Sequence[UbReport], growth_tol: float = 0.05) -> str:
    """Verdict over probe regions ordered by inclusion.

    Fails when any region breaks the ratio cap, or when the running b grows by more
    than ``growth_tol`` at each of two consecutive steps (three nested regions).
    """
    if any(rep.verdict == "fail" for rep in reports):
        return "fail"
    b = np.maximum.accumulate([rep.b for rep in reports])
    grows = b[1:] > (1 + growth_tol) * b[:-1]
    if np.any(grows[1:] & grows[:-1]):
        return "fail"
    return "pass"


def transfer_ub(a: float, b: float, kappa: float, eta: QsParams, r: float, s: float) -> tuple[float, float]:
    """Uniform-boundedness constants at radius s from those at radius r."""
    if min(a, b, r, s) <= 0 or kappa <= 0:
        raise ParameterError("transfer_ub needs positive inputs")
    a1 = min(a, a / float(eta.eta(kappa * r / s)))
    b1 = max(b, float(eta.eta(kappa * s / r)) * b)
    return a1, b1


def qs_to_holder_constants(eta: QsParams, kappa: float, r: float, a: float, b: float) -> HolderParams:
    """Locally (theta, 1/theta, r)-biHoelder parameters implied by r-uniform boundedness."""
    if min(kappa, r, a, b) <= 0:
        raise ParameterError("qs_to_holder_constants needs positive inputs")
    th, lam = eta.theta, eta.lam
    mu = max(8.0, kappa)
    C = max(3 * lam ** 2 * (r * mu) ** th / a, lam * b * mu ** (1 / th) / r ** (1 / th))
    return HolderParams(theta1=th, theta2=1.0 / th, r=r, C=C)


def holder_to_ub_bounds(p: HolderParams, kappa: float) -> tuple[float, float]:
    """(a, b) guaranteed by a locally (theta, 1/theta, r)-biHoelder map: r^theta/(mu^theta C), 2 C r^(1/theta)."""
    mu = max(8.0, kappa)
    return p.r ** p.theta1 / (mu ** p.theta1 * p.C), 2 * p.C * p.r ** p.theta2
