"""L^p and Besov norms on sampled spaces, composition, and embedding studies.

Two independent routes to the Besov seminorm are provided: the pairwise
double sum (:func:`besov_seminorm`) and the multiscale ball-average sum over
the ladder t_n = C sigma^n (:func:`discrete_besov`).
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BoundViolationError,
    DuplicatePointError,
    EmptyFamilyError,
    EmptyScaleError,
    EvaluationError,
    ParameterError,
    WindowTooSmallError,
)
from .mapping import HolderParams, SampledMap
from .space import SampledSpace

SORT_CHUNK = 256
PAIR_CHUNK = 2_000_000


@dataclass(frozen=True, eq=False)
class SampledFunction:
    space: SampledSpace
    values: np.ndarray
    evaluator: object = None
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.space.n,):
            raise ParameterError("one value per point is required")
        if not np.all(np.isfinite(v)):
            raise ParameterError("function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            return SampledFunction(self.space, self.values + other.values)
        return SampledFunction(self.space, self.values + other)

    def __mul__(self, c):
        return SampledFunction(self.space, c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float

    def __post_init__(self):
        if self.s <= 0:
            raise ParameterError("smoothness s must be positive")
        if self.p < 1:
            raise ParameterError("integrability p must be >= 1")


@dataclass(frozen=True)
class DiscretizationParams:
    C: float
    sigma: float
    n0: int
    n_scales: int

    def __post_init__(self):
        if self.C <= 0 or not (0 < self.sigma < 1):
            raise ParameterError("need C > 0 and 0 < sigma < 1")
        if self.n_scales < 3:
            raise ParameterError("at least three scales are required")

    def scales(self) -> list[tuple[int, float]]:
        return [(n, self.C * self.sigma ** n) for n in range(self.n0, self.n0 + self.n_scales)]


def default_discretization(space: SampledSpace, r: float, sigma: float = 0.5) -> DiscretizationParams:
    """C = diam of the sample, n0 the first index with t_n < r, scales down to 2x spacing."""
    C = space.diam_sample
    n0 = math.floor(math.log(C / r) / math.log(1 / sigma)) + 1
    while C * sigma ** n0 >= r:
        n0 += 1
    while n0 > 0 and C * sigma ** (n0 - 1) < r:
        n0 -= 1
    floor = 2 * space.min_distance
    n_scales = 0
    while C * sigma ** (n0 + n_scales) >= floor:
        n_scales += 1
    return DiscretizationParams(C=C, sigma=sigma, n0=n0, n_scales=max(3, n_scales))


# -- norms -------------------------------------------------------------------


def lp_norm(u: SampledFunction, p: float) -> float:
    if p < 1:
        raise ParameterError("p must be >= 1")
    return math.fsum(np.abs(u.values) ** p * u.space.weights) ** (1.0 / p)


def _as_matrix(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return v[None, :] if v.ndim == 1 else v


def seminorm_power(space: SampledSpace, values, s: float, p: float,
                   anchors: np.ndarray | None = None) -> np.ndarray:
    """Sum over ordered pairs (x in anchors, y != x) of
    |u(x)-u(y)|^p w(x) w(y) / (d^{sp} nu(B(x, d))), one entry per row of ``values``."""
    V = _as_matrix(values)
    n = space.n
    anchors = np.arange(n) if anchors is None else np.asarray(anchors, dtype=np.intp)
    w = space.weights
    cols = np.arange(n)
    total = np.zeros(len(V))
    for start in range(0, len(anchors), SORT_CHUNK):
        rows = anchors[start:start + SORT_CHUNK]
        D = space.dist_rows(rows)
        order = np.argsort(D, axis=1, kind="stable")
        Ds = np.take_along_axis(D, order, axis=1)
        zero = Ds == 0
        if np.any(zero.sum(axis=1) > 1):
            raise DuplicatePointError("two distinct points at distance 0")
        ws = w[order]
        before = np.cumsum(ws, axis=1) - ws
        # open ball: points strictly closer, so ties share the mass before their group
        starts = np.ones(Ds.shape, dtype=bool)
        starts[:, 1:] = Ds[:, 1:] != Ds[:, :-1]
        first = np.maximum.accumulate(np.where(starts, cols, 0), axis=1)
        mass = np.take_along_axis(before, first, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            kernel = ws * w[rows][:, None] / (Ds ** (s * p) * mass)
        kernel[zero] = 0.0
        for f, v in enumerate(V):
            diff = np.abs(v[rows][:, None] - v[order]) ** p
            total[f] += np.sum(diff * kernel)
    return total


def _anchor_sample(n: int, pair_budget, seed: int):
    if pair_budget is None or pair_budget == "exact":
        return None, 1.0
    k = max(1, int(round(int(pair_budget) / (n - 1))))
    if k >= n:
        return None, 1.0
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=k, replace=False)), n / k


def besov_seminorm(u: SampledFunction, params: BesovParams, pair_budget="exact", seed: int = 0) -> float:
    """Homogeneous Besov seminorm as a double sum over ordered pairs.

    With an integer ``pair_budget`` the outer point is subsampled uniformly
    (about budget/(n-1) anchors, every pair of an anchor kept) and the sum is
    reweighted by n / anchors, which is unbiased for the full sum.
    """
    anchors, ht = _anchor_sample(u.space.n, pair_budget, seed)
    total = ht * seminorm_power(u.space, u.values, params.s, params.p, anchors)[0]
    return float(total ** (1.0 / params.p))


@dataclass
class DiscreteBesov:
    value: float
    lp: float
    scale_sum: float
    terms: list[tuple[int, float, float]]
    p: float

    @property
    def scale_part(self) -> float:
        return self.scale_sum ** (1.0 / self.p)


def discrete_terms(space: SampledSpace, values, s: float, p: float, scales: Sequence[float],
                   centers: np.ndarray | None = None, ht: float = 1.0) -> np.ndarray:
    """I_n = t_n^{-sp} sum_x w(x) avg_{y in B(x, t_n)} |u(x)-u(y)|^p for every row of ``values``.

    Returns shape (n_functions, n_scales).
    """
    V = _as_matrix(values)
    scales = np.asarray(scales, dtype=float)
    centers = np.arange(space.n) if centers is None else np.asarray(centers, dtype=np.intp)
    w = space.weights
    out = np.zeros((len(V), len(scales)))
    tmax = float(scales.max())
    if space.base == "euclidean":
        probe = centers[:: max(1, len(centers) // 64)]
        avg = float(np.mean(space._tree.query_ball_point(space.coords[probe], space._unpow(tmax),
                                                         return_length=True)))
    else:
        avg = float(space.n)
    step = max(1, int(PAIR_CHUNK // max(1.0, avg)))
    for start in range(0, len(centers), step):
        chunk = centers[start:start + step]
        m = len(chunk)
        pos, j, d = space.neighbor_pairs(chunk, tmax)
        wj = w[j]
        diffs = [np.abs(v[chunk][pos] - v[j]) ** p * wj for v in V]
        for k, t in enumerate(scales):
            sel = d < t
            ps = pos[sel]
            mass = w[chunk] + np.bincount(ps, weights=wj[sel], minlength=m)
            for f, df in enumerate(diffs):
                num = np.bincount(ps, weights=df[sel], minlength=m)
                out[f, k] += t ** (-s * p) * np.sum(w[chunk] * num / mass)
    return ht * out


def discrete_besov(u: SampledFunction, params: BesovParams, disc: DiscretizationParams,
                   center_budget: int | None = None, seed: int = 0) -> DiscreteBesov:
    """(||u||_p^p + sum_n I_n)^{1/p} over the finite ladder of ``disc``."""
    res = _discrete_many(u.space, u.values[None, :], params, disc, center_budget, seed)
    return res[0]


def _discrete_many(space, V, params, disc, center_budget, seed) -> list[DiscreteBesov]:
    ladder = disc.scales()
    if all(t <= space.min_distance for _, t in ladder):
        raise EmptyScaleError("every scale lies below the sample resolution")
    centers, ht = None, 1.0
    if center_budget is not None and center_budget < space.n:
        rng = np.random.default_rng(seed)
        centers = np.sort(rng.choice(space.n, size=center_budget, replace=False))
        ht = space.n / center_budget
    I = discrete_terms(space, V, params.s, params.p, [t for _, t in ladder], centers, ht)
    out = []
    for v, row in zip(V, I):
        lp_p = math.fsum(np.abs(v) ** params.p * space.weights)
        ssum = math.fsum(row)
        out.append(DiscreteBesov(
            value=(lp_p + ssum) ** (1.0 / params.p), lp=lp_p ** (1.0 / params.p), scale_sum=ssum,
            terms=[(n, t, float(i)) for (n, t), i in zip(ladder, row)], p=params.p,
        ))
    return out


# -- composition ---------------------------------------------------------------


def compose(m: SampledMap, u: SampledFunction) -> SampledFunction:
    """v = u o f on the domain sample."""
    if m.mode == "bijection":
        if u.space is not m.codomain and u.space.ids != m.codomain.ids:
            raise EvaluationError("function does not live on the map's codomain")
        return SampledFunction(m.domain, u.values[m.image], label=u.label)
    if u.evaluator is None:
        raise EvaluationError("analytic maps need a function that can be evaluated off-sample")
    vals = np.asarray(u.evaluator(m.image_coords), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("function is undefined at some image point")
    return SampledFunction(m.domain, vals, evaluator=None, label=u.label)


@dataclass
class LpEmbeddingReport:
    max_ratio: float
    ratios: list[float]
    p: float


def lp_embedding_check(m: SampledMap, family: Sequence[SampledFunction], p: float) -> LpEmbeddingReport:
    """max over the family of ||u o f||_{L^p(Z)} / ||u||_{L^p(W)}."""
    if not family:
        raise EmptyFamilyError("empty test-function family")
    ratios = []
    for u in family:
        den = lp_norm(u, p)
        ratios.append(lp_norm(compose(m, u), p) / den if den > 0 else 0.0)
    return LpEmbeddingReport(max_ratio=max(ratios), ratios=ratios, p=p)


# -- the exponent relation -----------------------------------------------------


@dataclass
class Admissibility:
    feasible: bool
    s_prime_max: float
    vacuous: bool


def admissible_smoothness(Q_Z: float, Q_W: float, theta1: float, theta2: float,
                          s: float, p: float) -> Admissibility:
    """Largest target smoothness theta2 s + (theta2 Q_W - Q_Z)/p; feasible iff Q_Z >= theta1 Q_W."""
    if min(Q_Z, Q_W, theta1, theta2, s) <= 0 or p < 1:
        raise ParameterError("admissible_smoothness needs positive inputs and p >= 1")
    smax = theta2 * s + (theta2 * Q_W - Q_Z) / p
    return Admissibility(feasible=Q_Z >= theta1 * Q_W, s_prime_max=smax, vacuous=smax <= 0)


@dataclass
class EmbeddingReport:
    rows: list[dict]
    sup_ratio: float
    sup_seminorm_ratio: float | None
    params: dict
    disc: dict
    feasible: bool | None
    s_prime_max: float | None
    above_bound: bool | None
    mode: str
    seed: int
    wall_time: float = field(default=0.0)


def embedding_ratio_study(m: SampledMap, s: float, s_prime: float, p: float,
                          family: Sequence[SampledFunction], disc: DiscretizationParams | None = None,
                          *, mode: str = "verify", holder: HolderParams | None = None,
                          Q_Z: float | None = None, Q_W: float | None = None,
                          seminorm_budget=None, center_budget: int | None = None,
                          seed: int = 0) -> EmbeddingReport:
    """Compare ||u||_{B^s(W)} with ||u o f||_{B^{s'}(Z)} over a test family.

    Both norms use :func:`discrete_besov` with the same ladder.  When
    ``seminorm_budget`` is given ("exact" or a pair count) the pairwise
    seminorms are compared as well.  ``mode="verify"`` refuses s' above the
    admissible bound; ``mode="explore"`` only flags it.
    """
    t0 = time.perf_counter()
    if mode not in ("verify", "explore"):
        raise ParameterError(f"unknown mode {mode!r}")
    if not family:
        raise EmptyFamilyError("empty test-function family")
    if m.codomain is None:
        raise EvaluationError("the map has no codomain sample to measure u on")
    adm = None
    if holder is not None and Q_Z is not None and Q_W is not None:
        adm = admissible_smoothness(Q_Z, Q_W, holder.theta1, holder.theta2, s, p)
    above = None if adm is None else s_prime > adm.s_prime_max * (1 + 1e-12) + 1e-12
    if mode == "verify":
        if adm is None:
            raise ParameterError("verify mode needs holder parameters and both regularity exponents")
        if not adm.feasible or above:
            raise BoundViolationError(
                f"s'={s_prime:g} exceeds the admissible {adm.s_prime_max:g} (feasible={adm.feasible})")
    if disc is None:
        disc = default_discretization(m.domain, holder.r if holder else m.domain.diam_sample)
    VW = np.stack([u.values for u in family])
    VZ = np.stack([compose(m, u).values for u in family])
    nW = _discrete_many(m.codomain, VW, BesovParams(s, p), disc, center_budget, seed)
    nZ = _discrete_many(m.domain, VZ, BesovParams(s_prime, p), disc, center_budget, seed)
    semW = semZ = None
    if seminorm_budget is not None:
        aW, htW = _anchor_sample(m.codomain.n, seminorm_budget, seed)
        aZ, htZ = _anchor_sample(m.domain.n, seminorm_budget, seed)
        semW = (htW * seminorm_power(m.codomain, VW, s, p, aW)) ** (1 / p)
        semZ = (htZ * seminorm_power(m.domain, VZ, s_prime, p, aZ)) ** (1 / p)
    rows = []
    for k, u in enumerate(family):
        row = {"label": u.label or str(k), "norm_W": nW[k].value, "norm_Z": nZ[k].value,
               "ratio": nZ[k].value / nW[k].value if nW[k].value > 0 else 0.0}
        if semW is not None:
            row.update(seminorm_W=float(semW[k]), seminorm_Z=float(semZ[k]),
                       seminorm_ratio=float(semZ[k] / semW[k]) if semW[k] > 0 else 0.0)
        rows.append(row)
    params = {"s": s, "s_prime": s_prime, "p": p, "Q_Z": Q_Z, "Q_W": Q_W}
    if holder is not None:
        params.update(theta1=holder.theta1, theta2=holder.theta2, r=holder.r)
    return EmbeddingReport(
        rows=rows, sup_ratio=max(r["ratio"] for r in rows),
        sup_seminorm_ratio=None if semW is None else max(r["seminorm_ratio"] for r in rows),
        params=params, disc=asdict(disc), feasible=None if adm is None else adm.feasible,
        s_prime_max=None if adm is None else adm.s_prime_max, above_bound=above, mode=mode,
        seed=seed, wall_time=time.perf_counter() - t0,
    )


# -- test functions ------------------------------------------------------------


def spline_profile(rho):
    """Cubic B-spline bump on [0, 1), equal to 1 at 0."""
    rho = np.asarray(rho, dtype=float)
    inner = 1 - 6 * rho ** 2 + 6 * rho ** 3
    outer = 2 * (1 - rho) ** 3
    return np.where(rho < 0.5, inner, np.where(rho < 1, outer, 0.0))


@dataclass(frozen=True)
class Bump:
    center: tuple[float, ...]
    width: float
    exponent: float = 1.0

    def __call__(self, coords) -> np.ndarray:
        d = np.linalg.norm(np.asarray(coords, dtype=float) - np.asarray(self.center), axis=-1)
        if self.exponent != 1:
            d = d ** self.exponent
        return spline_profile(d / self.width)


def gen_bumps(space: SampledSpace, n: int, width_range: tuple[float, float], seed: int = 0,
              centers: Sequence | None = None) -> list[SampledFunction]:
    """Bumps with log-uniform widths at random interior centers.

    Interior means metric distance >= width from the window boundary.  Spaces
    without coordinates put the centers on sample points.
    """
    lo, hi = float(width_range[0]), float(width_range[1])
    if not 0 < lo <= hi:
        raise ParameterError("width_range must satisfy 0 < lo <= hi")
    if lo < space.min_distance:
        raise WindowTooSmallError(f"width {lo:g} is below the sample spacing {space.min_distance:g}")
    rng = np.random.default_rng(seed)
    widths = np.exp(rng.uniform(np.log(lo), np.log(hi), n))
    out = []
    for k, width in enumerate(widths):
        if space.base == "matrix":
            c_idx = int(rng.integers(space.n)) if centers is None else space.index(centers[k])
            vals = spline_profile(space.dist_rows([c_idx])[0] / width)
            out.append(SampledFunction(space, vals, label=f"bump{k}"))
            continue
        if centers is not None:
            c = np.asarray(centers[k], dtype=float)
        elif space.window is not None:
            slack = space.window.half_width - width ** (1 / space.exponent)
            if slack < 0:
                raise WindowTooSmallError(f"window too small for width {width:g}")
            c = np.asarray(space.window.center) + rng.uniform(-slack, slack, space.dim)
        else:
            c = space.coords[rng.integers(space.n)]
        bump = Bump(tuple(float(x) for x in c), float(width), space.exponent)
        out.append(SampledFunction(space, bump(space.coords), evaluator=bump, label=f"bump{k}"))
    return out


def random_functions(space: SampledSpace, n: int, seed: int = 0) -> list[SampledFunction]:
    """Standard normal values at every point."""
    rng = np.random.default_rng(seed)
    return [SampledFunction(space, rng.standard_normal(space.n), label=f"noise{k}") for k in range(n)]
