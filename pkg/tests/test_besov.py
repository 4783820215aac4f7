import math

import numpy as np
import pytest

from biholder.besov import (
    BesovParams,
    DiscretizationParams,
    SampledFunction,
    admissible_smoothness,
    besov_seminorm,
    compose,
    default_discretization,
    discrete_besov,
    embedding_ratio_study,
    gen_bumps,
    lp_embedding_check,
    lp_norm,
    random_functions,
)
from biholder.errors import (
    BoundViolationError,
    DuplicatePointError,
    EmptyFamilyError,
    EmptyScaleError,
    EvaluationError,
    ParameterError,
    WindowTooSmallError,
)
from biholder.mapping import HolderParams, make_identity, make_sqrt_radial
from biholder.space import SampledSpace, build_cantor, build_grid, snowflake


def test_lp_norm_examples(two_point):
    g = build_grid(2, 1.0, 21)
    assert lp_norm(SampledFunction(g, np.zeros(g.n)), 2) == 0
    assert lp_norm(SampledFunction(g, np.ones(g.n)), 2) == pytest.approx(2.0, rel=1e-12)
    assert lp_norm(SampledFunction(two_point, [0.0, 1.0]), 1) == 0.5
    with pytest.raises(ParameterError):
        lp_norm(SampledFunction(g, np.ones(g.n)), 0.5)


def test_two_point_seminorm(two_point):
    u = SampledFunction(two_point, [0.0, 1.0])
    assert besov_seminorm(u, BesovParams(1, 1)) == pytest.approx(1.0, abs=1e-12)


def test_two_point_discrete(two_point):
    u = SampledFunction(two_point, [0.0, 1.0])
    res = discrete_besov(u, BesovParams(1, 1), DiscretizationParams(2, 0.5, 0, 3))
    assert res.scale_sum == pytest.approx(0.25, abs=1e-12)
    assert [t for _, _, t in res.terms] == [0.25, 0.0, 0.0]
    assert res.value == pytest.approx(0.75)


def test_constant_function_has_zero_seminorm():
    g = build_grid(1, 1.0, 51)
    u = SampledFunction(g, np.full(g.n, 3.0))
    assert besov_seminorm(u, BesovParams(0.5, 2)) == 0
    res = discrete_besov(u, BesovParams(0.5, 2), default_discretization(g, 1.0))
    assert res.scale_sum == 0 and res.value == pytest.approx(lp_norm(u, 2))


def test_seminorm_homogeneous():
    g = build_grid(1, 1.0, 51)
    u = random_functions(g, 1, seed=2)[0]
    base = besov_seminorm(u, BesovParams(0.5, 2))
    assert besov_seminorm(3 * u, BesovParams(0.5, 2)) == pytest.approx(3 * base, rel=1e-13)


def test_duplicate_points_rejected():
    sp = SampledSpace(coords=np.array([[0.0], [0.0], [1.0]]), weights=np.ones(3))
    with pytest.raises(DuplicatePointError):
        besov_seminorm(SampledFunction(sp, [0.0, 1.0, 2.0]), BesovParams(0.5, 2))


def test_budgeted_seminorm_close_to_exact():
    g = build_grid(1, 1.0, 401)
    u = gen_bumps(g, 1, (0.2, 0.4), seed=1)[0]
    exact = besov_seminorm(u, BesovParams(0.5, 2))
    approx = np.mean([besov_seminorm(u, BesovParams(0.5, 2), pair_budget=40_000, seed=k) for k in range(8)])
    assert approx == pytest.approx(exact, rel=0.15)


def test_empty_scales():
    g = build_grid(1, 1.0, 11)
    u = SampledFunction(g, np.arange(g.n, dtype=float))
    with pytest.raises(EmptyScaleError):
        discrete_besov(u, BesovParams(0.5, 2), DiscretizationParams(1e-3, 0.5, 0, 3))


def test_discrete_vs_pairwise_linear_function():
    g = build_grid(1, 1.0, 201)
    u = SampledFunction(g, g.coords[:, 0])
    bp = BesovParams(0.5, 2)
    ratio = discrete_besov(u, bp, default_discretization(g, 1.0)).scale_part / besov_seminorm(u, bp)
    assert 0.1 <= ratio <= 10


def test_default_discretization():
    g = build_grid(2, 4.0, 41)
    d = default_discretization(g, 2.0)
    ladder = [t for _, t in d.scales()]
    assert ladder[0] < 2.0 <= ladder[0] * 2
    assert d.C == pytest.approx(g.diam_sample)


def test_compose_identity_and_snowflake():
    c = build_cantor(1 / 3, 6)
    u = random_functions(c, 1, seed=0)[0]
    assert np.array_equal(compose(make_identity(c), u).values, u.values)
    w = snowflake(c, 0.5)
    uw = SampledFunction(w, u.values)
    v = compose(make_identity(c, w), uw)
    assert np.array_equal(v.values, u.values)
    assert lp_norm(v, 2) == lp_norm(uw, 2)


def test_compose_sqrt_radial_bump():
    g = build_grid(2, 2.0, 65)  # spacing 1/16
    m = make_sqrt_radial(g)
    u = gen_bumps(g, 1, (0.5, 0.5), centers=[(0.0, 0.0)])[0]
    v = compose(m, u)
    at = g.index(g.nearest((1 / 16, 0.0)))
    assert v.values[at] == pytest.approx(u.evaluator(np.array([[0.25, 0.0]]))[0], abs=1e-12)


def test_compose_needs_evaluator():
    g = build_grid(2, 2.0, 11)
    with pytest.raises(EvaluationError):
        compose(make_sqrt_radial(g), SampledFunction(g, np.zeros(g.n)))


def test_lp_embedding_identity():
    c = build_cantor(1 / 3, 6)
    fam = random_functions(snowflake(c, 0.5), 3)
    rep = lp_embedding_check(make_identity(c, snowflake(c, 0.5)), fam, 2)
    assert rep.ratios == [1.0, 1.0, 1.0]
    with pytest.raises(EmptyFamilyError):
        lp_embedding_check(make_identity(c), [], 2)


def test_lp_embedding_sqrt_radial_stable():
    ratios = []
    for res in (41, 81, 161):
        g = build_grid(2, 4.0, res)
        ratios.append(lp_embedding_check(make_sqrt_radial(g), gen_bumps(g, 20, (0.5, 2.0)), 2).max_ratio)
    centre = 0.5 * (max(ratios) + min(ratios))
    assert all(abs(r - centre) <= 0.3 * centre for r in ratios)


def test_admissible_examples():
    a = admissible_smoothness(2, 2, 1, 1, 0.7, 2)
    assert a.feasible and a.s_prime_max == 0.7
    b = admissible_smoothness(2, 2, 1, 0.5, 3, 2)
    assert b.feasible and b.s_prime_max == pytest.approx(1.0)
    c = admissible_smoothness(2, 1, 1, 1, 1, 1)
    assert c.s_prime_max == 0 and c.vacuous


def test_embedding_identity_ratio_one():
    c = build_cantor(1 / 3, 6)
    fam = random_functions(c, 4)
    rep = embedding_ratio_study(make_identity(c), 0.5, 0.5, 2, fam, mode="explore", seminorm_budget="exact")
    assert rep.sup_ratio == pytest.approx(1.0, rel=1e-12)
    assert rep.sup_seminorm_ratio == pytest.approx(1.0, rel=1e-12)


def test_embedding_verify_refuses_large_s_prime():
    g = build_grid(2, 4.0, 21)
    fam = gen_bumps(g, 2, (1.0, 2.0))
    h = HolderParams(1, 0.5, 2, 4)
    with pytest.raises(BoundViolationError):
        embedding_ratio_study(make_sqrt_radial(g), 1.2, 0.5, 2, fam, holder=h, Q_Z=2, Q_W=2)
    rep = embedding_ratio_study(make_sqrt_radial(g), 1.2, 0.5, 2, fam, holder=h, Q_Z=2, Q_W=2,
                                mode="explore")
    assert rep.above_bound and rep.mode == "explore"


def test_gen_bumps_single_centered():
    g = build_grid(2, 4.0, 41)
    u = gen_bumps(g, 1, (g.diam_sample / 4,) * 2, centers=[(0.0, 0.0)])[0]
    assert u.values.min() >= 0 and u.values.max() == pytest.approx(1.0)
    r = np.linalg.norm(g.coords, axis=1)
    assert np.all(u.values[r >= g.diam_sample / 4] == 0)


def test_gen_bumps_width_guards():
    g = build_grid(2, 4.0, 41)
    with pytest.raises(WindowTooSmallError):
        gen_bumps(g, 3, (0.01, 0.05))
    with pytest.raises(WindowTooSmallError):
        gen_bumps(g, 3, (5.0, 6.0))


def test_bump_family_seminorms_finite():
    g = build_grid(2, 4.0, 41)
    for u in gen_bumps(g, 20, (0.25, 1.0), seed=4):
        val = besov_seminorm(u, BesovParams(0.5, 2))
        assert 0 < val < math.inf
