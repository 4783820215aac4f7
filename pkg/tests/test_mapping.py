
import numpy as np
import pytest

from biholder.errors import (
    DimensionError,
    InsufficientPairsError,
    MismatchError,
    UnsupportedModeError,
    WindowTooSmallError,
)
from biholder.mapping import (
    HolderParams,
    QsParams,
    check_local_biholder,
    check_uniform_boundedness,
    fit_local_biholder,
    fit_power_qs,
    holder_to_ub_bounds,
    invert,
    inverse_params,
    make_identity,
    make_radial_stretch,
    make_scaling,
    make_sqrt_radial,
    materialize,
    nested_ub_verdict,
    qs_ratio_audit,
    qs_to_holder_constants,
    radial_stretch,
    sqrt_radial,
    transfer_ub,
)
from biholder.space import build_cantor, build_grid, snowflake


@pytest.fixture(scope="module")
def cantor():
    return build_cantor(1 / 3, 8)


@pytest.fixture(scope="module")
def snow_id(cantor):
    return make_identity(cantor, snowflake(cantor, 0.5))


def test_radial_stretch_values():
    assert np.allclose(radial_stretch(np.array([[1.0, 0.0], [2.0, 0.0]])), [[1, 0], [4, 0]])


def test_radial_stretch_growth_at_three():
    g = build_grid(2, 1.5, 61, offset=(3.0, 0.0))
    m = make_radial_stretch(g)
    rep = check_uniform_boundedness(m, 1.0, centers=[g.nearest((3.0, 0.0))])
    assert rep.b >= 7


def test_sqrt_radial_values():
    pts = np.array([[0.0, 0.0], [0.25, 0.0], [2.0, 0.0], [0.0, -1.5]])
    out = sqrt_radial(pts)
    assert np.all(out[0] == 0)
    assert np.linalg.norm(out[1]) == pytest.approx(0.5)
    assert np.array_equal(out[2:], pts[2:])


def test_planar_maps_need_plane():
    with pytest.raises(DimensionError):
        make_sqrt_radial(build_grid(1, 1.0, 11))


def test_identity_mismatch():
    with pytest.raises(MismatchError):
        make_identity(build_grid(1, 1.0, 11), build_grid(1, 1.0, 12))


def test_identity_preserves_distances(cantor):
    m = make_identity(cantor)
    i, j = np.arange(10), np.arange(10, 20)
    assert np.array_equal(m.image_dist_pairs(i, j), cantor.dist_pairs(i, j))


def test_snowflake_identity_exact(snow_id, cantor):
    i, j = np.arange(50), np.arange(60, 110)
    assert np.allclose(snow_id.image_dist_pairs(i, j), cantor.dist_pairs(i, j) ** 0.5, rtol=1e-14)


def test_check_snowflake_identity(snow_id):
    rep = check_local_biholder(snow_id, HolderParams(0.5, 0.5, 0.5, 1.0 + 1e-12))
    assert rep.verdict == "pass" and not rep.violations


def test_check_sqrt_radial():
    m = make_sqrt_radial(build_grid(2, 4.0, 41))
    assert check_local_biholder(m, HolderParams(1.0, 0.5, 2.0, 4.0)).verdict == "pass"


def test_radial_stretch_far_out_breaks_local_params():
    near = make_radial_stretch(build_grid(2, 10.0, 81))
    tuned = fit_local_biholder(near, 1.0).params
    far = make_radial_stretch(build_grid(2, 2.0, 41, offset=(100.0, 0.0)))
    rep = check_local_biholder(far, tuned)
    assert rep.verdict == "fail"
    worst = rep.violations[0]
    assert set(worst) == {"x", "y", "dZ", "dW", "bound"}


def test_check_needs_pairs():
    m = make_identity(build_grid(1, 1.0, 11))
    with pytest.raises(InsufficientPairsError):
        check_local_biholder(m, HolderParams(1, 1, 0.01, 1))


def test_fit_snowflake_identity(snow_id):
    p = fit_local_biholder(snow_id, 0.5).params
    assert p.theta1 == pytest.approx(0.5, abs=0.02)
    assert p.theta2 == pytest.approx(0.5, abs=0.02)
    assert p.C == pytest.approx(1.0, abs=1e-9)


def test_fit_identity():
    p = fit_local_biholder(make_identity(build_grid(2, 1.0, 21)), 0.5).params
    assert (p.theta1, p.theta2, p.C) == pytest.approx((1.0, 1.0, 1.0), abs=1e-9)


def test_fit_sqrt_radial():
    p = fit_local_biholder(make_sqrt_radial(build_grid(2, 4.0, 61)), 2.0).params
    assert p.theta1 == pytest.approx(1.0, rel=0.1)
    assert p.theta2 == pytest.approx(0.5, rel=0.1)


def test_qs_audits(snow_id):
    g = build_grid(2, 1.0, 21)
    assert qs_ratio_audit(make_scaling(g, 2.0), QsParams(1, 1)).max_excess <= 1e-12
    assert qs_ratio_audit(snow_id, QsParams(2, 1)).max_excess <= 1e-12


def test_fit_qs(snow_id):
    iso = fit_power_qs(make_identity(build_grid(2, 1.0, 21))).params
    assert (iso.theta, iso.lam) == pytest.approx((1.0, 1.0))
    sf = fit_power_qs(snow_id).params
    assert sf.theta == 2 and sf.lam == pytest.approx(1.0)


@pytest.mark.parametrize("hw", [5.0, 10.0, 20.0])
def test_radial_stretch_fitted_gauge_has_no_excess(hw):
    m = make_radial_stretch(build_grid(2, hw, 41))
    fit = fit_power_qs(m, seed=1)
    assert qs_ratio_audit(m, fit.params, seed=1).max_excess <= 1e-12


def test_sqrt_radial_qs_stable():
    lams = [fit_power_qs(make_sqrt_radial(build_grid(2, hw, 81))).params.lam for hw in (2.0, 4.0, 8.0)]
    centre = 0.5 * (max(lams) + min(lams))
    assert all(abs(lam - centre) <= 0.2 * centre for lam in lams)


def test_ub_identity():
    g = build_grid(2, 2.0, 41)
    rep = check_uniform_boundedness(make_identity(g), 0.53)  # off-lattice radius avoids rounding ties
    assert rep.a == pytest.approx(rep.b, rel=1e-12) and rep.verdict == "pass"


def test_ub_sqrt_radial_bounds():
    rep = check_uniform_boundedness(make_sqrt_radial(build_grid(2, 4.0, 41)), 2.0)
    assert rep.a >= 2 * 0.95 and rep.b <= 6 * 1.05


def test_ub_window_too_small():
    with pytest.raises(WindowTooSmallError):
        check_uniform_boundedness(make_identity(build_grid(2, 1.0, 11)), 1.5)


def test_nested_verdict():
    g = build_grid(2, 1.5, 31)
    base = check_uniform_boundedness(make_identity(g), 1.0)
    grown = [type(base)(**{**base.__dict__, "b": base.b * k}) for k in (1, 2, 4)]
    assert nested_ub_verdict(grown) == "fail"
    assert nested_ub_verdict([base, base, base]) == "pass"


def test_transfer_ub_examples():
    assert transfer_ub(2, 6, 2, QsParams(1, 1), 2, 1) == (0.5, 6)
    a, b = transfer_ub(2, 6, 1 + 1e-15, QsParams(1, 1), 2, 2)
    assert (a, b) == pytest.approx((2, 6), rel=1e-14)


def test_inverse_params_examples():
    p = inverse_params(HolderParams(2, 0.5, 1, 4))
    assert (p.theta1, p.theta2, p.r, p.C) == (2, 0.5, 0.25, 16)
    q = inverse_params(HolderParams(1, 1, 0.7, 1))
    assert (q.theta1, q.theta2, q.r, q.C) == (1, 1, 0.7, 1)


def test_inverse_needs_bijection():
    m = make_sqrt_radial(build_grid(2, 2.0, 11))
    with pytest.raises(UnsupportedModeError):
        invert(m)
    back = invert(materialize(m))
    assert back.domain.n == m.domain.n


def test_qs_to_holder_example():
    p = qs_to_holder_constants(QsParams(1, 1), 2, 1, 1, 1)
    assert (p.theta1, p.theta2, p.r, p.C) == (1, 1, 1, 24)


def test_holder_to_ub_bounds():
    a, b = holder_to_ub_bounds(HolderParams(1, 1, 1, 24), 2)
    assert a == pytest.approx(1 / (8 * 24)) and b == 48


def test_qs_to_holder_scaling_contains_linear_law():
    g = build_grid(2, 2.0, 21)
    m = make_scaling(g, 2.0)
    ub = check_uniform_boundedness(m, 1.0)
    p = qs_to_holder_constants(QsParams(1, 1), 2, 1.0, ub.a, ub.b)
    assert check_local_biholder(m, p).verdict == "pass"
    assert p.C >= 2 and 1 / p.C <= 2
