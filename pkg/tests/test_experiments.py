import math

import numpy as np
import pytest

from triinterp.experiments import (SWEEP_FIELDS, FamilyError, FamilySpec, dyadic_hs, family_triangle, fit_rate,
                                   jamet_compare, jamet_factors, named_field, predicted_bounds, squeeze_sweep,
                                   sweep_rate, theta_sweep)
from triinterp.geometry import equilateral_triangle, metrics, unit_right_triangle

AB = FamilySpec("alpha-beta", 1.5, 2.2, hs=dyadic_hs(3, 10))

# |x^2 - I x^2|_{1,2,K} / |x^2|_{2,2,K} computed symbolically (sympy, exact rationals)
RATIO_H8 = 0.17523975155614946
RATIO_H32 = 0.14572478604112248


def test_alpha_beta_vertices():
    v = family_triangle(AB, 0.1).vertices
    np.testing.assert_allclose(v, [[0, 0], [0.1, 0], [0.0316228, 0.00630957]], rtol=2e-6, atol=1e-12)


def test_squeeze_vertices():
    spec = FamilySpec("squeeze", alpha=0.5)
    np.testing.assert_array_equal(family_triangle(spec, 1.0).vertices, [[0, 0], [1, 0], [0, 0.5]])


def test_alpha_beta_asymptotics():
    h = 2.0 ** -10
    m = metrics(family_triangle(AB, h))
    assert m.rho / h ** 2.2 == pytest.approx(1.0, rel=0.05)
    assert 2 * m.R / h ** 0.3 == pytest.approx(1.0, rel=0.05)


@pytest.mark.parametrize("kw", [dict(alpha=1.5, beta=2.8), dict(alpha=0.9, beta=1.2), dict(alpha=1.5, beta=1.4),
                                dict(alpha=1.5)])
def test_alpha_beta_validation(kw):
    with pytest.raises(FamilyError):
        FamilySpec("alpha-beta", **kw)


def test_other_validation():
    with pytest.raises(FamilyError):
        FamilySpec("squeeze", alphas=(0.5, 1.5))
    with pytest.raises(FamilyError):
        FamilySpec("theta-sweep", thetas=(math.pi,))
    with pytest.raises(FamilyError):
        FamilySpec("bogus")
    with pytest.raises(FamilyError):
        FamilySpec("alpha-beta", 1.5, 2.2, hs=(0.1, 0.2))
    with pytest.raises(FamilyError):
        family_triangle(AB, 1.5)


def test_sweep_values_and_rate():
    res = sweep_rate(AB, named_field("x2"), 1, 1, 2.0)
    by_h = {r["h"]: r for r in res.rows}
    assert by_h[2.0 ** -3]["ratio_measured"] == pytest.approx(RATIO_H8, rel=1e-12)
    assert by_h[2.0 ** -5]["ratio_measured"] == pytest.approx(RATIO_H32, rel=1e-12)
    assert res.fitted_rate == pytest.approx(0.3, abs=0.05)
    assert res.bound_rates["bound_standard"] == pytest.approx(-0.2, abs=1e-3)
    assert res.summary["standard_convergent"] is False
    assert res.summary["predicted_rate_circum"] == pytest.approx(0.3)
    assert tuple(res.rows[0]) == SWEEP_FIELDS
    assert math.isnan(res.rows[0]["rate_local"])
    for row in res.rows:
        assert min(row["bound_standard"], row["bound_circum"], row["bound_jamet"]) > 0


def test_sweep_reproduces_linear():
    res = sweep_rate(AB, named_field("linear"), 1, 1, 2.0)
    assert max(r["ratio_measured"] for r in res.rows) <= 1e-10


def test_sweep_needs_three_points():
    with pytest.raises(FamilyError):
        sweep_rate(FamilySpec("alpha-beta", 1.5, 2.2, hs=(0.5, 0.25)), named_field("x2"))


def test_scale_invariance_of_rates():
    base = sweep_rate(AB, named_field("x2"), 1, 1, 2.0)
    scaled = sweep_rate(AB, named_field("x2"), 1, 1, 2.0, scale=3.0)
    assert scaled.fitted_rate == pytest.approx(base.fitted_rate, abs=1e-6)
    # |v - I v|_{1,2} / |v|_{2,2} picks up Y^(k+1-m) = Y under x -> Y x
    for a, b in zip(base.rows, scaled.rows):
        assert b["ratio_measured"] == pytest.approx(3.0 * a["ratio_measured"], rel=1e-9)


def test_smooth_field_sweep_runs():
    res = sweep_rate(AB, named_field("sinsin"), 1, 1, 2.0)
    assert all(r["ratio_measured"] > 0 for r in res.rows)
    assert math.isfinite(res.fitted_rate)


def test_fit_rate_exact_power():
    h = np.array(dyadic_hs())
    assert fit_rate(h, 3 * h ** 1.7, drop=2) == pytest.approx(1.7, abs=1e-12)
    with pytest.raises(ValueError):
        fit_rate([1.0, 0.5], [1.0, 0.5], drop=1)


def test_predicted_bounds_right_triangle():
    b = predicted_bounds(unit_right_triangle(), 1, 1)
    assert b["bound_standard"] == pytest.approx(2 / (2 - math.sqrt(2)), rel=1e-14)
    assert b["bound_circum"] == pytest.approx(math.sqrt(2) / 2, rel=1e-14)
    assert b["bound_jamet"] == pytest.approx(math.sqrt(2) * math.sqrt(2), rel=1e-14)


def test_squeeze_examples():
    rows = squeeze_sweep([1.0, 0.1, 0.01], 1, 1, 2.0)
    vals = [r["B_lower"] for r in rows]
    assert vals[0] >= 1 / math.sqrt(12)
    assert max(vals) / min(vals) <= 2
    rows = squeeze_sweep([1.0, 0.1, 0.01], 2, 2, 1.0, samples=500)
    vals = [r["B_lower"] for r in rows]
    assert all(math.isfinite(v) and v > 0 for v in vals)
    assert vals[-1] <= vals[0]
    with pytest.raises(FamilyError):
        squeeze_sweep([0.0], 1, 1)


def test_theta_sweep_structure():
    out = theta_sweep(np.radians([100, 140, 170]), pairs=[(1, 1)])
    assert set(out) == {(1, 1)}
    assert out[1, 1]["ratios"].shape == (3,)
    assert out[1, 1]["spread"] >= 1
    assert out[1, 1]["c_emp"] == out[1, 1]["ratios"].max()


def test_jamet_examples():
    assert jamet_compare(unit_right_triangle(), 1) == pytest.approx((math.sqrt(2), 1.0), rel=1e-14)
    assert jamet_compare(equilateral_triangle(), 1) == pytest.approx((2 / math.sqrt(3),) * 2, rel=1e-14)
    assert jamet_compare(unit_right_triangle(), 0) == (1.0, 1.0)


def test_jamet_window():
    theta = np.linspace(math.pi / 3, math.pi, 10_000, endpoint=False)
    for m in range(6):
        jf, sf = jamet_factors(theta, m)
        r = jf / sf
        assert r.min() >= 1 - 1e-12
        assert r.max() <= 2 ** m * (1 + 1e-12)
