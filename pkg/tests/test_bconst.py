import math

import numpy as np
import pytest

from triinterp.bconst import (CSV_FIELDS, b_poly_lower, b_sample_lower, bound_ratio, csv_row,
                              standard_position_margin, rayleigh_problem, sample_ratio, trial_space)
from triinterp.geometry import (Triangle, equilateral_triangle, metrics, squeezed_triangle, standard_triangle,
                                unit_right_triangle)
from triinterp.interpolation import error_poly
from triinterp.norms import sobolev_seminorm
from triinterp.polynomial import Poly2

from conftest import random_standard

x = Poly2.monomial(1, 0)
y = Poly2.monomial(0, 1)
U = unit_right_triangle()

# 3x3 generalized eigenproblem solved in exact arithmetic (sympy) on the unit right triangle
B11_UNIT = 0.61654634948834343326
B01_UNIT = 0.15862623771431594670

PAIRS = [(0, 1), (1, 1), (1, 2), (2, 2), (0, 3), (2, 3), (3, 3)]


def test_unit_triangle_values():
    est = b_poly_lower(1, 1, U)
    assert est.value == pytest.approx(B11_UNIT, rel=1e-13)
    assert est.value >= 1 / math.sqrt(12)
    assert est.method == "eigen-p2"
    est0 = b_poly_lower(0, 1, U)
    assert est0.value == pytest.approx(B01_UNIT, rel=1e-13)
    assert est0.value >= 1 / math.sqrt(120)


def test_candidate_ratio():
    assert sample_ratio(x * x, 1, 1, 2.0, U) == pytest.approx(1 / math.sqrt(12), rel=1e-13)
    assert sample_ratio(x * x, 0, 1, 2.0, U) == pytest.approx(1 / math.sqrt(120), rel=1e-13)


@pytest.mark.parametrize("m,k", PAIRS)
def test_maximizer_attains_value(m, k):
    T = Triangle.from_coords([0.1, 0.0, 1.2, 0.3, 0.4, 0.9])
    est = b_poly_lower(m, k, T)
    assert sample_ratio(est.maximizer, m, k, 2.0, T) == pytest.approx(est.value, rel=1e-10)


@pytest.mark.parametrize("m,k", PAIRS)
def test_rotation_invariance(m, k):
    T = equilateral_triangle(1.0)
    rot = T.transformed(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert b_poly_lower(m, k, rot).value == pytest.approx(b_poly_lower(m, k, T).value, rel=1e-10)


def test_rayleigh_forms():
    prob = rayleigh_problem(1, 2, Triangle.from_coords([0, 0, 1, 0, 0.2, 0.05]))
    assert prob.M.shape == prob.N.shape == (4, 4)
    np.testing.assert_array_equal(prob.M, prob.M.T)
    np.testing.assert_array_equal(prob.N, prob.N.T)
    assert np.linalg.eigvalsh(prob.N).min() > 0
    assert np.linalg.eigvalsh(prob.M).min() > -1e-14 * np.abs(prob.M).max()


def test_trial_space_dims():
    assert len(trial_space(2)) == 4
    assert len(trial_space(2, 1)) == 9


def test_order_validation():
    with pytest.raises(ValueError):
        b_poly_lower(2, 1, U)
    with pytest.raises(ValueError):
        b_poly_lower(0, 6, U)
    with pytest.raises(ValueError):
        b_sample_lower(1, 1, 2.0, U, samples=0)


def test_extra_degree_is_monotone():
    T = standard_triangle(1.0, math.radians(150))
    vals = [b_poly_lower(2, 2, T, e).value for e in range(3)]
    assert vals[0] <= vals[1] * (1 + 1e-12) <= vals[2] * (1 + 1e-12)


@pytest.mark.parametrize("m,k", [(0, 1), (1, 1), (1, 2), (2, 2)])
def test_sample_below_eigen(m, k):
    T = Triangle.from_coords([0, 0, 1, 0, 0.7, 0.15])
    exact = b_poly_lower(m, k, T).value
    sampled = b_sample_lower(m, k, 2.0, T, samples=2000, seed=0).value
    assert sampled <= exact + 1e-8
    assert sampled >= 0.95 * exact


def test_sup_norm_candidate():
    assert sample_ratio(x * x, 1, 1, math.inf, U) == pytest.approx(0.5, rel=1e-15)
    assert b_sample_lower(1, 1, math.inf, U, samples=200).value >= 0.5 - 1e-12


def test_sampling_deterministic():
    a = b_sample_lower(1, 2, 3.0, U, samples=1, seed=7)
    b = b_sample_lower(1, 2, 3.0, U, samples=1, seed=7)
    assert a.value == b.value
    np.testing.assert_array_equal(a.maximizer.coeffs, b.maximizer.coeffs)


def test_sampled_value_is_actual_ratio():
    est = b_sample_lower(2, 2, 1.0, U, samples=500, seed=3)
    num = sobolev_seminorm(error_poly(est.maximizer, 2, U), 2, 1.0, U)
    den = sobolev_seminorm(est.maximizer, 3, 1.0, U)
    assert est.value == pytest.approx(num / den, rel=1e-10)


def test_shift_invariance():
    est = b_poly_lower(1, 2, U)
    q = 3 * x * x - 2 * x * y + y - 5
    e1 = error_poly(est.maximizer, 2, U)
    e2 = error_poly(est.maximizer + q, 2, U)
    assert sobolev_seminorm(e2, 1, 2, U) == pytest.approx(sobolev_seminorm(e1, 1, 2, U), rel=1e-10)


def test_bound_ratio_examples():
    est = b_poly_lower(0, 2, U)
    assert bound_ratio(est, metrics(U)) == pytest.approx(est.value / math.sqrt(2) ** 3, rel=1e-15)
    est = b_poly_lower(1, 1, U)
    assert bound_ratio(est, metrics(U)) == pytest.approx(est.value / (math.sqrt(2) / 2), rel=1e-15)
    ratios = []
    for h in (1.0, 0.5, 0.25):
        T = equilateral_triangle(h)
        ratios.append(bound_ratio(b_poly_lower(1, 1, T), metrics(T)))
    assert max(ratios) == pytest.approx(min(ratios), rel=1e-8)


def test_circumradius_shape_on_flat_family():
    ratios = []
    for deg in range(100, 180, 5):
        T = standard_triangle(1.0, math.radians(deg))
        ratios.append(b_poly_lower(1, 1, T).value / metrics(T).R)
    assert max(ratios) / min(ratios) <= 10


def test_standard_position_inequality_smoke(rng):
    margins = []
    for _ in range(100):
        alpha, theta = random_standard(rng)
        lhs, rhs = standard_position_margin(standard_triangle(alpha, theta))
        margins.append(rhs / lhs)
    # both sides are lower bounds, so this is only a smoke test; it holds on every sample drawn
    assert min(margins) >= 1.0


def test_csv_row_fields():
    row = csv_row(b_poly_lower(1, 1, squeezed_triangle(0.5)), squeezed_triangle(0.5))
    assert tuple(row) == CSV_FIELDS
