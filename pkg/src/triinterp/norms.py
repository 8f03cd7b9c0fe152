"""Quadrature on triangles, Sobolev seminorms, and related norm inequalities."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .geometry import Triangle
from .polynomial import Poly2, integrate_monomial, multi_indices

MAX_RULE_DEGREE = 20
SUP_LATTICE_DIVISIONS = 32
QUAD_BUMP_ENV = "TRIINTERP_QUAD_BUMP"


def quad_bump() -> int:
    """Extra exactness degree applied to every automatically chosen rule."""
    return int(os.environ.get(QUAD_BUMP_ENV, "2"))


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points with weights normalized to sum to one (multiply by the area)."""

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def __len__(self) -> int:
        return len(self.weights)

    def on(self, T: Triangle) -> tuple[np.ndarray, np.ndarray]:
        """Cartesian points and absolute weights on ``T``."""
        return T.from_barycentric(self.points), self.weights * T.area

    def integrate(self, f: Callable, T: Triangle) -> float:
        pts, w = self.on(T)
        return float(w @ f(pts[:, 0], pts[:, 1]))


def _collapsed_gauss(degree: int) -> tuple[np.ndarray, np.ndarray]:
    # Duffy collapse of the square: Gauss-Jacobi(1, 0) across, Gauss-Legendre along
    n = degree // 2 + 1
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    xl, wl = roots_legendre(n)
    u = 0.5 * (xj + 1.0)
    v = 0.5 * (xl + 1.0)
    U, V = np.meshgrid(u, v, indexing="ij")
    l2 = U.ravel()
    l3 = ((1.0 - U) * V).ravel()
    w = np.outer(wj, wl).ravel() / 8.0
    pts = np.column_stack([1.0 - l2 - l3, l2, l3])
    return pts, 2.0 * w


def _build_rule(degree: int) -> QuadratureRule:
    if degree == 1:
        pts, w = np.full((1, 3), 1.0 / 3.0), np.ones(1)
    elif degree == 2:
        pts = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        w = np.full(3, 1.0 / 3.0)
    else:
        pts, w = _collapsed_gauss(degree)
    return QuadratureRule(pts, w, degree)


def _validate(rule: QuadratureRule) -> None:
    ref = Triangle.from_coords([0, 0, 1, 0, 0, 1])
    d = rule.exactness_degree
    for a in range(d + 1):
        for b in range(d + 1 - a):
            for c in range(d + 1 - a - b):
                exact = integrate_monomial(ref, a, b, c)
                lam = rule.points
                approx = 0.5 * rule.weights @ (lam[:, 0] ** a * lam[:, 1] ** b * lam[:, 2] ** c)
                if abs(approx - exact) > 1e-13 * exact:
                    raise QuadratureError(
                        f"degree-{d} rule fails on l^({a},{b},{c}): {approx!r} vs {exact!r}")


@lru_cache(maxsize=None)
def quad_rule(degree: int) -> QuadratureRule:
    """Rule exact for polynomials of total degree ``degree``; checked on construction."""
    if not 1 <= degree <= MAX_RULE_DEGREE:
        raise QuadratureError(f"quadrature degree must be in 1..{MAX_RULE_DEGREE}, got {degree}")
    rule = _build_rule(degree)
    _validate(rule)
    return rule


@lru_cache(maxsize=None)
def sup_lattice(n: int = SUP_LATTICE_DIVISIONS) -> np.ndarray:
    """Barycentric lattice with ``(n+1)(n+2)/2`` points (561 for n = 32)."""
    return np.array([(n - i - j, i, j) for i in range(n + 1) for j in range(n + 1 - i)],
                    dtype=float) / n


def rule_for(poly_degree: int | None, p: float) -> QuadratureRule:
    """Pick a rule for ``|g|**p`` with ``g`` of the given degree (None: smooth, non-polynomial)."""
    bump = quad_bump()
    if poly_degree is None:
        deg = 12 + bump
    elif p == 2:
        deg = 2 * poly_degree + bump
    elif p == 1:
        deg = poly_degree + 4 + bump
    else:
        deg = math.ceil(p * poly_degree) + bump
    return quad_rule(int(min(max(deg, 1), MAX_RULE_DEGREE)))


class FieldWithDerivatives:
    """Scalar field with partial derivatives ``d^(dx+dy) / dx^dx dy^dy`` up to ``max_order``.

    ``derivs(dx, dy)`` must return a vectorized callable ``(x, y) -> array``.
    """

    def __init__(self, name: str, derivs: Callable[[int, int], Callable], max_order: int,
                 poly_degree: int | None = None):
        self.name = name
        self._derivs = derivs
        self.max_order = max_order
        self.poly_degree = poly_degree

    def deriv(self, dx: int, dy: int) -> Callable:
        if dx < 0 or dy < 0:
            raise ValueError("negative derivative order")
        if dx + dy > self.max_order:
            raise ValueError(f"{self.name}: derivative of order {dx + dy} not available "
                             f"(max {self.max_order})")
        return self._derivs(dx, dy)

    def value(self, x, y):
        return self.deriv(0, 0)(x, y)

    def __repr__(self):
        return f"FieldWithDerivatives({self.name!r}, max_order={self.max_order})"

    @classmethod
    def from_poly(cls, p: Poly2, name: str | None = None) -> "PolyField":
        return PolyField(p, name)

    def scaled(self, Y: float) -> "FieldWithDerivatives":
        """The field ``x -> f(x / Y)`` living on the ``Y``-scaled domain."""
        base = self

        def derivs(dx, dy):
            g = base.deriv(dx, dy)
            fac = Y ** -(dx + dy)
            return lambda x, y: fac * g(np.asarray(x) / Y, np.asarray(y) / Y)

        return FieldWithDerivatives(f"{self.name}(x/{Y:g})", derivs, self.max_order, self.poly_degree)


class PolyField(FieldWithDerivatives):
    """Polynomial field; derivatives are exact polynomials."""

    def __init__(self, poly: Poly2, name: str | None = None):
        cache: dict = {}

        def derivs(dx, dy):
            if (dx, dy) not in cache:
                cache[dx, dy] = poly.diff(dx, dy)
            return cache[dx, dy]

        super().__init__(name or str(poly), derivs, max_order=64, poly_degree=poly.degree)
        self.poly = poly

    def scaled(self, Y: float) -> "PolyField":
        return PolyField(self.poly.compose_affine(np.eye(2) / Y, (0.0, 0.0)), f"{self.name}(x/{Y:g})")


def _sin_shift(z, order):
    # d^order/dz^order sin(z) = sin(z + order*pi/2), written exactly for the four phases
    r = order % 4
    return (np.sin(z), np.cos(z), -np.sin(z), -np.cos(z))[r]


def sinsin_field(freq: float = math.pi) -> FieldWithDerivatives:
    """``sin(w x) sin(w y)``; vanishes on the boundary of the unit square for w = pi."""
    def derivs(dx, dy):
        fac = freq ** (dx + dy)
        return lambda x, y: fac * _sin_shift(freq * np.asarray(x, float), dx) * \
            _sin_shift(freq * np.asarray(y, float), dy)

    return FieldWithDerivatives(f"sin({freq:g}x)sin({freq:g}y)", derivs, max_order=64)


def sinsin_laplacian_source(freq: float = math.pi) -> Callable:
    """``f = -Laplace u`` for ``u = sin(w x) sin(w y)``."""
    return lambda x, y: 2.0 * freq ** 2 * np.sin(freq * x) * np.sin(freq * y)


def exp_field() -> FieldWithDerivatives:
    """``exp(x) cos(y)``, harmonic and non-polynomial."""
    def derivs(dx, dy):
        return lambda x, y: np.exp(np.asarray(x, float)) * _sin_shift(np.asarray(y, float) + math.pi / 2, dy)

    return FieldWithDerivatives("exp(x)cos(y)", derivs, max_order=64)


def as_field(f) -> FieldWithDerivatives:
    return FieldWithDerivatives.from_poly(f) if isinstance(f, Poly2) else f


def _sample(f: FieldWithDerivatives, m: int, pts: np.ndarray) -> np.ndarray:
    """Rows: derivatives of order ``m`` (dx descending); columns: points."""
    return np.array([np.broadcast_to(f.deriv(dx, dy)(pts[:, 0], pts[:, 1]), (len(pts),))
                     for dx, dy in multi_indices(m)], dtype=float)


def _real_roots_in(coeffs, lo: float, hi: float) -> list[float]:
    """Real roots in the open interval (lo, hi) of ``sum coeffs[j] * z**j``."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size <= 1:
        return []
    scale = np.abs(c).max()
    if scale == 0:
        return []
    r = np.polynomial.polynomial.polyroots(c / scale)
    r = r[np.abs(r.imag) <= 1e-7 * (1.0 + np.abs(r.real))].real
    return sorted(float(z) for z in r if lo < z < hi)


def _piecewise_gauss(breaks, n: int):
    x, w = roots_legendre(n)
    pts, wts = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            pts.append(0.5 * (b - a) * x + 0.5 * (a + b))
            wts.append(0.5 * (b - a) * w)
    return np.concatenate(pts), np.concatenate(wts)


def _jacobi_pieces(a, p: float, n: int) -> float:
    """``int_0^1 |a(v)|**p dv``; the ``|v - r|**p`` factor at each root endpoint goes into a Jacobi weight."""
    P = np.polynomial.polynomial
    roots = _real_roots_in(a, 0.0, 1.0)
    breaks = [0.0, *roots, 1.0]
    total = 0.0
    for i, (lo, hi) in enumerate(zip(breaks[:-1], breaks[1:])):
        if hi <= lo:
            continue
        # weight (1 - t)^ah (1 + t)^al on [-1, 1]; ah, al = p at interior roots, 0 at 0 and 1
        ah = p if i + 1 < len(breaks) - 1 else 0.0
        al = p if i > 0 else 0.0
        t, w = roots_jacobi(n, ah, al)
        half = 0.5 * (hi - lo)
        v = lo + half * (t + 1.0)
        vals = np.abs(P.polyval(v, a)) ** p / ((1.0 - t) ** ah * (1.0 + t) ** al)
        total += half * float(w @ vals)
    return total


def integrate_abs_power(g: Poly2, p: float, T: Triangle, n_outer: int = 24) -> float:
    """``int_T |g|**p`` for a polynomial ``g``, resolving the kinks along ``g = 0``.

    In collapsed coordinates ``(u, v)`` of the reference triangle the inner
    integrand is a univariate polynomial in ``v``; it is split at its real roots
    and each sign-definite piece is integrated by Gauss-Jacobi with the
    ``|v - root|**p`` behaviour absorbed in the weight (plain Gauss for p = 1).  The outer
    integral is split where the zero curve meets the triangle edges.
    """
    ref = g.compose_affine(T.jacobian, T.vertices[0])
    d = ref.degree
    G = ref.to_grid()
    if not G.any():
        return 0.0
    P = np.polynomial.polynomial

    if p == 1:
        # |a| is a polynomial on each sign-definite piece, so plain Gauss is exact
        def inner(u: float) -> float:
            a = np.array([P.polyval(u, G[:, j]) * (1.0 - u) ** j for j in range(d + 1)])
            v, w = _piecewise_gauss([0.0, *_real_roots_in(a, 0.0, 1.0), 1.0], d // 2 + 1)
            return float(w @ np.abs(P.polyval(v, a)))
    else:
        def inner(u: float) -> float:
            a = np.array([P.polyval(u, G[:, j]) * (1.0 - u) ** j for j in range(d + 1)])
            return _jacobi_pieces(a, p, max(d + 2, 20))

    # where the zero set crosses the edges eta = 0 and xi + eta = 1
    edge0 = G[:, 0]
    hyp = np.zeros(d + 1)
    for j in range(d + 1):
        term = P.polymul(G[:, j], P.polypow([1.0, -1.0], j))
        hyp[: term.size] += term
    breaks = sorted(set(_real_roots_in(edge0, 0.0, 1.0) + _real_roots_in(hyp, 0.0, 1.0)))
    u, wu = _piecewise_gauss([0.0, *breaks, 1.0], n_outer)
    total = sum(wi * (1.0 - ui) * inner(ui) for ui, wi in zip(u, wu))
    return 2.0 * T.area * total


def _is_even_integer(p: float) -> bool:
    return float(p).is_integer() and int(p) % 2 == 0


def sobolev_seminorm(f, m: int, p: float, T: Triangle, rule: QuadratureRule | None = None) -> float:
    """``|f|_{m,p,T}``; sums over multi-indices ``(dx, dy)`` with ``dx + dy = m``.

    For ``p = inf`` the maximum over the quadrature points and a fixed 561-point
    lattice is returned, a lower estimate of the essential supremum.  A
    polynomial field with ``p`` not an even integer and no explicit ``rule`` is
    integrated by :func:`integrate_abs_power`.
    """
    f = as_field(f)
    if m < 0:
        raise ValueError("order must be nonnegative")
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if m > f.max_order:
        raise ValueError(f"{f.name}: derivatives of order {m} not available")
    if rule is None and isinstance(f, PolyField) and not math.isinf(p) and not _is_even_integer(p):
        total = sum(integrate_abs_power(f.poly.diff(dx, dy), p, T) for dx, dy in multi_indices(m))
        return float(total ** (1.0 / p))
    if rule is None:
        deg = None if f.poly_degree is None else max(f.poly_degree - m, 0)
        rule = rule_for(deg, 2 if math.isinf(p) else p)
    if math.isinf(p):
        lam = np.vstack([rule.points, sup_lattice()])
        vals = _sample(f, m, T.from_barycentric(lam))
        return float(np.abs(vals).max())
    pts, w = rule.on(T)
    vals = _sample(f, m, pts)
    return float((w @ (np.abs(vals) ** p).sum(axis=0)) ** (1.0 / p))


def derivative_tensor_sq(f, m: int, pts) -> np.ndarray:
    """Pointwise ``sum over ordered m-tuples (i1..im) of (d_i1 ... d_im f)**2``.

    Mixed partials are counted with their multiplicity ``binom(m, dy)``; this is
    the squared length of the order-m derivative tensor, the quantity that
    transforms through Kronecker powers under a linear change of variables.
    """
    f = as_field(f)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    vals = _sample(f, m, pts)
    mult = np.array([comb(m, dy) for _, dy in multi_indices(m)], dtype=float)
    return mult @ vals ** 2


def tau_gamma(p: float) -> tuple[float, float]:
    """Exponents with ``sum U^p <= N^tau (sum U^2)^(p/2)`` and ``(sum U^2)^(p/2) <= N^gamma sum U^p``."""
    if not 1 <= p < math.inf:
        raise ValueError(f"p must be in [1, inf), got {p}")
    return (1.0 - p / 2.0, 0.0) if p <= 2 else (0.0, p / 2.0 - 1.0)


def scale_seminorm(f, T: Triangle, Y: float, k: int, p: float,
                   rule: QuadratureRule | None = None) -> tuple[float, float]:
    """Both sides of ``|f(./Y)|_{k,p,Y T} = Y^(2/p - k) |f|_{k,p,T}``."""
    if not Y > 0:
        raise ValueError("scale factor must be positive")
    f = as_field(f)
    lhs = sobolev_seminorm(f.scaled(Y), k, p, T.scaled(Y), rule)
    expo = (0.0 if math.isinf(p) else 2.0 / p) - k
    rhs = Y ** expo * sobolev_seminorm(f, k, p, T, rule)
    return lhs, rhs
