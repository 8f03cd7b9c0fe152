"""Lagrange node lattices, nodal bases and the interpolation operator on a triangle."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm

import numpy as np
import scipy.linalg

from .geometry import Triangle
from .polynomial import Poly2, monomial_exponents, n_monomials

MAX_ORDER = 5
REFINE_STEPS = 3


def _check_order(k: int) -> None:
    if not 1 <= k <= MAX_ORDER:
        raise ValueError(f"interpolation order must be in 1..{MAX_ORDER}, got {k}")


@lru_cache(maxsize=None)
def lattice_labels(k: int) -> np.ndarray:
    """Integer labels ``(a1, a2, a3)`` with ``a1 + a2 + a3 = k``; vertices first for k = 1."""
    labels = [(k - a2 - a3, a2, a3) for a2 in range(k + 1) for a3 in range(k + 1 - a2)]
    # order: a1 descending, then a2 descending -> (k,0,0), (k-1,1,0), (k-1,0,1), ...
    labels.sort(key=lambda a: (-a[0], -a[1]))
    out = np.array(labels, dtype=int)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class NodeSet:
    k: int
    labels: np.ndarray
    points: np.ndarray

    @property
    def barycentric(self) -> np.ndarray:
        return self.labels / self.k

    def __len__(self) -> int:
        return len(self.points)


def nodes(k: int, T: Triangle) -> NodeSet:
    if k < 1:
        raise ValueError(f"order must be >= 1, got {k}")
    labels = lattice_labels(k)
    return NodeSet(k, labels, T.from_barycentric(labels / k))


@lru_cache(maxsize=None)
def _reference_basis(k: int) -> np.ndarray:
    """Coefficients (columns) of the nodal basis on the reference triangle in (l2, l3)."""
    lam = lattice_labels(k) / k
    xi, eta = lam[:, 1], lam[:, 2]
    V = np.column_stack([xi ** i * eta ** j for i, j in monomial_exponents(k)])
    lu = scipy.linalg.lu_factor(V)
    C = scipy.linalg.lu_solve(lu, np.eye(len(V)))
    C.setflags(write=False)
    return C


class LagrangeBasis:
    """Nodal basis of ``P_k`` on ``T``; immutable once built.

    The Vandermonde system is solved on the reference triangle and the result
    pulled back through the inverse affine map, which keeps the solve
    well conditioned however flat ``T`` is.
    """

    def __init__(self, k: int, T: Triangle):
        _check_order(k)
        self.k = k
        self.triangle = T
        self.nodes = nodes(k, T)
        J = T.jacobian
        self._inv = np.linalg.inv(J)
        # expand about the centroid, where the reference offset is (1/3, 1/3); composing with the
        # raw offset -B v1 instead loses digits to cancellation when T sits far from the origin
        self._centre = T.vertices.mean(axis=0)
        self._local_offset = self._inv @ (self._centre - T.vertices[0])
        self._ref = _reference_basis(k)

    def __len__(self) -> int:
        return len(self.nodes)

    def _pull_back(self, ref) -> Poly2:
        ref = ref if isinstance(ref, Poly2) else Poly2(ref, self.k)
        local = ref.compose_affine(self._inv, self._local_offset)
        return local.compose_affine(np.eye(2), -self._centre)

    @property
    def basis(self) -> list[Poly2]:
        return [self.interpolate(e) for e in np.eye(len(self))]

    def interpolate(self, values) -> Poly2:
        values = np.asarray(values, dtype=float).ravel()
        if values.size != len(self):
            raise ValueError(f"expected {len(self)} nodal values, got {values.size}")
        q = self._pull_back(self._ref @ values)
        # iterative refinement: expanding into global monomials on needle-shaped T at high k cancels
        # badly, and re-interpolating the nodal residual recovers the lost digits
        pts = self.nodes.points
        res = values - q(pts[:, 0], pts[:, 1])
        for _ in range(REFINE_STEPS):
            if not np.any(res):
                break
            q2 = q + self._pull_back(self._ref @ res)
            res2 = values - q2(pts[:, 0], pts[:, 1])
            if np.abs(res2).max() >= np.abs(res).max():
                break
            q, res = q2, res2
        return q

    def interpolate_function(self, f) -> Poly2:
        """Interpolate a callable ``f(x, y)`` from its nodal samples only."""
        pts = self.nodes.points
        return self.interpolate(f(pts[:, 0], pts[:, 1]))

    def delta_matrix(self) -> np.ndarray:
        pts = self.nodes.points
        return np.array([[b(*pts[j]) for j in range(len(self))] for b in self.basis])


@lru_cache(maxsize=64)
def _cached_basis(k: int, coords: tuple) -> LagrangeBasis:
    return LagrangeBasis(k, Triangle.from_coords(coords))


def basis(k: int, T: Triangle) -> LagrangeBasis:
    return _cached_basis(k, tuple(T.vertices.ravel()))


def interpolate(values, k: int, T: Triangle) -> Poly2:
    return basis(k, T).interpolate(values)


@lru_cache(maxsize=None)
def _exact_inverse(k: int) -> tuple[np.ndarray, int]:
    """``(C, D)`` with ``C / D`` the exact inverse of the reference Vandermonde matrix scaled by ``k**k``.

    Row ``r`` of ``C`` belongs to monomial ``r`` in graded order, column ``n`` to node ``n``.
    """
    labels = lattice_labels(k)
    exps = monomial_exponents(k)
    n = len(exps)
    # integer Vandermonde: (a2/k)^i (a3/k)^j times k^k
    A = [[Fraction(int(a2) ** i * int(a3) ** j * k ** (k - i - j)) for i, j in exps] + [Fraction(int(r == c))
                                                                                     for c in range(n)]
         for r, (_, a2, a3) in enumerate(labels)]
    for col in range(n):
        piv = next(r for r in range(col, n) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [x * inv for x in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    Vinv = [row[n:] for row in A]
    D = lcm(*(x.denominator for row in Vinv for x in row))
    C = np.array([[int(x * D) for x in row] for row in Vinv], dtype=object)
    return C, D


@lru_cache(maxsize=None)
def _node_powers(k: int, degree: int) -> np.ndarray:
    """``W[n, r] = a2^i a3^j k^(degree-i-j)`` so that ``W @ c = k**degree * p(nodes)``."""
    return np.array([[int(a2) ** i * int(a3) ** j * k ** (degree - i - j) for i, j in monomial_exponents(degree)]
                     for _, a2, a3 in lattice_labels(k)], dtype=object)


def _reference_residual(p: Poly2, k: int, T: Triangle) -> Poly2:
    """``p - I p`` on the reference triangle, in reference coordinates.

    The pulled-back coefficients are taken as exact binary fractions and the
    nodal values and the Vandermonde solve are done in integer arithmetic, so
    the result is correctly rounded.  A residual computed in floating point
    carries nodal rounding noise that the pull-back multiplies by
    ``rho**-m`` in the m-th derivatives, which swamps it on flat triangles.
    """
    d = max(p.degree, k)
    ref = p.compose_affine(T.jacobian, T.vertices[0])
    ratios = [float(c).as_integer_ratio() for c in ref.coeffs]
    scale = max(den for _, den in ratios)
    M = np.zeros(n_monomials(d), dtype=object)
    M[:len(ratios)] = [num * (scale // den) for num, den in ratios]
    C, D = _exact_inverse(k)
    interp = C @ (_node_powers(k, d) @ M)  # k^(d-k) * scale * D * (I p) coefficients
    num = k ** (d - k) * D
    resid = [(int(m) * num - int(c)) / (num * scale) for m, c in zip(M, interp)]
    resid += [int(m) / scale for m in M[len(interp):]]
    return Poly2(resid, d)


def _residual(p: Poly2, k: int, T: Triangle) -> Poly2:
    B = basis(k, T)
    e = B._pull_back(_reference_residual(p, k, T))
    # the pull-back leaves nodal values of order eps * cond(J)^(k+1); take them out as for interpolate
    pts = B.nodes.points
    r = e(pts[:, 0], pts[:, 1])
    for _ in range(REFINE_STEPS):
        if not np.any(r):
            break
        e2 = e - B.interpolate(r)
        r2 = e2(pts[:, 0], pts[:, 1])
        if np.abs(r2).max() >= np.abs(r).max():
            break
        e, r = e2, r2
    return e


def interpolate_poly(p: Poly2, k: int, T: Triangle) -> Poly2:
    """``I_T^k p`` for a polynomial of any degree; returns ``p`` itself when ``p`` is in ``P_k``."""
    _check_order(k)
    # the terms above degree k cancel in exact arithmetic; drop the rounding left in them
    return Poly2((p - _residual(p, k, T)).coeffs[:n_monomials(k)], k)


def error_poly(p: Poly2, k: int, T: Triangle) -> Poly2:
    """``p - I_T^k p`` for a polynomial of degree at most ``k + 1``; exactly zero on ``P_k``."""
    _check_order(k)
    if p.degree > k + 1:
        raise ValueError(f"degree {p.degree} exceeds k + 1 = {k + 1}")
    return _residual(p, k, T)


class ErrorField:
    """Residual ``v - I_T^k v`` of a field that can be sampled and differentiated."""

    def __init__(self, field, k: int, T: Triangle):
        self.field = field
        self.interpolant = basis(k, T).interpolate_function(field.value)
        self.k = k
        self.triangle = T
        self.name = f"({field.name}) - I^{k}({field.name})"
        self.max_order = field.max_order
        self.poly_degree = None

    def value(self, x, y):
        return self.field.value(x, y) - self.interpolant(x, y)

    def deriv(self, dx: int, dy: int):
        f = self.field.deriv(dx, dy)
        q = self.interpolant.diff(dx, dy)
        return lambda x, y: f(x, y) - q(x, y)


__all__ = [
    "MAX_ORDER", "NodeSet", "LagrangeBasis", "ErrorField", "nodes", "basis", "interpolate",
    "interpolate_poly", "error_poly", "lattice_labels", "n_monomials",
]
