"""Dense bivariate polynomials with exact differentiation and integration on triangles."""
from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.signal import convolve2d

from .geometry import Triangle

MAX_DEGREE = 12
# products of two degree-12 polynomials still need exact integration
MAX_PRODUCT_DEGREE = 2 * MAX_DEGREE
MAX_BARY_EXPONENT = 60

_FACTORIALS = tuple(math.factorial(n) for n in range(MAX_BARY_EXPONENT + 3))


class MultiIndex(NamedTuple):
    dx: int
    dy: int

    @property
    def order(self) -> int:
        return self.dx + self.dy


def multi_indices(order: int) -> list[MultiIndex]:
    """All ``(dx, dy)`` with ``dx + dy == order``, ``dx`` descending."""
    return [MultiIndex(order - j, j) for j in range(order + 1)]


def n_monomials(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


@lru_cache(maxsize=None)
def monomial_exponents(degree: int) -> tuple[tuple[int, int], ...]:
    """Graded-lexicographic exponents: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ..."""
    return tuple((n - j, j) for n in range(degree + 1) for j in range(n + 1))


def monomial_index(i: int, j: int) -> int:
    n = i + j
    return n * (n + 1) // 2 + j


def _bary_integral(a: int, b: int, c: int) -> float:
    # a! b! c! / (a+b+c+2)! as a correctly rounded float
    return _FACTORIALS[a] * _FACTORIALS[b] * _FACTORIALS[c] / _FACTORIALS[a + b + c + 2]


def integrate_monomial(T: Triangle, a: int, b: int, c: int) -> float:
    """Exact integral of ``l1**a * l2**b * l3**c`` over ``T``."""
    if min(a, b, c) < 0:
        raise ValueError("barycentric exponents must be nonnegative")
    if a + b + c > MAX_BARY_EXPONENT:
        raise ValueError(f"exponent sum {a + b + c} exceeds {MAX_BARY_EXPONENT}")
    return 2.0 * T.area * _bary_integral(a, b, c)


class Poly2:
    """Polynomial ``sum c_ij x**i y**j`` stored in graded-lexicographic order."""

    __slots__ = ("degree", "coeffs")

    def __init__(self, coeffs, degree: int | None = None, *, cap: int = MAX_PRODUCT_DEGREE):
        c = np.array(coeffs, dtype=float).ravel()
        if degree is None:
            degree = 0
            while n_monomials(degree) < c.size:
                degree += 1
        if degree > cap:
            raise ValueError(f"degree {degree} exceeds cap {cap}")
        n = n_monomials(degree)
        if c.size > n:
            raise ValueError(f"{c.size} coefficients do not fit degree {degree}")
        if c.size < n:
            c = np.concatenate([c, np.zeros(n - c.size)])
        self.degree = int(degree)
        self.coeffs = c

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, degree: int = 0) -> "Poly2":
        return cls(np.zeros(n_monomials(degree)), degree)

    @classmethod
    def constant(cls, value: float) -> "Poly2":
        return cls([value], 0)

    @classmethod
    def monomial(cls, i: int, j: int, coeff: float = 1.0) -> "Poly2":
        c = np.zeros(n_monomials(i + j))
        c[monomial_index(i, j)] = coeff
        return cls(c, i + j)

    @classmethod
    def from_dict(cls, terms: dict) -> "Poly2":
        """``{(i, j): c}`` to polynomial."""
        deg = max((i + j for i, j in terms), default=0)
        c = np.zeros(n_monomials(deg))
        for (i, j), v in terms.items():
            c[monomial_index(i, j)] += v
        return cls(c, deg)

    @classmethod
    def from_grid(cls, grid) -> "Poly2":
        grid = np.asarray(grid, dtype=float)
        nz = np.argwhere(grid != 0)
        deg = int(nz.sum(axis=1).max()) if nz.size else 0
        c = np.zeros(n_monomials(deg))
        for i, j in nz:
            c[monomial_index(i, j)] = grid[i, j]
        return cls(c, deg)

    def to_grid(self, size: int | None = None) -> np.ndarray:
        """Coefficient array ``G[i, j]`` of ``x**i y**j``."""
        size = self.degree + 1 if size is None else size
        g = np.zeros((size, size))
        for (i, j), v in zip(monomial_exponents(self.degree), self.coeffs):
            g[i, j] = v
        return g

    def as_dict(self) -> dict:
        return {e: float(v) for e, v in zip(monomial_exponents(self.degree), self.coeffs) if v != 0}

    # arithmetic ---------------------------------------------------------
    def _promote(self, other) -> "Poly2":
        return other if isinstance(other, Poly2) else Poly2.constant(float(other))

    def __add__(self, other):
        other = self._promote(other)
        deg = max(self.degree, other.degree)
        c = np.zeros(n_monomials(deg))
        c[: self.coeffs.size] += self.coeffs
        c[: other.coeffs.size] += other.coeffs
        return Poly2(c, deg)

    __radd__ = __add__

    def __neg__(self):
        return Poly2(-self.coeffs, self.degree)

    def __sub__(self, other):
        return self + (-self._promote(other))

    def __rsub__(self, other):
        return self._promote(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly2):
            return Poly2(self.coeffs * float(other), self.degree)
        return Poly2.from_grid(convolve2d(self.to_grid(), other.to_grid()))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly2.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def trimmed(self, tol: float = 0.0) -> "Poly2":
        """Drop top-degree blocks whose coefficients are all within ``tol`` of zero."""
        deg = self.degree
        while deg > 0 and np.all(np.abs(self.coeffs[n_monomials(deg - 1):n_monomials(deg)]) <= tol):
            deg -= 1
        return Poly2(self.coeffs[: n_monomials(deg)], deg)

    # calculus -----------------------------------------------------------
    def diff(self, dx: int = 0, dy: int = 0) -> "Poly2":
        if dx + dy > self.degree:
            return Poly2.zero()
        g = self.to_grid()
        for _ in range(dx):
            g = g[1:, :] * np.arange(1, g.shape[0])[:, None]
        for _ in range(dy):
            g = g[:, 1:] * np.arange(1, g.shape[1])[None, :]
        n = max(g.shape)
        sq = np.zeros((n, n))
        sq[: g.shape[0], : g.shape[1]] = g
        return Poly2.from_grid(sq)

    def __call__(self, x, y):
        g = self.to_grid()
        return np.polynomial.polynomial.polyval2d(x, y, g)

    def eval_diff(self, delta, pt) -> float:
        dx, dy = delta
        if dx + dy > self.degree:
            return 0.0
        return float(self.diff(dx, dy)(pt[0], pt[1]))

    def compose_affine(self, matrix, offset) -> "Poly2":
        """The polynomial ``q(u) = p(matrix @ u + offset)``."""
        M = np.asarray(matrix, dtype=float)
        b = np.asarray(offset, dtype=float)
        d = self.degree
        n = d + 1
        X = np.zeros((2, 2))
        X[0, 0], X[1, 0], X[0, 1] = b[0], M[0, 0], M[0, 1]
        Y = np.zeros((2, 2))
        Y[0, 0], Y[1, 0], Y[0, 1] = b[1], M[1, 0], M[1, 1]
        xp = [np.ones((1, 1))]
        yp = [np.ones((1, 1))]
        for _ in range(d):
            xp.append(convolve2d(xp[-1], X))
            yp.append(convolve2d(yp[-1], Y))
        padded_y = np.zeros((n, n, n))
        for j in range(n):
            padded_y[j, : j + 1, : j + 1] = yp[j]
        G = self.to_grid()
        out = np.zeros((n, n))
        for i in range(n):
            row = G[i, : n - i]
            if not row.any():
                continue
            # sum_j G[i, j] * Y**j, then times X**i
            Qi = np.tensordot(row, padded_y[: n - i, : n - i, : n - i], axes=1)
            out[: n, : n] += convolve2d(xp[i], Qi)[:n, :n]
        return Poly2.from_grid(out) if out.any() else Poly2.zero(d)

    def integrate(self, T: Triangle) -> float:
        """Exact integral over ``T`` through the substitution ``x = v1 + J (l2, l3)``."""
        ref = self.compose_affine(T.jacobian, T.vertices[0])
        total = 0.0
        for (a, b), c in zip(monomial_exponents(ref.degree), ref.coeffs):
            if c != 0:
                total += c * _bary_integral(0, a, b)
        return 2.0 * T.area * total

    def __repr__(self):
        return f"Poly2({self})"

    def __str__(self):
        terms = []
        for (i, j), c in zip(monomial_exponents(self.degree), self.coeffs):
            if c == 0:
                continue
            mono = "*".join(f"{v}^{e}" if e > 1 else v for v, e in (("x", i), ("y", j)) if e)
            terms.append(f"{c:.6g}" + (f"*{mono}" if mono else ""))
        return " + ".join(terms).replace("+ -", "- ") if terms else "0"


def eval_diff(p: Poly2, delta, pt) -> float:
    return p.eval_diff(delta, pt)


def seminorm_p2_exact(p: Poly2, m: int, T: Triangle) -> float:
    """``|p|_{m,2,T}`` summing over multi-indices ``(dx, dy)`` with ``dx + dy = m``."""
    if m < 0:
        raise ValueError("order must be nonnegative")
    if m > p.degree:
        return 0.0
    total = 0.0
    for dx, dy in multi_indices(m):
        d = p.diff(dx, dy)
        total += (d * d).integrate(T)
    return math.sqrt(max(total, 0.0))


def homogeneous_basis(degree: int) -> list[Poly2]:
    """Monomials ``x**(d-j) y**j``, j = 0..d."""
    return [Poly2.monomial(degree - j, j) for j in range(degree + 1)]
