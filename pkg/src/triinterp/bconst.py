"""Computable lower bounds for the interpolation error constant on a triangle.

The best constant ``B(m, k, p; T)`` in ``|v - I v|_{m,p,T} <= B |v|_{k+1,p,T}``
is a supremum over an infinite-dimensional space.  Restricting ``v`` to
polynomials of degree ``k + 1`` gives a LOWER bound.  Since ``I`` reproduces
``P_k``, only the homogeneous top-degree part matters, a space of dimension
``k + 2``.  For ``p = 2`` the restricted supremum is the largest generalized
eigenvalue of a pair of Gram matrices; for other ``p`` it is searched for.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .geometry import Triangle, TriangleMetrics, metrics, squeezed_triangle, standard_form
from .interpolation import MAX_ORDER, interpolate_poly
from .norms import MAX_RULE_DEGREE, quad_rule, quad_bump, sobolev_seminorm, sup_lattice
from .polynomial import Poly2, homogeneous_basis, multi_indices

CSV_FIELDS = ("m", "k", "p", "hK", "R", "rho", "theta_max", "B_lower", "bound_ratio")


def _check_orders(m: int, k: int) -> None:
    if not 1 <= k <= MAX_ORDER:
        raise ValueError(f"k must be in 1..{MAX_ORDER}, got {k}")
    if not 0 <= m <= k:
        raise ValueError(f"m must be in 0..k, got m={m}, k={k}")


@dataclass(frozen=True)
class RayleighProblem:
    """``M`` (numerator, semidefinite) and ``N`` (denominator, definite) Gram matrices."""

    m: int
    k: int
    triangle: Triangle
    M: np.ndarray
    N: np.ndarray
    basis: tuple
    errors: tuple


@dataclass(frozen=True)
class BEstimate:
    value: float
    maximizer: Poly2
    method: str
    m: int
    k: int
    p: float


def _deriv_values(polys, order: int, pts: np.ndarray) -> np.ndarray:
    """Array ``[i, delta, q]`` of order-``order`` derivatives of ``polys[i]`` at ``pts``."""
    return np.array([[poly.diff(dx, dy)(pts[:, 0], pts[:, 1]) * np.ones(len(pts))
                      for dx, dy in multi_indices(order)] for poly in polys])


def trial_space(k: int, extra_degree: int = 0) -> list[Poly2]:
    """Monomials of total degree ``k+1 .. k+1+extra_degree``; they span a complement of ``P_k``."""
    return [q for d in range(k + 1, k + 2 + extra_degree) for q in homogeneous_basis(d)]


def rayleigh_problem(m: int, k: int, T: Triangle, extra_degree: int = 0) -> RayleighProblem:
    """Gram matrices over ``trial_space(k, extra_degree)``; size ``k+2`` when ``extra_degree = 0``."""
    _check_orders(m, k)
    if extra_degree < 0 or 2 * (k + 1 + extra_degree - m) > MAX_RULE_DEGREE:
        raise ValueError(f"extra_degree {extra_degree} out of range for m={m}, k={k}")
    hs = trial_space(k, extra_degree)
    es = [_error(h, k, T) for h in hs]
    # products of order-m derivatives have degree 2(k+1+extra-m); the rule is exact for them
    pts, w = quad_rule(max(2 * (k + 1 + extra_degree - m), 1)).on(T)
    De = _deriv_values(es, m, pts)
    M = np.einsum("adq,bdq,q->ab", De, De, w)
    pts, w = quad_rule(max(2 * extra_degree, 1)).on(T)
    Dh = _deriv_values(hs, k + 1, pts)
    N = np.einsum("adq,bdq,q->ab", Dh, Dh, w)
    return RayleighProblem(m, k, T, 0.5 * (M + M.T), 0.5 * (N + N.T), tuple(hs), tuple(es))


def _error(h: Poly2, k: int, T: Triangle) -> Poly2:
    return h - interpolate_poly(h, k, T)


def _combine(polys, c) -> Poly2:
    out = Poly2.zero(polys[0].degree)
    for ci, q in zip(c, polys):
        out = out + q * float(ci)
    return out


def b_poly_lower(m: int, k: int, T: Triangle, extra_degree: int = 0) -> BEstimate:
    """Exact supremum (p = 2) over polynomials of degree ``k + 1 + extra_degree``; a lower bound for B.

    With the default ``extra_degree = 0`` the test space is the ``k + 2``
    homogeneous polynomials of degree ``k + 1``.  For ``m >= 2`` that space is
    too small to show the full growth of ``B`` on flat triangles (the nodal
    second differences of a degree-(k+1) polynomial cancel to leading order);
    ``extra_degree >= 1`` recovers it.
    """
    prob = rayleigh_problem(m, k, T, extra_degree)
    # eigh(M, N) factors N by Cholesky and solves the reduced symmetric problem
    vals, vecs = scipy.linalg.eigh(prob.M, prob.N)
    c = vecs[:, -1]
    c = c / np.abs(c).max()
    return BEstimate(math.sqrt(max(vals[-1], 0.0)), _combine(prob.basis, c), "eigen-p2", m, k, 2.0)


def sample_ratio(h: Poly2, m: int, k: int, p: float, T: Triangle) -> float:
    """``|h - I h|_{m,p,T} / |h|_{k+1,p,T}`` for one polynomial ``h``."""
    num = sobolev_seminorm(_error(h, k, T), m, p, T)
    den = sobolev_seminorm(h, k + 1, p, T)
    return num / den


def _composite_points(T: Triangle, degree: int, levels: int = 2):
    """Cartesian points/weights of a rule repeated on ``4**levels`` congruent subtriangles."""
    rule = quad_rule(int(min(max(degree, 1), MAX_RULE_DEGREE)))
    n = 2 ** levels
    v = T.vertices
    subs = []
    for i in range(n):
        for j in range(n - i):
            subs.append([(i, j), (i + 1, j), (i, j + 1)])
            if i + j < n - 1:
                subs.append([(i + 1, j), (i + 1, j + 1), (i, j + 1)])
    pts, wts = [], []
    for tri in subs:
        corners = np.array([v[0] + (v[1] - v[0]) * a / n + (v[2] - v[0]) * b / n for a, b in tri])
        pts.append(rule.points @ corners)
        wts.append(rule.weights * T.area / len(subs))
    return np.vstack(pts), np.concatenate(wts)


class _RatioEvaluator:
    """Fast batched ratio on a fixed point set; used only to steer the search."""

    def __init__(self, m: int, k: int, p: float, T: Triangle):
        self.p = p
        hs = homogeneous_basis(k + 1)
        self.basis = hs
        es = [_error(h, k, T) for h in hs]
        if math.isinf(p):
            lam = np.vstack([quad_rule(2 * (k + 1)).points, sup_lattice()])
            pts, w = T.from_barycentric(lam), None
        else:
            pts, w = _composite_points(T, math.ceil(p * (k + 1 - m)) + quad_bump())
        self.w = w
        self.De = _deriv_values(es, m, pts)
        # top-order derivatives of homogeneous degree-(k+1) polynomials are constants
        self.Dh = _deriv_values(hs, k + 1, pts[:1])[:, :, 0]
        self.area = T.area

    def __call__(self, C: np.ndarray) -> np.ndarray:
        C = np.atleast_2d(C)
        ve = np.einsum("si,idq->sdq", C, self.De)
        vh = C @ self.Dh
        if math.isinf(self.p):
            return np.abs(ve).max(axis=(1, 2)) / np.abs(vh).max(axis=1)
        p = self.p
        num = (np.abs(ve) ** p).sum(axis=1) @ self.w
        den = self.area * (np.abs(vh) ** p).sum(axis=1)
        return (num / den) ** (1.0 / p)


def _golden_max(f, lo: float, hi: float, steps: int) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(steps):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return c if fc >= fd else d


def b_sample_lower(m: int, k: int, p: float, T: Triangle, samples: int = 2000, seed: int = 0,
                   golden_steps: int = 50, sweeps: int = 3) -> BEstimate:
    """Search lower bound for any ``p``: random directions plus coordinate-wise golden-section ascent.

    The reported value is recomputed for the final maximizer with
    :func:`sobolev_seminorm`, so it is the ratio of an actual admissible
    function.
    """
    _check_orders(m, k)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    ev = _RatioEvaluator(m, k, p, T)
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((samples, len(ev.basis)))
    C /= np.linalg.norm(C, axis=1, keepdims=True)
    r = np.concatenate([ev(C[i:i + 512]) for i in range(0, samples, 512)])
    c = C[int(np.argmax(r))].copy()
    best = float(ev(c)[0])
    for _ in range(sweeps):
        for j in range(len(c)):
            def along(tau, j=j):
                trial = c.copy()
                trial[j] += tau
                return float(ev(trial)[0]) if np.any(trial) else -np.inf
            tau = _golden_max(along, -1.0, 1.0, golden_steps)
            val = along(tau)
            if val > best:
                c[j] += tau
                c /= np.linalg.norm(c)
                best = val
    h = _combine(ev.basis, c / np.abs(c).max())
    return BEstimate(sample_ratio(h, m, k, p, T), h, "sampled", m, k, float(p))


def bound_ratio(est: BEstimate, met: TriangleMetrics, m: int | None = None, k: int | None = None) -> float:
    """``B / (R^m hK^(k+1-2m))``; bounded uniformly over all triangles."""
    m = est.m if m is None else m
    k = est.k if k is None else k
    return est.value / (met.R ** m * met.hK ** (k + 1 - 2 * m))


def csv_row(est: BEstimate, T: Triangle) -> dict:
    met = metrics(T)
    return {"m": est.m, "k": est.k, "p": est.p, "hK": met.hK, "R": met.R, "rho": met.rho,
            "theta_max": met.theta_max, "B_lower": est.value, "bound_ratio": bound_ratio(est, met)}


def standard_position_margin(T: Triangle) -> tuple[float, float]:
    """Lower bounds ``(B(1,1;T), (1+|s|)/sqrt(1-|s|) * B(1,1;K_alpha))`` for ``T`` in standard position."""
    sf = standard_form(T)
    lhs = b_poly_lower(1, 1, sf.triangle()).value
    fac = (1.0 + abs(sf.s)) / math.sqrt(1.0 - abs(sf.s))
    return lhs, fac * b_poly_lower(1, 1, squeezed_triangle(sf.alpha)).value
