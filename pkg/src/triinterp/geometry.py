"""Triangle metrics, reduction to standard position, and the 2x2 matrix calculus.

A triangle in standard position has vertices ``(0,0)``, ``(1,0)`` and
``(alpha*s, alpha*t)`` with ``s = cos(theta)``, ``t = sin(theta) > 0``,
``0 < alpha <= 1`` and ``s <= alpha/2``, so that the edge from ``(1,0)`` to
the third vertex is the longest one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

AREA_EPS = 1e-300


class DegenerateTriangleError(ValueError):
    pass


class Point2(NamedTuple):
    x: float
    y: float


def _signed_area(p, q, r) -> float:
    return 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))


@dataclass(frozen=True)
class Triangle:
    """Counterclockwise triangle; clockwise input is reordered silently."""

    v1: Point2
    v2: Point2
    v3: Point2

    def __post_init__(self):
        pts = [Point2(float(p[0]), float(p[1])) for p in (self.v1, self.v2, self.v3)]
        if not all(math.isfinite(c) for p in pts for c in p):
            raise ValueError(f"non-finite vertex in {pts}")
        area = _signed_area(*pts)
        if area < 0:
            pts[1], pts[2] = pts[2], pts[1]
            area = -area
        if area < AREA_EPS:
            raise DegenerateTriangleError(f"degenerate triangle {pts} (area {area:.3e})")
        object.__setattr__(self, "v1", pts[0])
        object.__setattr__(self, "v2", pts[1])
        object.__setattr__(self, "v3", pts[2])

    @classmethod
    def from_coords(cls, coords) -> "Triangle":
        """Build from ``(x1, y1, x2, y2, x3, y3)`` or a 3x2 array."""
        c = np.asarray(coords, dtype=float).reshape(3, 2)
        return cls(Point2(*c[0]), Point2(*c[1]), Point2(*c[2]))

    @property
    def vertices(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.v3], dtype=float)

    @property
    def area(self) -> float:
        return _signed_area(self.v1, self.v2, self.v3)

    @property
    def jacobian(self) -> np.ndarray:
        """Columns ``v2 - v1`` and ``v3 - v1`` of the reference map."""
        v = self.vertices
        return np.column_stack([v[1] - v[0], v[2] - v[0]])

    def from_barycentric(self, lam) -> np.ndarray:
        """Cartesian points for barycentric rows ``(l1, l2, l3)``."""
        return np.asarray(lam, dtype=float) @ self.vertices

    def transformed(self, matrix, offset=(0.0, 0.0)) -> "Triangle":
        v = self.vertices @ np.asarray(matrix, dtype=float).T + np.asarray(offset, dtype=float)
        return Triangle.from_coords(v)

    def scaled(self, factor: float) -> "Triangle":
        return Triangle.from_coords(self.vertices * factor)


def unit_right_triangle() -> Triangle:
    return Triangle.from_coords([0, 0, 1, 0, 0, 1])


def equilateral_triangle(side: float = 1.0) -> Triangle:
    return Triangle.from_coords([0, 0, side, 0, side / 2, side * math.sqrt(3) / 2])


def squeezed_triangle(alpha: float) -> Triangle:
    """Right triangle with vertices (0,0), (1,0), (0,alpha)."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return Triangle.from_coords([0, 0, 1, 0, 0, alpha])


def standard_triangle(alpha: float, theta: float) -> Triangle:
    return Triangle.from_coords([0, 0, 1, 0, alpha * math.cos(theta), alpha * math.sin(theta)])


METRICS_FIELDS = ("h1", "h2", "hK", "S", "R", "rho", "theta_min", "theta_max",
                  "chunkiness", "semiregularity")


@dataclass(frozen=True)
class TriangleMetrics:
    h1: float
    h2: float
    hK: float
    S: float
    R: float
    rho: float
    theta_min: float
    theta_max: float
    chunkiness: float
    semiregularity: float

    def as_row(self) -> dict:
        return {name: getattr(self, name) for name in METRICS_FIELDS}


def _angles(v: np.ndarray, S: float) -> np.ndarray:
    # angle at vertex i (opposite edge i) from atan2(2S, dot); well conditioned for needles and caps
    out = np.empty(3)
    for i in range(3):
        p, q = v[(i + 1) % 3] - v[i], v[(i + 2) % 3] - v[i]
        out[i] = math.atan2(2.0 * S, float(p @ q))
    return out


def _edge_lengths(T: Triangle) -> np.ndarray:
    v = T.vertices
    # edge i is opposite vertex i
    return np.array([np.hypot(*(v[2] - v[1])), np.hypot(*(v[2] - v[0])), np.hypot(*(v[1] - v[0]))])


def metrics(T: Triangle) -> TriangleMetrics:
    h = _edge_lengths(T)
    h1, h2, hK = np.sort(h)
    S = T.area
    if not S > AREA_EPS:
        raise DegenerateTriangleError(f"degenerate triangle, area {S:.3e}")
    ang = _angles(T.vertices, S)
    theta_max = float(ang.max())
    R = h1 * h2 * hK / (4.0 * S)
    rho = 4.0 * S / (h1 + h2 + hK)
    return TriangleMetrics(
        h1=float(h1), h2=float(h2), hK=float(hK), S=float(S), R=float(R), rho=float(rho),
        theta_min=float(ang.min()), theta_max=theta_max,
        chunkiness=float(hK / rho), semiregularity=float(R / hK),
    )


def circumcenter(T: Triangle) -> np.ndarray:
    """Circumcenter from the perpendicular-bisector linear system (an independent route to R)."""
    v = T.vertices
    M = 2.0 * np.array([v[1] - v[0], v[2] - v[0]])
    rhs = np.array([v[1] @ v[1] - v[0] @ v[0], v[2] @ v[2] - v[0] @ v[0]])
    return np.linalg.solve(M, rhs)


@dataclass(frozen=True)
class StandardForm:
    """Similarity map ``x -> matrix @ x + offset`` taking a triangle to standard position.

    ``perm[i]`` is the index of the input vertex mapped to the i-th standard
    vertex ``(0,0)``, ``(1,0)``, ``(alpha*s, alpha*t)``.
    """

    alpha: float
    s: float
    t: float
    matrix: np.ndarray = field(repr=False)
    offset: np.ndarray = field(repr=False)
    perm: tuple[int, int, int] = (0, 1, 2)
    scale: float = 1.0

    @property
    def theta(self) -> float:
        return math.atan2(self.t, self.s)

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.matrix.T + self.offset

    def triangle(self) -> Triangle:
        return Triangle.from_coords([0, 0, 1, 0, self.alpha * self.s, self.alpha * self.t])


def standard_form(T: Triangle) -> StandardForm:
    v = T.vertices
    edges = [(0, 1), (0, 2), (1, 2)]
    lengths = {e: float(np.hypot(*(v[e[1]] - v[e[0]]))) for e in edges}
    # ties resolved by the sorted endpoint pair, so the result is deterministic
    shortest, middle, _ = sorted(edges, key=lambda e: (lengths[e], e))
    (origin,) = set(shortest) & set(middle)
    second = middle[0] if middle[1] == origin else middle[1]
    third = shortest[0] if shortest[1] == origin else shortest[1]

    h2 = lengths[middle]
    d = (v[second] - v[origin]) / h2
    rot = np.array([[d[0], d[1]], [-d[1], d[0]]]) / h2
    p3 = rot @ (v[third] - v[origin])
    if p3[1] < 0:
        rot = np.diag([1.0, -1.0]) @ rot
        p3[1] = -p3[1]
    alpha = lengths[shortest] / h2
    r = math.hypot(p3[0], p3[1])
    s, t = p3[0] / r, p3[1] / r
    return StandardForm(alpha=float(alpha), s=float(s), t=float(t), matrix=rot,
                        offset=-rot @ v[origin], perm=(origin, second, third), scale=1.0 / h2)


class EigenPair(NamedTuple):
    mu_min: float
    mu_max: float


def sym2_eigenvalues(M, det: float | None = None) -> EigenPair:
    """Closed-form eigenvalues of a symmetric 2x2 matrix.

    Pass ``det`` when it is known more accurately than ``a*d - b*b``, as for
    ``A.T @ A`` with ``det = det(A)**2``.
    """
    M = np.asarray(M, dtype=float)
    a, b, d = M[0, 0], 0.5 * (M[0, 1] + M[1, 0]), M[1, 1]
    half_tr = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), b)
    hi = half_tr + rad
    if det is None:
        det = a * d - b * b
    # product form for the small root avoids cancellation
    lo = det / hi if hi != 0 else half_tr - rad
    return EigenPair(float(lo), float(hi))


class MatrixPair(NamedTuple):
    A: np.ndarray
    B: np.ndarray
    eigATA: EigenPair
    eigBBT: EigenPair


def matrix_pair(sf: StandardForm) -> MatrixPair:
    s, t = sf.s, sf.t
    if not t > 0:
        raise ValueError(f"invalid standard form: t = {t} must be positive")
    A = np.array([[1.0, s], [0.0, t]])
    B = np.array([[1.0, -s / t], [0.0, 1.0 / t]])
    # det(A) = t, so both determinants are known without cancellation
    return MatrixPair(A, B, sym2_eigenvalues(A.T @ A, t * t), sym2_eigenvalues(B @ B.T, 1.0 / (t * t)))


def kron_power(M, k: int) -> np.ndarray:
    if k < 1:
        raise ValueError(f"Kronecker power needs k >= 1, got {k}")
    M = np.asarray(M, dtype=float)
    out = M
    for _ in range(k - 1):
        out = np.kron(out, M)
    return out


def kron_eigenvalues(eig, k: int) -> np.ndarray:
    """All k-fold products of the given eigenvalues, sorted ascending."""
    vals = np.asarray(eig, dtype=float)
    out = vals
    for _ in range(k - 1):
        out = np.multiply.outer(out, vals).ravel()
    return np.sort(out)


def shear_circumradius_gap(sf: StandardForm, R: float) -> tuple[float, float]:
    """Return ``(1/sqrt(1-|s|), 2*sqrt(2)*R)``; the first never exceeds the second."""
    if abs(sf.s) >= 1:
        raise DegenerateTriangleError("|s| = 1 means a flat triangle")
    return 1.0 / math.sqrt(1.0 - abs(sf.s)), 2.0 * math.sqrt(2.0) * R
