"""P1 finite elements for ``-Laplace u = f`` on the unit square with anisotropic criss-cross meshes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .experiments import fit_rate
from .norms import FieldWithDerivatives, as_field, quad_rule, sinsin_field, sinsin_laplacian_source

MAX_ROWS = 1 << 16
CG_TOL = 1e-10
LOAD_DEGREE = 4
ERROR_DEGREE = 6
STUDY_FIELDS = ("n", "a", "b", "maxR", "maxTheta", "maxChunk", "h1err", "l2err", "interpErr")
_CHUNK = 100_000


class MeshError(ValueError):
    pass


class CGConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(f"CG did not converge in {iterations} iterations (relative residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


@dataclass
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.boundary = np.asarray(self.boundary, dtype=bool).ravel()
        if self.boundary.size != len(self.vertices):
            raise MeshError("one boundary flag per vertex required")
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise MeshError("triangle refers to a missing vertex")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        return self.vertices[self.triangles]

    def signed_areas(self) -> np.ndarray:
        c = self.corners()
        e1, e2 = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def check(self) -> None:
        """Raise :class:`MeshError` unless the mesh is CCW, non-degenerate and conforming."""
        if np.any(self.signed_areas() <= 0):
            raise MeshError("degenerate or clockwise triangle")
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        keys = np.sort(directed, axis=1)
        uniq, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("edge shared by more than two triangles")
        # an interior edge must be traversed once in each direction
        fwd = directed[:, 0] < directed[:, 1]
        n_fwd = np.bincount(inv.ravel(), weights=fwd, minlength=len(uniq))
        if np.any((counts == 2) & (n_fwd != 1)):
            raise MeshError("inconsistent orientation across a shared edge")
        outer = uniq[counts == 1]
        if not np.all(self.boundary[outer]):
            raise MeshError("boundary edge with an unflagged vertex")
        # hanging nodes: a vertex lying inside some edge it does not belong to is not detected here;
        # the generators below never produce them


def _grid_index(i, j, n):
    return j * (n + 1) + i


def gen_aniso_mesh(n: int, q: float) -> Mesh:
    """Unit square in ``n`` columns of width ``a = 1/n`` and ``round(n**q)`` rows, cells split at their centres."""
    if n < 2:
        raise MeshError(f"n must be >= 2, got {n}")
    if not q >= 1:
        raise MeshError(f"q must be >= 1, got {q}")
    rows = round(n ** q)
    if rows > MAX_ROWS:
        raise MeshError(f"{rows} rows exceed the limit {MAX_ROWS}")
    xs = np.linspace(0.0, 1.0, n + 1)
    ys = np.linspace(0.0, 1.0, rows + 1)
    X, Y = np.meshgrid(xs, ys)
    grid = np.column_stack([X.ravel(), Y.ravel()])
    ci, cj = np.meshgrid(np.arange(n), np.arange(rows))
    ci, cj = ci.ravel(), cj.ravel()
    centres = np.column_stack([(xs[ci] + xs[ci + 1]) / 2, (ys[cj] + ys[cj + 1]) / 2])
    c = len(grid) + np.arange(len(ci))
    p00 = _grid_index(ci, cj, n)
    p10 = _grid_index(ci + 1, cj, n)
    p11 = _grid_index(ci + 1, cj + 1, n)
    p01 = _grid_index(ci, cj + 1, n)
    tris = np.stack([np.column_stack(t) for t in
                     ((p00, p10, c), (p10, p11, c), (p11, p01, c), (p01, p00, c))], axis=1).reshape(-1, 3)
    verts = np.vstack([grid, centres])
    gx, gy = grid[:, 0], grid[:, 1]
    on_edge = (gx == 0) | (gx == 1) | (gy == 0) | (gy == 1)
    return Mesh(verts, tris, np.concatenate([on_edge, np.zeros(len(centres), bool)]))


def structured_mesh(n: int) -> Mesh:
    """``n x n`` squares, each cut by its rising diagonal; ``n = 1`` gives two triangles."""
    if n < 1:
        raise MeshError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs)
    ci, cj = np.meshgrid(np.arange(n), np.arange(n))
    ci, cj = ci.ravel(), cj.ravel()
    p00, p10 = _grid_index(ci, cj, n), _grid_index(ci + 1, cj, n)
    p11, p01 = _grid_index(ci + 1, cj + 1, n), _grid_index(ci, cj + 1, n)
    tris = np.stack([np.column_stack((p00, p10, p11)), np.column_stack((p00, p11, p01))], axis=1).reshape(-1, 3)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    bd = (verts[:, 0] == 0) | (verts[:, 0] == 1) | (verts[:, 1] == 0) | (verts[:, 1] == 1)
    return Mesh(verts, tris, bd)


def mesh_quality(mesh: Mesh) -> dict:
    """Worst circumradius, maximum angle and chunkiness over the mesh."""
    c = mesh.corners()
    e = np.stack([np.linalg.norm(c[:, 1] - c[:, 2], axis=1),
                  np.linalg.norm(c[:, 2] - c[:, 0], axis=1),
                  np.linalg.norm(c[:, 0] - c[:, 1], axis=1)], axis=1)
    S = mesh.signed_areas()
    e.sort(axis=1)
    a, b, hK = e[:, 0], e[:, 1], e[:, 2]
    R = a * b * hK / (4 * S)
    rho = 4 * S / e.sum(axis=1)
    # largest angle sits opposite the longest edge; sin(theta) = 2S/(ab), cosine sign picks the branch
    theta = np.arctan2(4 * S, a * a + b * b - hK * hK)
    return {"maxR": float(R.max()), "maxTheta": float(theta.max()), "maxChunk": float((hK / rho).max())}


def _gradients(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Constant barycentric gradients ``G[e, i, :]`` and areas."""
    c = mesh.corners()
    J = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]], axis=2)
    Jinv = np.linalg.inv(J)
    ref = np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    G = np.einsum("eij,ik->ekj", Jinv, ref)
    return G, 0.5 * np.abs(np.linalg.det(J))


@dataclass
class SparseSystem:
    """Reduced SPD system plus what is needed to map back to all vertices."""

    matrix: scipy.sparse.csr_matrix
    rhs: np.ndarray
    free: np.ndarray | None = None
    n_full: int | None = None
    full_matrix: scipy.sparse.csr_matrix | None = None
    full_rhs: np.ndarray | None = None

    def expand(self, x: np.ndarray) -> np.ndarray:
        if self.free is None:
            return np.asarray(x)
        out = np.zeros(self.n_full)
        out[self.free] = x
        return out


def assemble(mesh: Mesh, f) -> SparseSystem:
    """Stiffness and degree-4 load; homogeneous Dirichlet rows and columns removed."""
    mesh.check()
    G, area = _gradients(mesh)
    Ke = area[:, None, None] * np.einsum("eid,ejd->eij", G, G)
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    nv = mesh.n_vertices
    # COO -> CSR sums duplicates in a fixed order, so assembly is reproducible
    K = scipy.sparse.coo_matrix((Ke.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()
    rule = quad_rule(LOAD_DEGREE)
    fvals = _eval_at_rule(mesh, rule.points, _as_callable(f))
    be = area[:, None] * np.einsum("eq,q,qi->ei", fvals, rule.weights, rule.points)
    b = np.bincount(t.ravel(), weights=be.ravel(), minlength=nv)
    free = np.flatnonzero(~mesh.boundary)
    Kr = K[free][:, free].tocsr()
    return SparseSystem(Kr, b[free], free, nv, K, b)


def _as_callable(f):
    if isinstance(f, FieldWithDerivatives):
        return f.value
    if callable(f):
        return f
    return lambda x, y: np.full(np.shape(x), float(f))


def _eval_at_rule(mesh: Mesh, lam: np.ndarray, f, elems=slice(None)) -> np.ndarray:
    pts = np.einsum("qi,eid->eqd", lam, mesh.corners()[elems])
    return np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(pts.shape[:2])


def solve_cg(system, rhs=None, tol: float = CG_TOL, max_iter: int | None = None,
             full_output: bool = False):
    """Jacobi-preconditioned CG from ``x0 = 0``; raises :class:`CGConvergenceError` on failure.

    ``system`` is a :class:`SparseSystem` or a matrix (then ``rhs`` is needed).
    With ``full_output`` the result is ``(x, iterations, relative_residual)``.
    """
    if isinstance(system, SparseSystem):
        A, b = system.matrix, system.rhs
    else:
        A, b = scipy.sparse.csr_matrix(system), rhs
    b = np.asarray(b, dtype=float)
    n = len(b)
    max_iter = 20 * max(n, 1) if max_iter is None else max_iter
    d = A.diagonal()
    if np.any(d <= 0):
        raise ValueError("matrix is not positive definite (non-positive diagonal)")
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return (x, 0, 0.0) if full_output else x
    r = b.copy()
    z = r / d
    p = z.copy()
    rz = r @ z
    res = 1.0
    for it in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return (x, it, float(res)) if full_output else x
        z = r / d
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise CGConvergenceError(max_iter, float(res))


def _error_norms(mesh: Mesh, nodal: np.ndarray, u: FieldWithDerivatives) -> tuple[float, float]:
    """``(|u - u_h|_{1,2}, ||u - u_h||_{0,2})`` for the P1 function with the given nodal values."""
    rule = quad_rule(ERROR_DEGREE)
    G, area = _gradients(mesh)
    h1 = l2 = 0.0
    ux, uy = u.deriv(1, 0), u.deriv(0, 1)
    for s in range(0, mesh.n_triangles, _CHUNK):
        sl = slice(s, s + _CHUNK)
        vals = nodal[mesh.triangles[sl]]
        uh = vals @ rule.points.T
        guh = np.einsum("ei,eid->ed", vals, G[sl])
        du0 = _eval_at_rule(mesh, rule.points, u.value, sl) - uh
        dux = _eval_at_rule(mesh, rule.points, ux, sl) - guh[:, :1]
        duy = _eval_at_rule(mesh, rule.points, uy, sl) - guh[:, 1:]
        l2 += float(area[sl] @ ((du0 ** 2) @ rule.weights))
        h1 += float(area[sl] @ ((dux ** 2 + duy ** 2) @ rule.weights))
    return math.sqrt(h1), math.sqrt(l2)


def global_interp_error(mesh: Mesh, u, m: int = 1, p: float = 2.0) -> float:
    """``(sum_K |u - I_K^1 u|_{m,p,K}^p)^(1/p)``, degree-6 quadrature per element."""
    u = as_field(u)
    if m < 0 or not p >= 1:
        raise ValueError("need m >= 0 and p >= 1")
    rule = quad_rule(ERROR_DEGREE)
    G, area = _gradients(mesh)
    nodal = np.asarray(u.value(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float) * np.ones(mesh.n_vertices)
    total = 0.0
    worst = 0.0
    for s in range(0, mesh.n_triangles, _CHUNK):
        sl = slice(s, s + _CHUNK)
        vals = nodal[mesh.triangles[sl]]
        parts = []
        for j in range(m + 1):
            dx, dy = m - j, j
            d = _eval_at_rule(mesh, rule.points, u.deriv(dx, dy), sl)
            if m == 0:
                d = d - vals @ rule.points.T
            elif m == 1:
                d = d - np.einsum("ei,ei->e", vals, G[sl][:, :, 1 if dy else 0])[:, None]
            parts.append(np.abs(d))
        mag = np.stack(parts)
        if math.isinf(p):
            worst = max(worst, float(mag.max()))
        else:
            total += float(area[sl] @ ((mag ** p).sum(axis=0) @ rule.weights))
    return worst if math.isinf(p) else total ** (1.0 / p)


@dataclass
class FemResult:
    n: int
    a: float
    b: float
    h1err: float
    l2err: float
    interp_err: float
    quality: dict
    u_h: np.ndarray | None = field(default=None, repr=False)
    iterations: int = 0

    def as_row(self) -> dict:
        return {"n": self.n, "a": self.a, "b": self.b, "maxR": self.quality["maxR"],
                "maxTheta": self.quality["maxTheta"], "maxChunk": self.quality["maxChunk"],
                "h1err": self.h1err, "l2err": self.l2err, "interpErr": self.interp_err}


@dataclass
class StudyResult:
    q: float
    results: list
    rates: dict

    @property
    def rows(self) -> list[dict]:
        return [r.as_row() for r in self.results]


def run_fem(mesh: Mesh, u: FieldWithDerivatives, f, tol: float = CG_TOL) -> tuple[np.ndarray, int, float, float]:
    """Solve on ``mesh`` and return ``(u_h, iterations, h1 error, l2 error)``."""
    system = assemble(mesh, f)
    x, its, _ = solve_cg(system, tol=tol, full_output=True)
    uh = system.expand(x)
    h1, l2 = _error_norms(mesh, uh, u)
    return uh, its, h1, l2


def convergence_study(q: float, ns, u: FieldWithDerivatives | None = None, f=None,
                      solve: bool = True, tol: float = CG_TOL, keep_solution: bool = False) -> StudyResult:
    """Errors on ``gen_aniso_mesh(n, q)`` for each ``n``; slopes are fitted against ``a = 1/n`` using every point.

    With ``solve=False`` only the interpolation error is computed (FEM columns are NaN).
    """
    ns = list(ns)
    if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("need at least two increasing n values")
    if u is None:
        u, f = sinsin_field(), sinsin_laplacian_source()
    elif f is None and solve:
        raise ValueError("a source term f is required when solving")
    results = []
    for n in ns:
        mesh = gen_aniso_mesh(n, q)
        rows = round(n ** q)
        interp = global_interp_error(mesh, u, 1, 2.0)
        uh, its, h1, l2 = (run_fem(mesh, u, f, tol) if solve else (None, 0, math.nan, math.nan))
        results.append(FemResult(n, 1.0 / n, 1.0 / rows, h1, l2, interp, mesh_quality(mesh),
                                 uh if keep_solution else None, its))
    a = [r.a for r in results]
    rates = {"interp": fit_rate(a, [r.interp_err for r in results])}
    if solve:
        rates["h1"] = fit_rate(a, [r.h1err for r in results])
        rates["l2"] = fit_rate(a, [r.l2err for r in results])
    return StudyResult(q, results, rates)


def write_mesh(mesh: Mesh, path) -> None:
    """Text format: ``nv nt`` header, ``x y flag`` lines, then ``i j k`` lines."""
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles}\n")
        for (x, y), flag in zip(mesh.vertices, mesh.boundary):
            fh.write(f"{x:.17g} {y:.17g} {int(flag)}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        nv, nt = map(int, fh.readline().split())
        v = np.loadtxt(fh, max_rows=nv, ndmin=2)
        t = np.loadtxt(fh, max_rows=nt, dtype=np.int64, ndmin=2)
    return Mesh(v[:, :2], t, v[:, 2].astype(bool))
