"""Triangle families and sweep drivers for interpolation-error experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bconst import b_poly_lower, b_sample_lower, bound_ratio
from .geometry import Triangle, metrics, squeezed_triangle, standard_triangle
from .interpolation import ErrorField, error_poly
from .norms import FieldWithDerivatives, PolyField, as_field, exp_field, sinsin_field, sobolev_seminorm
from .polynomial import Poly2

SWEEP_FIELDS = ("h", "hK", "R", "rho", "theta_max", "ratio_measured", "bound_standard",
                "bound_circum", "bound_jamet", "rate_local")
DEFAULT_DROP = 2
THETA_PAIRS = ((0, 1), (1, 1), (1, 2), (2, 2), (2, 3))


class FamilyError(ValueError):
    pass


def named_field(name: str) -> FieldWithDerivatives:
    x = Poly2.monomial(1, 0)
    y = Poly2.monomial(0, 1)
    polys = {"x2": x * x, "xy": x * y, "x3": x * x * x, "linear": 1 + 2 * x - 3 * y}
    if name in polys:
        return PolyField(polys[name], name)
    if name == "sinsin":
        return sinsin_field()
    if name == "exp":
        return exp_field()
    raise KeyError(f"unknown field {name!r}; choose from {sorted([*polys, 'sinsin', 'exp'])}")


FIELD_NAMES = ("x2", "xy", "x3", "linear", "sinsin", "exp")


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    alpha: float | None = None
    beta: float | None = None
    alphas: tuple = ()
    thetas: tuple = ()
    hs: tuple = ()

    def __post_init__(self):
        if self.kind == "alpha-beta":
            a, b = self.alpha, self.beta
            if a is None or b is None or not (1 < a < b < 1 + a):
                raise FamilyError(f"alpha-beta family needs 1 < alpha < beta < 1 + alpha, got {a}, {b}")
        elif self.kind == "squeeze":
            vals = self.alphas or ((self.alpha,) if self.alpha is not None else ())
            if not vals or not all(0 < a <= 1 for a in vals):
                raise FamilyError(f"squeeze family needs alpha values in (0, 1], got {vals}")
        elif self.kind == "theta-sweep":
            if not self.thetas or not all(math.pi / 3 <= t < math.pi for t in self.thetas):
                raise FamilyError("theta-sweep needs angles in [pi/3, pi)")
            if self.alpha is not None and not 0 < self.alpha <= 1:
                raise FamilyError(f"alpha must be in (0, 1], got {self.alpha}")
        else:
            raise FamilyError(f"unknown family kind {self.kind!r}")
        hs = tuple(self.hs)
        if any(h <= 0 for h in hs) or any(a <= b for a, b in zip(hs, hs[1:])):
            raise FamilyError("h values must be positive and strictly decreasing")


def dyadic_hs(first: int = 3, last: int = 10) -> tuple:
    return tuple(2.0 ** -j for j in range(first, last + 1))


def family_triangle(spec: FamilySpec, h: float, theta: float | None = None) -> Triangle:
    if not 0 < h <= 1:
        raise FamilyError(f"h must lie in (0, 1], got {h}")
    if spec.kind == "alpha-beta":
        return Triangle.from_coords([0, 0, h, 0, h ** spec.alpha, h ** spec.beta])
    if spec.kind == "squeeze":
        alpha = spec.alpha if spec.alpha is not None else spec.alphas[0]
        return squeezed_triangle(alpha).scaled(h)
    theta = spec.thetas[0] if theta is None else theta
    return standard_triangle(1.0 if spec.alpha is None else spec.alpha, theta).scaled(h)


def fit_rate(x, y, drop: int = 0) -> float:
    """Least-squares slope of ``log y`` against ``log x`` after dropping the first ``drop`` points."""
    x = np.asarray(x, dtype=float)[drop:]
    y = np.asarray(y, dtype=float)[drop:]
    if len(x) < 2:
        raise ValueError("need at least two points for a fit")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def error_and_norm(v, k: int, m: int, p: float, T: Triangle) -> tuple[float, float]:
    """``(|v - I v|_{m,p,T}, |v|_{k+1,p,T})``."""
    v = as_field(v)
    if isinstance(v, PolyField) and v.poly.degree <= k + 1:
        err = sobolev_seminorm(error_poly(v.poly, k, T), m, p, T)
    else:
        err = sobolev_seminorm(ErrorField(v, k, T), m, p, T)
    return err, sobolev_seminorm(v, k + 1, p, T)


def predicted_bounds(T: Triangle, k: int, m: int) -> dict:
    """Geometric factors of the classical, circumradius and Jamet estimates (constants dropped)."""
    met = metrics(T)
    return {
        "bound_standard": met.hK ** (k + 1) / met.rho ** m,
        "bound_circum": met.R ** m * met.hK ** (k + 1 - 2 * m),
        "bound_jamet": met.hK ** (k + 1 - m) / math.cos(met.theta_max / 2) ** m,
    }


@dataclass
class SweepResult:
    rows: list
    fitted_rate: float
    bound_rates: dict
    dropped: int
    summary: dict = field(default_factory=dict)


def sweep_rate(spec: FamilySpec, v, k: int = 1, m: int = 1, p: float = 2.0,
               drop: int = DEFAULT_DROP, scale: float = 1.0) -> SweepResult:
    """Measured ``|v - I v|_{m,p} / |v|_{k+1,p}`` across the family, with a log-log rate fit.

    ``scale`` applies the similarity ``x -> scale * x`` to every triangle and
    pulls ``v`` back accordingly.  If ``|v|_{k+1,p}`` vanishes (``v`` in
    ``P_k``) the error itself is reported as the ratio.
    """
    if len(spec.hs) < 3:
        raise FamilyError("a rate fit needs at least 3 h values")
    v = as_field(v)
    if scale != 1.0:
        v = v.scaled(scale)
    rows = []
    prev = None
    for h in spec.hs:
        T = family_triangle(spec, h)
        if scale != 1.0:
            T = T.scaled(scale)
        met = metrics(T)
        err, norm = error_and_norm(v, k, m, p, T)
        ratio = err / norm if norm > 0 else err
        row = {"h": h, "hK": met.hK, "R": met.R, "rho": met.rho, "theta_max": met.theta_max,
               "ratio_measured": ratio, **predicted_bounds(T, k, m)}
        if prev is None or ratio <= 0 or prev[1] <= 0:
            row["rate_local"] = math.nan
        else:
            row["rate_local"] = math.log(ratio / prev[1]) / math.log(h / prev[0])
        prev = (h, ratio)
        rows.append(row)
    hs = [r["h"] for r in rows]
    ratios = [r["ratio_measured"] for r in rows]
    fitted = fit_rate(hs, ratios, drop) if min(ratios[drop:]) > 0 else math.nan
    bound_rates = {name: fit_rate(hs, [r[name] for r in rows], drop)
                   for name in ("bound_standard", "bound_circum", "bound_jamet")}
    summary = {"kind": spec.kind, "k": k, "m": m, "p": p, "field": v.name,
               "fitted_rate": fitted, "dropped_coarse": drop, "n_h": len(hs),
               "rate_standard": bound_rates["bound_standard"],
               "rate_circum": bound_rates["bound_circum"],
               "rate_jamet": bound_rates["bound_jamet"],
               "standard_convergent": bool(bound_rates["bound_standard"] > 0)}
    if spec.kind == "alpha-beta":
        a, b = spec.alpha, spec.beta
        summary.update({"alpha": a, "beta": b, "predicted_rate_circum": 1 + a - b,
                        "predicted_rate_standard": 2 - b})
    return SweepResult(rows, fitted, bound_rates, drop, summary)


def squeeze_sweep(alphas, k: int, m: int, p: float = 2.0, samples: int = 2000, seed: int = 0,
                  extra_degree: int = 0) -> list[dict]:
    """Lower bounds of the error constant on ``K_alpha`` for each alpha."""
    rows = []
    for a in alphas:
        if not 0 < a <= 1:
            raise FamilyError(f"alpha must be in (0, 1], got {a}")
        T = squeezed_triangle(a)
        if p == 2:
            est = b_poly_lower(m, k, T, extra_degree)
        else:
            est = b_sample_lower(m, k, p, T, samples=samples, seed=seed)
        rows.append({"alpha": a, "m": m, "k": k, "p": p, "B_lower": est.value, "method": est.method})
    return rows


def theta_sweep(thetas, pairs=THETA_PAIRS, alpha: float = 1.0, extra_degree: int = 2) -> dict:
    """Circumradius bound ratios ``B / (R^m hK^(k+1-2m))`` on standard triangles with apex angle theta.

    Returns ``{(m, k): {"thetas", "ratios", "spread", "trend", "c_emp"}}`` where
    ``spread`` is max/min, ``trend`` the slope of ``log ratio`` against
    ``log(pi - theta)`` and ``c_emp`` the largest ratio, an empirical constant
    for this family only.
    """
    thetas = np.asarray(thetas, dtype=float)
    tris = [standard_triangle(alpha, t) for t in thetas]
    mets = [metrics(T) for T in tris]
    out = {}
    for m, k in pairs:
        r = np.array([bound_ratio(b_poly_lower(m, k, T, extra_degree), met)
                      for T, met in zip(tris, mets)])
        out[m, k] = {"thetas": thetas, "ratios": r, "spread": float(r.max() / r.min()),
                     "trend": fit_rate(math.pi - thetas, r), "c_emp": float(r.max())}
    return out


def jamet_factors(theta, m: int):
    """Jamet factor ``cos(theta/2)^-m`` and semiregularity factor ``sin(theta)^-m``."""
    theta = np.asarray(theta, dtype=float)
    return np.cos(theta / 2.0) ** -m, np.sin(theta) ** -m


def jamet_compare(T: Triangle, m: int) -> tuple[float, float]:
    """``(cos(theta_max/2)^-m, (2R/hK)^m)``; the two blow up together as theta_max -> pi."""
    met = metrics(T)
    return float(math.cos(met.theta_max / 2.0) ** -m), float((2.0 * met.R / met.hK) ** m)
