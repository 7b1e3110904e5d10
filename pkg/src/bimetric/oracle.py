"""Independent verification paths for the series pipeline.

Two oracles live here.  ``extract_series_fd`` recovers series coefficients
from samples of an exact evaluator at small finite eps, with Richardson
extrapolation and per-coefficient error estimates.  ``exact_at_eps``
evaluates curvature, Laplacians, the bilinear density, the volume ratio and
the integrated functional for the single collapsed metric gbar + eps*gper
through a code path that performs no truncated-series arithmetic at all: it
shares only the spatial-jet module with the engine, which is what makes
agreement between the two meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericDomainError
from .exprs import Expr
from .jets import (Jet, jet_entry, jet_gradient, jet_hessian, jet_matrix_inverse,
                   jet_partial_derivative, jet_stack)
from .scene import MetricScene, _as_coords

QUANTITIES = ("r", "lap", "clap", "t", "a", "b", "d", "a4", "volratio", "wres")


# ---------------------------------------------------------------------------
# single-metric evaluation (no series arithmetic anywhere below)
# ---------------------------------------------------------------------------

class CollapsedMetric:
    """gbar + eps*gper at one fixed numeric eps, evaluated as plain jets."""

    def __init__(self, scene: MetricScene, eps: float):
        self.scene = scene
        self.eps = float(eps)
        # keyed by (id(coords), degree); the coords reference is kept so the
        # id cannot be recycled while the entry lives.
        self._cache = {}

    def _memo(self, kind, coords, degree, build):
        key = (kind, id(coords), degree)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is coords:
            return hit[1]
        value = build()
        self._cache[key] = (coords, value)
        return value

    def metric_jet(self, coords, degree) -> Jet:
        return self._memo("g", coords, degree,
                          lambda: self._metric_jet(coords, degree))

    def inverse_jet(self, coords, degree) -> Jet:
        return self._memo("ginv", coords, degree,
                          lambda: jet_matrix_inverse(
                              self.metric_jet(coords, degree)))

    def christoffel(self, coords, degree=2) -> Jet:
        return self._memo("gamma", coords, degree,
                          lambda: self._christoffel(coords, degree))

    def _metric_jet(self, coords, degree) -> Jet:
        s, e = self.scene, self.eps
        rows = []
        for i in range(s.dim):
            entries = []
            for j in range(s.dim):
                jet = s.base_entry(i, j).jet(coords, degree)
                pert = s.pert_entry(i, j)
                if not pert.is_zero():
                    jet = jet + e * pert.jet(coords, degree)
                entries.append(jet)
            rows.append(jet_stack(entries))
        g = jet_stack(rows, axis=-2)
        try:
            np.linalg.cholesky(g.value)
        except np.linalg.LinAlgError:
            raise NumericDomainError(
                f"collapsed metric not positive definite at eps={e}")
        return g

    def _christoffel(self, coords, degree=2) -> Jet:
        """Gamma^k_{ij} jets (degree-1 lower), built entry by entry."""
        g = self.metric_jet(coords, degree)
        ginv = self.inverse_jet(coords, degree).truncated(degree - 1)
        dg = [jet_partial_derivative(g, l) for l in range(g.dim)]
        rows_k = []
        for k in range(g.dim):
            rows_i = []
            for i in range(g.dim):
                entries = []
                for j in range(g.dim):
                    acc = None
                    for l in range(g.dim):
                        term = jet_entry(ginv, k, l) * (
                            jet_entry(dg[i], j, l) + jet_entry(dg[j], i, l)
                            - jet_entry(dg[l], i, j))
                        acc = term if acc is None else acc + term
                    entries.append(0.5 * acc)
                rows_i.append(jet_stack(entries))
            rows_k.append(jet_stack(rows_i, axis=-2))
        return jet_stack(rows_k, axis=-3)

    def scalar_curvature(self, coords):
        gam = self.christoffel(coords, degree=2)
        g = self.metric_jet(coords, degree=0)
        ginv = np.linalg.inv(g.value)
        dgam = np.stack([jet_partial_derivative(gam, l).value
                         for l in range(g.dim)], axis=-4)   # [l, k, i, j]
        gv = gam.value
        r = (np.einsum("...jl,...kkjl->...", ginv, dgam)
             + np.einsum("...jl,...ajl,...kka->...", ginv, gv, gv)
             - np.einsum("...jl,...jkkl->...", ginv, dgam)
             - np.einsum("...jl,...akl,...kja->...", ginv, gv, gv))
        return r

    def laplacian_value(self, coords, ujet: Jet):
        """-g^{ij}(d_i d_j u - Gamma^k_{ij} d_k u), values only."""
        g = self.metric_jet(coords, degree=1)
        ginv = np.linalg.inv(g.value)
        gam = self.christoffel(coords, degree=2).value
        hess = jet_hessian(ujet).value
        grad = jet_gradient(ujet).value
        return -np.einsum("...ij,...ij->...", ginv,
                          hess - np.einsum("...kij,...k->...ij", gam, grad))

    def pairing_jet(self, coords, f1jet: Jet, f2jet: Jet, degree) -> Jet:
        g = self.metric_jet(coords, degree)
        ginv = self.inverse_jet(coords, degree)
        g1 = jet_gradient(f1jet).truncated(degree)
        g2 = jet_gradient(f2jet).truncated(degree)
        acc = None
        for j in range(g.dim):
            for l in range(g.dim):
                term = jet_entry(g1, j) * jet_entry(ginv, j, l) * jet_entry(g2, l)
                acc = term if acc is None else acc + term
        return acc

    def density_components(self, coords, f1: Expr, f2: Expr):
        """(t, a, b, d, r) values of the bilinear density pieces."""
        f1jet = f1.jet(coords, 3)
        f2jet = f2.jet(coords, 3)
        t = self.pairing_jet(coords, f1jet, f2jet, degree=0).value
        a = self.laplacian_value(
            coords, self.pairing_jet(coords, f1jet, f2jet, degree=2))
        gam = self.christoffel(coords, degree=2).value
        g = self.metric_jet(coords, degree=0)
        ginv = np.linalg.inv(g.value)

        def hessian_tensor(fjet):
            return (jet_hessian(fjet).value
                    - np.einsum("...kij,...k->...ij", gam,
                                jet_gradient(fjet).value))

        h1, h2 = hessian_tensor(f1jet), hessian_tensor(f2jet)
        b = np.einsum("...ij,...ip,...jq,...pq->...", h1, ginv, ginv, h2)
        d = self.laplacian_value(coords, f1jet) * self.laplacian_value(
            coords, f2jet)
        r = self.scalar_curvature(coords)
        return t, a, b, d, r

    def a4_density(self, coords, f1: Expr, f2: Expr):
        t, a, b, d, r = self.density_components(coords, f1, f2)
        return r * t / 3.0 + a + b - 0.5 * d

    def sqrt_det_ratio(self, coords):
        g = self.metric_jet(coords, degree=0).value
        gbar = CollapsedMetric(self.scene, 0.0).metric_jet(coords, 0).value
        ratio = np.linalg.det(g) / np.linalg.det(gbar)
        if np.any(ratio <= 0):
            raise NumericDomainError("determinant ratio not positive")
        return np.sqrt(ratio)


def exact_at_eps(scene: MetricScene, eps: float, quantity: str, point,
                 probes=None, grid=None):
    """Exact value of one quantity for the collapsed metric gbar + eps*gper.

    ``probes`` supplies the expressions the quantity needs: u for the
    Laplacians, (f1, f2) for the density pieces, (f0, f1, f2) for the
    integral.  Integral quantities take a QuadratureGrid and ignore point.
    """
    if quantity not in QUANTITIES:
        raise ConfigError(f"unknown quantity '{quantity}'")
    cm = CollapsedMetric(scene, eps)
    probes = probes or ()
    if quantity == "wres":
        from .functional import integrate_scalar  # local: avoid import cycle
        f0, f1, f2 = probes
        def density(coords):
            vol = cm.sqrt_det_ratio(coords) * np.sqrt(np.linalg.det(
                CollapsedMetric(scene, 0.0).metric_jet(coords, 0).value))
            return f0.jet(coords, 0).value * cm.a4_density(coords, f1, f2) * vol
        return integrate_scalar(scene, grid, density)

    coords = _as_coords(point)
    if quantity == "r":
        return cm.scalar_curvature(coords)
    if quantity == "volratio":
        return cm.sqrt_det_ratio(coords)
    if quantity in ("lap", "clap"):
        (u,) = probes
        val = cm.laplacian_value(coords, u.jet(coords, 2))
        if quantity == "clap":
            n = scene.dim
            val = val + ((n - 2) / (4.0 * (n - 1))) * cm.scalar_curvature(
                coords) * u.jet(coords, 0).value
        return val
    f1, f2 = probes
    t, a, b, d, r = cm.density_components(coords, f1, f2)
    if quantity == "t":
        return t
    if quantity == "a":
        return a
    if quantity == "b":
        return b
    if quantity == "d":
        return d
    return r * t / 3.0 + a + b - 0.5 * d


# ---------------------------------------------------------------------------
# series extraction from eps samples
# ---------------------------------------------------------------------------

@dataclass
class SeriesExtraction:
    """Coefficients c_0..c_N recovered from eps samples, with error bars."""

    coefficients: list
    errors: list
    step: float
    richardson_levels: int = 2


def extract_series_fd(evaluator, order: int = 2, h: float = 1e-3,
                      max_shrink: int = 4) -> SeriesExtraction:
    """Recover c_0..c_order of evaluator(eps) = sum c_k eps^k near eps = 0.

    Central differences at steps h and h/2 with one Richardson level per
    coefficient; the error estimate is the gap between the two levels.  The
    step auto-shrinks (halving, up to ``max_shrink`` times) when the
    evaluator fails at +-h, e.g. outside the positive-definiteness radius.
    """
    if order > 2:
        raise ConfigError("series extraction supports order <= 2")
    for _ in range(max_shrink + 1):
        try:
            samples = {e: evaluator(e)
                       for e in (-h, -h / 2, 0.0, h / 2, h)}
            break
        except NumericDomainError:
            h *= 0.5
    else:
        raise NumericDomainError(
            f"evaluator kept failing down to step {h}")

    f0 = samples[0.0]
    coeffs = [f0]
    errors = [np.zeros_like(np.asarray(f0, dtype=float))]
    if order >= 1:
        d_h = (samples[h] - samples[-h]) / (2 * h)
        d_h2 = (samples[h / 2] - samples[-h / 2]) / h
        rich = (4.0 * d_h2 - d_h) / 3.0
        coeffs.append(rich)
        errors.append(np.abs(rich - d_h2))
    if order >= 2:
        s_h = (samples[h] - 2 * f0 + samples[-h]) / (h * h)
        s_h2 = (samples[h / 2] - 2 * f0 + samples[-h / 2]) / (h * h / 4)
        rich = (4.0 * s_h2 - s_h) / 3.0
        coeffs.append(0.5 * rich)
        errors.append(0.5 * np.abs(rich - s_h2))
    return SeriesExtraction(coeffs, errors, h)


def series_evaluator(scene, quantity, point, probes=None, grid=None):
    """eps -> exact_at_eps closure, for feeding into extract_series_fd."""
    return lambda eps: exact_at_eps(scene, eps, quantity, point, probes, grid)


# ---------------------------------------------------------------------------
# spatial jet validation
# ---------------------------------------------------------------------------

def _fd_partial(f, x, alpha_positions, h):
    """Nested central differences for the mixed partial at positions."""
    if not alpha_positions:
        return f(x)
    i, rest = alpha_positions[0], alpha_positions[1:]
    e = np.zeros_like(x)
    e[i] = h
    return (_fd_partial(f, x + e, rest, h)
            - _fd_partial(f, x - e, rest, h)) / (2 * h)


def spatial_fd_check(expr: Expr, point, degree: int, h: float = 0.05) -> float:
    """Worst relative deviation of jet partials vs. finite differences.

    Nested central stencils at steps h and h/2 with two Richardson levels;
    the base step is large enough that rounding stays far below the
    truncation the extrapolation removes.
    """
    from .jets import positions
    x = _as_coords(point).astype(float)
    jet = expr.jet(x, degree)

    def f(y):
        return expr.jet(y, 0).value

    worst = 0.0
    scale = max(1.0, max(abs(float(v)) for v in jet.partials.values()))
    for alpha, value in jet.partials.items():
        pos = positions(alpha)
        d1 = _fd_partial(f, x, pos, h)
        d2 = _fd_partial(f, x, pos, h / 2)
        d4 = _fd_partial(f, x, pos, h / 4)
        r1 = (4 * d2 - d1) / 3
        r2 = (4 * d4 - d2) / 3
        fd = (16 * r2 - r1) / 15
        worst = max(worst, abs(float(value) - float(fd)) / scale)
    return worst
