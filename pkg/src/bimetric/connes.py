"""The 4-dimensional bilinear curvature density and its invariance checks.

For a metric pair g = gbar + eps*gper and probes f1, f2 the density is

    A4(f1, f2) = (1/3) r <df1, df2> + Lap<df1, df2> + <Hess f1, Hess f2>
                 - (1/2) (Lap f1)(Lap f2),

assembled order by order in eps from the four component series t, a, b, d.
The module also measures the two invariance laws this density obeys in
dimension four: pointwise covariance A4_{f*(gbar,gper)} = f^{-2} A4, and the
invariance of the nine densities A4^j * c_l * sqrt(det gbar) under the
simultaneous rescaling of both metrics.  All operations reject dim != 4: the
f^{-2} law is specific to four dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .exprs import Expr
from .geometry import (GeometryBundle, perturbation_ratio_matrix, sqrt_det_base,
                       volume_coefficients_closed_form)
from .jets import jet_einsum, jet_gradient, jet_hessian
from .operators import LaplacianSeries
from .scene import MetricScene, _as_coords
from .series import EpsSeries, series_combine, series_einsum


def _require_dim4(scene: MetricScene):
    if scene.dim != 4:
        raise ConfigError(
            f"the bilinear curvature density is defined for dim 4, got {scene.dim}")


def _probe_jets(scene, point, f1: Expr, f2: Expr, degree=3):
    coords = _as_coords(point)
    return f1.jet(coords, degree), f2.jet(coords, degree)


def gradient_pairing_series(scene, point, f1: Expr, f2: Expr, order=None,
                            bundle=None, as_jets=False, jets=None) -> EpsSeries:
    """t_k = d_j f1 * d_l f2 * (g^{jl}-series)_k."""
    _require_dim4(scene)
    bundle = bundle or GeometryBundle.build(scene, point, order, degree=2)
    j1, j2 = jets or _probe_jets(scene, point, f1, f2)
    deg = bundle.inverse[0].degree
    g1 = jet_gradient(j1).truncated(deg)
    g2 = jet_gradient(j2).truncated(deg)
    t = bundle.inverse.map(
        lambda ginv: jet_einsum("l,l->", jet_einsum("j,jl->l", g1, ginv), g2))
    return t if as_jets else t.map(lambda j: j.value)


def laplacian_of_pairing_series(scene, point, f1: Expr, f2: Expr, order=None,
                                bundle=None, jets=None) -> EpsSeries:
    """a_k: the Laplacian series applied to the series-valued pairing.

    Both the operator coefficients and the operand coefficients depend on
    eps; the result is the single Cauchy product over combined order.
    """
    _require_dim4(scene)
    bundle = bundle or GeometryBundle.build(scene, point, order, degree=2)
    tjets = gradient_pairing_series(scene, point, f1, f2, order, bundle,
                                    as_jets=True, jets=jets)
    lap = LaplacianSeries(bundle)
    return lap.apply_to_series(tjets).map(lambda j: j.value)


def _hessian_tensor_series(bundle, fjet) -> EpsSeries:
    """Series of jets H_b[i, j] = d_i d_j f - Gamma^k_{ij, b} d_k f."""
    gamma = bundle.christoffel
    deg = gamma[0].degree
    hess = jet_hessian(fjet).truncated(deg)
    grad = jet_gradient(fjet).truncated(deg)
    coeffs = []
    for b, gam in enumerate(gamma):
        corr = jet_einsum("k,kij->ij", grad, gam)
        coeffs.append(hess - corr if b == 0 else -corr)
    return EpsSeries(coeffs)


def hessian_pairing_series(scene, point, f1: Expr, f2: Expr, order=None,
                           bundle=None, jets=None) -> EpsSeries:
    """b_k = (Hess f1)_{ij} (Hess f2)_{pq} g^{ip} g^{jq}, coefficient k."""
    _require_dim4(scene)
    bundle = bundle or GeometryBundle.build(scene, point, order, degree=2)
    j1, j2 = jets or _probe_jets(scene, point, f1, f2)
    h1 = _hessian_tensor_series(bundle, j1)
    h2 = _hessian_tensor_series(bundle, j2)
    deg = h1[0].degree
    ginv = bundle.inverse.map(lambda c: c.truncated(deg))
    s1 = series_einsum("ij,ip->jp", h1, ginv)
    s2 = series_einsum("jp,jq->pq", s1, ginv)
    return series_einsum("pq,pq->", s2, h2).map(lambda j: j.value)


def laplacian_product_series(scene, point, f1: Expr, f2: Expr, order=None,
                             bundle=None, jets=None) -> EpsSeries:
    """d = (Lap f1 series) * (Lap f2 series), a plain Cauchy product."""
    _require_dim4(scene)
    bundle = bundle or GeometryBundle.build(scene, point, order, degree=2)
    lap = LaplacianSeries(bundle)
    j1, j2 = jets or _probe_jets(scene, point, f1, f2)
    l1 = lap.apply_to_jet(j1).map(lambda j: j.value)
    l2 = lap.apply_to_jet(j2).map(lambda j: j.value)
    return series_combine(l1, l2, lambda x, y: x * y)


@dataclass
class A4Series:
    """Assembled density series with its per-order component breakdown."""

    series: EpsSeries
    curvature_pairing: EpsSeries   # (1/3) * Cauchy(r, t) per order
    laplacian_of_pairing: EpsSeries    # a
    hessian_pairing: EpsSeries         # b
    laplacian_product: EpsSeries       # d (enters with factor -1/2)

    def values(self):
        return list(self.series)

    def components(self, k):
        return {"rt/3": self.curvature_pairing[k],
                "a": self.laplacian_of_pairing[k],
                "b": self.hessian_pairing[k],
                "-d/2": -0.5 * self.laplacian_product[k]}


def a4_density_series(scene, point, f1: Expr, f2: Expr, order=None,
                      bundle=None) -> A4Series:
    """A4 coefficient k = (1/3) sum_{i+j=k} r_i t_j + a_k + b_k - d_k / 2."""
    _require_dim4(scene)
    bundle = bundle or GeometryBundle.build(scene, point, order, degree=2)
    jets = _probe_jets(scene, point, f1, f2)
    r = bundle.scalar_curvature().map(lambda j: j.value)
    t = gradient_pairing_series(scene, point, f1, f2, order, bundle, jets=jets)
    rt = series_combine(r, t, lambda x, y: x * y).map(lambda c: c / 3.0)
    a = laplacian_of_pairing_series(scene, point, f1, f2, order, bundle,
                                    jets=jets)
    b = hessian_pairing_series(scene, point, f1, f2, order, bundle, jets=jets)
    d = laplacian_product_series(scene, point, f1, f2, order, bundle,
                                 jets=jets)
    total = rt + a + b + d.map(lambda c: -0.5 * c)
    return A4Series(total, rt, a, b, d)


def conformal_covariance_residual(scene: MetricScene, point, f1: Expr,
                                  f2: Expr, order=None) -> list:
    """|A4^k at (f*gbar, f*gper) - f^{-2} A4^k at (gbar, gper)| per order."""
    _require_dim4(scene)
    if scene.conformal_factor is None:
        raise ConfigError("scene has no conformal factor")
    order = scene.order if order is None else order
    fval = scene.conformal_factor_values(point)
    scaled = scene.scaled_by(scene.conformal_factor)
    base = a4_density_series(scene, point, f1, f2, order).series
    resc = a4_density_series(scaled, point, f1, f2, order).series
    return [float(np.max(np.abs(resc[k] - base[k] / fval ** 2)))
            for k in range(order + 1)]


@dataclass
class InvariantDensityGrid:
    """The nine densities A4^j * c_l * sqrt(det gbar), j, l in {0, 1, 2}."""

    entries: np.ndarray   # shape (3, 3) (+ batch dims), [j, l]

    def __getitem__(self, jl):
        j, l = jl
        return self.entries[..., j, l]


def bimetric_invariant_grid(scene: MetricScene, point, f1: Expr, f2: Expr,
                            order=None) -> InvariantDensityGrid:
    _require_dim4(scene)
    order = scene.order if order is None else order
    if order < 2:
        raise ConfigError("the density grid needs series order >= 2")
    a4 = a4_density_series(scene, point, f1, f2, order).series
    G = perturbation_ratio_matrix(scene, point)
    c1, c2 = volume_coefficients_closed_form(G)
    vol = sqrt_det_base(scene, point)
    c = [np.ones_like(c1), c1, c2]
    rows = [np.stack([np.asarray(a4[j] * c[l] * vol) for l in range(3)],
                     axis=-1) for j in range(3)]
    return InvariantDensityGrid(np.stack(rows, axis=-2))
