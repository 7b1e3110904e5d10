"""Perturbation series of the Laplace operator and its conformal variant.

Operators are never materialized as matrices: each series coefficient is a
rule that eats a spatial jet of the operand and returns a (possibly
jet-valued) result.  The sign convention is the geometer's positive
Laplacian,

    L u = -g^{ij} (d_i d_j u - Gamma^k_{ij} d_k u),

and the conformally covariant variant adds the scalar-curvature potential
(n-2)/(4(n-1)) * r.  The intertwining check of the covariance law is run
under two candidate conventions for how the conformal factor enters, and
reports residuals for both instead of guessing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .exprs import Expr, Func, Mul, parse_expr
from .geometry import GeometryBundle
from .jets import Jet, jet_einsum, jet_gradient, jet_hessian, jet_powi, jet_sqrt
from .scene import MetricScene, _as_coords
from .series import EpsSeries, series_combine, series_einsum


class LaplacianSeries:
    """Coefficients L_0, L_1, L_2 of the Laplacian of g = gbar + eps*gper.

    Built once per (scene, point) and applied to many operand jets.  The
    operand must carry spatial degree >= 2; applying coefficient m to a
    degree-d jet returns a degree-(d-2) jet.
    """

    def __init__(self, bundle: GeometryBundle):
        self.bundle = bundle
        self.inverse = bundle.inverse                      # matrix jets
        # V^k = g^{ij} Gamma^k_{ij} as a vector-jet series.
        ginv_low = EpsSeries([c.truncated(bundle.christoffel[0].degree)
                              for c in bundle.inverse])
        self.gamma_trace = series_einsum("ij,kij->k", ginv_low,
                                         bundle.christoffel)

    @property
    def order(self):
        return self.bundle.order

    def apply_coefficient(self, m: int, ujet: Jet) -> Jet:
        """L_m applied to one operand jet; returns a degree-(d-2) jet."""
        hess = jet_hessian(ujet)
        grad = jet_gradient(ujet)
        out_deg = hess.degree
        ginv = self.inverse[m].truncated(min(out_deg, self.inverse[m].degree))
        vk = self.gamma_trace[m].truncated(
            min(out_deg, self.gamma_trace[m].degree))
        term = -jet_einsum("ij,ij->", ginv, hess.truncated(ginv.degree))
        term = term + jet_einsum("k,k->", vk, grad.truncated(vk.degree))
        return term

    def apply_to_jet(self, ujet: Jet) -> EpsSeries:
        """Series [L_0 u, ..., L_N u] of jets for a fixed operand."""
        return EpsSeries([self.apply_coefficient(m, ujet)
                          for m in range(self.order + 1)])

    def apply_to_series(self, useries: EpsSeries) -> EpsSeries:
        """Cauchy product across operator order and operand order."""
        coeffs = []
        for k in range(self.order + 1):
            acc = None
            for m in range(k + 1):
                term = self.apply_coefficient(m, useries[k - m])
                acc = term if acc is None else acc + term
            coeffs.append(acc)
        return EpsSeries(coeffs)


@dataclass
class OperatorSeriesApplication:
    """Values (L_0 u, L_1 u, L_2 u) at a point for operator series L."""

    series: EpsSeries   # scalar values per order

    def values(self):
        return list(self.series)


def _probe_jet(scene: MetricScene, point, u: Expr, degree=3) -> Jet:
    return u.jet(_as_coords(point), degree)


def laplacian_series_apply(scene, point, u: Expr, order=None,
                           bundle=None) -> OperatorSeriesApplication:
    """Series of the Laplacian of gbar + eps*gper applied to the probe u."""
    bundle = bundle or GeometryBundle.build(scene, point, order, degree=2)
    lap = LaplacianSeries(bundle)
    applied = lap.apply_to_jet(_probe_jet(scene, point, u, degree=2))
    return OperatorSeriesApplication(applied.map(lambda j: j.value))


def conformal_coupling(n: int) -> float:
    return (n - 2) / (4.0 * (n - 1))


def conformal_laplacian_series_apply(scene, point, u: Expr, order=None,
                                     bundle=None) -> OperatorSeriesApplication:
    """Laplacian series plus the curvature potential (n-2)/(4(n-1)) * r_k."""
    bundle = bundle or GeometryBundle.build(scene, point, order, degree=2)
    lap = laplacian_series_apply(scene, point, u, order, bundle).series
    r = bundle.scalar_curvature().map(lambda j: j.value)
    uval = u.jet(_as_coords(point), 0).value
    c = conformal_coupling(scene.dim)
    pot = r.map(lambda rk: c * rk * uval)
    return OperatorSeriesApplication(lap + pot)


CONVENTIONS = ("direct", "yamabe")


def _factor_power_expr(f: Expr, num: int, den: int) -> Expr:
    """f^(num/den) as an expression tree, for den in {1, 2, 4}."""
    if den not in (1, 2, 4):
        raise ConfigError(f"unsupported fractional power denominator {den}")
    e = f
    if den == 2:
        e = Func("sqrt", f)
    elif den == 4:
        e = Func("sqrt", Func("sqrt", f))
    out = e
    for _ in range(num - 1):
        out = Mul(out, e)
    return out


def intertwining_residuals(scene: MetricScene, point, u: Expr,
                           convention: str = "direct", order=None) -> list:
    """Per-order residual of the conformal-factor intertwining law.

    Under ``direct`` the rescaled pair is (f*gbar, f*gper) and the check is

        f^{(n+2)/4} * (L~ at f*(gbar,gper))_k u
            = (L~ at (gbar,gper))_k (f^{(n-2)/4} * u)

    order by order; under ``yamabe`` the factor enters as f^{4/(n-2)} times
    the metrics instead.  Neither convention is asserted; both are measured.
    """
    if convention not in CONVENTIONS:
        raise ConfigError(f"unknown intertwining convention '{convention}'")
    if scene.conformal_factor is None:
        raise ConfigError("scene has no conformal factor")
    n = scene.dim
    order = scene.order if order is None else order
    f = scene.conformal_factor
    scene.conformal_factor_values(point)

    if convention == "direct":
        metric_factor = f
    else:
        # f^{4/(n-2)}: at n = 4 this is f^2.
        if (4 % (n - 2)) != 0:
            raise ConfigError("yamabe convention needs 4/(n-2) integer")
        metric_factor = _factor_power_expr(f, 4 // (n - 2), 1)

    scaled = scene.scaled_by(metric_factor)
    lhs_weight = _factor_power_expr(f, n + 2, 4)
    rhs_probe = Mul(_factor_power_expr(f, n - 2, 4), u)

    lhs_inner = conformal_laplacian_series_apply(scaled, point, u, order).series
    wval = lhs_weight.jet(_as_coords(point), 0).value
    lhs = lhs_inner.map(lambda c: wval * c)
    rhs = conformal_laplacian_series_apply(scene, point, rhs_probe,
                                           order).series
    return [float(np.max(np.abs(lhs[k] - rhs[k]))) for k in range(order + 1)]
