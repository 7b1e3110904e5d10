"""Perturbation series of the core geometric quantities.

Everything is computed by generic truncated-series arithmetic over jet-valued
coefficients: the metric series has exactly two nonzero coefficients (base and
perturbation), and the inverse, Christoffel, curvature and volume series fall
out of Cauchy products and the Neumann matrix inversion.  Closed-form
transcriptions of the same coefficients live in ``appendix`` as a cross-check,
not here.

Index conventions: Christoffel arrays are stored as Gamma[k, i, j] (upper
index first, symmetric in i, j).  The curvature sign convention makes the
round 4-sphere come out with scalar curvature +12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import (Jet, jet_einsum, jet_gradient, jet_matrix_inverse,
                   jet_partial_derivative, jet_stack)
from .scene import MetricScene, _as_coords
from .series import (EpsSeries, series_combine, series_einsum,
                     series_matrix_inverse, series_sqrt)


def _zero_like(jet: Jet) -> Jet:
    return jet.map(np.zeros_like)


def metric_series(scene: MetricScene, point, order=None, degree=2) -> EpsSeries:
    """Series of matrix jets [gbar, gper, 0, ...] for g = gbar + eps*gper."""
    order = scene.order if order is None else order
    gbar, gper = scene.eval_metric_pair(point, degree)
    coeffs = [gbar, gper] + [_zero_like(gbar)] * (order - 1)
    return EpsSeries(coeffs[:order + 1])


def _pair_inverse_series(g: EpsSeries) -> EpsSeries:
    """Inverse of a series with only two nonzero coefficients [A0, A1, 0..]:
    coefficient k is A0^{-1} (-A1 A0^{-1})^k, built with k matrix products
    instead of the generic recursion."""
    x0 = jet_matrix_inverse(g[0])
    coeffs = [x0]
    if g.order >= 1:
        m = jet_einsum("ij,jk->ik", -x0, g[1])
        for _ in range(g.order):
            coeffs.append(jet_einsum("ij,jk->ik", m, coeffs[-1]))
    return EpsSeries(coeffs)


def inverse_metric_series(scene: MetricScene, point, order=None,
                          degree=2) -> EpsSeries:
    return _pair_inverse_series(metric_series(scene, point, order, degree))


def _first_derivative_tensor(gjet: Jet) -> Jet:
    """Jet with trailing (l, i, j) = d_l g_ij, degree one lower."""
    return jet_stack([jet_partial_derivative(gjet, l) for l in range(gjet.dim)],
                     axis=-3)


def christoffel_terms(gjet: Jet) -> Jet:
    """T[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij as a single tensor jet."""
    d = _first_derivative_tensor(gjet)   # d[l, i, j] = d_l g_ij
    di = d.map(lambda v: np.swapaxes(v, -3, -2))        # di[i, l, j] -> careful
    # We want T[l, i, j]; build from d via explicit transposes:
    #   d_i g_jl = d[i, j, l] -> transpose axes (-3,-2,-1) as (i, j, l)->(l, i, j)
    t1 = d.map(lambda v: np.moveaxis(v, [-3, -2, -1], [-2, -1, -3]))  # d[i,j,l]->T
    t2 = d.map(lambda v: np.moveaxis(v, [-3, -2, -1], [-1, -2, -3]))  # d[j,i,l]->T
    del di
    return t1 + t2 - d


@dataclass
class GeometryBundle:
    """Shared per-(scene, points) series cache for the downstream modules."""

    scene: MetricScene
    point: object
    order: int
    metric: EpsSeries          # matrix jets, degree `degree`
    inverse: EpsSeries         # matrix jets
    christoffel: EpsSeries     # trailing (k, i, j), degree-1 jets
    degree: int

    @classmethod
    def build(cls, scene, point, order=None, degree=2):
        order = scene.order if order is None else order
        g = metric_series(scene, point, order, degree)
        ginv = _pair_inverse_series(g)
        tser = EpsSeries([christoffel_terms(c) for c in g])
        ginv_low = EpsSeries([c.truncated(degree - 1) for c in ginv])
        gamma = series_einsum("kl,lij->kij", ginv_low, tser) * 0.5
        return cls(scene, point, order, g, ginv, gamma, degree)

    # -- curvature -----------------------------------------------------------

    def scalar_curvature(self) -> EpsSeries:
        """Series of scalar jets for the scalar curvature."""
        gamma = self.christoffel
        dgamma = EpsSeries([_first_derivative_tensor(c) for c in gamma])
        ginv = EpsSeries([c.truncated(dgamma[0].degree) for c in self.inverse])
        gamma_flat = EpsSeries([c.truncated(dgamma[0].degree) for c in gamma])
        # r = g^{jl} d_k Gam^k_jl + g^{jl} Gam^a_jl Gam^k_ka
        #   - g^{jl} d_j Gam^k_kl - g^{jl} Gam^a_kl Gam^k_ja
        # dgamma trailing layout is (upper, derivative, lower, lower).
        t1 = series_einsum("jl,kkjl->", ginv, dgamma)
        t3 = series_einsum("jl,kjkl->", ginv, dgamma)
        gg1 = series_einsum("ajl,kka->jl", gamma_flat, gamma_flat)
        t2 = series_einsum("jl,jl->", ginv, gg1)
        gg2 = series_einsum("akl,kja->jl", gamma_flat, gamma_flat)
        t4 = series_einsum("jl,jl->", ginv, gg2)
        return t1 + t2 - t3 - t4


def christoffel_series(scene, point, order=None, degree=2) -> EpsSeries:
    return GeometryBundle.build(scene, point, order, degree).christoffel


def scalar_curvature_series(scene, point, order=None, degree=2) -> EpsSeries:
    return GeometryBundle.build(scene, point, order, degree).scalar_curvature()


# -- volume density -----------------------------------------------------------

def perturbation_ratio_matrix(scene, point):
    """G = gbar^{-1} gper (values only)."""
    gbar, gper = scene.eval_metric_pair(point, degree=0)
    return np.linalg.solve(gbar.value, gper.value)


def volume_coefficients_closed_form(G):
    """(c1, c2) from the trace identities of the determinant expansion."""
    tr = np.trace(G, axis1=-2, axis2=-1)
    tr2 = np.trace(np.einsum("...ij,...jk->...ik", G, G), axis1=-2, axis2=-1)
    c1 = 0.5 * tr
    # sum_{j<l} (G_jj G_ll - G_jl G_lj) = (tr^2 - tr(G^2)) / 2
    c2 = 0.25 * (tr * tr - tr2) - 0.125 * tr * tr
    return c1, c2


def det_ratio_series(G, order) -> EpsSeries:
    """det(I + eps G) as a scalar series via Newton's trace identities."""
    n = G.shape[-1]
    powers = [np.eye(n) if G.ndim == 2 else
              np.broadcast_to(np.eye(n), G.shape).copy()]
    for _ in range(min(order, n)):
        powers.append(np.einsum("...ij,...jk->...ik", powers[-1], G))
    traces = [np.trace(p, axis1=-2, axis2=-1) for p in powers]
    e = [np.ones_like(traces[0])]
    for k in range(1, order + 1):
        if k > n:
            e.append(np.zeros_like(traces[0]))
            continue
        acc = 0.0
        for i in range(1, k + 1):
            acc = acc + ((-1) ** (i - 1)) * e[k - i] * traces[i]
        e.append(acc / k)
    return EpsSeries(e)


def volume_density_series(scene, point, order=None) -> EpsSeries:
    """sqrt(det g / det gbar) series: [1, c1, c2, ...].

    The first two orders are also computed in closed form from the trace
    identities, and the two routes must agree; the series route is returned.
    """
    order = scene.order if order is None else order
    G = perturbation_ratio_matrix(scene, point)
    result = series_sqrt(det_ratio_series(G, order))
    if order >= 2:
        c1, c2 = volume_coefficients_closed_form(G)
        gap = max(float(np.max(np.abs(result[1] - c1))),
                  float(np.max(np.abs(result[2] - c2))))
        if gap > 1e-10:
            raise AssertionError(
                f"volume-coefficient routes disagree by {gap:.3e}")
    return result


def sqrt_det_base(scene, point):
    gbar = scene.eval_matrix_jet(scene.base_entry, point, 0)
    return np.sqrt(np.linalg.det(gbar.value))
