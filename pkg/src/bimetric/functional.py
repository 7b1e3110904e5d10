"""Quadrature of density series over periodic charts.

The compact manifold is realized as a flat-topology 4-torus chart with a
uniform trapezoidal rule, which is spectrally accurate for smooth periodic
integrands.  Node evaluation is chunked and batch-vectorized; the reduction
is a fixed-order pairwise sum so reports are bit-reproducible regardless of
chunk size or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connes import a4_density_series
from .errors import ConfigError, NumericDomainError
from .exprs import Expr, Mul
from .scene import MetricScene
from .series import EpsSeries, series_combine


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform tensor grid on [0, period)^dim with equal weights."""

    m: int = 16
    dim: int = 4
    period: float = 2.0 * np.pi

    def __post_init__(self):
        if self.m < 2:
            raise ConfigError("quadrature grid needs at least 2 points per axis")

    @property
    def node_count(self):
        return self.m ** self.dim

    @property
    def weight(self):
        return (self.period / self.m) ** self.dim

    def nodes(self):
        """All nodes in lexicographic order, shape (m^dim, dim)."""
        axis = np.linspace(0.0, self.period, self.m, endpoint=False)
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=-1)

    def refined(self):
        return QuadratureGrid(2 * self.m, self.dim, self.period)


def _check_periodic(scene: MetricScene, grid: QuadratureGrid):
    if not scene.periodic:
        raise ConfigError("integration needs a periodic scene")
    if abs(scene.period - grid.period) > 1e-12:
        raise ConfigError(
            f"grid period {grid.period} != scene period {scene.period}")
    if scene.dim != grid.dim:
        raise ConfigError("grid dimension does not match the scene")


def _pairwise_sum(values: np.ndarray) -> float:
    """Deterministic pairwise reduction over the leading axis."""
    v = np.asarray(values, dtype=float)
    while v.shape[0] > 1:
        n = v.shape[0]
        if n % 2:
            head, v = v[:1], v[1:]
            v = np.concatenate([v[0::2] + v[1::2], head], axis=0)
        else:
            v = v[0::2] + v[1::2]
    return v[0]


_CHUNK = 4096


def _chunked(coords, fn):
    """Evaluate fn on coordinate chunks; returns per-chunk pairwise sums."""
    out = []
    for start in range(0, coords.shape[0], _CHUNK):
        block = fn(coords[start:start + _CHUNK])
        block = np.asarray(block, dtype=float)
        if not np.all(np.isfinite(block)):
            bad = start + int(np.argmax(~np.isfinite(
                block.reshape(block.shape[0], -1)).any(axis=-1)))
            raise NumericDomainError(
                f"non-finite integrand value near node index {bad}")
        out.append(block)
    return out


def integrate_scalar(scene: MetricScene, grid: QuadratureGrid, density_fn):
    """Quadrature of a plain scalar density (used by the eps oracle)."""
    _check_periodic(scene, grid)
    chunks = _chunked(grid.nodes(), density_fn)
    partial = np.stack([_pairwise_sum(c) for c in chunks])
    return grid.weight * _pairwise_sum(partial)


def integrate_density_series(scene: MetricScene, grid: QuadratureGrid,
                             density_producer) -> EpsSeries:
    """Coefficient-wise quadrature of density * sqrt(det gbar).

    ``density_producer(coords)`` returns an EpsSeries of batched values for
    a block of nodes; the base volume element is applied here.
    """
    _check_periodic(scene, grid)

    def block(coords):
        series = density_producer(coords)
        gbar = scene.eval_matrix_jet(scene.base_entry, coords, 0).value
        vol = np.sqrt(np.linalg.det(gbar))
        return np.stack([np.broadcast_to(c * vol, vol.shape)
                         for c in series], axis=-1)

    chunks = _chunked(grid.nodes(), block)
    partial = np.stack([_pairwise_sum(c) for c in chunks])
    total = grid.weight * _pairwise_sum(partial)
    return EpsSeries(list(total))


def a4_functional_integrand(scene: MetricScene, f0: Expr, f1: Expr, f2: Expr):
    """coords -> series of f0 * (A4-series Cauchy volume-ratio series)."""

    def produce(coords):
        a4 = a4_density_series(scene, coords, f1, f2).series
        from .geometry import volume_density_series
        vol = volume_density_series(scene, coords)
        f0v = f0.jet(coords, 0).value
        return series_combine(a4, vol, lambda x, y: x * y).map(
            lambda c: f0v * c)

    return produce


@dataclass
class WresVariationReport:
    """Integrated functional value and its first two eps-variations."""

    value: float
    first_variation: float
    second_variation: float
    integrated_series: EpsSeries

    @classmethod
    def from_series(cls, series: EpsSeries):
        # Taylor: d/deps at 0 is coefficient 1; d2/deps2 is 2 * coefficient 2.
        return cls(float(series[0]), float(series[1]),
                   2.0 * float(series[2]), series)


def wres_variations(scene: MetricScene, grid: QuadratureGrid, f0: Expr,
                    f1: Expr, f2: Expr) -> WresVariationReport:
    """Value and first/second eps-variations of the integrated functional."""
    if scene.dim != 4:
        raise ConfigError("the integrated density functional needs dim 4")
    series = integrate_density_series(
        scene, grid, a4_functional_integrand(scene, f0, f1, f2))
    return WresVariationReport.from_series(series)


def hochschild_residual(scene: MetricScene, grid: QuadratureGrid, f0: Expr,
                        f1: Expr, f2: Expr, f3: Expr, eps_order: int = 0):
    """Coboundary residual of phi(f0, f1, f2) = integrated density, order k.

    Returns (residual, error_bar): the standard coboundary

        b phi (f0,f1,f2,f3) = phi(f0 f1, f2, f3) - phi(f0, f1 f2, f3)
                              + phi(f0, f1, f2 f3) - phi(f3 f0, f1, f2)

    and a grid-refinement error bar (the change of the residual when m is
    doubled).  Diagnostic only: the coboundary convention is a choice.
    """

    def phi(g, a, b, c):
        series = integrate_density_series(
            scene, g, a4_functional_integrand(scene, a, b, c))
        return float(series[eps_order])

    def residual(g):
        return (phi(g, Mul(f0, f1), f2, f3) - phi(g, f0, Mul(f1, f2), f3)
                + phi(g, f0, f1, Mul(f2, f3)) - phi(g, Mul(f3, f0), f1, f2))

    coarse = residual(grid)
    fine = residual(grid.refined())
    return fine, abs(fine - coarse) + 1e-12
