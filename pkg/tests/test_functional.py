import numpy as np
import pytest

from bimetric import (ConfigError, QuadratureGrid, builtin_scene,
                      hochschild_residual, parse_expr, wres_variations)
from bimetric.functional import integrate_scalar


def test_grid_nodes_and_weight():
    grid = QuadratureGrid(m=4)
    assert grid.node_count == 4 ** 4
    assert np.isclose(grid.weight * grid.node_count, (2 * np.pi) ** 4)
    fine = grid.refined()
    assert fine.m == 8


def test_constant_integral_on_flat_torus():
    scene = builtin_scene("torus_bump")
    # strip the bump: integrate 1 dVol over the flat 4-torus
    flat = type(scene)(scene.dim, {(i, i): parse_expr("1")
                                   for i in range(4)}, {}, periodic=True)
    val = integrate_scalar(
        flat, QuadratureGrid(m=4),
        lambda coords: np.ones(np.asarray(coords).shape[:-1]))
    assert np.isclose(val, (2 * np.pi) ** 4, rtol=1e-12)


def test_trig_integral_spectral_accuracy():
    scene = builtin_scene("torus_bump")
    flat = type(scene)(scene.dim, {(i, i): parse_expr("1")
                                   for i in range(4)}, {}, periodic=True)
    # integral of sin(x1)^2 = (1/2)(2 pi)^4; trapezoid on periodic data
    # resolves a 2-mode integrand exactly already at m = 4
    val = integrate_scalar(
        flat, QuadratureGrid(m=4),
        lambda coords: np.sin(np.asarray(coords)[..., 0]) ** 2)
    assert np.isclose(val, 0.5 * (2 * np.pi) ** 4, rtol=1e-12)


def test_nonperiodic_scene_rejected():
    scene = builtin_scene("conformally_flat")
    with pytest.raises(ConfigError):
        wres_variations(scene, QuadratureGrid(m=4), scene.probe("f0"),
                        scene.probe("f1"), scene.probe("f2"))


def test_wres_variations_converge_under_refinement():
    scene = builtin_scene("torus_bump")
    probes = [scene.probe(k) for k in ("f0", "f1", "f2")]
    coarse = wres_variations(scene, QuadratureGrid(m=8), *probes)
    fine = wres_variations(scene, QuadratureGrid(m=12), *probes)
    assert abs(fine.first_variation - coarse.first_variation) < 1e-2
    assert np.isfinite(coarse.second_variation)


def test_hochschild_residual_reports_error_bar():
    scene = builtin_scene("torus_bump")
    f = [parse_expr(t) for t in
         ("1 + 0.3*sin(x1)", "cos(x2)", "1 + 0.2*sin(x3)", "cos(x4)")]
    residual, bar = hochschild_residual(scene, QuadratureGrid(m=4), *f)
    assert bar > 0
    assert np.isfinite(residual)
