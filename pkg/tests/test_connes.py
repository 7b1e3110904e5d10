import numpy as np
import pytest

from bimetric import (ConfigError, a4_density_series,
                      bimetric_invariant_grid, builtin_scene,
                      conformal_covariance_residual,
                      gradient_pairing_series, hessian_pairing_series,
                      laplacian_of_pairing_series, laplacian_product_series,
                      parse_expr)

ORIGIN = (0.0, 0.0, 0.0, 0.0)


def test_orthogonal_gradients_pair_to_zero():
    scene = builtin_scene("euclidean4")
    t = gradient_pairing_series(scene, ORIGIN, parse_expr("x1"),
                                parse_expr("x2"), 2)
    assert all(abs(c) < 1e-14 for c in t)


def test_rank_one_perturbation_pairing_is_geometric_series():
    # gbar = I, gper = diag(1,0,0,0), f1 = f2 = x1: exact pairing 1/(1+eps)
    base = {(i, i): parse_expr("1") for i in range(4)}
    pert = {(0, 0): parse_expr("1")}
    scene = type(builtin_scene("euclidean4"))(4, base, pert)
    t = gradient_pairing_series(scene, ORIGIN, parse_expr("x1"),
                                parse_expr("x1"), 2)
    assert np.allclose(list(t), [1.0, -1.0, 1.0], atol=1e-13)


def test_flat_quadratic_hand_values():
    scene = builtin_scene("euclidean4")
    f = parse_expr("x1*x1")
    a = laplacian_of_pairing_series(scene, ORIGIN, f, f, 2)
    b = hessian_pairing_series(scene, ORIGIN, f, f, 2)
    d = laplacian_product_series(scene, ORIGIN, f, f, 2)
    assert abs(a[0] - (-8.0)) < 1e-10
    assert abs(b[0] - 4.0) < 1e-10
    assert abs(d[0] - 4.0) < 1e-10
    # density = (1/3) r t + a + b - d/2 = 0 - 8 + 4 - 2
    a4 = a4_density_series(scene, ORIGIN, f, f, 2)
    assert abs(a4.values()[0] - (-6.0)) < 1e-10


def test_a4_components_sum_to_total(scenes, sample_points):
    scene = scenes["conformally_flat"]
    p = sample_points[0]
    a4 = a4_density_series(scene, p, scene.probe("f1"), scene.probe("f2"), 2)
    for k in range(3):
        total = sum(a4.components(k).values())
        assert np.isclose(total, a4.values()[k], atol=1e-12)


def test_covariance_residual_needs_conformal_factor(scenes):
    scene = scenes["euclidean4"]
    with pytest.raises(ConfigError):
        conformal_covariance_residual(scene, ORIGIN, parse_expr("x1"),
                                      parse_expr("x2"), 2)


def test_covariance_residual_small(scenes, sample_points):
    f = parse_expr("1.4 + 0.3*cos(x2)")
    for name in ("conformally_flat", "torus_bump"):
        scene = scenes[name].with_conformal_factor(f)
        for p in sample_points:
            res = conformal_covariance_residual(
                scene, p, scene.probe("f1"), scene.probe("f2"), 2)
            assert max(res) < 1e-9


def test_invariant_grid_shape_and_scaling(scenes, sample_points):
    scene = scenes["conformally_flat"].with_conformal_factor(
        parse_expr("1.2 + 0.1*sin(x3)"))
    p = sample_points[1]
    grid = bimetric_invariant_grid(scene, p, scene.probe("f1"),
                                   scene.probe("f2"), 2)
    assert grid.entries.shape == (3, 3)
    scaled = bimetric_invariant_grid(
        scene.scaled_by(scene.conformal_factor), p, scene.probe("f1"),
        scene.probe("f2"), 2)
    rel = np.abs(scaled.entries - grid.entries) / np.maximum(
        np.abs(grid.entries), 1.0)
    assert np.max(rel) < 1e-9


def test_grid_needs_order_two(scenes):
    scene = scenes["euclidean4"]
    with pytest.raises(ConfigError):
        bimetric_invariant_grid(scene, ORIGIN, parse_expr("x1"),
                                parse_expr("x2"), 1)
