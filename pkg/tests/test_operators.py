import numpy as np
import pytest

from bimetric import (CONVENTIONS, ConfigError, builtin_scene,
                      conformal_coupling, conformal_laplacian_series_apply,
                      intertwining_residuals, laplacian_series_apply,
                      parse_expr, scalar_curvature_series)


def test_flat_laplacian_sign_convention():
    # the operator is the geometer's Laplacian: -sum of second derivatives
    scene = builtin_scene("euclidean4")
    p = (0.0, 0.0, 0.0, 0.0)
    out = laplacian_series_apply(scene, p, parse_expr("x1*x1"), 2).values()
    assert abs(out[0] - (-2.0)) < 1e-13
    assert abs(out[1]) < 1e-13
    assert abs(out[2]) < 1e-13


def test_flat_laplacian_on_trig():
    scene = builtin_scene("euclidean4")
    p = (0.3, 0.0, 0.0, 0.0)
    out = laplacian_series_apply(scene, p, parse_expr("sin(x1)"), 2).values()
    assert abs(out[0] - np.sin(0.3)) < 1e-13


def test_conformal_coupling_value():
    # (n-2)/(4(n-1)) at n = 4
    assert abs(conformal_coupling(4) - 1.0 / 6.0) < 1e-15


def test_conformal_laplacian_adds_curvature_term(scenes, sample_points):
    u = parse_expr("sin(x1) + 0.5*cos(x2)")
    for scene in scenes.values():
        p = sample_points[0]
        lap = np.asarray(list(laplacian_series_apply(scene, p, u,
                                                     2).values()))
        clap = np.asarray(list(conformal_laplacian_series_apply(
            scene, p, u, 2).values()))
        r = scalar_curvature_series(scene, p, 2)
        uval = u.jet(np.asarray(p), 0).value
        expected = lap + conformal_coupling(4) * np.asarray(
            [c.value for c in r]) * uval
        assert np.allclose(clap, expected, atol=1e-10)


def test_intertwining_needs_conformal_factor(scenes):
    with pytest.raises(ConfigError):
        intertwining_residuals(scenes["euclidean4"], (0, 0, 0, 0),
                               parse_expr("x1"))


def test_intertwining_direct_convention_order0(scenes):
    f = parse_expr("1.3 + 0.2*sin(x1)")
    for name in ("euclidean4", "conformally_flat", "torus_bump"):
        scene = scenes[name].with_conformal_factor(f)
        res = intertwining_residuals(scene, (0.2, -0.1, 0.3, 0.1),
                                     scene.probe("f1"), "direct", 2)
        assert res[0] < 1e-9


def test_unknown_convention_rejected(scenes):
    scene = scenes["euclidean4"].with_conformal_factor(parse_expr("2"))
    with pytest.raises(ConfigError):
        intertwining_residuals(scene, (0, 0, 0, 0), parse_expr("x1"),
                               "mystery")


def test_conventions_tuple():
    assert set(CONVENTIONS) == {"direct", "yamabe"}
