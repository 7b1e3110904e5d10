import numpy as np
import pytest

from bimetric import (ConfigError, builtin_scene, exact_at_eps,
                      extract_series_fd, parse_expr,
                      scalar_curvature_series, series_evaluator,
                      spatial_fd_check)


def test_extraction_recovers_polynomial():
    out = extract_series_fd(lambda e: 2.0 - 3.0 * e + 5.0 * e * e, order=2)
    assert np.allclose(out.coefficients, [2.0, -3.0, 5.0], atol=1e-9)


def test_extraction_order_cap():
    with pytest.raises(ConfigError):
        extract_series_fd(lambda e: e, order=3)


def test_exact_at_eps_matches_series_evaluation(scenes, sample_points):
    scene = scenes["conformally_flat"]
    p = sample_points[0]
    series = scalar_curvature_series(scene, p, 2)
    for eps in (0.0, 1e-3, -1e-3):
        exact = exact_at_eps(scene, eps, "r", p)
        approx = sum(series[k].value * eps ** k for k in range(3))
        assert abs(exact - approx) < 1e-8


def test_series_evaluator_feeds_extraction(scenes, sample_points):
    scene = scenes["torus_bump"]
    p = sample_points[1]
    fd = extract_series_fd(series_evaluator(scene, "r", p), order=2)
    series = scalar_curvature_series(scene, p, 2)
    engine = [series[k].value for k in range(3)]
    scale = max(max(abs(v) for v in engine), 1.0)
    for e, c in zip(engine, fd.coefficients):
        assert abs(e - c) / scale < 1e-6


def test_unknown_quantity_rejected(scenes):
    with pytest.raises(ConfigError):
        exact_at_eps(scenes["euclidean4"], 0.0, "mystery", (0, 0, 0, 0))


@pytest.mark.parametrize("text", [
    "x1*x1*x2 - x3",
    "sin(x1)*cos(x2)",
    "exp(0.2*x3)",
    "sqrt(2 + x4*x4)",
])
def test_spatial_fd_check_small(text):
    p = (0.3, -0.2, 0.1, 0.4)
    for degree in (1, 2, 3):
        assert spatial_fd_check(parse_expr(text), p, degree) < 1e-5


def test_spatial_fd_check_polynomials_tight():
    p = (0.3, -0.2, 0.1, 0.4)
    for text in ("x1*x1*x2 - x3", "x1^3 + x2*x3*x4"):
        for degree in (1, 2, 3):
            assert spatial_fd_check(parse_expr(text), p, degree) < 1e-9
