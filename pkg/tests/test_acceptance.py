"""Acceptance criteria, one test (and one pass/fail line) per criterion.

Tolerances are pinned; campaign sizes and runtime budgets are asserted
inside the tests.  Informational criteria report via stdout and never gate
beyond completing successfully.
"""

import time
import zlib

import numpy as np
import pytest

from bimetric import (COEFFICIENTS, MetricScene, QuadratureGrid,
                      a4_density_series, appendix_eval,
                      bimetric_invariant_grid, builtin_scene,
                      conformal_covariance_residual, crosscheck_appendix,
                      engine_value, extract_series_fd,
                      gradient_pairing_series, hessian_pairing_series,
                      hochschild_residual, intertwining_residuals,
                      inverse_metric_series, laplacian_of_pairing_series,
                      laplacian_product_series, parse_expr,
                      perturbation_ratio_matrix, scalar_curvature_series,
                      series_evaluator, spatial_fd_check,
                      volume_coefficients_closed_form,
                      volume_density_series, wres_variations)
from bimetric.operators import CONVENTIONS

FACTORS = [parse_expr(t) for t in
           ("1.3 + 0.2*sin(x1)", "exp(0.15*cos(x2))",
            "1.5 + 0.25*cos(x3)*sin(x4)")]


def _campaign_scenes(count):
    """Deterministic scene campaign: the fixed catalog plus seeded draws."""
    fixed = ["euclidean4", "sphere4_stereo", "conformally_flat",
             "torus_bump"]
    out = [(name, builtin_scene(name)) for name in fixed[:count]]
    seed = 0
    while len(out) < count:
        out.append((f"random_smooth_{seed}",
                    builtin_scene("random_smooth", seed=seed)))
        seed += 1
    return out


def _points(seed, count=5, scale=0.6):
    rng = np.random.default_rng(seed)
    return [tuple(rng.uniform(-scale, scale, 4)) for _ in range(count)]


def _constant_scene(seed):
    """Constant SPD base and constant symmetric perturbation."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4))
    base_mat = a @ a.T + 4.0 * np.eye(4)
    pert_mat = 0.5 * (lambda b: b + b.T)(rng.normal(size=(4, 4)))
    base = {(i, j): parse_expr(f"{base_mat[i, j]!s}")
            for i in range(4) for j in range(i, 4)}
    pert = {(i, j): parse_expr(f"{pert_mat[i, j]!s}")
            for i in range(4) for j in range(i, 4)}
    return MetricScene(4, base, pert)


def test_criterion_01_inverse_metric_series():
    start = time.perf_counter()
    for sid, scene in _campaign_scenes(20):
        for p in _points(zlib.crc32(sid.encode()) % 2 ** 32):
            g, h = scene.eval_metric_pair(p, degree=0)
            gmat, hmat = g.value, h.value
            fd = extract_series_fd(
                lambda e: np.linalg.inv(gmat + e * hmat), order=2)
            engine = [c.value for c in inverse_metric_series(scene, p, 2)]
            scale = max(np.max(np.abs(engine[0])), 1.0)
            for k in range(3):
                assert np.max(np.abs(engine[k] - fd.coefficients[k])) \
                    < 1e-7 * scale, (sid, k)
    # the equal-pair case collapses to gbar^{-1} * 1/(1+eps)
    scene = builtin_scene("conformally_flat")
    equal = MetricScene(4, scene.base, scene.base)
    p = (0.2, -0.1, 0.3, 0.1)
    gi = np.linalg.inv(equal.eval_metric_pair(p, degree=0)[0].value)
    series = inverse_metric_series(equal, p, 2)
    for k, sign in enumerate((1.0, -1.0, 1.0)):
        assert np.max(np.abs(series[k].value - sign * gi)) < 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed <= 5.0, f"runtime budget exceeded: {elapsed:.1f}s"


def test_criterion_02_curvature_series_vs_oracle():
    start = time.perf_counter()
    for sid, scene in _campaign_scenes(20):
        for p in _points(zlib.crc32(sid.encode()) % 2 ** 31):
            engine = [c.value
                      for c in scalar_curvature_series(scene, p, 2)]
            fd = extract_series_fd(series_evaluator(scene, "r", p), order=2)
            scale = max(max(abs(v) for v in engine), 1.0)
            for k in range(3):
                assert abs(engine[k] - fd.coefficients[k]) \
                    < 1e-6 * scale, (sid, k)
    sphere = builtin_scene("sphere4_stereo")
    for p in _points(99, count=10, scale=0.5):
        r0 = scalar_curvature_series(sphere, p, 0)[0].value
        assert abs(r0 - 12.0) <= 1e-8
    elapsed = time.perf_counter() - start
    assert elapsed <= 30.0, f"runtime budget exceeded: {elapsed:.1f}s"


def test_criterion_03_volume_coefficients():
    # the identity ratio matrix gives exactly (2, 1)
    assert volume_coefficients_closed_form(np.eye(4)) == (2.0, 1.0)
    factor = FACTORS[0]
    for sid, scene in _campaign_scenes(10):
        for p in _points(7, count=3):
            G = perturbation_ratio_matrix(scene, p)
            c1, c2 = volume_coefficients_closed_form(G)
            # series route (the engine itself asserts agreement to 1e-10)
            series = volume_density_series(scene, p, 2)
            assert abs(series[1] - c1) < 1e-10
            assert abs(series[2] - c2) < 1e-10
            fd = extract_series_fd(
                series_evaluator(scene, "volratio", p), order=2)
            assert abs(fd.coefficients[1] - c1) < 1e-8
            assert abs(fd.coefficients[2] - c2) < 1e-8
            scaled = scene.scaled_by(factor)
            cs = volume_coefficients_closed_form(
                perturbation_ratio_matrix(scaled, p))
            assert abs(cs[0] - c1) < 1e-12
            assert abs(cs[1] - c2) < 1e-12


def test_criterion_04_conformal_covariance():
    start = time.perf_counter()
    for sid, scene in _campaign_scenes(10):
        for factor in FACTORS:
            scn = scene.with_conformal_factor(factor)
            f1, f2 = scn.probe("f1"), scn.probe("f2")
            for p in _points(zlib.crc32(sid.encode()) % 2 ** 30):
                base = a4_density_series(scn, p, f1, f2, 2).values()
                scale = max(max(abs(float(v)) for v in base), 1.0)
                res = conformal_covariance_residual(scn, p, f1, f2, 2)
                assert max(res) / scale <= 1e-7, (sid, p)
    elapsed = time.perf_counter() - start
    assert elapsed <= 60.0, f"runtime budget exceeded: {elapsed:.1f}s"


def test_criterion_05_nine_invariants():
    for sid, scene in _campaign_scenes(10):
        for factor in FACTORS:
            scn = scene.with_conformal_factor(factor)
            scaled = scn.scaled_by(factor)
            f1, f2 = scn.probe("f1"), scn.probe("f2")
            for p in _points(zlib.crc32(sid.encode()) % 2 ** 29):
                base = bimetric_invariant_grid(scn, p, f1, f2, 2).entries
                resc = bimetric_invariant_grid(scaled, p, f1, f2,
                                               2).entries
                rel = np.max(np.abs(resc - base)
                             / np.maximum(np.abs(base), 1.0))
                assert rel <= 1e-7, (sid, p)


def test_criterion_06_wres_variations():
    start = time.perf_counter()
    scene = builtin_scene("torus_bump")
    probes = tuple(scene.probe(k) for k in ("f0", "f1", "f2"))
    coarse = wres_variations(scene, QuadratureGrid(m=16), *probes)
    fd = extract_series_fd(
        series_evaluator(scene, "wres", None, probes, QuadratureGrid(m=16)),
        order=2)
    scale = max(abs(coarse.value), abs(coarse.first_variation), 1.0)
    assert abs(coarse.first_variation - fd.coefficients[1]) \
        <= 1e-5 * scale
    assert abs(coarse.second_variation - 2.0 * fd.coefficients[2]) \
        <= 1e-5 * scale
    fine = wres_variations(scene, QuadratureGrid(m=32), *probes)
    assert abs(fine.value - coarse.value) <= 1e-9
    assert abs(fine.first_variation - coarse.first_variation) <= 1e-9
    assert abs(fine.second_variation - coarse.second_variation) <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed <= 300.0, f"runtime budget exceeded: {elapsed:.1f}s"


def test_criterion_07_intertwining():
    # order-0 must vanish under at least one convention; orders 1-2 are
    # recorded per convention (the right convention is left open upstream)
    factor = FACTORS[0]
    higher = {conv: [] for conv in CONVENTIONS}
    for sid, scene in _campaign_scenes(10):
        scn = scene.with_conformal_factor(factor)
        u = scn.probe("f1")
        for p in _points(zlib.crc32(sid.encode()) % 2 ** 28, count=2):
            per_conv = {conv: intertwining_residuals(scn, p, u, conv, 2)
                        for conv in CONVENTIONS}
            assert min(res[0] for res in per_conv.values()) <= 1e-8, \
                (sid, p)
            for conv, res in per_conv.items():
                higher[conv].append((res[1], res[2]))
    for conv in CONVENTIONS:
        worst = np.max(np.asarray(higher[conv]), axis=0)
        print(f"[info] intertwining orders 1-2 under '{conv}': "
              f"max residuals {worst[0]:.3e}, {worst[1]:.3e}")
    means = {conv: float(np.mean(higher[conv])) for conv in CONVENTIONS}
    print(f"[info] convention minimizing higher-order residuals: "
          f"{min(means, key=means.get)}")


def test_criterion_08_component_series():
    component_fns = {"t": gradient_pairing_series,
                     "a": laplacian_of_pairing_series,
                     "b": hessian_pairing_series,
                     "d": laplacian_product_series}
    for sid, scene in _campaign_scenes(10):
        f1, f2 = scene.probe("f1"), scene.probe("f2")
        for p in _points(zlib.crc32(sid.encode()) % 2 ** 27, count=3):
            for name, fn in component_fns.items():
                engine = [float(c) for c in fn(scene, p, f1, f2, 2)]
                fd = extract_series_fd(
                    series_evaluator(scene, name, p, (f1, f2)), order=2)
                scale = max(max(abs(v) for v in engine), 1.0)
                for k in range(3):
                    assert abs(engine[k] - fd.coefficients[k]) \
                        <= 1e-6 * scale, (sid, name, k)
    # flat-scene hand values with the quadratic probe f = x1^2
    flat = builtin_scene("euclidean4")
    f = parse_expr("x1*x1")
    origin = (0.0, 0.0, 0.0, 0.0)
    assert abs(laplacian_of_pairing_series(flat, origin, f, f, 2)[0]
               - (-8.0)) <= 1e-10
    assert abs(hessian_pairing_series(flat, origin, f, f, 2)[0]
               - 4.0) <= 1e-10
    assert abs(laplacian_product_series(flat, origin, f, f, 2)[0]
               - 4.0) <= 1e-10
    # assembled density (1/3) r t + a + b - d/2 = 0 - 8 + 4 - 2 = -6
    assert abs(a4_density_series(flat, origin, f, f, 2).values()[0]
               - (-6.0)) <= 1e-10


def test_criterion_09_hand_typeset_crosscheck():
    # constant-metric scenes: every coefficient must agree with the engine
    # either verbatim or under a documented correction, with zero gap --
    # exactly zero for the curvature family, and to within a few floating
    # point ulps for the probe families (two independent summation orders
    # of identical term values)
    for seed in (0, 1):
        scene = _constant_scene(seed)
        p = (0.1, -0.2, 0.3, 0.0)
        for name in COEFFICIENTS:
            engine = engine_value(name, scene, p)
            gap_v = abs(appendix_eval(name, scene, p, variant="verbatim") - engine)
            gap_c = abs(appendix_eval(name, scene, p, variant="corrected") - engine)
            best = min(gap_v, gap_c)
            if name.startswith("r"):
                assert best == 0.0, (seed, name, best)
            else:
                assert best <= 5e-15 * max(abs(engine), 1.0), \
                    (seed, name, best)
    # general scenes: the campaign must complete and emit its report;
    # gaps are informational
    scenes = dict(_campaign_scenes(6))
    records = crosscheck_appendix(scenes.items(), _points(17, count=2))
    assert len(records) == len(scenes) * 2 * len(COEFFICIENTS)
    flagged = sorted({rec.coefficient for rec in records
                      if rec.suspected_typo})
    print(f"[info] coefficients needing the documented corrections on "
          f"general scenes: {flagged}")
    worst_corrected = max(rec.corrected_abs_gap
                          / max(abs(rec.engine_value), 1.0)
                          for rec in records)
    print(f"[info] worst corrected-variant relative gap: "
          f"{worst_corrected:.3e}")
    assert worst_corrected < 1e-10


def test_criterion_10_spatial_jet_fd():
    point = (0.3, -0.2, 0.1, 0.4)
    exprs = set()
    for _, scene in _campaign_scenes(6):
        for key in ("f0", "f1", "f2", "u"):
            exprs.add(scene.probe(key))
        for i in range(4):
            for j in range(i, 4):
                for e in (scene.base_entry(i, j), scene.pert_entry(i, j)):
                    if not getattr(e, "is_zero", lambda: False)():
                        exprs.add(e)
    assert len(exprs) > 10
    for expr in exprs:
        for degree in (1, 2, 3):
            assert spatial_fd_check(expr, point, degree) <= 1e-5
    for text in ("x1*x1*x2 - x3", "x1^3 + x2*x3*x4", "1 + x4*x4"):
        for degree in (1, 2, 3):
            assert spatial_fd_check(parse_expr(text), point,
                                    degree) <= 1e-9


def test_criterion_11_hochschild_diagnostic():
    scene = builtin_scene("torus_bump")
    rng = np.random.default_rng(2718)
    grid = QuadratureGrid(m=6)
    within = 0
    for qi in range(5):
        exprs = []
        for _ in range(4):
            a, b = rng.uniform(0.2, 0.6, 2)
            i, j = rng.integers(1, 5, 2)
            exprs.append(parse_expr(
                f"1 + {a:.6f}*sin(x{i}) + {b:.6f}*cos(x{j})"))
        residual, bar = hochschild_residual(scene, grid, *exprs)
        status = abs(residual) <= bar
        within += status
        print(f"[info] coboundary quadruple {qi}: residual "
              f"{residual:+.3e}, refinement error bar {bar:.3e}, "
              f"within bar: {status}")
    print(f"[info] {within}/5 quadruples within their error bars "
          f"(diagnostic, non-gating)")
