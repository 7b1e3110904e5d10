import numpy as np
import pytest

from bimetric import (ConfigError, MetricScene, SPDError, builtin_scene,
                      builtin_scene_names, load_scene, parse_expr,
                      save_scene)


def test_builtin_catalog(scenes):
    assert {"euclidean4", "sphere4_stereo", "conformally_flat",
            "torus_bump"} <= set(builtin_scene_names())
    for scene in scenes.values():
        assert scene.dim == 4


def test_unknown_builtin_rejected():
    with pytest.raises(ConfigError):
        builtin_scene("nope")


def test_json_roundtrip(tmp_path, scenes):
    scene = scenes["conformally_flat"]
    path = tmp_path / "scene.json"
    save_scene(scene, path)
    again = load_scene(path)
    assert again.digest() == scene.digest()
    p = (0.1, 0.2, 0.3, 0.4)
    g1, h1 = scene.eval_metric_pair(p)
    g2, h2 = again.eval_metric_pair(p)
    assert np.allclose(g1.value, g2.value)
    assert np.allclose(h1.value, h2.value)


def test_digest_distinguishes_scenes(scenes):
    digests = {s.digest() for s in scenes.values()}
    assert len(digests) == len(scenes)


def test_metric_pair_is_symmetric(scenes, sample_points):
    for scene in scenes.values():
        for p in sample_points:
            g, h = scene.eval_metric_pair(p)
            assert np.allclose(g.value, g.value.T)
            assert np.allclose(h.value, h.value.T)


def test_scaled_by_multiplies_both_metrics(scenes):
    scene = scenes["conformally_flat"]
    f = parse_expr("2 + sin(x1)")
    scaled = scene.scaled_by(f)
    p = (0.3, -0.1, 0.2, 0.0)
    fval = f.jet(np.asarray(p), 0).value
    g, h = scene.eval_metric_pair(p)
    gs, hs = scaled.eval_metric_pair(p)
    assert np.allclose(gs.value, fval * g.value)
    assert np.allclose(hs.value, fval * h.value)


def test_non_spd_base_rejected():
    neg = {(i, i): parse_expr("-1") for i in range(4)}
    scene = MetricScene(4, neg, {})
    with pytest.raises(SPDError):
        scene.eval_metric_pair((0.0, 0.0, 0.0, 0.0))


def test_default_probes_exist(scenes):
    scene = scenes["euclidean4"]
    for key in ("f0", "f1", "f2"):
        expr = scene.probe(key)
        val = expr.jet(np.zeros(4), 0).value
        assert np.isfinite(val)


def test_spd_eps_radius_positive(scenes, sample_points):
    for scene in scenes.values():
        r = scene.spd_eps_radius(sample_points[0])
        assert r > 0.05
