import numpy as np
import pytest

from bimetric import (COEFFICIENTS, ConfigError, appendix_eval,
                      crosscheck_appendix, engine_value,
                      summarize_discrepancies)

POINT = (0.2, -0.1, 0.3, 0.1)


def test_coefficient_catalog():
    assert COEFFICIENTS == ("r0", "r1", "r2", "a0", "a1", "a2",
                            "b0", "b1", "b2", "d0", "d1", "d2")


def test_unknown_names_rejected(scenes):
    with pytest.raises(ConfigError):
        appendix_eval("r3", scenes["euclidean4"], POINT)
    with pytest.raises(ConfigError):
        appendix_eval("r0", scenes["euclidean4"], POINT,
                      variant="guessed")


def test_flat_scene_gaps_are_exact_zero(scenes):
    scene = scenes["euclidean4"]
    for name in COEFFICIENTS:
        engine = engine_value(name, scene, POINT)
        for variant in ("verbatim", "corrected"):
            assert appendix_eval(name, scene, POINT,
                                 variant=variant) == engine


def test_corrected_matches_engine(scenes, sample_points):
    for key in ("conformally_flat", "torus_bump", "random_smooth_3"):
        scene = scenes[key]
        for p in sample_points:
            for name in COEFFICIENTS:
                engine = engine_value(name, scene, p)
                corrected = appendix_eval(name, scene, p,
                                          variant="corrected")
                scale = max(abs(engine), 1.0)
                assert abs(corrected - engine) / scale < 1e-12, (key, name)


def test_verbatim_transcription_disagrees_where_typeset_slips(scenes):
    # the typeset curvature coefficients carry sign and index slips that
    # only cancel on flat scenes; the verbatim readings must expose them
    scene = scenes["conformally_flat"]
    gaps = {name: abs(appendix_eval(name, scene, POINT, variant="verbatim")
                      - engine_value(name, scene, POINT))
            for name in ("r0", "r1", "a2")}
    assert gaps["r0"] > 1e-4
    assert gaps["r1"] > 1e-4
    assert gaps["a2"] > 1e-6


def test_crosscheck_report(scenes, sample_points):
    records = crosscheck_appendix(
        [("conformally_flat", scenes["conformally_flat"])],
        sample_points[:1])
    assert len(records) == len(COEFFICIENTS)
    for rec in records:
        assert rec.corrected_abs_gap <= max(abs(rec.engine_value),
                                            1.0) * 1e-10
        doc = rec.as_json()
        assert {"coefficient", "scene", "abs_gap",
                "corrected_abs_gap"} <= set(doc)
    summary = summarize_discrepancies(records)
    assert set(summary) == set(COEFFICIENTS)
