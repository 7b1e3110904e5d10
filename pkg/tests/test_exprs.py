import numpy as np
import pytest

from bimetric import ConfigError, parse_expr


@pytest.mark.parametrize("text,fn", [
    ("x1 + 2*x2", lambda x: x[0] + 2 * x[1]),
    ("sin(x1)*cos(x2)", lambda x: np.sin(x[0]) * np.cos(x[1])),
    ("exp(0.3*x3) - 1", lambda x: np.exp(0.3 * x[2]) - 1),
    ("sqrt(2 + x4*x4)", lambda x: np.sqrt(2 + x[3] ** 2)),
    ("log(2 + x1)", lambda x: np.log(2 + x[0])),
    ("x1^3 - x2/2", lambda x: x[0] ** 3 - x[1] / 2),
    ("-(x1 - x2)", lambda x: -(x[0] - x[1])),
])
def test_value_matches_numpy(text, fn):
    x = np.array([0.4, -0.3, 0.2, 0.1])
    assert np.isclose(parse_expr(text).jet(x, 0).value, fn(x))


def test_unknown_name_rejected():
    with pytest.raises(ConfigError):
        parse_expr("foo(x1)")


def test_empty_rejected():
    with pytest.raises(ConfigError):
        parse_expr("   ")


def test_derivatives_of_parsed_expression():
    x = np.array([0.4, -0.3, 0.2, 0.1])
    j = parse_expr("exp(x1)*sin(x2)").jet(x, 2)
    assert np.isclose(j.partial(0), np.exp(0.4) * np.sin(-0.3))
    assert np.isclose(j.partial(1, 1), -np.exp(0.4) * np.sin(-0.3))
    assert np.isclose(j.partial(0, 1), np.exp(0.4) * np.cos(-0.3))
