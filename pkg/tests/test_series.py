import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bimetric import EpsSeries
from bimetric.series import (series_combine, series_matrix_inverse,
                             series_recip, series_sqrt)

floats = st.floats(min_value=-3.0, max_value=3.0,
                   allow_nan=False, allow_infinity=False)


def scalar_series(min_lead=None):
    def build(coeffs):
        return EpsSeries(coeffs)
    base = st.lists(floats, min_size=3, max_size=3).map(build)
    if min_lead is None:
        return base
    return base.filter(lambda s: abs(s[0]) >= min_lead)


@given(scalar_series(), scalar_series())
def test_cauchy_product_matches_polynomial_product(a, b):
    prod = series_combine(a, b, lambda x, y: x * y)
    for eps in (0.01, -0.02):
        # compare against the degree-truncated polynomial product
        full = a.at(eps) * b.at(eps)
        trunc_err = sum(a[i] * b[j] * eps ** (i + j)
                        for i in range(3) for j in range(3) if i + j > 2)
        assert np.isclose(prod.at(eps), full - trunc_err, atol=1e-12)


@given(scalar_series(min_lead=0.1))
@settings(max_examples=50)
def test_recip_is_multiplicative_inverse(a):
    r = series_recip(a)
    prod = series_combine(a, r, lambda x, y: x * y)
    assert np.isclose(prod[0], 1.0)
    assert np.isclose(prod[1], 0.0, atol=1e-9)
    assert np.isclose(prod[2], 0.0, atol=1e-9)


@given(scalar_series().filter(lambda s: s[0] >= 0.1))
@settings(max_examples=50)
def test_sqrt_squares_back(a):
    s = series_sqrt(a)
    sq = series_combine(s, s, lambda x, y: x * y)
    for k in range(3):
        assert np.isclose(sq[k], a[k], atol=1e-8)


@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
@settings(max_examples=25)
def test_matrix_inverse_series(seed):
    rng = np.random.default_rng(seed)
    a0 = rng.normal(size=(4, 4))
    a0 = a0 @ a0.T + 4.0 * np.eye(4)   # well conditioned, invertible
    series = EpsSeries([a0, rng.normal(size=(4, 4)),
                        rng.normal(size=(4, 4))])
    inv = series_matrix_inverse(series)
    prod = series_combine(series, inv, lambda x, y: x @ y)
    assert np.allclose(prod[0], np.eye(4))
    assert np.allclose(prod[1], 0.0, atol=1e-10)
    assert np.allclose(prod[2], 0.0, atol=1e-10)


def test_order_mismatch_rejected():
    with pytest.raises(ValueError):
        EpsSeries([1.0, 2.0]) + EpsSeries([1.0, 2.0, 3.0])


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        EpsSeries([])
