"""Truncated power-series arithmetic in the perturbation parameter.

Coefficients may be floats, numpy arrays, or :class:`~bimetric.jets.Jet`
values (scalar- or tensor-valued); anything supporting + and scalar * works
with the termwise operations, and :func:`series_combine` threads an arbitrary
coefficient product through the Cauchy convolution.  The truncation order is
generic, so the same code serves any expansion depth.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericDomainError
from .jets import Jet, jet_einsum, jet_matrix_inverse

COND_LIMIT = 1e12


class EpsSeries:
    """Coefficients [c0, ..., cN] of a series truncated at order N."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = list(coeffs)
        if not self.coeffs:
            raise ValueError("a series needs at least the constant coefficient")

    @property
    def order(self):
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def _check_order(self, other):
        if self.order != other.order:
            raise ValueError(f"series order mismatch: {self.order} vs {other.order}")

    def __add__(self, other):
        self._check_order(other)
        return EpsSeries([a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        self._check_order(other)
        return EpsSeries([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return EpsSeries([-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, EpsSeries):
            return series_combine(self, other, lambda a, b: a * b)
        return EpsSeries([c * other for c in self.coeffs])

    __rmul__ = __mul__

    def map(self, fn):
        return EpsSeries([fn(c) for c in self.coeffs])

    def values(self):
        """Replace jet coefficients by their point values."""
        return EpsSeries([c.value if isinstance(c, Jet) else c for c in self.coeffs])

    def at(self, eps):
        """Horner evaluation of the truncated polynomial."""
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = c + eps * acc
        return acc


def series_combine(a: EpsSeries, b: EpsSeries, product) -> EpsSeries:
    """Cauchy product with an arbitrary coefficient-level product."""
    a._check_order(b)
    out = []
    for k in range(a.order + 1):
        acc = None
        for i in range(k + 1):
            term = product(a.coeffs[i], b.coeffs[k - i])
            acc = term if acc is None else acc + term
        out.append(acc)
    return EpsSeries(out)


def series_add(a, b):
    return a + b


def series_mul(a, b):
    return a * b


def series_einsum(spec: str, a: EpsSeries, b: EpsSeries) -> EpsSeries:
    """Cauchy product of jet-coefficient series with an einsum contraction."""
    return series_combine(a, b, lambda x, y: jet_einsum(spec, x, y))


def series_recip(a: EpsSeries) -> EpsSeries:
    """Multiplicative inverse for scalar (float/ndarray) coefficients."""
    c0 = np.asarray(a.coeffs[0], dtype=float)
    if np.any(np.abs(c0) <= 1e-12):
        raise NumericDomainError("series reciprocal needs |c0| > 1e-12")
    inv0 = 1.0 / c0
    out = [inv0]
    for k in range(1, a.order + 1):
        acc = 0.0
        for j in range(1, k + 1):
            acc = acc + a.coeffs[j] * out[k - j]
        out.append(-inv0 * acc)
    return EpsSeries(out)


def series_sqrt(a: EpsSeries) -> EpsSeries:
    """Square root for scalar coefficients with positive leading term."""
    c0 = np.asarray(a.coeffs[0], dtype=float)
    if np.any(c0 <= 0):
        raise NumericDomainError("series sqrt needs a positive leading coefficient")
    s0 = np.sqrt(c0)
    out = [s0]
    for k in range(1, a.order + 1):
        acc = 0.0
        for j in range(1, k):
            acc = acc + out[j] * out[k - j]
        out.append((a.coeffs[k] - acc) / (2.0 * s0))
    return EpsSeries(out)


def identity_series(identity_coeff, zero_coeff, order: int) -> EpsSeries:
    return EpsSeries([identity_coeff] + [zero_coeff] * order)


def _matrix_cond(m):
    return float(np.max(np.linalg.cond(m)))


def series_matrix_inverse(a: EpsSeries) -> EpsSeries:
    """Inverse of a matrix-coefficient series (ndarray or matrix-jet entries).

    Neumann iteration of X_k = -X_0 * sum_{j>=1} A_j X_{k-j}; for two-term
    metric series this reproduces the alternating closed-form coefficients.
    """
    c0 = a.coeffs[0]
    if isinstance(c0, Jet):
        x0 = jet_matrix_inverse(c0)
        matmul = lambda u, v: jet_einsum("ij,jk->ik", u, v)
        cond = _matrix_cond(c0.value)
    else:
        c0 = np.asarray(c0, dtype=float)
        cond = _matrix_cond(c0)
        x0 = np.linalg.inv(c0)
        matmul = lambda u, v: u @ v
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericDomainError(
            f"leading matrix coefficient is ill-conditioned (cond {cond:.3e})")
    out = [x0]
    for k in range(1, a.order + 1):
        acc = None
        for j in range(1, k + 1):
            term = matmul(a.coeffs[j], out[k - j])
            acc = term if acc is None else acc + term
        out.append(-matmul(x0, acc))
    return EpsSeries(out)
