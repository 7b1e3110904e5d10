"""Forward-mode multivariate Taylor jets.

A :class:`Jet` holds every partial derivative of a quantity at one or many
evaluation points, up to a fixed degree.  Partials are indexed by multi-index
(an exponent tuple over the chart coordinates), so mixed-partial symmetry is
structural.  Each entry may carry arbitrary leading batch dimensions and an
arbitrary trailing tensor shape, which lets the same arithmetic serve scalar
fields, metric matrices and Christoffel arrays with vectorized numpy kernels.

Raw partials (not Taylor coefficients) are stored; the factorial conversion
is applied only where a Taylor coefficient is needed.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import SingularityError

MAX_DEGREE = 5

_ZERO_FLOOR = 1e-12


@lru_cache(maxsize=None)
def multi_indices(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """All exponent tuples alpha with |alpha| <= degree, by ascending degree."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(dim), d):
            alpha = [0] * dim
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    return tuple(out)


@lru_cache(maxsize=None)
def leibniz_splits(alpha: tuple[int, ...]):
    """Decompositions alpha = beta + gamma with the multinomial weight."""
    splits = []
    for beta in itertools.product(*(range(a + 1) for a in alpha)):
        gamma = tuple(a - b for a, b in zip(alpha, beta))
        coeff = 1
        for a, b in zip(alpha, beta):
            coeff *= math.comb(a, b)
        splits.append((beta, gamma, coeff))
    return tuple(splits)


@lru_cache(maxsize=None)
def positions(alpha: tuple[int, ...]) -> tuple[int, ...]:
    """Positional (with repetition) form of a multi-index, e.g. (1,0,2) -> (0,2,2)."""
    out = []
    for i, a in enumerate(alpha):
        out.extend([i] * a)
    return tuple(out)


def _unit(dim, i):
    e = [0] * dim
    e[i] = 1
    return tuple(e)


class Jet:
    """Partial-derivative table of one quantity at an evaluation point batch."""

    __slots__ = ("dim", "degree", "partials")

    def __init__(self, dim, degree, partials):
        self.dim = dim
        self.degree = degree
        self.partials = partials

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value, dim, degree):
        value = np.asarray(value, dtype=float)
        partials = {a: np.zeros_like(value) for a in multi_indices(dim, degree)}
        partials[(0,) * dim] = value
        return cls(dim, degree, partials)

    @classmethod
    def coordinate(cls, i, coords, dim, degree):
        """Jet of the i-th coordinate function; coords has shape (..., dim)."""
        value = np.asarray(coords, dtype=float)[..., i]
        jet = cls.constant(value, dim, degree)
        if degree >= 1:
            jet.partials[_unit(dim, i)] = np.ones_like(value)
        return jet

    # -- basic queries ------------------------------------------------------

    @property
    def value(self):
        return self.partials[(0,) * self.dim]

    def partial(self, *idx):
        """Partial derivative for positional indices, e.g. partial(0, 0, 1)."""
        alpha = [0] * self.dim
        for i in idx:
            alpha[i] += 1
        return self.partials[tuple(alpha)]

    def trailing_shape(self, batch_ndim=None):
        return np.asarray(self.value).shape

    def map(self, fn):
        return Jet(self.dim, self.degree, {a: fn(v) for a, v in self.partials.items()})

    def truncated(self, degree):
        if degree > self.degree:
            raise ValueError("cannot raise jet degree by truncation")
        keep = multi_indices(self.dim, degree)
        return Jet(self.dim, degree, {a: self.partials[a] for a in keep})

    # -- ring operations ----------------------------------------------------

    def _check_compatible(self, other):
        if self.dim != other.dim or self.degree != other.degree:
            raise ValueError(
                f"jet mismatch: dim/degree ({self.dim},{self.degree}) vs "
                f"({other.dim},{other.degree})"
            )

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return Jet(self.dim, self.degree,
                       {a: self.partials[a] + other.partials[a] for a in self.partials})
        return self + Jet.constant(np.broadcast_to(float(other), np.shape(self.value)),
                                   self.dim, self.degree)

    __radd__ = __add__

    def __neg__(self):
        return self.map(np.negative)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            out = {}
            for alpha in self.partials:
                acc = 0.0
                for beta, gamma, c in leibniz_splits(alpha):
                    term = self.partials[beta] * other.partials[gamma]
                    acc = acc + (term if c == 1 else c * term)
                out[alpha] = acc
            return Jet(self.dim, self.degree, out)
        return self.map(lambda v: v * other)

    def __rmul__(self, other):
        return self.map(lambda v: other * v)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * jet_recip(other)
        return self.map(lambda v: v / other)

    def __rtruediv__(self, other):
        return jet_recip(self) * float(other)


def jet_entry(jet: Jet, *index) -> Jet:
    """Extract a scalar jet from a tensor-valued jet at a trailing index."""
    sl = (Ellipsis,) + tuple(index)
    return jet.map(lambda v: v[sl])


def jet_stack(jets, axis=-1) -> Jet:
    """Stack jets along a new trailing axis."""
    first = jets[0]
    partials = {a: np.stack([j.partials[a] for j in jets], axis=axis)
                for a in first.partials}
    return Jet(first.dim, first.degree, partials)


def _matmul_fold(a, b):
    """a[..., i, j] b[..., j, *rest] -> [..., i, *rest] via batched matmul."""
    rest = b.shape[a.ndim - 1:]
    flat = b.reshape(b.shape[:a.ndim - 1] + (-1,))
    return np.matmul(a, flat).reshape(a.shape[:-1] + rest)


@lru_cache(maxsize=None)
def _contraction(spec: str):
    """Array-level contraction for one einsum spec over trailing axes.

    The heavy specs in the pipeline are all matmul-shaped, and
    ``np.matmul`` is several times faster than ``np.einsum`` on batched
    small matrices, so those get dedicated paths.
    """
    lhs, rhs = spec.split("->")
    sa, sb = lhs.split(",")
    # a[..., x, s] b[..., s, *rest] -> batched matmul folding b's tail.
    if (len(sa) == 2 and sa[1] == sb[0] and sa[0] not in sb
            and rhs == sa[0] + sb[1:]):
        return _matmul_fold
    # contraction over the shared leading index: a^T-style matmul.
    if (len(sa) == 2 and len(sb) == 2 and sa[0] == sb[0]
            and rhs == sa[1] + sb[1]):
        return lambda a, b: np.matmul(np.swapaxes(a, -1, -2), b)
    # full inner product over identical trailing axes.
    if sa == sb and rhs == "":
        axes = tuple(range(-len(sa), 0))
        return lambda a, b: np.sum(a * b, axis=axes)
    # vector contracted against the leading axis of b.
    if len(sa) == 1 and sb.startswith(sa) and rhs == sb[1:]:
        def vec_fold(a, b):
            rest = b.shape[a.ndim:]
            flat = b.reshape(b.shape[:a.ndim] + (-1,))
            return np.matmul(a[..., None, :], flat)[..., 0, :].reshape(
                a.shape[:-1] + rest)
        return vec_fold
    full = f"...{sa},...{sb}->...{rhs}"
    return lambda a, b: np.einsum(full, a, b)


def jet_einsum(spec: str, a: Jet, b: Jet) -> Jet:
    """Leibniz product with an einsum contraction over trailing tensor axes.

    `spec` addresses only the trailing axes ('kl,lij->kij'); batch axes are
    broadcast via an implicit ellipsis prefix.
    """
    a._check_compatible(b)
    contract = _contraction(spec)
    out = {}
    for alpha in a.partials:
        acc = 0.0
        for beta, gamma, c in leibniz_splits(alpha):
            term = contract(a.partials[beta], b.partials[gamma])
            acc = acc + (term if c == 1 else c * term)
        out[alpha] = acc
    return Jet(a.dim, a.degree, out)


def jet_partial_derivative(a: Jet, i: int) -> Jet:
    """Jet of d(a)/dx_i, one degree lower."""
    if a.degree < 1:
        raise ValueError("cannot differentiate a degree-0 jet")
    dim = a.dim
    out = {}
    for alpha in multi_indices(dim, a.degree - 1):
        shifted = list(alpha)
        shifted[i] += 1
        out[alpha] = a.partials[tuple(shifted)]
    return Jet(dim, a.degree - 1, out)


def jet_gradient(a: Jet) -> Jet:
    """Trailing-axis gradient jet: entry j is d(a)/dx_j (degree drops by 1)."""
    return jet_stack([jet_partial_derivative(a, j) for j in range(a.dim)])


def jet_hessian(a: Jet) -> Jet:
    """Trailing (n, n) Hessian jet (degree drops by 2)."""
    rows = []
    for i in range(a.dim):
        di = jet_partial_derivative(a, i)
        rows.append(jet_stack([jet_partial_derivative(di, j) for j in range(a.dim)]))
    return jet_stack(rows, axis=-2)


# -- composition with smooth univariate functions ---------------------------

def jet_chain(a: Jet, derivs) -> Jet:
    """Compose a scalar jet with a univariate function given by its derivative
    values [phi(v), phi'(v), phi''(v), phi'''(v)] at v = a.value.

    Explicit Faa di Bruno up to third order; degrees above 3 are outside the
    supported range for elementary-function composition.
    """
    if a.degree > 3:
        raise ValueError("jet composition supports degree <= 3")
    dim = a.dim
    phi = list(derivs) + [0.0] * (4 - len(derivs))
    out = {(0,) * dim: np.asarray(phi[0], dtype=float)
           if not isinstance(phi[0], np.ndarray) else phi[0]}
    for alpha in multi_indices(dim, a.degree):
        order = sum(alpha)
        if order == 0:
            continue
        pos = positions(alpha)
        if order == 1:
            (i,) = pos
            out[alpha] = phi[1] * a.partial(i)
        elif order == 2:
            i, j = pos
            out[alpha] = phi[2] * a.partial(i) * a.partial(j) + phi[1] * a.partial(i, j)
        else:
            i, j, k = pos
            out[alpha] = (
                phi[3] * a.partial(i) * a.partial(j) * a.partial(k)
                + phi[2] * (a.partial(i, j) * a.partial(k)
                            + a.partial(i, k) * a.partial(j)
                            + a.partial(j, k) * a.partial(i))
                + phi[1] * a.partial(i, j, k)
            )
    return Jet(dim, a.degree, out)


def _guard(cond_bad, message, subexpr=None):
    if np.any(cond_bad):
        raise SingularityError(message, subexpr)


def jet_recip(a: Jet, floor: float = _ZERO_FLOOR, subexpr=None) -> Jet:
    v = a.value
    _guard(np.abs(v) <= floor, "reciprocal of a value at or below the zero floor",
           subexpr)
    inv = 1.0 / v
    return jet_chain(a, [inv, -inv * inv, 2.0 * inv ** 3, -6.0 * inv ** 4])


def jet_sqrt(a: Jet, subexpr=None) -> Jet:
    v = a.value
    _guard(v <= 0, "sqrt of a non-positive value", subexpr)
    s = np.sqrt(v)
    return jet_chain(a, [s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v)])


def jet_exp(a: Jet) -> Jet:
    e = np.exp(a.value)
    return jet_chain(a, [e, e, e, e])


def jet_log(a: Jet, subexpr=None) -> Jet:
    v = a.value
    _guard(v <= 0, "log of a non-positive value", subexpr)
    return jet_chain(a, [np.log(v), 1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3])


def jet_sin(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    return jet_chain(a, [s, c, -s, -c])


def jet_cos(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    return jet_chain(a, [c, -s, -c, s])


def jet_powi(a: Jet, k: int) -> Jet:
    """Integer power by repeated squaring at the jet level."""
    if k == 0:
        return Jet.constant(np.ones_like(a.value), a.dim, a.degree)
    if k < 0:
        return jet_recip(jet_powi(a, -k))
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return result


# -- matrix-valued jets ------------------------------------------------------

def jet_matmul(a: Jet, b: Jet) -> Jet:
    return jet_einsum("ij,jk->ik", a, b)


def jet_matrix_inverse(a: Jet) -> Jet:
    """Inverse of a matrix-valued jet (trailing (n, n)).

    Order 0 is a batched numpy inverse; higher partials follow from
    differentiating A B = I, solved by ascending derivative order.
    """
    inv0 = np.linalg.inv(a.value)
    out = {(0,) * a.dim: inv0}
    for alpha in multi_indices(a.dim, a.degree):
        if sum(alpha) == 0:
            continue
        acc = 0.0
        for beta, gamma, c in leibniz_splits(alpha):
            if sum(beta) == 0:
                continue
            term = np.einsum("...ij,...jk->...ik", a.partials[beta], out[gamma])
            acc = acc + (term if c == 1 else c * term)
        out[alpha] = -np.einsum("...ij,...jk->...ik", inv0, acc)
    return Jet(a.dim, a.degree, out)


def jet_allclose(a: Jet, b: Jet, atol=1e-12, rtol=0.0) -> bool:
    a._check_compatible(b)
    return all(np.allclose(a.partials[k], b.partials[k], atol=atol, rtol=rtol)
               for k in a.partials)


def jet_max_abs_diff(a: Jet, b: Jet) -> float:
    a._check_compatible(b)
    return max(float(np.max(np.abs(a.partials[k] - b.partials[k])))
               for k in a.partials)
