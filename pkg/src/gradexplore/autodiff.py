"""Forward-mode automatic differentiation.

An :class:`AdScalar` carries a value together with its partial derivatives
with respect to a fixed set of seed variables.  Values may be numpy arrays,
in which case the object represents an elementwise batch of scalars that
share the same seeds; partials then carry one trailing axis of length
``nvars``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["AdScalar", "sqrt", "sin", "cos", "exp", "where", "ad_sum"]


class AdScalar:
    """Value plus partials, ``partials.shape == value.shape + (nvars,)``."""

    __slots__ = ("value", "partials")
    __array_ufunc__ = None

    def __init__(self, value, partials):
        self.value = np.asarray(value, dtype=np.float64)
        self.partials = np.asarray(partials, dtype=np.float64)
        if self.partials.ndim < 1:
            raise ValueError("partials need a trailing variable axis")

    @classmethod
    def constant(cls, value, nvars: int) -> "AdScalar":
        value = np.asarray(value, dtype=np.float64)
        return cls(value, np.zeros(value.shape + (nvars,)))

    @classmethod
    def variable(cls, value: float, index: int, nvars: int) -> "AdScalar":
        partials = np.zeros(nvars)
        partials[index] = 1.0
        return cls(float(value), partials)

    @classmethod
    def variables(cls, values) -> list["AdScalar"]:
        values = np.asarray(values, dtype=np.float64).ravel()
        n = values.size
        return [cls.variable(v, i, n) for i, v in enumerate(values)]

    @property
    def nvars(self) -> int:
        return self.partials.shape[-1]

    @property
    def shape(self):
        return self.value.shape

    def __float__(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"AdScalar(value={self.value!r}, partials={self.partials!r})"

    def __getitem__(self, idx) -> "AdScalar":
        return AdScalar(self.value[idx], self.partials[idx])

    # -- arithmetic -----------------------------------------------------------

    def _lift(self, other) -> "AdScalar":
        if isinstance(other, AdScalar):
            return other
        return AdScalar.constant(other, self.nvars)

    def __neg__(self) -> "AdScalar":
        return AdScalar(-self.value, -self.partials)

    def __pos__(self) -> "AdScalar":
        return self

    def __add__(self, other) -> "AdScalar":
        if not isinstance(other, AdScalar):
            return AdScalar(self.value + other, self.partials + np.zeros_like(np.asarray(other, float))[..., None])
        return AdScalar(self.value + other.value, self.partials + other.partials)

    __radd__ = __add__

    def __sub__(self, other) -> "AdScalar":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "AdScalar":
        return (-self) + other

    def __mul__(self, other) -> "AdScalar":
        if not isinstance(other, AdScalar):
            c = np.asarray(other, dtype=np.float64)
            return AdScalar(self.value * c, self.partials * c[..., None])
        value = self.value * other.value
        partials = (
            self.partials * other.value[..., None] + other.partials * self.value[..., None]
        )
        return AdScalar(value, partials)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "AdScalar":
        if not isinstance(other, AdScalar):
            c = np.asarray(other, dtype=np.float64)
            return AdScalar(self.value / c, self.partials / c[..., None])
        value = self.value / other.value
        partials = (
            self.partials - value[..., None] * other.partials
        ) / other.value[..., None]
        return AdScalar(value, partials)

    def __rtruediv__(self, other) -> "AdScalar":
        return self._lift(other) / self

    def __pow__(self, exponent) -> "AdScalar":
        if isinstance(exponent, AdScalar):
            raise TypeError("only constant exponents are supported")
        p = float(exponent)
        value = self.value**p
        slope = p * self.value ** (p - 1.0) if p != 0.0 else np.zeros_like(self.value)
        return AdScalar(value, self.partials * slope[..., None])


def _unary(x: AdScalar, value, slope) -> AdScalar:
    return AdScalar(value, x.partials * np.asarray(slope, dtype=np.float64)[..., None])


def sqrt(x: AdScalar) -> AdScalar:
    value = np.sqrt(x.value)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(value > 0.0, 0.5 / np.where(value > 0.0, value, 1.0), 0.0)
    return _unary(x, value, slope)


def sin(x: AdScalar) -> AdScalar:
    return _unary(x, np.sin(x.value), np.cos(x.value))


def cos(x: AdScalar) -> AdScalar:
    return _unary(x, np.cos(x.value), -np.sin(x.value))


def exp(x: AdScalar) -> AdScalar:
    value = np.exp(x.value)
    return _unary(x, value, value)


def where(cond, a, b) -> AdScalar:
    """Elementwise select; the partials follow the selected branch."""
    cond = np.asarray(cond, dtype=bool)
    if not isinstance(a, AdScalar) and not isinstance(b, AdScalar):
        raise TypeError("at least one branch must be an AdScalar")
    nvars = a.nvars if isinstance(a, AdScalar) else b.nvars
    a = a if isinstance(a, AdScalar) else AdScalar.constant(a, nvars)
    b = b if isinstance(b, AdScalar) else AdScalar.constant(b, nvars)
    value = np.where(cond, a.value, b.value)
    partials = np.where(cond[..., None], a.partials, b.partials)
    return AdScalar(value, partials)


def ad_sum(x: AdScalar) -> AdScalar:
    """Sum over all batch elements."""
    axes = tuple(range(x.value.ndim))
    return AdScalar(x.value.sum(), x.partials.sum(axis=axes))
