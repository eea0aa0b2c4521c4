"""Truncated derivative stacks ("jets") with Leibniz arithmetic.

A jet of order K stores f, f', ..., f^(K) sampled at a set of points, so
products, quotients and y-derivatives of closed-form fields stay exact up to
rounding without spectral differentiation of under-resolved functions.
"""

from math import comb

import numpy as np


class Jet:
    __slots__ = ("d",)

    def __init__(self, data):
        self.d = np.asarray(data, dtype=complex)

    @property
    def order(self):
        return self.d.shape[0] - 1

    @property
    def val(self):
        return self.d[0]

    def __getitem__(self, j):
        return self.d[j]

    @classmethod
    def const(cls, value, npts, order):
        d = np.zeros((order + 1, npts), dtype=complex)
        d[0] = value
        return cls(d)

    @classmethod
    def identity(cls, y, order):
        d = np.zeros((order + 1, len(y)), dtype=complex)
        d[0] = y
        if order >= 1:
            d[1] = 1.0
        return cls(d)

    @classmethod
    def antiderivative(cls, value, integrand, sign=1.0):
        """Jet of F with F = value and F' = sign * integrand."""
        K = integrand.order + 1
        d = np.empty((K + 1,) + integrand.d.shape[1:], dtype=complex)
        d[0] = value
        d[1:] = sign * integrand.d
        return cls(d)

    def truncate(self, order):
        return Jet(self.d[: order + 1])

    def deriv(self):
        return Jet(self.d[1:])

    def _coerce(self, other):
        if isinstance(other, Jet):
            K = min(self.order, other.order)
            return self.d[: K + 1], other.d[: K + 1]
        return self.d, None

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._coerce(other)
            return Jet(a + b)
        d = self.d.copy()
        d[0] = d[0] + other
        return Jet(d)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.d)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other)
            if other.ndim == 0:
                return Jet(self.d * other)
            raise TypeError("multiply jets by scalars or jets")
        a, b = self._coerce(other)
        K = a.shape[0] - 1
        out = np.zeros_like(a, dtype=complex)
        for n in range(K + 1):
            s = 0
            for j in range(n + 1):
                s = s + comb(n, j) * a[j] * b[n - j]
            out[n] = s
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self):
        f = self.d
        K = f.shape[0] - 1
        h = np.zeros_like(f, dtype=complex)
        h[0] = 1.0 / f[0]
        for n in range(1, K + 1):
            s = 0
            for j in range(1, n + 1):
                s = s + comb(n, j) * f[j] * h[n - j]
            h[n] = -s * h[0]
        return Jet(h)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.d / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if not isinstance(p, int) or p < 0:
            if isinstance(p, int):
                return self.reciprocal() ** (-p)
            raise ValueError("integer powers only")
        out = Jet.const(1.0, self.d.shape[1], self.order)
        for _ in range(p):
            out = out * self
        return out
