"""
Real or complex power series truncated at degree N, with arithmetic exact
modulo z^(N+1) up to binary64 rounding.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from gwtrees.exceptions import ValidationException

Scalar = int | float | complex


class TruncatedSeries:
    """Coefficients a_0..a_N of a power series known modulo z^(N+1)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[Scalar] | np.ndarray, N: int | None = None):
        arr = np.asarray(coeffs)
        if not np.iscomplexobj(arr):
            arr = arr.astype(np.float64)
        if N is not None:
            if len(arr) > N + 1:
                arr = arr[:N + 1]
            elif len(arr) < N + 1:
                arr = np.concatenate([arr, np.zeros(N + 1 - len(arr), dtype=arr.dtype)])
        if len(arr) == 0:
            raise ValidationException("A truncated series needs at least one coefficient")
        self.coeffs = arr

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def constant(cls, value: Scalar, N: int) -> TruncatedSeries:
        out = np.zeros(N + 1, dtype=np.complex128 if isinstance(value, complex) else np.float64)
        out[0] = value
        return cls(out)

    @classmethod
    def variable(cls, N: int) -> TruncatedSeries:
        """The series z."""
        return cls.monomial(1, N)

    @classmethod
    def monomial(cls, k: int, N: int) -> TruncatedSeries:
        out = np.zeros(N + 1)
        if k <= N:
            out[k] = 1.0
        return cls(out)

    def __getitem__(self, k: int) -> Scalar:
        if k < 0:
            return 0.0
        if k > self.N:
            raise IndexError(f"coefficient {k} lies beyond the truncation degree {self.N}")
        return self.coeffs[k].item()

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        head = ", ".join(f"{c:.6g}" for c in self.coeffs[:6])
        return f"TruncatedSeries([{head}{', ...' if self.N >= 6 else ''}], N={self.N})"

    def _coerce(self, other: TruncatedSeries | Scalar) -> TruncatedSeries:
        if isinstance(other, TruncatedSeries):
            if other.N != self.N:
                N = min(self.N, other.N)
                return TruncatedSeries(other.coeffs, N)
            return other
        return TruncatedSeries.constant(other, self.N)

    def truncate(self, N: int) -> TruncatedSeries:
        return TruncatedSeries(self.coeffs[:N + 1])

    def __add__(self, other: TruncatedSeries | Scalar) -> TruncatedSeries:
        other = self._coerce(other)
        N = min(self.N, other.N)
        return TruncatedSeries(self.coeffs[:N + 1] + other.coeffs[:N + 1])

    __radd__ = __add__

    def __neg__(self) -> TruncatedSeries:
        return TruncatedSeries(-self.coeffs)

    def __sub__(self, other: TruncatedSeries | Scalar) -> TruncatedSeries:
        return self + (-self._coerce(other))

    def __rsub__(self, other: Scalar) -> TruncatedSeries:
        return (-self) + other

    def __mul__(self, other: TruncatedSeries | Scalar) -> TruncatedSeries:
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs * other)
        N = min(self.N, other.N)
        return TruncatedSeries(np.convolve(self.coeffs[:N + 1], other.coeffs[:N + 1])[:N + 1])

    def __rmul__(self, other: Scalar) -> TruncatedSeries:
        return TruncatedSeries(self.coeffs * other)

    def __truediv__(self, other: TruncatedSeries | Scalar) -> TruncatedSeries:
        if isinstance(other, TruncatedSeries):
            return self * other.reciprocal()
        return TruncatedSeries(self.coeffs / other)

    def __pow__(self, k: int) -> TruncatedSeries:
        if k < 0:
            return self.reciprocal() ** (-k)
        result = TruncatedSeries.constant(1.0, self.N)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def shift(self, k: int) -> TruncatedSeries:
        """Multiply by z^k."""
        out = np.zeros_like(self.coeffs)
        if k <= self.N:
            out[k:] = self.coeffs[:self.N + 1 - k]
        return TruncatedSeries(out)

    def derivative(self) -> TruncatedSeries:
        """d/dz; the result is known to degree N - 1."""
        if self.N == 0:
            return TruncatedSeries([0.0])
        return TruncatedSeries(self.coeffs[1:] * np.arange(1, self.N + 1))

    def reciprocal(self) -> TruncatedSeries:
        a = self.coeffs
        if a[0] == 0:
            raise ValidationException("Reciprocal needs a nonzero constant term")
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for n in range(1, self.N + 1):
            b[n] = -np.dot(a[1:n + 1], b[n - 1::-1]) * b[0]
        return TruncatedSeries(b)

    def exp(self) -> TruncatedSeries:
        """exp of the series; b_n = (1/n) sum_{k=1}^n k a_k b_{n-k}."""
        a = self.coeffs
        ka = a * np.arange(self.N + 1)
        b = np.zeros_like(a)
        b[0] = np.exp(a[0])
        for n in range(1, self.N + 1):
            b[n] = np.dot(ka[1:n + 1], b[n - 1::-1]) / n
        return TruncatedSeries(b)

    def compose_polynomial(self, poly: Sequence[Scalar] | np.ndarray) -> TruncatedSeries:
        """sum_j poly[j] * self^j by Horner's rule."""
        poly = np.asarray(poly)
        if self.coeffs[0] == 0:
            # self^j vanishes modulo z^(N+1) once j > N
            poly = poly[:self.N + 1]
        result = TruncatedSeries.constant(poly[-1].item(), self.N)
        for c in poly[-2::-1]:
            result = result * self + c.item()
        return result

    def evaluate(self, z: Scalar) -> Scalar:
        return np.polynomial.polynomial.polyval(z, self.coeffs).item()

    def coefficients(self) -> np.ndarray:
        return self.coeffs.copy()
