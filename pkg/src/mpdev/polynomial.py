"""Univariate polynomials with exact rational coefficients."""
from __future__ import annotations

import json
from fractions import Fraction
from numbers import Rational


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    raise TypeError(f"exact coefficient required, got {type(c).__name__}")


class ExactPolynomial:
    """Polynomial in z; ``coeffs[k]`` is the coefficient of z**k.

    Trailing zeros are stripped, so the zero polynomial has no coefficients
    and every other polynomial has a nonzero leading coefficient.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [_frac(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def monomial(cls, degree: int, coeff=1) -> "ExactPolynomial":
        return cls([0] * degree + [coeff])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __eq__(self, other):
        if isinstance(other, ExactPolynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == ExactPolynomial([other]).coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        n = max(len(self.coeffs), len(other.coeffs))
        return ExactPolynomial(self.coeff(k) + other.coeff(k) for k in range(n))

    __radd__ = __add__

    def __neg__(self):
        return ExactPolynomial(-c for c in self.coeffs)

    def __sub__(self, other):
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        if not self.coeffs or not other.coeffs:
            return ExactPolynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return ExactPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = ExactPolynomial([1])
        for _ in range(k):
            out = out * self
        return out

    def scale(self, c) -> "ExactPolynomial":
        c = _frac(c)
        return ExactPolynomial(c * a for a in self.coeffs)

    def __call__(self, z):
        """Horner evaluation; exact for Fraction/int arguments."""
        acc = 0 if isinstance(z, (int, Fraction)) else 0.0 * z
        for c in reversed(self.coeffs):
            acc = acc * z + (c if isinstance(z, (int, Fraction)) else float(c))
        return acc

    def __repr__(self):
        if not self.coeffs:
            return "ExactPolynomial(0)"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c:
                terms.append(f"{c}*z^{k}" if k else f"{c}")
        return "ExactPolynomial(" + " + ".join(terms) + ")"

    def to_json(self) -> str:
        return json.dumps({"coeffs": [[str(c.numerator), str(c.denominator)] for c in self.coeffs]})

    @classmethod
    def from_json(cls, text: str) -> "ExactPolynomial":
        data = json.loads(text)
        return cls(Fraction(int(num), int(den)) for num, den in data["coeffs"])


def _as_poly(x):
    if isinstance(x, ExactPolynomial):
        return x
    if isinstance(x, (int, Fraction)):
        return ExactPolynomial([x])
    return NotImplemented
