"""Exact number tower.

Everything the volume engine computes lives in one of four exact types:

* ``Rational`` -- arbitrary-precision rationals (``fractions.Fraction``),
* ``PiMonomial`` -- a single term ``q * pi**(2*e)`` with ``q`` rational,
* ``PiPoly`` -- a polynomial in ``pi**2`` over the rationals,
* ``TruncatedSeries`` -- a univariate formal power series over the
  rationals with an explicit truncation order.

No floating arithmetic ever enters a value held in these types.  Decimal
output goes through :class:`FloatContext`, which evaluates with mpmath at a
configurable working precision and can certify how many digits survive a
doubling of that precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import mpmath

Rational = Fraction

RationalLike = Union[int, Fraction]


def as_rational(x: RationalLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an integer or Fraction, got {type(x).__name__}")


def format_rational(q: Fraction) -> str:
    """Render ``p/q`` (always with the slash, so parsing is uniform)."""
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


# ---------------------------------------------------------------------------
# pi-power monomials and polynomials in pi^2


@dataclass(frozen=True)
class PiMonomial:
    """An exact number of the form ``coeff * pi**(2*pi_exp)``.

    Zero is normalised to ``pi_exp == 0`` so equality is structural.
    Addition is only defined between compatible terms (same power, or one
    side zero); anything richer should be promoted with :meth:`to_poly`.
    """

    coeff: Fraction
    pi_exp: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coeff", as_rational(self.coeff))
        if self.pi_exp < 0:
            raise ValueError("pi exponent must be non-negative")
        if self.coeff == 0 and self.pi_exp != 0:
            object.__setattr__(self, "pi_exp", 0)

    @staticmethod
    def zero() -> "PiMonomial":
        return PiMonomial(Fraction(0), 0)

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0

    def __add__(self, other: "PiMonomial") -> "PiMonomial":
        if not isinstance(other, PiMonomial):
            return NotImplemented
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.pi_exp != other.pi_exp:
            raise ValueError(
                "cannot add pi-monomials with different exponents; "
                "promote with to_poly()"
            )
        return PiMonomial(self.coeff + other.coeff, self.pi_exp)

    def __sub__(self, other: "PiMonomial") -> "PiMonomial":
        return self + (-other)

    def __neg__(self) -> "PiMonomial":
        return PiMonomial(-self.coeff, self.pi_exp)

    def __mul__(self, other):
        if isinstance(other, PiMonomial):
            return PiMonomial(self.coeff * other.coeff, self.pi_exp + other.pi_exp)
        if isinstance(other, (int, Fraction)):
            return PiMonomial(self.coeff * other, self.pi_exp)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return PiMonomial(self.coeff / other, self.pi_exp)
        if isinstance(other, PiMonomial):
            if other.is_zero:
                raise ZeroDivisionError("division by zero monomial")
            if other.pi_exp > self.pi_exp and self.coeff != 0:
                raise ValueError("quotient would have a negative pi power")
            exp = 0 if self.coeff == 0 else self.pi_exp - other.pi_exp
            return PiMonomial(self.coeff / other.coeff, exp)
        return NotImplemented

    def to_poly(self) -> "PiPoly":
        return PiPoly({self.pi_exp: self.coeff})

    def eval(self, ctx: "FloatContext") -> mpmath.mpf:
        return ctx.eval_pi_monomial(self)

    def __str__(self) -> str:
        if self.pi_exp == 0:
            return format_rational(self.coeff)
        return f"{format_rational(self.coeff)}*pi^{2 * self.pi_exp}"

    @staticmethod
    def parse(text: str) -> "PiMonomial":
        text = text.strip()
        if "*" not in text:
            return PiMonomial(parse_rational(text), 0)
        coeff_part, pi_part = text.split("*", 1)
        pi_part = pi_part.strip()
        if not pi_part.startswith("pi^"):
            raise ValueError(f"malformed pi-monomial {text!r}")
        exp = int(pi_part[3:])
        if exp % 2:
            raise ValueError("pi exponent must be even")
        return PiMonomial(parse_rational(coeff_part), exp // 2)


class PiPoly:
    """A finite sum ``sum_e q_e * pi**(2*e)`` with rational ``q_e``.

    Stored as a mapping from the exponent ``e`` to ``q_e`` with no zero
    coefficients kept.  Instances are treated as immutable values.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Mapping[int, RationalLike] | None = None):
        clean: dict[int, Fraction] = {}
        if coeffs:
            for e, q in coeffs.items():
                if e < 0:
                    raise ValueError("pi^2 exponent must be non-negative")
                q = as_rational(q)
                if q != 0:
                    clean[int(e)] = q
        object.__setattr__(self, "_c", clean)

    def __setattr__(self, name, value):
        raise AttributeError("PiPoly is immutable")

    # -- constructors -------------------------------------------------
    @staticmethod
    def zero() -> "PiPoly":
        return PiPoly()

    @staticmethod
    def from_rational(q: RationalLike) -> "PiPoly":
        return PiPoly({0: as_rational(q)})

    @staticmethod
    def from_monomial(m: PiMonomial) -> "PiPoly":
        return m.to_poly()

    # -- inspection ---------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self._c

    def coefficient(self, e: int) -> Fraction:
        return self._c.get(e, Fraction(0))

    def items(self):
        return sorted(self._c.items())

    @property
    def degree(self) -> int:
        """Largest pi^2 exponent present (zero polynomial has degree 0)."""
        return max(self._c) if self._c else 0

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PiPoly.from_rational(other)
        if not isinstance(other, PiPoly):
            return NotImplemented
        c = dict(self._c)
        for e, q in other._c.items():
            c[e] = c.get(e, Fraction(0)) + q
        return PiPoly(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self) -> "PiPoly":
        return PiPoly({e: -q for e, q in self._c.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = as_rational(other)
            return PiPoly({e: c * q for e, c in self._c.items()})
        if isinstance(other, PiMonomial):
            other = other.to_poly()
        if not isinstance(other, PiPoly):
            return NotImplemented
        c: dict[int, Fraction] = {}
        for e1, q1 in self._c.items():
            for e2, q2 in other._c.items():
                e = e1 + e2
                c[e] = c.get(e, Fraction(0)) + q1 * q2
        return PiPoly(c)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = PiPoly.from_rational(other)
        if not isinstance(other, PiPoly):
            return NotImplemented
        return self._c == other._c

    def __hash__(self) -> int:
        return hash(tuple(sorted(self._c.items())))

    def eval(self, ctx: "FloatContext") -> mpmath.mpf:
        return ctx.eval_pi_poly(self)

    # -- serialization ------------------------------------------------
    def to_pairs(self) -> list[list]:
        """Exponent/rational list used in JSON output."""
        return [[e, format_rational(q)] for e, q in self.items()]

    @staticmethod
    def from_pairs(pairs: Iterable[Sequence]) -> "PiPoly":
        return PiPoly({int(e): parse_rational(str(q)) for e, q in pairs})

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for e, q in self.items():
            term = format_rational(q) if e == 0 else f"{format_rational(q)}*pi^{2 * e}"
            parts.append(term)
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"PiPoly({dict(self.items())!r})"


# ---------------------------------------------------------------------------
# truncated formal power series over Q


class TruncatedSeries:
    """A power series ``sum c_i t**i`` known exactly through ``t**order``.

    Arithmetic keeps the minimum of the operand orders, so a result never
    claims more coefficients than its inputs can support.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Sequence[RationalLike], order: int | None = None):
        coeffs = [as_rational(c) for c in coeffs]
        if order is None:
            if not coeffs:
                raise ValueError("empty coefficient list needs an explicit order")
            order = len(coeffs) - 1
        if order < 0:
            raise ValueError("order must be non-negative")
        coeffs = coeffs[: order + 1]
        coeffs += [Fraction(0)] * (order + 1 - len(coeffs))
        object.__setattr__(self, "coeffs", tuple(coeffs))
        object.__setattr__(self, "order", order)

    def __setattr__(self, name, value):
        raise AttributeError("TruncatedSeries is immutable")

    @staticmethod
    def constant(c: RationalLike, order: int) -> "TruncatedSeries":
        return TruncatedSeries([as_rational(c)], order)

    def coefficient(self, i: int) -> Fraction:
        if i > self.order:
            raise IndexError(f"coefficient t^{i} beyond truncation order {self.order}")
        return self.coeffs[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        n = min(self.order, other.order)
        return TruncatedSeries(
            [self.coeffs[i] + other.coeffs[i] for i in range(n + 1)], n
        )

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        n = min(self.order, other.order)
        return TruncatedSeries(
            [self.coeffs[i] - other.coeffs[i] for i in range(n + 1)], n
        )

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries([-c for c in self.coeffs], self.order)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = as_rational(other)
            return TruncatedSeries([c * q for c in self.coeffs], self.order)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        n = min(self.order, other.order)
        out = [Fraction(0)] * (n + 1)
        for i, a in enumerate(self.coeffs[: n + 1]):
            if a == 0:
                continue
            for j in range(n + 1 - i):
                b = other.coeffs[j]
                if b != 0:
                    out[i + j] += a * b
        return TruncatedSeries(out, n)

    __rmul__ = __mul__

    def pow(self, k: int) -> "TruncatedSeries":
        if k <= 0:
            raise ValueError("exponent must be a positive integer")
        result = None
        base = self
        while k:
            if k & 1:
                result = base if result is None else result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def reciprocal(self) -> "TruncatedSeries":
        """Multiplicative inverse; requires a non-zero constant term."""
        a0 = self.coeffs[0]
        if a0 == 0:
            raise ZeroDivisionError("series has no inverse: zero constant term")
        inv0 = 1 / a0
        out = [inv0] + [Fraction(0)] * self.order
        for n in range(1, self.order + 1):
            s = Fraction(0)
            for j in range(1, n + 1):
                aj = self.coeffs[j]
                if aj != 0:
                    s += aj * out[n - j]
            out[n] = -s * inv0
        return TruncatedSeries(out, self.order)

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs[: order + 1], min(order, self.order))

    def __str__(self) -> str:
        parts = [
            f"{format_rational(c)}*t^{i}" for i, c in enumerate(self.coeffs) if c != 0
        ]
        return " + ".join(parts) if parts else "0"


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a * b


def series_pow(a: TruncatedSeries, k: int) -> TruncatedSeries:
    return a.pow(k)


def sine_quotient_series(order: int) -> TruncatedSeries:
    """The series ``(t/2)/sin(t/2)`` truncated at ``t**order``.

    This is the generating kernel of the minimal-stratum induction.  All odd
    coefficients vanish and every even coefficient from ``t**2`` on is
    positive; the first few are ``1 + t^2/24 + 7 t^4/5760 + 31 t^6/967680``.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    # sin(t/2)/(t/2) = sum_j (-1)^j t^(2j) / (4^j (2j+1)!)
    coeffs = [Fraction(0)] * (order + 1)
    for j in range(0, order // 2 + 1):
        coeffs[2 * j] = Fraction((-1) ** j, 4**j * math.factorial(2 * j + 1))
    return TruncatedSeries(coeffs, order).reciprocal()


# Backwards-friendly alias matching the operation vocabulary used elsewhere.
series_s = sine_quotient_series


# ---------------------------------------------------------------------------
# arbitrary-precision numeric evaluation


@dataclass(frozen=True)
class FloatContext:
    """Decimal working precision for every numeric pipeline.

    ``digits`` is the requested decimal precision; internally a guard of a
    few digits is carried so that printed digits are trustworthy.  Use
    :meth:`stable_digits` to re-run a computation at doubled precision and
    count the digits that agree.
    """

    digits: int = 50

    def __post_init__(self):
        if self.digits <= 0:
            raise ValueError("digits must be positive")

    GUARD = 10

    def workdps(self, scale: int = 1):
        """mpmath context manager at ``scale`` times the working precision."""
        return mpmath.workdps(scale * self.digits + self.GUARD)

    def doubled(self) -> "FloatContext":
        return FloatContext(2 * self.digits)

    def mpf(self, q: RationalLike) -> mpmath.mpf:
        q = as_rational(q)
        with self.workdps():
            return mpmath.mpf(q.numerator) / q.denominator

    def pi_power(self, e: int) -> mpmath.mpf:
        """pi**(2*e) at working precision."""
        with self.workdps():
            return mpmath.pi**(2 * e)

    def eval_pi_monomial(self, m: PiMonomial) -> mpmath.mpf:
        with self.workdps():
            if m.coeff == 0:
                return mpmath.mpf(0)
            return (
                mpmath.mpf(m.coeff.numerator)
                / m.coeff.denominator
                * mpmath.pi ** (2 * m.pi_exp)
            )

    def eval_pi_poly(self, p: PiPoly) -> mpmath.mpf:
        with self.workdps():
            total = mpmath.mpf(0)
            for e, q in p.items():
                total += mpmath.mpf(q.numerator) / q.denominator * mpmath.pi ** (2 * e)
            return total

    def stable_digits(self, value, value_doubled) -> int:
        """Number of decimal digits on which the two evaluations agree.

        Capped at ``digits``; zero means no agreement at all.  Two exact
        zeros agree to the full working precision.
        """
        with mpmath.workdps(2 * self.digits + self.GUARD):
            a = mpmath.mpf(value)
            b = mpmath.mpf(value_doubled)
            if a == b:
                return self.digits
            scale = max(abs(a), abs(b))
            if scale == 0:
                return self.digits
            rel = abs(a - b) / scale
            if rel == 0:
                return self.digits
            d = int(mpmath.floor(-mpmath.log10(rel)))
        return max(0, min(self.digits, d))


def pi_poly_eval(p: PiPoly, ctx: FloatContext) -> mpmath.mpf:
    """Evaluate a polynomial in pi^2 at the context's working precision."""
    return ctx.eval_pi_poly(p)
