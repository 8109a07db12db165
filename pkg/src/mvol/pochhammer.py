"""Exact algebra in the basis ``Q_{m,l}(g, n) = 1 / (g^m (2g-3+n)_l)``.

``(x)_l`` is the decreasing factorial ``x (x-1) ... (x-l+1)``.  Writing
``P = 2g - 3 + n``, the basis elements are graded by total degree
``deg Q_{m,l} = m + l`` (so ``1/(P)_l`` weighs like ``g^-l``).

The difference operator in the number of entries,
``delta(Q)(g, n) = Q(g, n) - Q(g, n-1)``, acts diagonally:
``delta(Q_{m,l}) = -l Q_{m,l+1}``, with kernel the pure-``g`` terms, and its
inverse on terms with ``l >= 2`` is ``Q_{m,l} -> -Q_{m,l-1} / (l - 1)``.

:func:`shift_expand` re-expands ``F(g-i, n-1) / (P)_{2i}`` in the basis.
The ``P``-dependence is handled exactly through the falling-factorial
identity ``1/((P-2i-1)_l (P)_{2i}) = (P-2i)/(P)_{2i+l+1}`` followed by
:func:`reduce_p`; only the ``g``-direction is truncated, using the binomial
series ``1/(g-i)^m = sum_j C(m-1+j, j) i^j / g^(m+j)``.  The exact ``P``
handling matters because ``n`` is an independent variable, not subordinate
to ``g``.

Coefficients are polynomials in ``pi^2`` while inputs stay exact and degrade
to high-precision floats only when a numeric coefficient enters.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Mapping, Sequence, Union

import mpmath

from .exactnum import FloatContext, PiMonomial, PiPoly, as_rational

Coeff = Union[PiPoly, mpmath.mpf]


class PochDomainError(ValueError):
    """An operator was applied outside its domain."""


def _to_coeff(c) -> Coeff:
    if isinstance(c, PiPoly):
        return c
    if isinstance(c, PiMonomial):
        return c.to_poly()
    if isinstance(c, (int, Fraction)):
        return PiPoly.from_rational(as_rational(c))
    if isinstance(c, (float, mpmath.mpf)):
        return mpmath.mpf(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _is_exact(c: Coeff) -> bool:
    return isinstance(c, PiPoly)


def _coeff_is_zero(c: Coeff) -> bool:
    return c.is_zero if isinstance(c, PiPoly) else c == 0


def _coeff_add(a: Coeff, b: Coeff) -> Coeff:
    if isinstance(a, PiPoly) and isinstance(b, PiPoly):
        return a + b
    return _coeff_numeric(a) + _coeff_numeric(b)


def _coeff_scale(c: Coeff, q) -> Coeff:
    """Scale by a rational or by another coefficient."""
    if isinstance(q, (int, Fraction)):
        if isinstance(c, PiPoly):
            return c * as_rational(q)
        return c * mpmath.mpf(q.numerator) / q.denominator if isinstance(q, Fraction) else c * q
    q = _to_coeff(q)
    if isinstance(c, PiPoly) and isinstance(q, PiPoly):
        return c * q
    return _coeff_numeric(c) * _coeff_numeric(q)


def _coeff_numeric(c: Coeff, ctx: FloatContext | None = None) -> mpmath.mpf:
    if isinstance(c, PiPoly):
        if ctx is not None:
            return ctx.eval_pi_poly(c)
        total = mpmath.mpf(0)
        for e, q in c.items():
            total += mpmath.mpf(q.numerator) / q.denominator * mpmath.pi ** (2 * e)
        return total
    return c


class PochSum:
    """A finite combination ``sum c_{m,l} Q_{m,l}`` truncated by total degree.

    ``terms`` maps ``(m, l)`` to a coefficient (PiPoly when exact, mpf when
    numeric); no zero coefficients and no terms above ``max_degree`` are
    stored.  Instances are treated as immutable values.
    """

    __slots__ = ("terms", "max_degree")

    def __init__(self, terms: Mapping[tuple[int, int], object], max_degree: int):
        clean: dict[tuple[int, int], Coeff] = {}
        for (m, l), c in terms.items():
            if m < 0 or l < 0:
                raise ValueError(f"negative basis index ({m}, {l})")
            if m + l > max_degree:
                raise ValueError(
                    f"term Q_{{{m},{l}}} exceeds the degree bound {max_degree}"
                )
            c = _to_coeff(c)
            if not _coeff_is_zero(c):
                clean[(m, l)] = c
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "max_degree", max_degree)

    def __setattr__(self, name, value):
        raise AttributeError("PochSum is immutable")

    @staticmethod
    def zero(max_degree: int = 0) -> "PochSum":
        return PochSum({}, max_degree)

    @staticmethod
    def basis(m: int, l: int, coeff=1, max_degree: int | None = None) -> "PochSum":
        if max_degree is None:
            max_degree = m + l
        return PochSum({(m, l): coeff}, max_degree)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def exact_flag(self) -> bool:
        return all(_is_exact(c) for c in self.terms.values())

    def coefficient(self, m: int, l: int) -> Coeff:
        return self.terms.get((m, l), PiPoly.zero())

    def __add__(self, other: "PochSum") -> "PochSum":
        if not isinstance(other, PochSum):
            return NotImplemented
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = _coeff_add(terms[key], c) if key in terms else c
        return PochSum(terms, max(self.max_degree, other.max_degree))

    def __sub__(self, other: "PochSum") -> "PochSum":
        return self + other.scale(-1)

    def scale(self, q) -> "PochSum":
        return PochSum(
            {key: _coeff_scale(c, q) for key, c in self.terms.items()},
            self.max_degree,
        )

    def truncate(self, degree: int) -> "PochSum":
        return PochSum(
            {(m, l): c for (m, l), c in self.terms.items() if m + l <= degree},
            degree,
        )

    def min_l(self) -> int | None:
        return min((l for (_, l) in self.terms), default=None)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0][0]))

    def render(self) -> str:
        """Deterministic text form, ordered by ``(m + l, m)``."""
        if self.is_zero:
            return "0"
        parts = []
        for (m, l), c in self.sorted_terms():
            cs = f"({c})" if isinstance(c, PiPoly) else mpmath.nstr(c, 17)
            factors = [cs]
            if m:
                factors.append(f"g^-{m}")
            if l:
                factors.append(f"poch(2g-3+n, {l})^-1")
            parts.append(" * ".join(factors))
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"PochSum<{self.render()}; deg<={self.max_degree}>"


# ---------------------------------------------------------------------------
# operators


def delta(F: PochSum) -> PochSum:
    """Difference in ``n``: acts termwise as ``Q_{m,l} -> -l Q_{m,l+1}``."""
    terms = {}
    for (m, l), c in F.terms.items():
        if l == 0:
            continue
        terms[(m, l + 1)] = _coeff_scale(c, Fraction(-l))
    return PochSum(terms, F.max_degree + 1)


def delta_inv(F: PochSum) -> PochSum:
    """Termwise inverse ``Q_{m,l} -> -Q_{m,l-1} / (l-1)``; needs ``l >= 2``."""
    terms = {}
    for (m, l), c in F.terms.items():
        if l <= 1:
            raise PochDomainError(
                f"delta_inv needs every term to have l >= 2, found Q_{{{m},{l}}}"
            )
        terms[(m, l - 1)] = _coeff_scale(c, Fraction(-1, l - 1))
    return PochSum(terms, max(F.max_degree - 1, 0))


def reduce_p(poly_in_p: Sequence, L: int) -> PochSum:
    """Rewrite ``(polynomial in P) / (P)_L`` exactly in the ``Q_{0,l}`` basis.

    Uses ``P/(P)_l = 1/(P)_{l-1} + (l-1)/(P)_l`` (Horner style, highest
    coefficient first), so the polynomial degree must not exceed ``L``.
    """
    coeffs = [as_rational(c) for c in poly_in_p]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    degree = len(coeffs) - 1
    if degree > L:
        raise PochDomainError(
            f"polynomial degree {degree} exceeds the Pochhammer length {L}"
        )
    acc: dict[int, Fraction] = {}
    for c in reversed(coeffs):
        # acc <- P * acc
        nxt: dict[int, Fraction] = {}
        for l, q in acc.items():
            if q == 0:
                continue
            if l == 0:
                raise PochDomainError("reduction escaped the basis")
            nxt[l - 1] = nxt.get(l - 1, Fraction(0)) + q
            if l - 1:
                nxt[l] = nxt.get(l, Fraction(0)) + q * (l - 1)
        acc = nxt
        if c != 0:
            acc[L] = acc.get(L, Fraction(0)) + c
    return PochSum({(0, l): q for l, q in acc.items() if q != 0}, max(L, 0))


def shift_expand(F: PochSum, i: int, R: int) -> PochSum:
    """Expansion of ``F(g-i, n-1) / (2g-3+n)_{2i}`` to total degree ``R``.

    Exact in the ``P``-direction; the ``g``-direction drops a remainder of
    size ``O(g^-(R+1))`` uniformly on ``n <= lambda * g`` regions.  Every
    produced term has ``l >= 2i``, which is asserted because the downstream
    ``delta_inv`` depends on it.
    """
    if i < 1:
        raise ValueError("the shift index i must be positive")
    if R < 2 * i:
        raise ValueError(f"degree bound {R} cannot hold the exact (P)_{2 * i} part")
    out: dict[tuple[int, int], Coeff] = {}

    def add(key: tuple[int, int], c: Coeff):
        if key in out:
            out[key] = _coeff_add(out[key], c)
        else:
            out[key] = c

    for (m, l), c in F.terms.items():
        # exact P-part: 1/((P-2i-1)_l (P)_{2i}) = (P - 2i)/(P)_{2i+l+1}
        ppart = reduce_p([-2 * i, 1], 2 * i + l + 1)
        for (_, lp), w in ppart.terms.items():
            assert lp >= 2 * i, "shift_expand produced a term with l < 2i"
            wq = w.coefficient(0)
            if m == 0:
                if lp <= R:
                    add((0, lp), _coeff_scale(c, wq))
                continue
            jmax = R - m - lp
            for j in range(0, jmax + 1):
                factor = wq * comb(m - 1 + j, j) * Fraction(i) ** j
                add((m + j, lp), _coeff_scale(c, factor))
    return PochSum({k: v for k, v in out.items() if not _coeff_is_zero(v)}, R)


# ---------------------------------------------------------------------------
# evaluation


def falling_factorial(x, l: int):
    """``x (x-1) ... (x-l+1)`` with exact arithmetic."""
    out = 1
    for j in range(l):
        out *= x - j
    return out


def eval_poch(F: PochSum, g: int, n: int) -> PiPoly:
    """Exact value at integer ``(g, n)``; requires all coefficients exact
    and ``2g - 3 + n >= max stored l`` so that no factor vanishes."""
    if g < 1:
        raise PochDomainError("evaluation needs g >= 1")
    P = 2 * g - 3 + n
    total = PiPoly.zero()
    for (m, l), c in F.terms.items():
        if P - l + 1 <= 0:
            raise PochDomainError(
                f"(2g-3+n)_{l} vanishes or changes sign at g={g}, n={n}"
            )
        if not _is_exact(c):
            raise PochDomainError("exact evaluation needs exact coefficients")
        q = Fraction(1, g**m * falling_factorial(P, l))
        total = total + c * q
    return total


def eval_poch_numeric(F: PochSum, g, n, ctx: FloatContext) -> mpmath.mpf:
    """Numeric value at (possibly large) ``g, n`` at the context precision."""
    with ctx.workdps():
        P = mpmath.mpf(2) * g - 3 + n
        total = mpmath.mpf(0)
        for (m, l), c in F.terms.items():
            denom = mpmath.mpf(g) ** m
            for j in range(l):
                denom *= P - j
            total += _coeff_numeric(c, ctx) / denom
        return total
