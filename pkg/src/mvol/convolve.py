"""Fast evaluation kernel for the pair-splitting recursion.

The recursion for a profile with designated pair ``(k1, k2)`` and marked
entries ``E`` sums, over the number of blocks ``m``, products of a-values
indexed by an ordered partition of ``E`` and a pair of compositions of
``k1`` and ``k2``.  Enumerating compositions explicitly costs
``C(k1-1, m-1) * C(k2-1, m-1)`` per partition and is hopeless for large
entries.

This module computes the same numbers as coefficient extractions.  For each
subset ``S`` of the marked entries let

    B_S(x, y) = sum_{1<=d<=k1, 1<=d'<=k2} a(mu_S + (d + d' - 1)) x^d y^d'

Then the ``m``-block sum equals ``[x^k1 y^k2]`` of the ``m``-fold product of
the ``B_S`` over ordered tuples of disjoint subsets covering ``E`` (a subset
convolution combined with bivariate truncated multiplication).

Two facts keep this fast:

* every ``B_S`` coefficient depends on ``d`` and ``d'`` only through the sum
  ``d + d'``, so multiplying an accumulated polynomial ``P`` by ``B_S``
  reduces, via the recurrence ``H_j = x*H_{j-1} + x*y^(j-1)`` for the
  anti-diagonal sums ``H_j = sum_{d+d'=j} x^d y^d'``, to one shifted
  addition of ``P`` per diagonal instead of one multiplication per
  coefficient pair (O(k^3) instead of O(k^4) integer operations);

* polynomials are stored as integer grids over a single shared denominator,
  and each stage divides out the gcd, which keeps the integers near the size
  of the reduced values instead of growing a denominator factor per stage.

All arithmetic is exact.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Callable, Sequence


class GridPoly:
    """Bivariate polynomial with integer numerators on a capped grid.

    ``rows[dx][dy]`` holds the numerator of the ``x^dx y^dy`` coefficient;
    a row may be ``None`` when entirely zero.  ``den`` is the shared
    positive denominator.
    """

    __slots__ = ("rows", "den", "cap_x", "cap_y")

    def __init__(self, cap_x: int, cap_y: int, den: int = 1):
        self.rows: list[list[int] | None] = [None] * (cap_x + 1)
        self.den = den
        self.cap_x = cap_x
        self.cap_y = cap_y

    def coefficient(self, dx: int, dy: int) -> Fraction:
        row = self.rows[dx] if dx <= self.cap_x else None
        if row is None:
            return Fraction(0)
        return Fraction(row[dy], self.den)

    def is_zero(self) -> bool:
        return all(r is None or not any(r) for r in self.rows)

    def normalize(self) -> None:
        """Divide out the common gcd of all numerators and the denominator."""
        g = self.den
        for row in self.rows:
            if row is None:
                continue
            for v in row:
                if v:
                    g = gcd(g, v)
                    if g == 1:
                        return
        if g > 1:
            self.den //= g
            for row in self.rows:
                if row is not None:
                    for i, v in enumerate(row):
                        if v:
                            row[i] = v // g


def build_diag_poly(
    nums: Sequence[int], den: int, k1: int, k2: int
) -> GridPoly:
    """Materialise ``B(x,y) = sum nums[d+d'-1]/den * x^d y^d'`` on the grid."""
    B = GridPoly(k1, k2, den)
    for dx in range(1, k1 + 1):
        row = None
        for dy in range(1, k2 + 1):
            c = nums[dx + dy - 1]
            if c:
                if row is None:
                    row = [0] * (k2 + 1)
                row[dy] = c
        B.rows[dx] = row
    return B


def mul_by_diag(P: GridPoly, nums: Sequence[int], den: int) -> GridPoly:
    """Return ``P * B`` capped to the grid, where ``B`` has the coefficient
    table ``nums`` (indexed by ``d + d' - 1``) over denominator ``den``.

    Phantom diagonal terms beyond the caps only ever raise degrees, so
    capping after each recurrence step is exact for the retained block.
    """
    cap_x, cap_y = P.cap_x, P.cap_y
    out = GridPoly(cap_x, cap_y, P.den * den)
    # G tracks P * H_j capped; the x-shift is a list rotation.
    G: list[list[int] | None] = [None] * (cap_x + 1)
    smax = len(nums) - 1
    for j in range(2, smax + 2):
        # G <- x * G
        G.pop()
        G.insert(0, None)
        # G += x * y^(j-1) * P
        yshift = j - 1
        if yshift <= cap_y:
            width = cap_y - yshift + 1
            for px in range(min(len(P.rows), cap_x)):
                prow = P.rows[px]
                if prow is None:
                    continue
                grow = G[px + 1]
                if grow is None:
                    grow = [0] * (cap_y + 1)
                    G[px + 1] = grow
                for dy in range(min(width, cap_y + 1)):
                    v = prow[dy]
                    if v:
                        grow[dy + yshift] += v
        c = nums[j - 1]
        if c:
            orows = out.rows
            for dx in range(cap_x + 1):
                grow = G[dx]
                if grow is None:
                    continue
                orow = orows[dx]
                if orow is None:
                    orow = [0] * (cap_y + 1)
                    orows[dx] = orow
                for dy in range(cap_y + 1):
                    v = grow[dy]
                    if v:
                        orow[dy] += c * v
    out.normalize()
    return out


def add_into(acc: GridPoly, extra: GridPoly) -> GridPoly:
    """Sum two grid polynomials (denominators reconciled by lcm)."""
    if extra.is_zero():
        return acc
    if acc.is_zero():
        return extra
    g = gcd(acc.den, extra.den)
    la = extra.den // g
    lb = acc.den // g
    out = GridPoly(acc.cap_x, acc.cap_y, acc.den * la)
    for dx in range(acc.cap_x + 1):
        ra, rb = acc.rows[dx], extra.rows[dx]
        if ra is None and rb is None:
            continue
        row = [0] * (acc.cap_y + 1)
        if ra is not None:
            for dy, v in enumerate(ra):
                if v:
                    row[dy] = v * la
        if rb is not None:
            for dy, v in enumerate(rb):
                if v:
                    row[dy] += v * lb
        out.rows[dx] = row
    return out


def per_m_block_sums(
    k1: int,
    k2: int,
    marked: Sequence[int],
    a_of: Callable[[tuple[int, ...]], Fraction],
    m_max: int | None = None,
) -> list[Fraction]:
    """Block sums ``A_m`` for ``m = 1..m_max`` of the designated-pair split.

    ``a_of`` maps a tuple of entries (a sub-profile plus merged entry) to its
    a-value.  The returned list carries no ``size/m`` prefactors.
    """
    if m_max is None:
        m_max = min(k1, k2)
    m_max = min(m_max, k1, k2)
    if m_max < 1:
        return []
    ne = len(marked)
    full = (1 << ne) - 1
    smax = k1 + k2 - 1

    # coefficient tables per subset: nums[mask][s], over a common denominator
    nums: dict[int, list[int]] = {}
    dens: dict[int, int] = {}
    for mask in range(full + 1):
        sub = tuple(marked[i] for i in range(ne) if mask >> i & 1)
        vals = [Fraction(0)] * (smax + 1)
        for s in range(1, smax + 1):
            vals[s] = a_of(sub + (s,))
        den = 1
        for v in vals:
            den = den * v.denominator // gcd(den, v.denominator)
        nums[mask] = [int(v * den) for v in vals]
        dens[mask] = den

    # T[mask] = sum over ordered tuples of disjoint subsets covering mask
    # of the product of the B's; advanced one block per round.
    T: dict[int, GridPoly] = {}
    for mask in range(full + 1):
        T[mask] = build_diag_poly(nums[mask], dens[mask], k1, k2)
    out: list[Fraction] = [T[full].coefficient(k1, k2)]

    for _ in range(2, m_max + 1):
        nextT: dict[int, GridPoly] = {}
        for mask in range(full + 1):
            acc = GridPoly(k1, k2, 1)
            sub = mask
            while True:
                prev = T[mask ^ sub]
                if not prev.is_zero():
                    acc = add_into(acc, mul_by_diag(prev, nums[sub], dens[sub]))
                if sub == 0:
                    break
                sub = (sub - 1) & mask
            acc.normalize()
            nextT[mask] = acc
        T = nextT
        out.append(T[full].coefficient(k1, k2))
    return out
