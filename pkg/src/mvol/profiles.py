"""Singularity profiles and the combinatorial enumerators behind the
volume recursion.

A profile is a list of positive integers recording the orders (shifted by
one) of the zeros of a holomorphic 1-form.  Profiles are stored in canonical
ascending order.  A profile of size ``s`` with ``n`` entries has genus
``(s - n + 2) / 2``; it is *admissible* when that number is an integer,
i.e. when ``s`` and ``n`` have the same parity.  Non-admissible profiles are
representable on purpose: they occur as intermediate sub-profiles inside the
recursion, where they contribute zero.

The enumerators are lazy generators, never materialised lists; ordered set
partitions grow like ``m**n`` and would otherwise dominate memory.
"""

from __future__ import annotations

from math import comb
from typing import Iterable, Iterator, Sequence


class Profile:
    """A canonical (ascending) profile with cached size/length/genus."""

    __slots__ = ("entries", "n", "size")

    def __init__(self, entries: Iterable[int]):
        entries = tuple(sorted(int(k) for k in entries))
        if not entries:
            raise ValueError("a profile needs at least one entry")
        if entries[0] < 1:
            raise ValueError(f"profile entries must be positive, got {entries}")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "n", len(entries))
        object.__setattr__(self, "size", sum(entries))

    def __setattr__(self, name, value):
        raise AttributeError("Profile is immutable")

    @property
    def is_admissible(self) -> bool:
        return (self.size - self.n) % 2 == 0

    @property
    def genus(self) -> int | None:
        """``(size - n + 2) / 2`` when integral, else None."""
        if not self.is_admissible:
            return None
        return (self.size - self.n + 2) // 2

    def product(self) -> int:
        m = 1
        for k in self.entries:
            m *= k
        return m

    def __eq__(self, other) -> bool:
        return isinstance(other, Profile) and self.entries == other.entries

    def __lt__(self, other: "Profile") -> bool:
        return self.entries < other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __str__(self) -> str:
        return ",".join(str(k) for k in self.entries)

    def __repr__(self) -> str:
        return f"Profile(({', '.join(str(k) for k in self.entries)}))"


def canonicalize(raw: Iterable[int]) -> Profile:
    """Sort ascending and cache the derived quantities.

    Raises on an empty list or a non-positive entry; admissibility is a
    queryable flag, never a constructor error.
    """
    return Profile(raw)


def parse_profile(text: str) -> Profile:
    """Parse comma-separated positive integers, canonicalizing the order."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError(f"empty profile string {text!r}")
    try:
        entries = [int(p) for p in parts]
    except ValueError as exc:
        raise ValueError(f"malformed profile string {text!r}") from exc
    return canonicalize(entries)


def concatenate(mu: Profile, nu: Profile | Sequence[int]) -> Profile:
    extra = nu.entries if isinstance(nu, Profile) else tuple(nu)
    return Profile(mu.entries + tuple(extra))


def sub_profile(mu: Profile, indices: Iterable[int]) -> Profile:
    """The profile formed by the 1-based ``indices`` into the canonical order."""
    idx = sorted(set(int(i) for i in indices))
    if not idx:
        raise ValueError("sub-profile needs at least one index")
    if idx[0] < 1 or idx[-1] > mu.n:
        raise IndexError(f"index out of range for a profile of length {mu.n}")
    return Profile(mu.entries[i - 1] for i in idx)


def reduce_profile(mu: Profile, k: int = 0) -> Profile:
    """Merge the two smallest entries into ``k1 + k2 - 1 - 2k``.

    The result has one entry fewer and genus lower by exactly ``k``.
    """
    if mu.n < 2:
        raise ValueError("reduction needs a profile of length at least two")
    if k < 0:
        raise ValueError("k must be non-negative")
    merged = mu.entries[0] + mu.entries[1] - 1 - 2 * k
    if merged < 1:
        raise ValueError(
            f"merged entry {merged} would not be positive for {mu} with k={k}"
        )
    return Profile((merged,) + mu.entries[2:])


# ---------------------------------------------------------------------------
# enumerators


def compositions(k: int, m: int) -> Iterator[tuple[int, ...]]:
    """All ``m``-tuples of positive integers summing to ``k``, lexicographic.

    Empty when ``m > k``; there are ``C(k-1, m-1)`` of them otherwise.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if m < 1:
        raise ValueError("m must be positive")
    if m > k:
        return
    if m == 1:
        yield (k,)
        return
    for first in range(1, k - m + 2):
        for rest in compositions(k - first, m - 1):
            yield (first,) + rest


def composition_count(k: int, m: int) -> int:
    if m < 1 or m > k:
        return 0
    return comb(k - 1, m - 1)


def ordered_set_partitions(
    elements: Sequence, m: int
) -> Iterator[tuple[tuple, ...]]:
    """All ordered lists of ``m`` disjoint (possibly empty) blocks covering
    ``elements``.

    Exactly ``m**len(elements)`` of them, enumerated by assigning each
    element a block index in odometer order (last element varies fastest).
    """
    if m < 1:
        raise ValueError("m must be positive")
    elements = tuple(elements)
    n = len(elements)
    if n == 0:
        yield tuple(() for _ in range(m))
        return
    assignment = [0] * n
    while True:
        blocks: list[list] = [[] for _ in range(m)]
        for x, b in zip(elements, assignment):
            blocks[b].append(x)
        yield tuple(tuple(b) for b in blocks)
        i = n - 1
        while i >= 0 and assignment[i] == m - 1:
            assignment[i] = 0
            i -= 1
        if i < 0:
            return
        assignment[i] += 1


def ordered_set_partitions_sized(
    elements: Sequence, sizes: Sequence[int]
) -> Iterator[tuple[tuple, ...]]:
    """Ordered partitions with prescribed block cardinalities.

    Only the two-block case is ever needed by the diagnostics, but the
    implementation is uniform.
    """
    elements = tuple(elements)
    if sum(sizes) != len(elements):
        raise ValueError("block sizes must sum to the number of elements")

    def rec(pool: tuple, sizes: tuple[int, ...]):
        if not sizes:
            yield ()
            return
        first, rest_sizes = sizes[0], sizes[1:]
        for picked in _combinations(pool, first):
            remaining = tuple(x for x in pool if x not in set(picked))
            # elements are assumed distinct (index sets); guard anyway
            if len(remaining) != len(pool) - first:
                remaining = _drop_once(pool, picked)
            for rest in rec(remaining, rest_sizes):
                yield (picked,) + rest

    yield from rec(elements, tuple(sizes))


def _combinations(pool: Sequence, r: int):
    from itertools import combinations

    return combinations(pool, r)


def _drop_once(pool: Sequence, picked: Sequence) -> tuple:
    out = list(pool)
    for x in picked:
        out.remove(x)
    return tuple(out)
