"""Perfect matchings of argument slots and the degree cap for exact moments."""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import CapacityError

DEGREE_CAP = 12


def max_degree() -> int:
    """Degree cap for exact evaluation; ``CHAOS_LAB_MAX_DEGREE`` may lower it."""
    raw = os.environ.get("CHAOS_LAB_MAX_DEGREE")
    if raw is None or raw.strip() == "":
        return DEGREE_CAP
    try:
        value = int(raw)
    except ValueError:
        return DEGREE_CAP
    return max(0, min(DEGREE_CAP, value))


def check_degree(total: int, what: str = "moment") -> None:
    cap = max_degree()
    if total > cap:
        raise CapacityError(f"{what} of total degree {total} exceeds the degree cap {cap}")


@dataclass(frozen=True)
class Pairing:
    """Perfect matching of positions ``1..Q``; pairs stored as sorted ``(a, b)``, ``a < b``."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple(sorted((min(a, b), max(a, b)) for a, b in self.pairs))
        seen = [p for pair in pairs for p in pair]
        if sorted(seen) != list(range(1, len(seen) + 1)):
            raise ValueError(f"{pairs} is not a perfect matching of 1..{len(seen)}")
        object.__setattr__(self, "pairs", pairs)

    @property
    def size(self) -> int:
        return 2 * len(self.pairs)

    def is_noncrossing(self) -> bool:
        for a, c in self.pairs:
            for b, d in self.pairs:
                if a < b < c < d:
                    return False
        return True

    def respects(self, widths: Sequence[int]) -> bool:
        """True when no pair joins two slots of the same block."""
        owner = block_owner(tuple(widths))
        return all(owner[a - 1] != owner[b - 1] for a, b in self.pairs)


@lru_cache(maxsize=None)
def block_owner(widths: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(k for k, w in enumerate(widths) for _ in range(w))


def all_pairings(items: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    """Yield every perfect matching of ``items`` (first item paired first)."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    rest = items[1:]
    for i, other in enumerate(rest):
        for tail in all_pairings(rest[:i] + rest[i + 1 :]):
            yield [(first, other)] + tail


def _noncrossing(lo: int, hi: int) -> Iterator[list[tuple[int, int]]]:
    # positions lo..hi inclusive, hi - lo + 1 even
    if lo > hi:
        yield []
        return
    for partner in range(lo + 1, hi + 1, 2):
        for inner in _noncrossing(lo + 1, partner - 1):
            for outer in _noncrossing(partner + 1, hi):
                yield [(lo, partner)] + inner + outer


@lru_cache(maxsize=None)
def _nc_cached(q_total: int) -> tuple[Pairing, ...]:
    return tuple(Pairing(tuple(p)) for p in _noncrossing(1, q_total))


def enumerate_nc_pairings(q_total: int) -> tuple[Pairing, ...]:
    """All non-crossing pairings of ``1..Q`` in a fixed recursive order.

    Position 1 is paired with 2, 4, ... in turn; inside and outside arcs are
    enumerated recursively. There are ``Catalan(Q/2)`` of them.
    """
    if q_total < 0 or q_total % 2:
        raise ValueError(f"non-crossing pairings need an even size, got {q_total}")
    check_degree(q_total, "pairing enumeration")
    return _nc_cached(q_total)


def respecting_filter(pairings: Sequence[Pairing], widths: Sequence[int]) -> list[Pairing]:
    """Keep the pairings without an intra-block pair for the block widths given."""
    widths = tuple(widths)
    return [p for p in pairings if p.respects(widths)]


@lru_cache(maxsize=None)
def respecting_nc(widths: tuple[int, ...]) -> tuple[Pairing, ...]:
    return tuple(respecting_filter(enumerate_nc_pairings(sum(widths)), widths))
