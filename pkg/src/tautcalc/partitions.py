"""Integer partition enumeration helpers shared across the package.

Partitions are tuples of weakly decreasing positive integers; the empty
tuple is the empty partition.
"""

from __future__ import annotations

from functools import lru_cache


def partitions(n, max_part=None):
    """Yield all partitions of n with parts <= max_part, largest part first."""
    if n < 0:
        return
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


def partitions_max_parts(n, max_parts):
    """Partitions of n with at most max_parts parts."""
    out = []
    for p in partitions(n):
        if len(p) <= max_parts:
            out.append(p)
    return out


def partitions_in_alphabet(n, allowed):
    """Partitions of n whose parts all lie in the set `allowed`."""
    parts = sorted((a for a in allowed if 0 < a <= n), reverse=True)

    def rec(m, idx):
        if m == 0:
            yield ()
            return
        for i in range(idx, len(parts)):
            a = parts[i]
            if a > m:
                continue
            for rest in rec(m - a, i):
                yield (a,) + rest

    yield from rec(n, 0)


@lru_cache(maxsize=None)
def count_partitions(n, max_parts):
    """|P(n, k)|: partitions of n with at most k parts."""
    if n < 0 or max_parts < 0:
        return 0
    if n == 0:
        return 1
    if max_parts == 0:
        return 0
    # recurrence over largest part via conjugation: parts <= max_parts
    @lru_cache(maxsize=None)
    def p(m, k):
        if m == 0:
            return 1
        if k == 0:
            return 0
        total = 0
        for first in range(min(m, k), 0, -1):
            total += p(m - first, first)
        return total

    return p(n, max_parts)


def exponent_vector(partition):
    """Partition -> sparse {part: multiplicity} map."""
    out = {}
    for part in partition:
        out[part] = out.get(part, 0) + 1
    return out
