"""Kappa rings of compact-type moduli: partition bases and universality.

With at least one marking, the degree-d piece has dimension |P(d, 2g-2+n-d)|
and is spanned by the kappa monomials indexed by those partitions.  All of
it depends on (g, n) only through 2g-2+n, so any question transports to
genus 0 with 2g+n markings.  Without markings only a surjection from the
genus-0 ring is available; its kernel is not determined by the relation
set generated here, and the report below states observed ranks only.
"""

from .partitions import count_partitions, partitions_max_parts
from .relations import KappaPolynomial, ct_betti


class CompactTypeError(ValueError):
    pass


class PartitionBasis:
    """The kappa-monomial basis of one compact-type degree piece."""

    __slots__ = ("g", "n", "d", "partitions")

    def __init__(self, g, n, d, parts):
        self.g = g
        self.n = n
        self.d = d
        self.partitions = tuple(tuple(p) for p in parts)

    def __len__(self):
        return len(self.partitions)

    def __iter__(self):
        return iter(self.partitions)

    def __contains__(self, p):
        return tuple(p) in self.partitions

    def __repr__(self):
        return (f"PartitionBasis(g={self.g}, n={self.n}, d={self.d}, "
                f"{list(self.partitions)})")


def _check_marked(g, n, d):
    if n <= 0:
        raise CompactTypeError(
            "at least one marking is required: without markings only a "
            "surjection from the genus-0 ring exists and the kappa rings "
            "need not be isomorphic")
    if g < 0 or d < 0:
        raise CompactTypeError("genus and degree must be nonnegative")


def partition_basis(g, n, d):
    """Partitions of d with at most 2g-2+n-d parts, in deterministic order.

    The corresponding kappa monomials form a basis of the degree-d piece
    of the compact-type kappa ring; requires n > 0.
    """
    _check_marked(g, n, d)
    return PartitionBasis(g, n, d, partitions_max_parts(d, 2 * g - 2 + n - d))


def betti(g, n, d):
    """dim of the degree-d piece: |P(d, 2g-2+n-d)|; requires n > 0."""
    _check_marked(g, n, d)
    return count_partitions(d, 2 * g - 2 + n - d)


def socle_degree(g, n):
    """Top nonvanishing degree of the compact-type kappa ring, 2g-3+n."""
    return 2 * g - 3 + n


def genus0_transport(g, n, x):
    """Carry a kappa polynomial on (g, n) to (0, 2g+n).

    The isomorphism is the identity on kappa monomials; only the metadata
    moves.  Requires n > 0: with no markings the map back is unavailable.
    """
    _check_marked(g, n, 0)
    if not isinstance(x, KappaPolynomial):
        raise CompactTypeError("transport expects a kappa polynomial")
    if (x.g, x.n) != (g, n):
        raise CompactTypeError(
            f"polynomial metadata ({x.g},{x.n}) does not match ({g},{n})")
    return KappaPolynomial(x.terms, 0, 2 * g + n, x.d, x.sigma, x.family)


def q5_report(g_max=6):
    """Observed unmarked quotient dimensions against the genus-0 target.

    For each g the relation span on (g, 0) is compared degreewise with the
    basis count of the isomorphic-parameter marked space (0, 2g).  Both
    sides are generated by the identical relation set, so a deficit of 0
    everywhere is expected; whether the unmarked ring has further
    relations is left open and no completeness is claimed.
    """
    rows = []
    for g in range(2, g_max + 1):
        dims = ct_betti(g, 0)
        for d, observed in enumerate(dims):
            target = betti(0, 2 * g, d)
            rows.append({"g": g, "d": d, "observed": observed,
                         "target": target, "deficit": observed - target})
    return {
        "rows": rows,
        "note": ("observed ranks come from the generated relation span "
                 "only; they bound the unmarked kappa ring from above and "
                 "carry no completeness claim"),
    }
