"""Tests for the kappa-ring relation generators.

The load-bearing checks run the same coefficient extraction through a second,
structurally different route: a generic multivariate exponential with explicit
kappa variables.  The production engine never touches FormalSeries.exp for
this, so agreement between the two is meaningful.
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tautcalc.linalg import SparseMatrix, in_span
from tautcalc.partitions import count_partitions, partitions
from tautcalc.relations import (
    KappaPolynomial,
    RelationError,
    RelationSet,
    ct_betti,
    ct_relation,
    ct_relation_ideal,
    fz_betti,
    fz_relation,
    fz_relation_ideal,
    polynomial_from_json,
    quotient_dim,
    span_rank,
)
import tautcalc.relations as relations
import tautcalc.series as series


# -- second-route oracle ------------------------------------------------

def expand_directly(family, g, n, d, sigma):
    """[t^d p^sigma] exp(-gamma) via a generic multivariate exponential.

    Kappa classes become extra series variables k1..kd (kappa_0 is numeric),
    so the whole extraction runs through FormalSeries arithmetic with none of
    the sector bookkeeping the production path uses.  Returns {exps: coeff}.
    """
    size = sum(sigma)
    table = series.constants_table(family, d, size)
    supports = (series.fz_p_supports(size) if family == "fz"
                else series.ct_p_supports(size))
    names = ("t",) + tuple(f"p{j}" for j in supports) + tuple(
        f"k{r}" for r in range(1, d + 1))
    num_p = len(supports)
    t_weights = (1,) + (0,) * (num_p + d)
    p_weights = (0,) + tuple(supports) + (0,) * d
    trunc = ((t_weights, d), (p_weights, size))
    kappa0 = Fraction(2 * g - 2 + (n if family == "ct" else 0))
    coeffs = {}
    for (r, sig), c in table.items():
        if r > d or sum(sig) > size:
            continue
        e = [0] * len(names)
        e[0] = r
        for j in sig:
            e[1 + supports.index(j)] += 1
        val = c * kappa0 if r == 0 else c
        if r:
            e[num_p + r] = 1
        if val:
            key = tuple(e)
            coeffs[key] = coeffs.get(key, Fraction(0)) + val
    gamma = series.FormalSeries(names, trunc, coeffs)
    expanded = (gamma * Fraction(-1)).exp()
    want_p = tuple(sigma.count(j) for j in supports)
    out = {}
    for e, c in expanded.coeffs.items():
        if e[0] == d and e[1:1 + num_p] == want_p:
            k = e[1 + num_p:]
            while k and k[-1] == 0:
                k = k[:-1]
            out[k] = out.get(k, Fraction(0)) + c
    return {k: v for k, v in out.items() if v}


DUAL_ROUTE_CASES = [
    ("fz", 2, 0, 1, ()),
    ("fz", 3, 0, 2, ()),
    ("fz", 4, 0, 2, (1,)),
    ("fz", 6, 0, 3, (1, 1)),
    ("fz", 3, 0, 3, (3,)),
    ("fz", 7, 0, 4, ()),
    ("ct", 1, 1, 1, ()),
    ("ct", 1, 2, 2, (1,)),
    ("ct", 3, 1, 4, ()),
    ("ct", 2, 3, 4, (1, 1)),
]


@pytest.mark.parametrize("family,g,n,d,sigma", DUAL_ROUTE_CASES)
def test_relation_matches_direct_expansion(family, g, n, d, sigma):
    if family == "fz":
        value = fz_relation(g, d, sigma)
    else:
        value = ct_relation(g, n, d, sigma)
    assert dict(value.terms) == expand_directly(family, g, n, d, sigma)


# -- frozen values ------------------------------------------------------

def test_first_smooth_relation():
    # kappa_1 is torsion in degree 1 for genus 2: the relation is -60*kappa_1
    value = fz_relation(2, 1)
    assert value.terms == {(1,): Fraction(-60)}
    assert value.g == 2 and value.d == 1 and value.sigma == ()
    assert str(value) == "-60*kappa_1"


def test_genus3_degree2_relation():
    assert fz_relation(3, 2).terms == {
        (2,): Fraction(1800),
        (0, 1): Fraction(-25920),
    }


def test_marked_insertion_changes_coefficients():
    assert fz_relation(4, 2, (1,)).terms == {
        (2,): Fraction(19440),
        (0, 1): Fraction(-207360),
    }


def test_first_compact_type_relation():
    # kappa_1 vanishes on the compact-type space of pointed elliptic curves
    assert ct_relation(1, 1, 1).terms == {(1,): Fraction(-1)}


def test_compact_type_higher_relation():
    assert ct_relation(2, 3, 4, (1, 1)).terms == {
        (0, 0, 0, 1): Fraction(-7023, 4),
        (0, 2): Fraction(621, 8),
        (1, 0, 1): Fraction(327),
        (2, 1): Fraction(-171, 4),
        (4,): Fraction(15, 8),
    }


# -- preconditions ------------------------------------------------------

def test_degree_bound_enforced():
    with pytest.raises(RelationError, match="does not exceed"):
        fz_relation(5, 1)


def test_parity_enforced():
    with pytest.raises(RelationError, match="parity"):
        fz_relation(3, 1)


def test_partition_alphabet_enforced():
    with pytest.raises(RelationError, match="2 mod 3"):
        fz_relation(4, 3, (2,))
    with pytest.raises(RelationError, match="2 mod 3"):
        fz_relation(6, 4, (5,))


def test_partition_parts_positive():
    with pytest.raises(RelationError, match="positive"):
        fz_relation(2, 1, (0,))
    with pytest.raises(RelationError, match="positive"):
        ct_relation(2, 1, 3, (-1,))


def test_compact_type_stability_enforced():
    with pytest.raises(RelationError, match="stable"):
        ct_relation(0, 2, 1)


def test_compact_type_bound_enforced():
    with pytest.raises(RelationError, match="does not exceed"):
        ct_relation(2, 1, 1)


def test_compact_type_allows_all_parts():
    # no mod-3 alphabet restriction on this family
    value = ct_relation(2, 3, 4, (2,))
    assert not value.is_zero()


def test_compact_type_has_no_parity_condition():
    # consecutive degrees both admit relations for the same space
    assert not ct_relation(2, 1, 2).is_zero()
    assert not ct_relation(2, 1, 3).is_zero()


# -- structure shared across genera -------------------------------------

def test_only_genus_dependence_is_kappa0():
    # same (d, sigma) slice, substituted at two genera: recomputing at g+2
    # must agree with substituting kappa_0 = 2(g+2)-2 in the shared slice
    slice_ = relations._symbolic_slice("fz", 3, ())
    for g in (4, 6, 8):
        expected = {}
        kappa0 = Fraction(2 * g - 2)
        for (e0, exps), c in slice_:
            val = c * kappa0 ** e0
            if val:
                expected[exps] = expected.get(exps, Fraction(0)) + val
        expected = {e: v for e, v in expected.items() if v}
        assert dict(fz_relation(g, 3, ()).terms) == expected


def test_compact_type_universality():
    # relations only see 2g-2+n, so (g, n) and (g-1, n+2) give equal values
    cases = [(2, 1, 2, ()), (2, 3, 4, (1, 1)), (3, 1, 4, ()), (2, 2, 3, (1,))]
    for g, n, d, sigma in cases:
        a = ct_relation(g, n, d, sigma)
        b = ct_relation(g - 1, n + 2, d, sigma)
        assert a == b
        assert a.terms == b.terms
        assert (a.g, a.n) != (b.g, b.n)


def test_wrong_parity_slice_is_nonzero():
    # the raw coefficient at (d=1, sigma=()) is -60*kappa_1 t + ..., which
    # does not vanish when specialized at odd genus-degree parity; the
    # relation constructor therefore refuses it rather than returning zero
    slice_ = dict(relations._symbolic_slice("fz", 1, ()))
    assert slice_.get((0, (1,))) == Fraction(-60)
    with pytest.raises(RelationError, match="parity"):
        fz_relation(3, 1)


# -- relation sets and ranks --------------------------------------------

def test_relation_set_basics():
    rs = RelationSet()
    rs.append(fz_relation(2, 1), g=2, n=0, d=1, sigma=())
    assert len(rs) == 1
    value, meta = next(iter(rs))
    assert value.terms == {(1,): Fraction(-60)}
    assert meta["g"] == 2
    assert list(rs.values())[0] is value
    assert len(list(rs.in_degree(1))) == 1
    assert list(rs.in_degree(2)) == []


def test_ideal_is_deterministic():
    a = fz_relation_ideal(4, 3)
    b = fz_relation_ideal(4, 3)
    assert [(v.terms, m) for v, m in a] == [(v.terms, m) for v, m in b]


def test_ideal_has_no_duplicate_values():
    rs = fz_relation_ideal(5, 4)
    seen = [frozenset(v.terms.items()) for v in rs.values()]
    assert len(seen) == len(set(seen))


def test_ideal_metadata_matches_values():
    for value, meta in fz_relation_ideal(4, 3):
        assert value.d == meta["d"]
        assert meta["base_degree"] + sum(meta["multiplier"]) == meta["d"]


def test_genus4_degree2_rank():
    rs = fz_relation_ideal(4, 2)
    assert span_rank(rs, 2) == 1
    assert quotient_dim(rs, 2) == 1


def test_kappa2_expressible_in_kappa1():
    # above degree floor(g/3) every kappa_j reduces to lower generators
    for g, j in [(4, 2), (5, 2), (6, 3), (7, 3)]:
        rs = fz_relation_ideal(g, j)
        mat = SparseMatrix(list(partitions(j)))
        for value in rs.values():
            if value.d == j:
                mat.add_row(value.vector())
        for lam in partitions(j):
            if lam != (j,) and all(part <= g // 3 for part in lam):
                mat.add_row({lam: Fraction(1)})
        assert in_span({(j,): Fraction(1)}, mat)


def test_no_relations_in_low_degrees():
    # quotient dimension equals the full monomial count through floor(g/3)
    for g in (4, 5, 6, 7, 8):
        dims = fz_betti(g, g // 3)
        for d, dim in enumerate(dims):
            assert dim == count_partitions(d, d)


def test_betti_palindrome_small():
    assert fz_betti(4) == (1, 1, 1, 0, 0)
    assert fz_betti(5) == (1, 1, 1, 1, 0, 0)
    assert fz_betti(6) == (1, 1, 2, 1, 1, 0, 0)
    assert fz_betti(7) == (1, 1, 2, 2, 1, 1, 0, 0)


def test_compact_type_betti_matches_partition_count():
    # quotient dimensions against the closed-form partition-count answer
    for g, n in [(1, 1), (1, 2), (2, 1), (0, 4), (0, 5)]:
        dims = ct_betti(g, n)
        e = 2 * g - 2 + n
        for d, dim in enumerate(dims):
            assert dim == count_partitions(d, e - d)


def test_compact_type_ideal_covers_marked_sigmas():
    rs = ct_relation_ideal(1, 2, 2)
    sigmas = {meta["sigma"] for _, meta in rs}
    assert () in sigmas


# -- polynomial container ----------------------------------------------

def test_polynomial_homogeneity_enforced():
    with pytest.raises(RelationError, match="degree"):
        KappaPolynomial({(1,): Fraction(1)}, g=2, n=0, d=2, sigma=(),
                        family="fz")


def test_polynomial_equality_ignores_metadata():
    a = KappaPolynomial({(1,): Fraction(2)}, g=2, n=0, d=1, sigma=(),
                        family="fz")
    b = KappaPolynomial({(1,): Fraction(2)}, g=9, n=3, d=1, sigma=(1,),
                        family="ct")
    assert a == b
    assert hash(a) == hash(b)


def test_polynomial_times_kappa():
    value = fz_relation(3, 2)
    shifted = value.times_kappa((2, 1))
    assert shifted.d == 5
    assert shifted.terms == {
        (3, 1): Fraction(1800),
        (1, 2): Fraction(-25920),
    }


def test_polynomial_vector_uses_partitions():
    vec = fz_relation(3, 2).vector()
    assert vec == {(1, 1): Fraction(1800), (2,): Fraction(-25920)}


def test_polynomial_json_roundtrip():
    value = ct_relation(2, 3, 4, (1, 1))
    data = value.to_json()
    back = polynomial_from_json(data)
    assert back == value
    assert (back.g, back.n, back.d, back.sigma, back.family) == (
        value.g, value.n, value.d, value.sigma, value.family)


# -- helper properties --------------------------------------------------

part_lists = st.lists(st.integers(min_value=1, max_value=5), min_size=0,
                      max_size=6)


@given(part_lists)
@settings(max_examples=60, deadline=None)
def test_sub_partition_count(parts):
    sigma = tuple(sorted(parts, reverse=True))
    subs = relations._sub_partitions(sigma)
    expected = 1
    for mult in {p: sigma.count(p) for p in set(sigma)}.values():
        expected *= mult + 1
    assert len(subs) == expected
    assert len(set(subs)) == len(subs)


@given(part_lists, st.data())
@settings(max_examples=60, deadline=None)
def test_diff_then_merge_recovers(parts, data):
    sigma = tuple(sorted(parts, reverse=True))
    subs = relations._sub_partitions(sigma)
    sub = data.draw(st.sampled_from(subs))
    assert relations._covers(sigma, sub)
    rest = relations._diff(sigma, sub)
    assert tuple(sorted(rest + sub, reverse=True)) == sigma


@given(part_lists, part_lists)
@settings(max_examples=60, deadline=None)
def test_exponent_addition_commutes(a, b):
    ea, eb = tuple(a), tuple(b)
    assert relations._exps_add(ea, eb) == relations._exps_add(eb, ea)
