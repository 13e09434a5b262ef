"""Exact sparse linear algebra against a naive dense oracle."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tautcalc.linalg import (
    LinAlgError,
    SparseMatrix,
    in_span,
    kernel_basis,
    quotient_dim,
    rank,
    solve_unique,
)


def dense_rank(rows, ncols):
    """Naive dense elimination, first-nonzero pivots."""
    mat = [[Fraction(r.get(c, 0)) for c in range(ncols)] for r in rows]
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][c]), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        for i in range(len(mat)):
            if i != r and mat[i][c]:
                f = mat[i][c] / mat[r][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        r += 1
    return r


def build(rows, ncols, columns=None):
    m = SparseMatrix(columns if columns is not None else range(ncols))
    for row in rows:
        m.add_row(row)
    return m


def test_identity_rank():
    m = build([{i: 1} for i in range(3)], 3)
    assert rank(m) == 3
    assert kernel_basis(m) == []


def test_row_in_span_by_construction():
    m = build([{0: 1, 1: 2}, {1: 3, 2: 5}], 3)
    v = {0: 2, 1: 7, 2: 5}  # 2*row0 + row1
    assert in_span(v, m)
    assert not in_span({0: 1}, m)


def test_kernel_and_rank_counts():
    rows = [{0: 1, 1: 1}, {0: 2, 1: 2}, {0: 1, 2: 1}, {1: -1, 2: 1}]
    m = build(rows, 3)
    assert rank(m) == 2
    kern = kernel_basis(m)
    assert len(kern) == 2
    for vec in kern:
        assert len(vec) == 4
        combo = {}
        for coeff, row in zip(vec, rows):
            for c, v in row.items():
                combo[c] = combo.get(c, Fraction(0)) + coeff * Fraction(v)
        assert all(x == 0 for x in combo.values())
        assert any(x != 0 for x in vec)


def test_quotient_dim():
    m = build([{0: 1, 1: -1}], 4)
    assert quotient_dim(4, m) == 3
    empty = build([], 5)
    assert quotient_dim(5, empty) == 5
    with pytest.raises(LinAlgError):
        quotient_dim(3, m)


def test_column_checks():
    m = SparseMatrix(["a", "b"])
    with pytest.raises(LinAlgError):
        m.add_row({"c": 1})
    with pytest.raises(LinAlgError):
        SparseMatrix(["a", "a"])


def test_explicit_zero_entries_dropped():
    m = build([{0: 0, 1: 0}], 2)
    assert rank(m) == 0
    assert len(kernel_basis(m)) == 1


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_rank_matches_dense_oracle(data):
    nrows = data.draw(st.integers(0, 8))
    ncols = data.draw(st.integers(1, 8))
    rows = []
    for _ in range(nrows):
        row = {}
        for c in range(ncols):
            if data.draw(st.booleans()):
                num = data.draw(st.integers(-9, 9))
                den = data.draw(st.integers(1, 9))
                row[c] = Fraction(num, den)
        rows.append(row)
    m = build(rows, ncols)
    assert rank(m) == dense_rank(rows, ncols)
    assert rank(m) + len(kernel_basis(m)) == nrows


def test_dense_oracle_forty_square():
    rng = random.Random(7)
    rows = []
    for _ in range(40):
        rows.append({c: Fraction(rng.randint(-20, 20), rng.randint(1, 12))
                     for c in rng.sample(range(40), rng.randint(0, 12))})
    m = build(rows, 40)
    assert rank(m) == dense_rank(rows, 40)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_rank_invariant_under_permutation_and_scaling(data):
    nrows = data.draw(st.integers(1, 6))
    ncols = data.draw(st.integers(1, 6))
    rows = []
    for _ in range(nrows):
        row = {c: Fraction(data.draw(st.integers(-5, 5)))
               for c in range(ncols) if data.draw(st.booleans())}
        rows.append({c: v for c, v in row.items() if v})
    base = rank(build(rows, ncols))
    order = data.draw(st.permutations(range(nrows)))
    scaled = []
    for i in order:
        s = Fraction(data.draw(st.integers(1, 7)), data.draw(st.integers(1, 7)))
        scaled.append({c: s * v for c, v in rows[i].items()})
    assert rank(build(scaled, ncols)) == base


def test_solve_unique():
    # x + y = 3, x - y = 1
    sol = solve_unique(["x", "y"], [({"x": 1, "y": 1}, 3), ({"x": 1, "y": -1}, 1)])
    assert sol == {"x": 2, "y": 1}
    sol2 = solve_unique(
        ["a", "b", "c"],
        [({"a": 2}, 5), ({"a": 1, "b": 1}, 1), ({"b": 1, "c": 3}, 0)],
    )
    assert sol2["a"] == Fraction(5, 2)
    assert sol2["b"] == Fraction(-3, 2)
    assert sol2["c"] == Fraction(1, 2)
    with pytest.raises(LinAlgError):
        solve_unique(["x", "y"], [({"x": 1, "y": 1}, 0)])
    with pytest.raises(LinAlgError):
        solve_unique(["x"], [({"x": 1}, 1), ({"x": 1}, 2)])


def test_solve_unique_rhs_never_pivots():
    # decoupled system whose rhs entries are smaller than the coefficients
    sol = solve_unique(["a", "b"], [({"a": 2}, 1), ({"b": 1}, Fraction(1, 12))])
    assert sol == {"a": Fraction(1, 2), "b": Fraction(1, 12)}
    # redundant-but-consistent rows must not be mistaken for contradictions
    sol2 = solve_unique(
        ["a", "b"],
        [({"a": 3, "b": 1}, 2), ({"a": 6, "b": 2}, 4), ({"b": 1}, -1)],
    )
    assert sol2 == {"a": Fraction(1), "b": Fraction(-1)}


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_solve_unique_roundtrip(data):
    n = data.draw(st.integers(1, 5))
    target = [Fraction(data.draw(st.integers(-6, 6)),
                       data.draw(st.integers(1, 4))) for _ in range(n)]
    rows = []
    for _ in range(data.draw(st.integers(n, n + 3))):
        coeffs = {c: Fraction(data.draw(st.integers(-5, 5)))
                  for c in range(n) if data.draw(st.booleans())}
        coeffs = {c: v for c, v in coeffs.items() if v}
        rhs = sum(v * target[c] for c, v in coeffs.items())
        rows.append((coeffs, rhs))
    if dense_rank([dict(c) for c, _ in rows], n) < n:
        with pytest.raises(LinAlgError):
            solve_unique(range(n), rows)
    else:
        sol = solve_unique(range(n), rows)
        assert [sol[c] for c in range(n)] == target


def test_reduce_vector_reports_residual():
    m = build([{0: 1, 1: 1}], 3)
    res = m.reduce_vector({0: 1, 1: 2, 2: 1})
    assert res == {1: Fraction(1), 2: Fraction(1)}


def test_json_dump_shape():
    m = SparseMatrix(["u", "v"])
    m.add_row({"u": Fraction(1, 2)}, label="r0")
    payload = m.to_json()
    assert payload["rows"][0]["entries"] == {"u": "1/2"}
