"""Exact sparse linear algebra over the rationals.

Rows live in a frozen ordered column basis; elimination is plain rational
Gaussian elimination with pivots chosen to limit coefficient blowup.  The
kernel reported by kernel_basis is the left kernel: combinations of the
stored rows summing to zero, so rank + len(kernel) equals the row count.
"""

from __future__ import annotations

from fractions import Fraction


class LinAlgError(ValueError):
    pass


def _pivot_key(value):
    # smallest |numerator * denominator| limits entry growth
    return abs(value.numerator * value.denominator)


class SparseMatrix:
    def __init__(self, columns):
        self.columns = tuple(columns)
        self._index = {}
        for i, c in enumerate(self.columns):
            if c in self._index:
                raise LinAlgError(f"duplicate column {c!r}")
            self._index[c] = i
        self.rows = []
        self.labels = []
        self._elim = None

    @property
    def num_rows(self):
        return len(self.rows)

    @property
    def num_cols(self):
        return len(self.columns)

    def _to_row(self, entries):
        row = {}
        for key, val in entries.items():
            x = val if isinstance(val, Fraction) else Fraction(val)
            if not x:
                continue
            idx = self._index.get(key)
            if idx is None:
                raise LinAlgError(f"unknown column {key!r}")
            row[idx] = x
        return row

    def add_row(self, entries, label=None):
        self._elim = None
        self.rows.append(self._to_row(entries))
        self.labels.append(label if label is not None else len(self.rows) - 1)

    # -- elimination ----------------------------------------------------

    def _eliminated(self):
        """(pivots, kernel): pivots is a list of (col, row, comb) with each
        row normalized to 1 at col and reduced against earlier pivots; comb
        expresses the pivot row in terms of input rows.  kernel collects the
        combinations of input rows that vanished."""
        if self._elim is not None:
            return self._elim
        pivots = []
        kernel = []
        for idx, src in enumerate(self.rows):
            work = dict(src)
            comb = {idx: Fraction(1)}
            _reduce_in_place(work, comb, pivots)
            if not work:
                kernel.append(comb)
                continue
            col = min(work, key=lambda c: (_pivot_key(work[c]), c))
            scale = Fraction(1) / work[col]
            work = {c: v * scale for c, v in work.items()}
            comb = {r: v * scale for r, v in comb.items()}
            pivots.append((col, work, comb))
        self._elim = (pivots, kernel)
        return self._elim

    def rank(self):
        return len(self._eliminated()[0])

    def kernel_basis(self):
        """Left-kernel vectors as Fraction lists aligned with the rows."""
        _, kernel = self._eliminated()
        out = []
        for comb in kernel:
            vec = [Fraction(0)] * len(self.rows)
            for r, v in comb.items():
                vec[r] = v
            out.append(vec)
        return out

    def reduced_rows(self):
        """The pivot rows after elimination, as {column: value} dicts.

        They span the same row space as the input rows, with each pivot
        entry normalized to 1.
        """
        pivots, _ = self._eliminated()
        return [{self.columns[c]: v for c, v in sorted(row.items())}
                for _, row, _ in pivots]

    def reduce_vector(self, entries):
        """Residual of a vector after reduction against the row space."""
        pivots, _ = self._eliminated()
        work = self._to_row(entries)
        comb = {}
        _reduce_in_place(work, comb, pivots)
        return {self.columns[c]: v for c, v in sorted(work.items())}

    def contains(self, entries):
        return not self.reduce_vector(entries)

    def to_json(self):
        return {
            "columns": [repr(c) for c in self.columns],
            "rows": [
                {"label": repr(lab),
                 "entries": {str(self.columns[c]): f"{v.numerator}/{v.denominator}"
                             for c, v in sorted(row.items())}}
                for lab, row in zip(self.labels, self.rows)
            ],
        }


def _reduce_in_place(work, comb, pivots):
    for col, prow, pcomb in pivots:
        c = work.get(col)
        if not c:
            continue
        for k, v in prow.items():
            nv = work.get(k, Fraction(0)) - c * v
            if nv:
                work[k] = nv
            else:
                work.pop(k, None)
        for k, v in pcomb.items():
            nv = comb.get(k, Fraction(0)) - c * v
            if nv:
                comb[k] = nv
            else:
                comb.pop(k, None)


def rank(matrix):
    return matrix.rank()


def kernel_basis(matrix):
    return matrix.kernel_basis()


def in_span(entries, matrix):
    """True iff the vector lies in the row span of the matrix."""
    return matrix.contains(entries)


def quotient_dim(basis_size, matrix):
    if matrix.num_cols != basis_size:
        raise LinAlgError("relation matrix does not match the basis")
    return basis_size - matrix.rank()


def solve_unique(columns, equations):
    """Solve a linear system with exactly one solution.

    equations is a list of (coeffs, rhs) with coeffs a dict over `columns`.
    Raises LinAlgError when the system is inconsistent or underdetermined.
    The right-hand side rides along outside the matrix so it can never be
    chosen as a pivot.
    """
    columns = tuple(columns)
    index = {c: i for i, c in enumerate(columns)}
    if len(index) != len(columns):
        raise LinAlgError("duplicate column")
    work = []
    for coeffs, rhs in equations:
        row = {}
        for c, v in coeffs.items():
            v = v if isinstance(v, Fraction) else Fraction(v)
            if v:
                row[index[c]] = v
        work.append((row, rhs if isinstance(rhs, Fraction) else Fraction(rhs)))
    pivots = []  # (col, row, rhs), row normalized to 1 at col
    for row, rhs in work:
        row = dict(row)
        for col, prow, prhs in pivots:
            f = row.pop(col, None)
            if f:
                for c, v in prow.items():
                    if c != col:
                        nv = row.get(c, Fraction(0)) - f * v
                        if nv:
                            row[c] = nv
                        else:
                            row.pop(c, None)
                rhs -= f * prhs
        if not row:
            if rhs:
                raise LinAlgError("inconsistent linear system")
            continue
        col = min(row, key=lambda c: (_pivot_key(row[c]), c))
        inv = row[col]
        pivots.append((col, {c: v / inv for c, v in row.items() if c != col},
                       rhs / inv))
    if len(pivots) < len(columns):
        raise LinAlgError("underdetermined linear system")
    solution = {}
    for col, row, rhs in reversed(pivots):
        total = rhs
        for c, v in row.items():
            total -= v * solution[c]
        solution[col] = total
    return {columns[c]: v for c, v in solution.items()}
