"""Relation generators for kappa rings: smooth moduli and compact type.

Both families come from the same mechanism: a two-variable kernel Psi(t, p)
whose logarithm defines constants C_r(sigma), a formal class
gamma = sum C_r(sigma) kappa_r t^r p^sigma, and relations read off as
coefficient slices [exp(-gamma)]_{t^d p^sigma}.  The slice is computed once
with kappa_0 left symbolic, so a sweep over genera shares all expansion
work; the moduli space enters only through the substitution kappa_0 = 2g-2
(smooth family, sigma parts never congruent to 2 mod 3, and a parity gate)
or kappa_0 = 2g-2+n (compact type, all parts allowed, no parity gate).
"""

from fractions import Fraction
from functools import lru_cache

from .linalg import SparseMatrix
from .partitions import (count_partitions, exponent_vector, partitions,
                         partitions_in_alphabet)
from .series import constants_table, parse_rational, rational_str

ZERO = Fraction(0)
ONE = Fraction(1)


class RelationError(ValueError):
    pass


# ----------------------------------------------------------------------
# kappa polynomials

def _trim(exps):
    exps = tuple(exps)
    while exps and exps[-1] == 0:
        exps = exps[:-1]
    return exps


class KappaPolynomial:
    """Homogeneous polynomial in kappa_1, kappa_2, ... over the rationals.

    terms maps exponent tuples (e1, e2, ...), trailing zeros trimmed, to
    nonzero coefficients; the monomial kappa_1^e1 kappa_2^e2 ... has degree
    sum(i * ei), and every stored monomial must have degree d.  kappa_0 is
    already substituted.  Equality and hashing compare the polynomial alone,
    not the metadata, so the same relation reached from two moduli spaces
    compares equal.
    """

    __slots__ = ("terms", "g", "n", "d", "sigma", "family")

    def __init__(self, terms, g, n, d, sigma, family):
        clean = {}
        for exps, c in terms.items():
            c = c if isinstance(c, Fraction) else Fraction(c)
            if not c:
                continue
            exps = _trim(exps)
            if sum((i + 1) * e for i, e in enumerate(exps)) != d:
                raise RelationError(f"monomial {exps} is not of degree {d}")
            clean[exps] = clean.get(exps, ZERO) + c
        self.terms = {e: c for e, c in clean.items() if c}
        self.g = g
        self.n = n
        self.d = d
        self.sigma = tuple(sigma)
        self.family = family

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, KappaPolynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __str__(self):
        if not self.terms:
            return "0"
        bits = []
        for exps in sorted(self.terms):
            mono = "*".join(
                f"kappa_{i + 1}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(exps) if e)
            c = self.terms[exps]
            bits.append(f"{rational_str(c)}*{mono}" if mono else rational_str(c))
        return " + ".join(bits).replace("+ -", "- ")

    def __repr__(self):
        return (f"KappaPolynomial(d={self.d}, g={self.g}, n={self.n}, "
                f"sigma={self.sigma}, {self})")

    def times_kappa(self, mu):
        """Multiply by the kappa monomial indexed by the partition mu."""
        mu = tuple(mu)
        if any(p <= 0 for p in mu):
            raise RelationError("partition parts must be positive")
        shift = exponent_vector(mu)
        terms = {}
        for exps, c in self.terms.items():
            width = max(len(exps), max(shift, default=0))
            e = list(exps) + [0] * (width - len(exps))
            for part, mult in shift.items():
                e[part - 1] += mult
            terms[tuple(e)] = c
        return KappaPolynomial(terms, self.g, self.n, self.d + sum(mu),
                               self.sigma, self.family)

    def vector(self):
        """The polynomial as {partition: coefficient} for rank computations."""
        out = {}
        for exps, c in self.terms.items():
            parts = []
            for i, e in enumerate(exps):
                parts.extend([i + 1] * e)
            out[tuple(sorted(parts, reverse=True))] = c
        return out

    def to_json(self):
        monomials = [{"exps": list(e), "coeff": rational_str(self.terms[e])}
                     for e in sorted(self.terms)]
        return {"g": self.g, "n": self.n, "d": self.d,
                "sigma": list(self.sigma), "family": self.family,
                "monomials": monomials}


def polynomial_from_json(data):
    terms = {tuple(m["exps"]): parse_rational(m["coeff"])
             for m in data["monomials"]}
    return KappaPolynomial(terms, data["g"], data["n"], data["d"],
                           tuple(data["sigma"]), data["family"])


# ----------------------------------------------------------------------
# coefficient extraction

_TABLES = {}


def _master_table(family, t_need, s_need):
    """Constants C_r(sigma), grown in steps so a sweep over many slices
    recomputes the underlying logarithm only a handful of times.

    Returns (t_bound, s_bound, table, r0, positive): r0 maps sigma to its
    t^0 constant; positive is the set of sigma carrying any t-positive one.
    """
    t_need = -4 * (-t_need // 4)
    s_need = -6 * (-s_need // 6)
    cur = _TABLES.get(family)
    if cur is None or t_need > cur[0] or s_need > cur[1]:
        t = max(t_need, cur[0] if cur else 0)
        s = max(s_need, cur[1] if cur else 0)
        table = constants_table(family, t, s)
        r0 = {}
        positive = set()
        for (r, sig), c in table.items():
            if r == 0:
                r0[sig] = c
            else:
                positive.add(sig)
        _TABLES[family] = (t, s, table, r0, positive)
    return _TABLES[family]


def _sub_partitions(sigma):
    """All sub-multisets of the partition, as weakly decreasing tuples."""
    subs = [()]
    for part, mult in sorted(exponent_vector(sigma).items()):
        subs = [s + (part,) * k for s in subs for k in range(mult + 1)]
    return [tuple(sorted(s, reverse=True)) for s in subs]


def _covers(outer, inner):
    counts = exponent_vector(outer)
    return all(counts.get(p, 0) >= m
               for p, m in exponent_vector(inner).items())


def _diff(sigma, sub):
    counts = exponent_vector(sigma)
    for part in sub:
        counts[part] -= 1
    parts = []
    for part, mult in counts.items():
        parts.extend([part] * mult)
    return tuple(sorted(parts, reverse=True))


def _exps_add(a, b):
    if len(a) < len(b):
        a, b = b, a
    return tuple(x + y for x, y in zip(a, b + (0,) * (len(a) - len(b))))


def _series_add(target, src, scale=ONE):
    """target += scale * src for t-series of kappa-monomial dicts."""
    for t, poly in src.items():
        bucket = target.setdefault(t, {})
        for e, v in poly.items():
            val = bucket.get(e, ZERO) + scale * v
            if val:
                bucket[e] = val
            else:
                bucket.pop(e, None)


def _series_mul(a, b, t_cap):
    out = {}
    for t1, p1 in a.items():
        for t2, p2 in b.items():
            if t1 + t2 > t_cap:
                continue
            bucket = out.setdefault(t1 + t2, {})
            for e1, c1 in p1.items():
                for e2, c2 in p2.items():
                    e = _exps_add(e1, e2)
                    val = bucket.get(e, ZERO) + c1 * c2
                    if val:
                        bucket[e] = val
                    else:
                        bucket.pop(e, None)
    return {t: poly for t, poly in out.items() if poly}


@lru_cache(maxsize=None)
def _r0_factor(family, sigma1):
    """[p^sigma1] exp(-kappa_0 L) where L is the t^0 slice of the log kernel.

    Returns ((kappa0_exponent, coeff), ...); empty when the t^0 constants
    cannot cover sigma1 exactly.
    """
    r0 = _TABLES[family][3]
    atoms = sorted((sig, c) for sig, c in r0.items() if _covers(sigma1, sig))
    states = {sigma1: {0: ONE}}
    for sig, c in atoms:
        new = {}
        for rem, poly in states.items():
            m = 0
            factor = ONE
            cur = rem
            while True:
                bucket = new.setdefault(cur, {})
                for e0, v in poly.items():
                    val = bucket.get(e0 + m, ZERO) + factor * v
                    if val:
                        bucket[e0 + m] = val
                    else:
                        bucket.pop(e0 + m, None)
                if not _covers(cur, sig):
                    break
                m += 1
                factor *= Fraction(-c, m)
                cur = _diff(cur, sig)
        states = {k: v for k, v in new.items() if v}
    return tuple(sorted(states.get((), {}).items()))


@lru_cache(maxsize=None)
def _group_power(family, sig, m, t_cap):
    """(-(t-positive part of gamma at p^sig))^m / m! as a t-series.

    Format {t: {exps: coeff}} with exps = (e1, e2, ...) over kappa_1..;
    the t^0 sector is excluded here by construction.
    """
    if m == 0:
        return {0: {(): ONE}}
    prev = _group_power(family, sig, m - 1, t_cap)
    table = _TABLES[family][2]
    out = {}
    for r in range(1, t_cap + 1):
        c = table.get((r, sig))
        if not c:
            continue
        step = Fraction(-c, m)
        for t, poly in prev.items():
            if t + r > t_cap:
                continue
            bucket = out.setdefault(t + r, {})
            for exps, v in poly.items():
                e = exps + (0,) * (r - len(exps))
                e = e[:r - 1] + (e[r - 1] + 1,) + e[r:]
                val = bucket.get(e, ZERO) + step * v
                if val:
                    bucket[e] = val
                else:
                    del bucket[e]
    return {t: poly for t, poly in out.items() if poly}


@lru_cache(maxsize=None)
def _empty_exp(family, t_cap):
    """exp of the sigma-free t-positive sector, as a t-series."""
    out = {}
    for k in range(t_cap + 1):
        power = _group_power(family, (), k, t_cap)
        if k and not power:
            break
        _series_add(out, power)
    return {t: poly for t, poly in out.items() if poly}


@lru_cache(maxsize=None)
def _cover_series(family, rem, bound, t_cap):
    """Sum over decompositions of rem into groups of the product of their
    power series, each distinct group taken with one multiplicity.

    Groups run over the sub-partitions of rem strictly below `bound` in tuple
    order (None means unbounded), so every decomposition is counted once,
    largest group first.  Keyed by absolute partitions: the recursion is
    shared across every sigma, degree, and genus that touches the same
    remainder.
    """
    if not rem:
        return {0: {(): ONE}}
    positive = _TABLES[family][4]
    out = {}
    for sig in _sub_partitions(rem):
        if not sig or sig not in positive:
            continue
        if bound is not None and not sig < bound:
            continue
        m = 1
        cur = rem
        while _covers(cur, sig):
            cur = _diff(cur, sig)
            power = _group_power(family, sig, m, t_cap)
            if not power:
                break
            sub = _cover_series(family, cur, sig, t_cap)
            if sub:
                _series_add(out, _series_mul(sub, power, t_cap))
            m += 1
    return {t: poly for t, poly in out.items() if poly}


@lru_cache(maxsize=None)
def _positive_series(family, sigma, t_cap):
    """t-series of [p^sigma] exp(-(t-positive part of gamma)); kappa_0 free."""
    base = _cover_series(family, sigma, None, t_cap)
    return _series_mul(base, _empty_exp(family, t_cap), t_cap)


@lru_cache(maxsize=None)
def _symbolic_slice(family, d, sigma):
    """[t^d p^sigma] exp(-gamma) with kappa_0 left symbolic.

    Returns sorted ((kappa0_exponent, exps), coeff) pairs, exps running over
    kappa_1, kappa_2, ...  Genus independent, so a sweep over moduli spaces
    shares all expansion work.  The t^0 sector of gamma carries every
    kappa_0 and is folded in as a closed-form factor; the t-positive
    expansion never tracks kappa_0 multiplicities.
    """
    t_cap = _master_table(family, d, sum(sigma))[0]
    out = {}
    for sigma1 in _sub_partitions(sigma):
        weight = _r0_factor(family, sigma1)
        if not weight:
            continue
        poly = _positive_series(family, _diff(sigma, sigma1), t_cap).get(d)
        if not poly:
            continue
        for e0, c0 in weight:
            for exps, c in poly.items():
                key = (e0, exps)
                val = out.get(key, ZERO) + c0 * c
                if val:
                    out[key] = val
                else:
                    out.pop(key, None)
    return tuple(sorted(out.items()))


def _normalize_partition(sigma):
    sigma = tuple(sorted(sigma, reverse=True))
    if any(not isinstance(s, int) or s <= 0 for s in sigma):
        raise RelationError("partition parts must be positive integers")
    return sigma


def _specialize(family, g, n, d, sigma):
    kappa0 = Fraction(2 * g - 2 + (n if family == "ct" else 0))
    terms = {}
    for (e0, exps), c in _symbolic_slice(family, d, sigma):
        val = c * kappa0 ** e0
        if not val:
            continue
        terms[exps] = terms.get(exps, ZERO) + val
    return KappaPolynomial(terms, g, n, d, sigma, family)


# ----------------------------------------------------------------------
# the two relation families

def fz_relation(g, d, sigma=()):
    """The degree-d relation indexed by sigma among kappa classes on the
    smooth genus-g moduli, with kappa_0 = 2g-2 substituted.

    Valid only when sigma avoids parts congruent to 2 mod 3, the degree
    clears the threshold 3d > g-1+|sigma|, and g = d+|sigma|+1 mod 2; each
    violation raises its own error.
    """
    sigma = _normalize_partition(sigma)
    if g < 0 or d < 0:
        raise RelationError("genus and degree must be nonnegative")
    for s in sigma:
        if s % 3 == 2:
            raise RelationError(f"partition part {s} is congruent to 2 mod 3")
    size = sum(sigma)
    if 3 * d <= g - 1 + size:
        raise RelationError(
            f"degree {d} does not exceed (g-1+|sigma|)/3 = {Fraction(g - 1 + size, 3)}")
    if (g + d + size + 1) % 2:
        raise RelationError(
            f"parity failure: g = {g} but d+|sigma|+1 = {d + size + 1} mod 2 differs")
    return _specialize("fz", g, 0, d, sigma)


def ct_relation(g, n, d, sigma=()):
    """The compact-type analogue on (g, n): kappa_0 = 2g-2+n, all partition
    parts allowed, no parity gate, valid when 2d > 2g-2+n+|sigma|.

    The output depends on (g, n) only through 2g-2+n, so (g, n) and
    (g-1, n+2) produce identical polynomials.
    """
    sigma = _normalize_partition(sigma)
    if g < 0 or n < 0 or d < 0:
        raise RelationError("genus, markings and degree must be nonnegative")
    if 2 * g - 2 + n <= 0:
        raise RelationError(f"({g},{n}) is not stable")
    size = sum(sigma)
    if 2 * d <= 2 * g - 2 + n + size:
        raise RelationError(
            f"degree {d} does not exceed (2g-2+n+|sigma|)/2 = {Fraction(2 * g - 2 + n + size, 2)}")
    return _specialize("ct", g, n, d, sigma)


# ----------------------------------------------------------------------
# relation sets and ideals

class RelationSet:
    """An ordered list of relation values, each with producing metadata.

    Values may be kappa polynomials or strata-algebra elements; metadata is
    a plain dict and always carries the actual degree under "d".
    """

    def __init__(self):
        self.items = []

    def append(self, value, **meta):
        self.items.append((value, dict(meta)))

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def values(self):
        return [v for v, _ in self.items]

    def in_degree(self, d):
        sub = RelationSet()
        sub.items = [(v, m) for v, m in self.items if m.get("d") == d]
        return sub


def _fz_sigmas(g, d):
    """Valid sigma for (g, d), ordered by size then descending-lex parts."""
    bound = 3 * d - (g - 1)
    for size in range(0, max(bound, 0)):
        if (g + d + size + 1) % 2:
            continue
        allowed = [i for i in range(1, size + 1) if i % 3 != 2]
        yield from partitions_in_alphabet(size, allowed)


def fz_relation_ideal(g, d_max):
    """Every valid relation of degree <= d_max together with its
    kappa-monomial multiples up to degree d_max, deduplicated.

    Multiplying only by kappa monomials is what "ideal" means inside the
    polynomial ring in kappa_1, kappa_2, ...
    """
    out = RelationSet()
    seen = set()
    for d in range(1, d_max + 1):
        for sigma in _fz_sigmas(g, d):
            base = fz_relation(g, d, sigma)
            for total in range(d, d_max + 1):
                for mu in partitions(total - d):
                    value = base.times_kappa(mu) if mu else base
                    key = frozenset(value.terms.items())
                    if key in seen:
                        continue
                    seen.add(key)
                    out.append(value, g=g, n=0, d=value.d, sigma=sigma,
                               base_degree=d, multiplier=mu)
    return out


def ct_relation_ideal(g, n, d_max):
    """Compact-type counterpart of fz_relation_ideal on (g, n)."""
    out = RelationSet()
    seen = set()
    for d in range(1, d_max + 1):
        for size in range(0, max(2 * d - (2 * g - 2 + n), 0)):
            for sigma in partitions(size):
                base = ct_relation(g, n, d, sigma)
                for total in range(d, d_max + 1):
                    for mu in partitions(total - d):
                        value = base.times_kappa(mu) if mu else base
                        key = frozenset(value.terms.items())
                        if key in seen:
                            continue
                        seen.add(key)
                        out.append(value, g=g, n=n, d=value.d, sigma=sigma,
                                   base_degree=d, multiplier=mu)
    return out


def span_rank(relset, d):
    """Rank of the degree-d slice inside the degree-d kappa-monomial space."""
    mat = SparseMatrix(list(partitions(d)))
    for value, _ in relset.in_degree(d):
        mat.add_row(value.vector())
    return mat.rank()


def quotient_dim(relset, d):
    """Dimension of degree-d kappa monomials modulo the set's span."""
    return count_partitions(d, d) - span_rank(relset, d)


def _saturating_betti(d_max, degree_relations):
    """Quotient dimensions degree by degree.

    Equivalent to quotient_dim over the full ideal but far fewer rows: the
    degree-D slice of the ideal is spanned by the degree-D relations from
    `degree_relations` together with kappa_j times the already reduced
    slice at D-j, since every monomial multiplier factors off one part.
    """
    spans = {}
    dims = []
    for deg in range(d_max + 1):
        mat = SparseMatrix(list(partitions(deg)))
        for value in degree_relations(deg):
            mat.add_row(value.vector())
        for j in range(1, deg):
            for row in spans[deg - j]:
                mat.add_row({tuple(sorted(lam + (j,), reverse=True)): v
                             for lam, v in row.items()})
        spans[deg] = mat.reduced_rows()
        dims.append(mat.num_cols - mat.rank())
    return tuple(dims)


def fz_betti(g, d_max=None):
    """Graded dimensions of the kappa ring cut out by the relation ideal.

    The default range runs two degrees past the expected socle at g-2 so
    the vanishing above it is computed rather than assumed.
    """
    if d_max is None:
        d_max = g
    _master_table("fz", d_max, max(3 * d_max - g, 0))
    return _saturating_betti(
        d_max,
        lambda deg: (fz_relation(g, deg, s) for s in _fz_sigmas(g, deg)))


def _ct_sigmas(g, n, d):
    bound = 2 * d - (2 * g - 2 + n)
    for size in range(0, max(bound, 0)):
        yield from partitions(size)


def ct_betti(g, n, d_max=None):
    """Graded dimensions of the compact-type kappa quotient on (g, n).

    The default range runs one degree past the expected socle at 2g-3+n.
    """
    if d_max is None:
        d_max = 2 * g - 2 + n
    _master_table("ct", d_max, max(2 * d_max - (2 * g - 2 + n), 0))
    return _saturating_betti(
        d_max,
        lambda deg: (ct_relation(g, n, deg, s) for s in _ct_sigmas(g, n, deg)))
