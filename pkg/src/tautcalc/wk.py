"""Descendent integrals over the moduli of curves, and exact evaluation.

The correlator table is determined by the string equation together with the
KdV hierarchy for u = d^2F/dt_0^2, seeded by the genus-0 three-point value.
The flows of the hierarchy are generated exactly from the conserved-density
chain; the first two displayed flows alone leave a one-parameter family at
genus 1, so higher flows are required.  Correlators containing an index-0
insertion reduce by the string equation; the remaining unknowns are solved
genus by genus as an exact linear system.  If the system ever fails to pin
down a value the build raises instead of guessing.
"""

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, factorial

from .linalg import LinAlgError, solve_unique
from .partitions import partitions, partitions_max_parts
from .series import FormalSeries, rational_str, series_A, univariate_coeffs

ZERO = Fraction(0)
ONE = Fraction(1)

MAX_GENUS = 3
MAX_DEGREE = 12


class WKError(ValueError):
    pass


def genus_for(ks):
    """The unique genus allowed by the dimension constraint, else None."""
    n = len(ks)
    total = sum(ks)
    if (total - n + 3) % 3:
        return None
    g = (total - n + 3) // 3
    if g < 0 or 2 * g - 2 + n <= 0:
        return None
    return g


@lru_cache(maxsize=None)
def _reduce(ks):
    """String-reduce a correlator to tau_0-free unknowns.

    Returns (constant, ((key, coeff), ...)); the only constant contribution
    comes from the seed <tau_0^3>_0 = 1.
    """
    g = genus_for(ks)
    if g is None:
        return (ZERO, ())
    if ks == (0, 0, 0):
        return (ONE, ())
    if ks[0] != 0:
        return (ZERO, ((ks, ONE),))
    rest = ks[1:]
    const = ZERO
    terms = {}
    for j, k in enumerate(rest):
        if k == 0:
            continue
        sub = tuple(sorted(rest[:j] + (k - 1,) + rest[j + 1:]))
        c2, t2 = _reduce(sub)
        const += c2
        for key, co in t2:
            terms[key] = terms.get(key, ZERO) + co
    return (const, tuple(sorted((k, c) for k, c in terms.items() if c)))


# ----------------------------------------------------------------------
# the KdV hierarchy as differential polynomials in u
#
# A monomial is a sorted tuple of derivative orders, so (0, 0, 2) stands
# for u * u * u_xx.  With u of weight 2 and each x-derivative adding 1,
# the conserved-density chain R_n is homogeneous of weight 2n and obeys
#   (2n + 1) d_x R_{n+1} = 1/4 d_x^3 R_n + 2 u d_x R_n + u_x R_n
# starting from R_1 = u.  The flows are u_{t_k} = d_x R_{k+1}; the first
# two are the KdV equation and its next symmetry.

def _d_x(p):
    out = {}
    for mono, c in p.items():
        for i in range(len(mono)):
            m2 = tuple(sorted(mono[:i] + (mono[i] + 1,) + mono[i + 1:]))
            out[m2] = out.get(m2, ZERO) + c
    return {m: c for m, c in out.items() if c}


def _mul_u(p, d):
    return {tuple(sorted(m + (d,))): c for m, c in p.items()}


def _monos_of_weight(w):
    out = []

    def rec(rem, min_part, acc):
        if rem == 0:
            out.append(tuple(acc))
            return
        part = min_part
        while part <= rem:
            if rem - part != 1:
                rec(rem - part, part, acc + [part - 2])
            part += 1

    rec(w, 2, [])
    return out


def _integrate_x(p, w):
    """The weight-w antiderivative q, d_x q = p; raises if p is not exact."""
    cols = _monos_of_weight(w)
    rows = {}
    for q in cols:
        for m, c in _d_x({q: ONE}).items():
            rows.setdefault(m, {})[q] = c
    eqs = [(rows.get(m, {}), p.get(m, ZERO))
           for m in sorted(set(rows) | set(p))]
    return {m: c for m, c in solve_unique(cols, eqs).items() if c}


@lru_cache(maxsize=None)
def lenard_R(n):
    """The n-th conserved density of the hierarchy, starting from R_1 = u."""
    if n < 1:
        raise WKError("the density chain starts at n = 1")
    if n == 1:
        return {(0,): ONE}
    prev = lenard_R(n - 1)
    dprev = _d_x(prev)
    rhs = {}
    for p, s in ((_d_x(_d_x(dprev)), Fraction(1, 4)),
                 (_mul_u(dprev, 0), Fraction(2)),
                 (_mul_u(prev, 1), ONE)):
        for m, c in p.items():
            rhs[m] = rhs.get(m, ZERO) + s * c
    scale = Fraction(1, 2 * n - 1)
    return _integrate_x({m: scale * c for m, c in rhs.items() if c}, 2 * n)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _splits(M, parts):
    """Ordered splits of the multiset M into `parts` slots, each split
    weighted by the number of ways distinguishable entries realize it."""
    out = [(((),) * parts, 1)]
    for val, mult in sorted(Counter(M).items()):
        nxt = []
        for slots, w in out:
            for comp in _compositions(mult, parts):
                ways = w
                rem = mult
                for c in comp:
                    ways *= comb(rem, c)
                    rem -= c
                nxt.append((tuple(s + (val,) * c
                                  for s, c in zip(slots, comp)), ways))
        out = nxt
    return out


def _flow_products(k, M):
    """Flow k at the t-monomial M: sum(coeff * prod(correlators)) = 0.

    The left side contributes <0 0 k M>; each monomial of d_x R_{k+1}
    contributes products of factors <0^(2+d) M_i> over weighted splits of
    M, since u_(d) = d^(d+2) F / dt_0^(d+2).
    """
    M = tuple(sorted(M))
    terms = [(ONE, (tuple(sorted((0, 0, k) + M)),))]
    for mono, c in sorted(_d_x(lenard_R(k + 1)).items()):
        for slots, w in _splits(M, len(mono)):
            factors = tuple(tuple(sorted((0,) * (2 + d) + part))
                            for d, part in zip(mono, slots))
            terms.append((-c * w, factors))
    return terms


def _solve_monomials(g, k, max_degree):
    """Zero-free monomials M whose flow-k equation reaches genus-g unknowns."""
    shift = 3 * g - k
    if shift < 0:
        return
    for base in partitions(shift):
        m0 = tuple(sorted(b + 1 for b in base))
        room = max_degree + 2 - k - sum(m0)
        for extra in range(max(room, -1) + 1):
            yield tuple(sorted(m0 + (1,) * extra))


def _linearize(products, solved):
    """Turn one equation into (coeffs over unknown keys, rhs)."""
    coeffs = {}
    rhs = ZERO
    for c, factors in products:
        reduced = [_reduce(f) for f in factors]
        if any(fc == 0 and not fterms for fc, fterms in reduced):
            continue
        const = c
        open_terms = None
        for fc, fterms in reduced:
            sub_c = fc
            sub_t = {}
            for key, co in fterms:
                if key in solved:
                    sub_c += co * solved[key]
                else:
                    sub_t[key] = co
            if sub_t:
                if open_terms is not None:
                    raise WKError("nonlinear coupling of undetermined values")
                open_terms = sub_t
                open_const = sub_c
            else:
                const *= sub_c
        if open_terms is None:
            rhs -= const
        else:
            rhs -= const * open_const
            for key, co in open_terms.items():
                coeffs[key] = coeffs.get(key, ZERO) + const * co
    return coeffs, rhs


class WKTable:
    """Frozen map (g, sorted indices) -> value, with (genus, degree) bounds."""

    def __init__(self, values, bounds):
        self.values = dict(values)
        self.bounds = tuple(bounds)

    def lookup(self, g, ks):
        ks = tuple(sorted(ks))
        n = len(ks)
        if n == 0 or 2 * g - 2 + n <= 0:
            raise WKError(f"unstable index (g, n) = ({g}, {n})")
        if g > self.bounds[0]:
            raise WKError(f"genus {g} exceeds the table bound {self.bounds[0]}")
        if sum(ks) > self.bounds[1]:
            raise WKError(
                f"total degree {sum(ks)} exceeds the table bound {self.bounds[1]}")
        if 3 * g - 3 + n != sum(ks):
            return ZERO
        return self.values[(g, ks)]

    def get(self, g, ks):
        """Raw stored value access; None when absent (no bounds check)."""
        return self.values.get((g, tuple(sorted(ks))))

    def entries(self):
        return sorted(self.values.items())

    def to_json(self):
        return {
            "bounds": {"max_genus": self.bounds[0], "max_degree": self.bounds[1]},
            "entries": [
                {"g": g, "k": list(ks), "value": rational_str(v)}
                for (g, ks), v in self.entries()],
        }


@lru_cache(maxsize=None)
def build_table(max_genus=MAX_GENUS, max_degree=MAX_DEGREE):
    solved = {}
    for g in range(1, max_genus + 1):
        unknowns = []
        for total in range(1, max_degree + 1):
            n = total + 3 - 3 * g
            if n < 1:
                continue
            for p in partitions_max_parts(total - n, n):
                extra = sorted(p) + [0] * (n - len(p))
                unknowns.append(tuple(sorted(e + 1 for e in extra)))
        if not unknowns:
            continue
        equations = []
        for k in range(1, 3 * g + 1):
            for M in _solve_monomials(g, k, max_degree):
                coeffs, rhs = _linearize(_flow_products(k, M), solved)
                if coeffs or rhs:
                    equations.append((coeffs, rhs))
        try:
            solution = solve_unique(unknowns, equations)
        except LinAlgError as e:
            raise WKError(f"genus {g} correlators not determined "
                          f"by string + KdV within bounds: {e}") from e
        solved.update(solution)

    values = {}
    for g in range(0, max_genus + 1):
        for total in range(0, max_degree + 1):
            n = total + 3 - 3 * g
            if n < 1 or 2 * g - 2 + n <= 0:
                continue
            for p in partitions_max_parts(total, n):
                ks = tuple(sorted(list(p) + [0] * (n - len(p))))
                const, terms = _reduce(ks)
                values[(g, ks)] = const + sum(
                    (c * solved[k] for k, c in terms), ZERO)
    return WKTable(values, (max_genus, max_degree))


def descendent_integral(g, ks, table=None):
    """<tau_{k_1} ... tau_{k_n}>_g, exactly."""
    if table is None:
        table = build_table()
    return table.lookup(g, ks)


# ----------------------------------------------------------------------
# consistency checks (read the table directly, so mutations are caught)

def _table_value(table, ks):
    """Value of a correlator from stored data; None if out of range."""
    g = genus_for(ks)
    if g is None:
        return ZERO
    if g > table.bounds[0] or sum(ks) > table.bounds[1]:
        return None
    return table.get(g, ks)


def check_string(table):
    """Every stored index with a 0-insertion satisfies the string equation."""
    for (g, ks), value in table.entries():
        if 0 not in ks or ks == (0, 0, 0):
            continue
        rest = list(ks)
        rest.remove(0)
        total = ZERO
        for j, k in enumerate(rest):
            if k == 0:
                continue
            sub = tuple(sorted(rest[:j] + [k - 1] + rest[j + 1:]))
            v = _table_value(table, sub)
            if v is None:
                total = None
                break
            total += v
        if total is not None and total != value:
            return False
    return True


def check_kdv(table, equation):
    """Residuals of one KdV equation (1 or 2) over all in-bound monomials."""
    if equation not in (1, 2):
        raise WKError("only the first two KdV equations are available")
    max_genus, max_degree = table.bounds
    for g in range(0, max_genus + 1):
        for total in range(0, max_degree - equation + 1):
            size = total + equation - 3 * g
            if size < 0:
                continue
            for p in partitions_max_parts(total, size):
                M = tuple(sorted(list(p) + [0] * (size - len(p))))
                residual = ZERO
                for c, factors in _flow_products(equation, M):
                    prod = c
                    for f in factors:
                        v = _table_value(table, f)
                        if v is None:
                            prod = None
                            break
                        prod *= v
                    if prod is None:
                        residual = None
                        break
                    residual += prod
                if residual is not None and residual:
                    return False
    return True


# ----------------------------------------------------------------------
# Airy specialization

def _double_factorial_odd(i):
    """(2i-1)!! with the empty-product convention at i = 0."""
    return factorial(2 * i) // (2 ** i * factorial(i))


def airy_specialize(table, lambda_order):
    """exp(F) at t_i = -(2i-1)!! lam^-(2i+1), as a series in mu = 1/lam.

    A term of genus g with n insertions lands in mu^(6g-6+3n); the table
    must cover every (g, n) reaching the requested order.
    """
    max_genus, max_degree = table.bounds
    data = {}
    g = 0
    while 6 * g - 6 + 3 <= lambda_order:
        if g > max_genus:
            raise WKError(f"order {lambda_order} needs genus {g} "
                          f"beyond the table bound {max_genus}")
        n = 1
        while 6 * g - 6 + 3 * n <= lambda_order:
            total = 3 * g - 3 + n
            if total >= 0 and 2 * g - 2 + n > 0:
                if total > max_degree:
                    raise WKError(f"order {lambda_order} needs degree {total} "
                                  f"beyond the table bound {max_degree}")
                for p in partitions_max_parts(total, n):
                    ks = tuple(sorted(list(p) + [0] * (n - len(p))))
                    value = table.values[(g, ks)]
                    if not value:
                        continue
                    coeff = value
                    mults = {}
                    for k in ks:
                        mults[k] = mults.get(k, 0) + 1
                    for k, m in mults.items():
                        coeff *= (-_double_factorial_odd(k)) ** m
                        coeff /= factorial(m)
                    power = 2 * total + n
                    key = (power,)
                    data[key] = data.get(key, ZERO) + coeff
            n += 1
        g += 1
    F = FormalSeries(("mu",), (((1,), lambda_order),), data)
    return F.exp()


def airy_reference(lambda_order):
    """A(-mu^3/288) truncated at the same order, for comparison."""
    coeffs = univariate_coeffs(series_A(lambda_order // 3 + 1),
                               lambda_order // 3)
    data = {}
    for i, a in enumerate(coeffs):
        if 3 * i <= lambda_order and a:
            data[(3 * i,)] = a * Fraction(-1, 288) ** i
    return FormalSeries(("mu",), (((1,), lambda_order),), data)


# ----------------------------------------------------------------------
# strata evaluation

@lru_cache(maxsize=None)
def _vertex_integral(g, psis, kappas):
    """Integral of prod(psi^a) * prod(kappa_b) over one moduli factor.

    kappa factors are removed one at a time: kappa_b = push(psi^{b+1}) and
    pulling the remaining kappa_{b'} back up costs (kappa_{b'} - psi^{b'})
    at the new marking, expanded over subsets.
    """
    if not kappas:
        return build_table().lookup(g, psis)
    rest, b = kappas[:-1], kappas[-1]
    total = ZERO
    for r in range(len(rest) + 1):
        for idx in combinations(range(len(rest)), r):
            chosen = [rest[i] for i in idx]
            kept = tuple(rest[i] for i in range(len(rest)) if i not in idx)
            new_psi = b + 1 + sum(chosen)
            total += (-ONE) ** r * _vertex_integral(
                g, tuple(sorted(psis + (new_psi,))), kept)
    return total


def integrate(x):
    """Exact integral of a top-degree StrataElement over its moduli space.

    Each graph term factors into per-vertex integrals; vertex dimension caps
    force every vertex of a top-degree term to be exactly top-degree.
    """
    top = 3 * x.g - 3 + x.n
    if x.is_zero():
        return ZERO
    if x.degrees() != [top]:
        raise WKError(f"integrand must be homogeneous of top degree {top}")
    total = ZERO
    for ds, coeff in x.terms.items():
        graph = ds.graph
        value = coeff
        for v in range(graph.num_vertices):
            psis = []
            for m, u in enumerate(graph.legs):
                if u == v:
                    psis.append(ds.psi_leg[m])
            for e, (a, b) in enumerate(graph.edges):
                if a == v:
                    psis.append(ds.psi_edge[e][0])
                if b == v:
                    psis.append(ds.psi_edge[e][1])
            kappas = []
            for r, m in ds.kappa[v]:
                kappas.extend([r] * m)
            value *= _vertex_integral(graph.genera[v], tuple(sorted(psis)),
                                      tuple(sorted(kappas)))
            if not value:
                break
        total += value
    return total
