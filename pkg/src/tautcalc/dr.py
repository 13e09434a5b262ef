"""Double ramification cycles by weighted sums over stable graphs.

A ramification vector S assigns an integer to each marking, summing to zero.
For each modulus r, each stable graph carries finitely many admissible
weightings: half-edge residues matching S at legs, opposite across edges,
and summing to zero around every vertex.  The weighted class assembles leg
factors exp(s^2 psi) and edge factors (1 - exp(-ww'(psi+psi')))/(psi+psi'),
and for large r its coefficients are polynomial in r; the cycle is the
constant term of that polynomial, extracted by exact interpolation over two
disjoint sample windows that must agree.

The sum over weightings factorizes: residues are affine in h1 free
variables with unit coefficients, and disjoint groups of edges decouple, so
each graph reduces to a few small power sums handled by the kernels module.
"""

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

from .graphs import StableGraph, enumerate_stable_graphs
from .kernels import block_sum
from .strata import StrataElement, _compositions, make_stratum

ZERO = Fraction(0)


class DRError(ValueError):
    pass


class StabilizationError(RuntimeError):
    """Interpolated constant terms disagreed between sample windows."""


def _check_vector(S, n=None):
    S = tuple(int(s) for s in S)
    if n is not None and len(S) != n:
        raise DRError(f"expected {n} ramification entries, got {len(S)}")
    if sum(S):
        raise DRError("ramification vector must sum to zero")
    return S


@lru_cache(maxsize=None)
def _layout(graph):
    """Affine parametrization of edge residues by h1 free variables.

    Returns (free, rows) where free lists the non-tree edge indices and
    rows[e] = (vertex_set, coeffs): the residue of edge e is
    sum(leg values into vertex_set) + sum(coeffs[i] * w_free[i]) mod r,
    with coeffs entries in {-1, 0, 1}.  Free edges get an empty vertex set
    and a unit coefficient row; the vertex sets defer the dependence on S.
    """
    V, E = graph.num_vertices, graph.num_edges
    adj = [[] for _ in range(V)]
    for e, (u, v) in enumerate(graph.edges):
        if u != v:
            adj[u].append((v, e))
            adj[v].append((u, e))
    parent = [None] * V
    order = [0]
    seen = {0}
    for x in order:
        for y, e in adj[x]:
            if y not in seen:
                seen.add(y)
                parent[y] = (x, e)
                order.append(y)
    tree = {e for _, e in filter(None, parent)}
    free = [e for e in range(E) if e not in tree]
    below = [{x} for x in range(V)]
    for x in reversed(order):
        if parent[x] is not None:
            below[parent[x][0]] |= below[x]
    rows = [None] * E
    for i, f in enumerate(free):
        coeffs = [0] * len(free)
        coeffs[i] = 1
        rows[f] = (frozenset(), tuple(coeffs))
    for x in range(V):
        if parent[x] is None:
            continue
        e = parent[x][1]
        u, v = graph.edges[e]
        sub = below[x]
        sign = 1 if u in sub else -1
        coeffs = []
        for f in free:
            fu, fv = graph.edges[f]
            cross = (fu in sub) - (fv in sub)
            coeffs.append(-sign * cross)
        # const = -sign * (legs into sub); with sum(S) = 0 this is the plain
        # leg sum over sub (sign -1) or over its complement (sign +1)
        rows[e] = (frozenset(range(V)) - sub if sign == 1 else frozenset(sub),
                   tuple(coeffs))
    return tuple(free), tuple(rows)


def _residue_rows(graph, S):
    """Specialize the layout to S: per edge, (const, coeffs) with the
    constant the net leg value flowing into the defining vertex set."""
    free, rows = _layout(graph)
    leg_at = [0] * graph.num_vertices
    for m, x in enumerate(graph.legs):
        leg_at[x] += S[m]
    out = []
    for vset, coeffs in rows:
        out.append((sum(leg_at[x] for x in vset), coeffs))
    return free, out


def _edge_blocks(free, rows):
    """Group edges by shared free variables; constant edges stand alone.

    Returns (blocks, const_edges): blocks as (variable index tuple, edge
    index tuple).
    """
    k = len(free)
    par = list(range(k))

    def find(a):
        while par[a] != a:
            par[a] = par[par[a]]
            a = par[a]
        return a

    touched = []
    for e, (_, coeffs) in enumerate(rows):
        vs = [i for i, c in enumerate(coeffs) if c]
        touched.append(vs)
        for i in vs[1:]:
            par[find(vs[0])] = find(i)
    groups = {}
    const_edges = []
    for e, vs in enumerate(touched):
        if not vs:
            const_edges.append(e)
        else:
            groups.setdefault(find(vs[0]), []).append(e)
    blocks = []
    for root, edges in sorted(groups.items()):
        var_ids = sorted({i for e in edges for i, c in enumerate(rows[e][1])
                          if c})
        blocks.append((tuple(var_ids), tuple(edges)))
    return blocks, const_edges


def weightings_mod_r(graph, S, r):
    """All admissible weightings of the graph for modulus r.

    Each weighting maps ("leg", marking) and ("edge", index, side) keys to
    residues in {0, ..., r-1}; side 1 carries the negated residue of side 0.
    The count is always r**h1(graph).
    """
    if not isinstance(graph, StableGraph):
        raise DRError("expected a StableGraph")
    S = _check_vector(S, graph.num_legs)
    if r < 1:
        raise DRError("modulus must be positive")
    free, rows = _residue_rows(graph, S)
    out = []

    def emit(values):
        w = {}
        for m in range(1, graph.num_legs + 1):
            w[("leg", m)] = S[m - 1] % r
        for e in range(graph.num_edges):
            b, coeffs = rows[e]
            idx = b + sum(c * x for c, x in zip(coeffs, values))
            w[("edge", e, 0)] = idx % r
            w[("edge", e, 1)] = -idx % r
        out.append(w)

    stack = [()]
    for _ in free:
        stack = [v + (x,) for v in stack for x in range(r)]
    for values in stack:
        emit(values)
    return out


def _weighting_power_sum(graph, rows, free, blocks, const_edges, exps, r):
    """Sum over admissible weightings of prod_e (w_e w'_e)^exps[e]."""
    tables = []
    for e in range(graph.num_edges):
        m = exps[e]
        tables.append([(w * (r - w)) ** m if w else 0 for w in range(r)])
    total = 1
    for var_ids, edges in blocks:
        sub_tables = [tables[e] for e in edges]
        sub_coeffs = [tuple(rows[e][1][i] for i in var_ids) for e in edges]
        sub_consts = [rows[e][0] for e in edges]
        total *= block_sum(sub_tables, sub_coeffs, sub_consts, r)
        if not total:
            return 0
    for e in const_edges:
        total *= tables[e][rows[e][0] % r]
    return total


def _graph_contribution(out, graph, S, d, r):
    E = graph.num_edges
    budget = d - E
    if budget < 0:
        return
    n = graph.num_legs
    free, rows = _residue_rows(graph, S)
    blocks, const_edges = _edge_blocks(free, rows)
    scale = Fraction(1, graph.aut_order() * r ** graph.h1())
    for edge_part in range(budget + 1):
        for ks in _compositions(edge_part, E):
            wsum = _weighting_power_sum(
                graph, rows, free, blocks, const_edges,
                tuple(k + 1 for k in ks), r)
            if not wsum:
                continue
            base = scale * wsum
            for k in ks:
                base *= Fraction((-1) ** k, factorial(k + 1))
            for legs in _compositions(budget - edge_part, n):
                coeff = base
                for m, a in enumerate(legs):
                    if a:
                        coeff *= Fraction(S[m] ** (2 * a), factorial(a))
                if not coeff:
                    continue
                for split in _splits_of(ks):
                    ds = make_stratum(
                        graph, psi_leg=legs,
                        psi_edge=tuple(zip(split, (k - i for k, i in
                                                   zip(ks, split)))),
                        strict=False)
                    if ds is None:
                        continue
                    c = coeff
                    for k, i in zip(ks, split):
                        c *= comb(k, i)
                    v = out.terms.get(ds, ZERO) + c
                    if v:
                        out.terms[ds] = v
                    else:
                        out.terms.pop(ds, None)


def _splits_of(ks):
    """Cartesian product of range(k+1) over the edge exponents."""
    out = [()]
    for k in ks:
        out = [s + (i,) for s in out for i in range(k + 1)]
    return out


def q_class(g, S, d, r):
    """Degree-d part of the modulus-r weighted graph sum."""
    S = _check_vector(S)
    n = len(S)
    if 2 * g - 2 + n <= 0:
        raise DRError(f"(g, n) = ({g}, {n}) is not stable")
    if d < 0:
        raise DRError("degree must be nonnegative")
    if r < 1:
        raise DRError("modulus must be positive")
    out = StrataElement(g, n)
    for graph in enumerate_stable_graphs(g, n, max_edges=d):
        _graph_contribution(out, graph, S, d, r)
    return out


def _constant_term(samples):
    """Exact Lagrange value at r=0 of coefficientwise samples [(r, el)]."""
    keys = set()
    for _, el in samples:
        keys.update(el.terms)
    xs = [r for r, _ in samples]
    weights = []
    for i, xi in enumerate(xs):
        w = Fraction(1)
        for j, xj in enumerate(xs):
            if j != i:
                w *= Fraction(-xj, xi - xj)
        weights.append(w)
    out = {}
    for ds in keys:
        c = sum((w * el.terms.get(ds, ZERO)
                 for (_, el), w in zip(samples, weights)), ZERO)
        if c:
            out[ds] = c
    return out


def p_class(g, S, d):
    """Constant term in r of the weighted class, with a stability check.

    Samples two disjoint windows of moduli; the interpolated constant
    terms must agree exactly, else StabilizationError.
    """
    S = _check_vector(S)
    n = len(S)
    if 2 * g - 2 + n <= 0:
        raise DRError(f"(g, n) = ({g}, {n}) is not stable")
    if d < 0:
        raise DRError("degree must be nonnegative")
    graphs = list(enumerate_stable_graphs(g, n, max_edges=d))
    max_e = max((gr.num_edges for gr in graphs), default=0)
    max_h1 = max((gr.h1() for gr in graphs), default=0)
    width = 2 * d + 2 * max_e + max_h1
    r0 = max(2 * max((abs(s) for s in S), default=0), 2 * d) + 1
    first = [(r, q_class(g, S, d, r)) for r in range(r0, r0 + width + 1)]
    second = [(r, q_class(g, S, d, r))
              for r in range(r0 + width + 1, r0 + 2 * width + 2)]
    a, b = _constant_term(first), _constant_term(second)
    if a != b:
        diff = {ds for ds in set(a) | set(b) if a.get(ds) != b.get(ds)}
        raise StabilizationError(
            f"constant term did not stabilize for (g={g}, S={S}, d={d}): "
            f"{len(diff)} coefficients differ between windows "
            f"[{r0}, {r0 + width}] and [{r0 + width + 1}, {r0 + 2 * width + 1}]")
    return StrataElement(g, n, a)


def dr_cycle(g, S):
    """The double ramification cycle, degree g, as 2^-g times the constant
    term."""
    return _dr_cached(g, _check_vector(S))


@lru_cache(maxsize=None)
def _dr_cached(g, S):
    return p_class(g, S, g).scale(Fraction(1, 2 ** g))


@lru_cache(maxsize=None)
def lambda_class(g):
    """Top Chern class of the Hodge bundle via the empty-vector cycle."""
    if g < 2:
        raise DRError("lambda specialization needs genus at least 2")
    return dr_cycle(g, ()).scale((-1) ** g)


def build_chi(g, r):
    """Alternating psi-power sum on two markings, total degree 2g + r."""
    if r % 2 or not 2 <= r <= g - 1:
        raise DRError("r must be even with 2 <= r <= g - 1")
    base = StableGraph((g,), (0, 0), ())
    out = StrataElement(g, 2)
    for a in range(2 * g + r + 1):
        ds = make_stratum(base, psi_leg=(a, 2 * g + r - a))
        out.terms[ds] = Fraction((-1) ** a)
    return out


def delta_tilde(x):
    """Glue markings 1 and 2 of every term into a nonseparating edge.

    Takes a StrataElement on (g, 2) to one on (g+1, 0); degrees rise by 1.
    """
    if x.n != 2:
        raise DRError("gluing needs exactly two markings")
    out = StrataElement(x.g + 1, 0)
    for ds, c in x.terms.items():
        gr = ds.graph
        glued, _, _ = gr.glue_legs(1, 2)
        pa, pb = ds.psi_leg
        pair = (pa, pb) if gr.legs[0] <= gr.legs[1] else (pb, pa)
        nds = make_stratum(glued, kappa=ds.kappa, psi_leg=(),
                           psi_edge=ds.psi_edge + (pair,))
        v = out.terms.get(nds, ZERO) + c
        if v:
            out.terms[nds] = v
        else:
            out.terms.pop(nds, None)
    return out
