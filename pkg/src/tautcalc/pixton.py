"""Strata-algebra relations built from hypergeometric vertex, leg, and edge
factors, together with their boundary closure.

Every class here is a sum over stable graphs.  Each vertex carries an
involutive parity variable (square one); vertex and leg factors have parity
locked to their degree, so the only genuine parity bookkeeping sits in the
edge factor, which splits into four components by the pattern of parity
variables at its two half-edges.  The final extraction keeps the component
where every vertex parity equals its genus minus one mod two.
"""

from fractions import Fraction
from functools import lru_cache
from math import factorial

from .graphs import enumerate_stable_graphs
from .linalg import SparseMatrix, in_span
from .partitions import partitions_in_alphabet
from .relations import RelationSet
from .series import series_A, series_B
from .strata import (
    StrataElement,
    basis,
    forgetful_pushforward,
    kappa_of_f_parts,
    make_stratum,
    monomial_stratum,
    product,
    xi_pushforward,
)

ZERO = Fraction(0)
ONE = Fraction(1)


class PixtonError(ValueError):
    pass


@lru_cache(maxsize=None)
def _h_series(order):
    """Coefficient lists of the two edge-vertex kernels through `order`.

    h0 alternates the signs of the base hypergeometric series; h1 does the
    same for its companion and flips the overall sign, giving the leading
    behaviour 1 - 60 T and 1 + 84 T respectively.
    """
    a = series_A(order)
    b = series_B(order)
    h0 = tuple((-1) ** i * a.coefficient((i,)) for i in range(order + 1))
    h1 = tuple(-((-1) ** i) * b.coefficient((i,)) for i in range(order + 1))
    return h0, h1


def _divide_by_sum(num):
    """Exact division of a bivariate polynomial dict by (x + y).

    The divisor is homogeneous, so exactness holds degree by degree and
    truncation cannot fake a remainder.
    """
    quo = {}
    rem = {k: v for k, v in num.items() if v}
    while rem:
        i, j = max(rem)
        c = rem.pop((i, j))
        if i == 0:
            raise PixtonError("edge factor division left a remainder")
        key = (i - 1, j)
        quo[key] = quo.get(key, ZERO) + c
        low = (i - 1, j + 1)
        v = rem.get(low, ZERO) - c
        if v:
            rem[low] = v
        else:
            rem.pop(low, None)
    return quo


@lru_cache(maxsize=None)
def _edge_table(bound):
    """Edge factor through total psi-degree `bound`.

    Returns {(a, b, p1, p2): coeff} with psi-exponents (a, b) at the two
    half-edges and the parity pattern (p1, p2) of their vertex variables.
    """
    deg = bound + 1
    h0, h1 = _h_series(deg)
    even0 = [h0[i] if i % 2 == 0 else ZERO for i in range(deg + 1)]
    odd0 = [h0[i] if i % 2 == 1 else ZERO for i in range(deg + 1)]
    even1 = [h1[i] if i % 2 == 0 else ZERO for i in range(deg + 1)]
    odd1 = [h1[i] if i % 2 == 1 else ZERO for i in range(deg + 1)]
    table = {}
    for pat in ((0, 0), (1, 0), (0, 1), (1, 1)):
        num = {}
        for i in range(deg + 1):
            for j in range(deg + 1 - i):
                if pat == (0, 0):
                    c = -(even0[i] * odd1[j] + odd1[i] * even0[j])
                elif pat == (1, 0):
                    c = -(odd0[i] * odd1[j] + even1[i] * even0[j])
                elif pat == (0, 1):
                    c = -(even0[i] * even1[j] + odd1[i] * odd0[j])
                else:
                    c = -(odd0[i] * even1[j] + even1[i] * odd0[j])
                if c:
                    num[(i, j)] = c
        if pat in ((1, 0), (0, 1)):
            num[(0, 0)] = num.get((0, 0), ZERO) + 1
            if not num[(0, 0)]:
                del num[(0, 0)]
        for (a, b), c in _divide_by_sum(num).items():
            if a + b <= bound:
                table[(a, b) + pat] = c
    return table


@lru_cache(maxsize=None)
def _vertex_kappa_table(gv, nv, bound):
    """Kappa-factor expansions at one vertex, split by parity.

    Returns (even, odd) dicts {kappa_monomial: coeff}; the parity of each
    term equals its degree, so the split is by degree parity.
    """
    h0, _ = _h_series(bound + 1)
    plain, marked = [], []
    for j in range(2, bound + 2):
        c = -h0[j - 1]
        if not c:
            continue
        if (j - 1) % 2:
            marked.append((j, c))
        else:
            plain.append((j, c))
    even_el, odd_el = kappa_of_f_parts(tuple(plain), tuple(marked), gv, nv,
                                       bound)

    def flatten(el):
        out = {}
        for ds, c in el.terms.items():
            out[ds.kappa[0]] = c
        return out

    return flatten(even_el), flatten(odd_el)


@lru_cache(maxsize=None)
def _leg_table(a, bound):
    """Leg factor: ((psi_power, parity, coeff), ...) for leg value a."""
    h0, h1 = _h_series(bound)
    coeffs = h0 if a % 2 == 0 else h1
    return tuple((k, (a + k) % 2, coeffs[k]) for k in range(bound + 1)
                 if coeffs[k])


def _graph_term(graph, A, d):
    """Expand one graph summand and extract the parity component.

    Returns {DecoratedStratum: coeff} of pure degree d, without the
    1/|Aut| and 1/2^h1 prefactor.
    """
    E, V = graph.num_edges, graph.num_vertices
    budget = d - E
    if budget < 0:
        return {}
    caps = [3 * graph.genera[v] - 3 + graph.valence(v) for v in range(V)]
    target = [(graph.genera[v] - 1) % 2 for v in range(V)]
    edge_tab = sorted(_edge_table(budget).items())
    leg_tabs = [_leg_table(A[m], budget) for m in range(graph.num_legs)]
    kap_tabs = [_vertex_kappa_table(graph.genera[v], graph.valence(v),
                                    min(budget, caps[v])) for v in range(V)]
    out = {}

    def close(left, parity, used, pe, pl, kaps, coeff):
        if left or any((p - t) % 2 for p, t in zip(parity, target)):
            return
        ds = make_stratum(graph, kappa=[dict(k) for k in kaps],
                          psi_leg=pl, psi_edge=pe, strict=False)
        if ds is None:
            return
        v = out.get(ds, ZERO) + coeff
        if v:
            out[ds] = v
        else:
            del out[ds]

    def do_vertex(v, left, parity, used, pe, pl, kaps, coeff):
        if v == V:
            close(left, parity, used, pe, pl, kaps, coeff)
            return
        even, odd = kap_tabs[v]
        for chan, tab in ((0, even), (1, odd)):
            for kmono, c in tab.items():
                kdeg = sum(r * m for r, m in kmono)
                if kdeg > left or used[v] + kdeg > caps[v]:
                    continue
                parity[v] += chan
                used[v] += kdeg
                kaps[v] = kmono
                do_vertex(v + 1, left - kdeg, parity, used, pe, pl, kaps,
                          coeff * c)
                kaps[v] = ()
                used[v] -= kdeg
                parity[v] -= chan

    def do_leg(m, left, parity, used, pe, pl, kaps, coeff):
        if m == graph.num_legs:
            do_vertex(0, left, parity, used, pe, pl, kaps, coeff)
            return
        w = graph.legs[m]
        for k, par, c in leg_tabs[m]:
            if k > left or used[w] + k > caps[w]:
                continue
            parity[w] += par
            used[w] += k
            pl[m] = k
            do_leg(m + 1, left - k, parity, used, pe, pl, kaps, coeff * c)
            pl[m] = 0
            used[w] -= k
            parity[w] -= par

    def do_edge(e, left, parity, used, pe, pl, kaps, coeff):
        if e == E:
            do_leg(0, left, parity, used, pe, pl, kaps, coeff)
            return
        u, v = graph.edges[e]
        for (a, b, p1, p2), c in edge_tab:
            if a + b > left:
                continue
            if u == v:
                if used[u] + a + b > caps[u]:
                    continue
            elif used[u] + a > caps[u] or used[v] + b > caps[v]:
                continue
            parity[u] += p1
            parity[v] += p2
            used[u] += a
            used[v] += b
            pe[e] = (a, b)
            do_edge(e + 1, left - a - b, parity, used, pe, pl, kaps,
                    coeff * c)
            pe[e] = (0, 0)
            used[v] -= b
            used[u] -= a
            parity[v] -= p2
            parity[u] -= p1

    do_edge(0, budget, [0] * V, [0] * V, [(0, 0)] * E,
            [0] * graph.num_legs, [()] * V, ONE)
    return out


@lru_cache(maxsize=None)
def pixton_R(g, A, d):
    """The degree-d relation class for genus g and leg values A in {0,1}.

    Sum over stable graphs of the parity-extracted factor product, weighted
    by 1/|Aut| and 1/2^h1, with the whole degree-d class carrying the sign
    (-1)^d.  That sign normalizes the family so that restriction to the
    smooth locus reproduces the kappa-psi relation series exactly rather
    than up to sign; see pixton_R_ext.  Vanishes unless g = d+1+sum(A)
    mod 2; the vanishing is genuinely computed, not short-circuited.
    """
    A = tuple(int(a) for a in A)
    n = len(A)
    if any(a not in (0, 1) for a in A):
        raise PixtonError("leg values must be 0 or 1")
    if d < 0:
        raise PixtonError("degree must be nonnegative")
    if 2 * g - 2 + n <= 0:
        raise PixtonError(f"(g, n) = ({g}, {n}) is not stable")
    out = StrataElement(g, n)
    acc = out.terms
    sign = -1 if d % 2 else 1
    for graph in enumerate_stable_graphs(g, n, max_edges=d):
        scale = Fraction(sign, graph.aut_order() * 2 ** graph.h1())
        for ds, c in _graph_term(graph, A, d).items():
            v = acc.get(ds, ZERO) + scale * c
            if v:
                acc[ds] = v
            else:
                acc.pop(ds, None)
    return out


def _check_extended(g, n, A, sigma, d):
    if any(a < 0 or a % 3 == 2 for a in A):
        raise PixtonError("leg values must be 0 or 1 mod 3 and nonnegative")
    if any(s <= 0 or s % 3 == 2 for s in sigma):
        raise PixtonError("partition parts must be 0 or 1 mod 3 and positive")
    if 2 * g - 2 + n <= 0:
        raise PixtonError(f"(g, n) = ({g}, {n}) is not stable")
    if 3 * d <= g - 1 + sum(A) + sum(sigma):
        raise PixtonError(
            f"degree {d} does not exceed (g-1+|A|+|sigma|)/3 "
            f"= {Fraction(g - 1 + sum(A) + sum(sigma), 3)}")


@lru_cache(maxsize=None)
def pixton_R_ext(g, A, sigma, d):
    """Extended relation: leg values and partition parts 0 or 1 mod 3.

    Excess thirds of each entry become psi powers on auxiliary markings,
    the base class is taken at the reduced leg values, and the auxiliary
    markings are pushed forward away again.  The pushforward is divided by
    the number of automorphisms of sigma (repeated parts are unordered, the
    auxiliary markings are not) and signed by (-1)^(d+|sigma|+len(sigma)),
    which extends the (-1)^d of pixton_R: with this normalization the
    smooth restriction at A = () equals fz_relation(g, d, sigma) on the
    nose, coefficient by coefficient.
    """
    A = tuple(int(a) for a in A)
    sigma = tuple(sorted((int(s) for s in sigma), reverse=True))
    n = len(A)
    _check_extended(g, n, A, sigma, d)
    B = tuple(a % 3 for a in A) + tuple(s % 3 for s in sigma)
    ell = len(sigma)
    d_hat = (d - sum((a - b) // 3 for a, b in zip(A, B[:n]))
             - sum((s - b) // 3 for s, b in zip(sigma, B[n:])))
    base = pixton_R(g, B, d_hat)
    exps = {}
    for j, (a, b) in enumerate(zip(A, B[:n]), start=1):
        if (a - b) // 3:
            exps[j] = (a - b) // 3
    for j, (s, b) in enumerate(zip(sigma, B[n:]), start=n + 1):
        exps[j] = 1 + (s - b) // 3
    x = base
    if exps:
        x = product(x, monomial_stratum(g, n + ell, psi=exps))
    for _ in range(ell):
        x = forgetful_pushforward(x)
    aut = 1
    for s in set(sigma):
        aut *= factorial(sigma.count(s))
    sign = -1 if (d + sum(sigma) + ell) % 2 else 1
    norm = Fraction(sign, aut)
    base_sign = -1 if d_hat % 2 else 1
    return x.scale(norm / base_sign)


def _placed_data(gv, nv, d_v):
    """All (A, sigma) with entries 0 or 1 mod 3 admissible at (gv, nv, d_v).

    The degree bound caps sum(A) + |sigma|; the parity condition filters
    the combinations whose class vanishes identically.
    """
    room = 3 * d_v - gv
    if room < 0:
        return
    allowed = [x for x in range(room + 1) if x % 3 != 2]
    combos = []

    def build(i, acc, total):
        if i == nv:
            combos.append((tuple(acc), total))
            return
        for a in allowed:
            if total + a <= room:
                acc.append(a)
                build(i + 1, acc, total + a)
                acc.pop()

    build(0, [], 0)
    alphabet = [x for x in range(1, room + 1) if x % 3 != 2]
    for A, atot in combos:
        for size in range(room - atot + 1):
            for sigma in partitions_in_alphabet(size, alphabet):
                if (gv + d_v + size + 1 + atot) % 2 == 0:
                    yield A, sigma


def pbar_generators(g, n, d):
    """Boundary closure generators: a spanning list for the degree-d piece.

    Every stable graph contributes classes with an extended relation placed
    on one vertex and kappa-psi monomials on the others; the list is
    filtered to keep only rank-increasing members, so it is a basis of the
    span it generates.
    """
    if 2 * g - 2 + n <= 0:
        raise PixtonError(f"(g, n) = ({g}, {n}) is not stable")
    if not 0 <= d <= 3 * g - 3 + n:
        raise PixtonError(f"degree {d} out of range")
    out = RelationSet()
    mat = SparseMatrix(list(basis(g, n, d)))
    for graph in enumerate_stable_graphs(g, n, max_edges=d):
        E, V = graph.num_edges, graph.num_vertices
        budget = d - E
        caps = [3 * graph.genera[v] - 3 + graph.valence(v) for v in range(V)]
        for v in range(V):
            gv, nv = graph.genera[v], graph.valence(v)
            for d_v in range(min(budget, caps[v]) + 1):
                for A_v, sigma_v in _placed_data(gv, nv, d_v):
                    rel = pixton_R_ext(gv, A_v, sigma_v, d_v)
                    if rel.is_zero():
                        continue
                    for cls, deco in _decorated_pushes(
                            graph, v, rel, budget - d_v, caps):
                        if cls.is_zero():
                            continue
                        vec = dict(cls.terms)
                        if in_span(vec, mat):
                            continue
                        mat.add_row(vec)
                        out.append(cls, g=g, n=n, d=d, A=A_v, sigma=sigma_v,
                                   vertex=v, placed_degree=d_v,
                                   graph=graph.encode(), decorations=deco)
    return out


def _decorated_pushes(graph, v, rel, left, caps):
    """Push rel at vertex v with every monomial decoration of the others.

    Decorations spend exactly `left`, keeping every pushed class homogeneous
    of the ambient degree.
    """
    V = graph.num_vertices
    others = [w for w in range(V) if w != v]

    def spread(i, remaining, chosen):
        if i == len(others):
            if remaining == 0:
                yield list(chosen)
            return
        w = others[i]
        for deg in range(min(remaining, caps[w]) + 1):
            for deco in _vertex_monomials(graph.genera[w], graph.valence(w),
                                          deg):
                chosen.append((w, deco))
                yield from spread(i + 1, remaining - deg, chosen)
                chosen.pop()

    for chosen in spread(0, left, []):
        classes = [None] * V
        classes[v] = rel
        for w, (kap, psis) in chosen:
            classes[w] = monomial_stratum(
                graph.genera[w], graph.valence(w), kappa=dict(kap),
                psi={i + 1: a for i, a in enumerate(psis) if a})
        yield xi_pushforward(graph, classes), tuple(
            (w, kap, psis) for w, (kap, psis) in chosen)


@lru_cache(maxsize=None)
def _vertex_monomials(gv, nv, deg):
    """All (kappa spec, psi exponents) monomials of exact degree at (gv, nv)."""
    from .partitions import partitions
    from .strata import _compositions
    out = []
    for kdeg in range(deg + 1):
        for part in partitions(kdeg):
            kap = {}
            for r in part:
                kap[r] = kap.get(r, 0) + 1
            for psis in _compositions(deg - kdeg, nv):
                out.append((tuple(sorted(kap.items())), psis))
    return tuple(out)
