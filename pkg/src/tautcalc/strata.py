"""Decorated boundary strata and the ring operations between them.

A basis element is a pair [Γ, γ]: a canonical stable graph Γ together with a
κψ-decoration γ, stored per vertex (κ exponents), per marking and per
half-edge (ψ exponents).  At every vertex the decoration degree may not
exceed 3g(v) - 3 + n(v), and decorations are kept in the minimum encoding of
their Aut(Γ)-orbit so equal classes compare equal.  κ₀ is never stored; it
is the scalar 2g(v) - 2 + n(v) and is substituted away at creation.

Elements are finite rational combinations of basis pairs, graded by
codimension |E(Γ)| + deg γ; mixed-degree values are allowed and
degree selection is explicit.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product as iproduct
from math import comb, factorial

from .graphs import StableGraph, enumerate_stable_graphs, trivial_graph
from .partitions import partitions

ZERO = Fraction(0)
ONE = Fraction(1)


class StrataError(ValueError):
    pass


def _norm_kappa(spec):
    """Normalize a κ-monomial spec (dict or pair iterable) at one vertex."""
    if spec is None:
        return ()
    items = spec.items() if isinstance(spec, dict) else spec
    acc = {}
    for r, m in items:
        r = int(r)
        m = int(m)
        if r < 1:
            raise StrataError("kappa index must be >= 1 (kappa_0 is a scalar)")
        if m < 0:
            raise StrataError("negative kappa exponent")
        if m:
            acc[r] = acc.get(r, 0) + m
    return tuple(sorted(acc.items()))


def _kappa_degree(kappa):
    return sum(r * m for r, m in kappa)


class DecoratedStratum:
    """Canonical decorated graph pair; construct through make_stratum."""

    __slots__ = ("graph", "kappa", "psi_leg", "psi_edge", "_hash")

    def __init__(self, graph, kappa, psi_leg, psi_edge):
        self.graph = graph
        self.kappa = kappa
        self.psi_leg = psi_leg
        self.psi_edge = psi_edge
        self._hash = hash((graph.encode(), kappa, psi_leg, psi_edge))

    def degree(self):
        return (self.graph.num_edges + sum(map(_kappa_degree, self.kappa))
                + sum(self.psi_leg) + sum(a + b for a, b in self.psi_edge))

    def vertex_degree(self, v):
        d = _kappa_degree(self.kappa[v])
        for m, u in enumerate(self.graph.legs):
            if u == v:
                d += self.psi_leg[m]
        for e, (a, b) in enumerate(self.graph.edges):
            if a == v:
                d += self.psi_edge[e][0]
            if b == v:
                d += self.psi_edge[e][1]
        return d

    def encode(self):
        return (self.graph.encode(), self.kappa, self.psi_leg, self.psi_edge)

    def __eq__(self, other):
        if not isinstance(other, DecoratedStratum):
            return NotImplemented
        return self.encode() == other.encode()

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return (f"DecoratedStratum(graph={self.graph!r}, kappa={self.kappa}, "
                f"psi_leg={self.psi_leg}, psi_edge={self.psi_edge})")


def _orbit_canonical(graph, kappa, psi_leg, psi_edge):
    """Minimum-encoding transport of a raw decoration to the canonical graph."""
    canon, maps = graph.canonical_maps()
    E = canon.num_edges
    bundles = {}
    for e, (a, b) in enumerate(canon.edges):
        bundles.setdefault((a, b), []).append(e)
    best = None
    for perm, hemap in maps:
        kap = [None] * canon.num_vertices
        for v in range(graph.num_vertices):
            kap[perm[v]] = kappa[v]
        pe = [[0, 0] for _ in range(E)]
        for (e, s), (f, t) in hemap.items():
            pe[f][t] = psi_edge[e][s]
        # normalize within parallel bundles: loops may flip, edges may swap
        for (a, b), idxs in bundles.items():
            if a == b:
                pairs = sorted(tuple(sorted(pe[e])) for e in idxs)
            else:
                pairs = sorted(tuple(pe[e]) for e in idxs)
            for e, pair in zip(idxs, pairs):
                pe[e] = pair
        cand = (tuple(kap), tuple(psi_leg), tuple(tuple(p) for p in pe))
        if best is None or cand < best:
            best = cand
    return DecoratedStratum(canon, best[0], best[1], best[2])


def make_stratum(graph, kappa=None, psi_leg=None, psi_edge=None, strict=True):
    """Validate and orbit-canonicalize a decorated graph pair.

    kappa: per-vertex κ-monomial specs; psi_leg: exponent per marking;
    psi_edge: (side0, side1) exponent pair per edge.  With strict=False a
    vertex-dimension overflow returns None instead of raising.
    """
    V = graph.num_vertices
    kap = tuple(_norm_kappa(kappa[v] if kappa else None) for v in range(V))
    pl = tuple(int(x) for x in psi_leg) if psi_leg else (0,) * graph.num_legs
    pe = (tuple((int(a), int(b)) for a, b in psi_edge) if psi_edge
          else ((0, 0),) * graph.num_edges)
    if len(pl) != graph.num_legs or len(pe) != graph.num_edges:
        raise StrataError("decoration arrays do not match the graph")
    if any(x < 0 for x in pl) or any(a < 0 or b < 0 for a, b in pe):
        raise StrataError("negative psi exponent")
    probe = DecoratedStratum(graph, kap, pl, pe)
    for v in range(V):
        cap = 3 * graph.genera[v] - 3 + graph.valence(v)
        if probe.vertex_degree(v) > cap:
            if strict:
                raise StrataError(f"decoration exceeds dimension at vertex {v}")
            return None
    return _orbit_canonical(graph, kap, pl, pe)


class StrataElement:
    """Finite rational combination of decorated strata on a fixed (g, n)."""

    __slots__ = ("g", "n", "terms")

    def __init__(self, g, n, terms=None):
        self.g = g
        self.n = n
        self.terms = {}
        if terms:
            for ds, c in terms.items():
                if c:
                    self.terms[ds] = c

    def _check(self, other):
        if (self.g, self.n) != (other.g, other.n):
            raise StrataError("ambient (g, n) mismatch")

    def copy(self):
        return StrataElement(self.g, self.n, dict(self.terms))

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        if isinstance(other, StrataElement):
            self._check(other)
            out = dict(self.terms)
            for ds, c in other.terms.items():
                v = out.get(ds, ZERO) + c
                if v:
                    out[ds] = v
                else:
                    out.pop(ds, None)
            return StrataElement(self.g, self.n, out)
        return NotImplemented

    def __neg__(self):
        return StrataElement(self.g, self.n, {d: -c for d, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = c if isinstance(c, Fraction) else Fraction(c)
        if not c:
            return StrataElement(self.g, self.n)
        return StrataElement(self.g, self.n, {d: c * v for d, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, StrataElement):
            return product(self, other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, StrataElement):
            return NotImplemented
        return (self.g, self.n) == (other.g, other.n) and self.terms == other.terms

    def degrees(self):
        return sorted({ds.degree() for ds in self.terms})

    def degree_part(self, d):
        return StrataElement(self.g, self.n, {
            ds: c for ds, c in self.terms.items() if ds.degree() == d})

    def coefficient(self, stratum):
        return self.terms.get(stratum, ZERO)

    def __repr__(self):
        return f"StrataElement(g={self.g}, n={self.n}, {len(self.terms)} terms)"


def zero_element(g, n):
    return StrataElement(g, n)


def unit(g, n):
    ds = make_stratum(trivial_graph(g, n))
    return StrataElement(g, n, {ds: ONE})


def psi_class(g, n, i, power=1):
    pl = [0] * n
    pl[i - 1] = power
    ds = make_stratum(trivial_graph(g, n), psi_leg=pl)
    return StrataElement(g, n, {ds: ONE})


def kappa_class(g, n, r, power=1):
    if r == 0:
        return unit(g, n).scale(Fraction(2 * g - 2 + n) ** power)
    ds = make_stratum(trivial_graph(g, n), kappa=[{r: power}])
    return StrataElement(g, n, {ds: ONE})


def graph_class(graph):
    """[Γ, 1] on the ambient (g, n) of the graph."""
    ds = make_stratum(graph)
    return StrataElement(graph.genus(), graph.num_legs, {ds: ONE})


def monomial_stratum(g, n, kappa=None, psi=None):
    """Single-vertex class Πκ_r^{m_r}·Πψ_i^{a_i}; kappa {r: m}, psi {i: a}.

    κ₀ factors are substituted by the scalar 2g - 2 + n.
    """
    kappa = dict(kappa or {})
    scalar = ONE
    if 0 in kappa:
        scalar *= Fraction(2 * g - 2 + n) ** kappa.pop(0)
    pl = [0] * n
    for i, a in (psi or {}).items():
        pl[i - 1] = a
    ds = make_stratum(trivial_graph(g, n), kappa=[kappa], psi_leg=pl)
    return StrataElement(g, n, {ds: scalar})


# -- basis -------------------------------------------------------------


def _compositions(total, k):
    if k == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, k - 1):
            yield (first,) + rest


def _vertex_decorations(gv, nslots, bound):
    """All (κ-monomial, ψ-exponent tuple) at one vertex, degree ≤ bound."""
    cap = min(bound, 3 * gv - 3 + nslots)
    out = []
    for total in range(cap + 1):
        for kdeg in range(total + 1):
            for part in partitions(kdeg):
                kap = {}
                for r in part:
                    kap[r] = kap.get(r, 0) + 1
                kap = tuple(sorted(kap.items()))
                for psis in _compositions(total - kdeg, nslots):
                    out.append((total, kap, psis))
    return out


@lru_cache(maxsize=None)
def basis(g, n, d):
    """The canonical basis of the degree-d graded piece."""
    dim = 3 * g - 3 + n
    if 2 * g - 2 + n <= 0:
        raise StrataError(f"(g, n) = ({g}, {n}) is not stable")
    if not 0 <= d <= dim:
        raise StrataError(f"degree {d} out of range for dimension {dim}")
    found = {}
    for graph in enumerate_stable_graphs(g, n, max_edges=d):
        rem = d - graph.num_edges
        V = graph.num_vertices
        slot_lists = [graph.slots(v) for v in range(V)]
        options = [_vertex_decorations(graph.genera[v], len(slot_lists[v]), rem)
                   for v in range(V)]

        def rec(v, left, chosen):
            if v == V:
                if left:
                    return
                kappa = []
                pl = [0] * graph.num_legs
                pe = [[0, 0] for _ in range(graph.num_edges)]
                for w, (_, kap, psis) in enumerate(chosen):
                    kappa.append(dict(kap))
                    for slot, a in zip(slot_lists[w], psis):
                        if not a:
                            continue
                        if slot[0] == "leg":
                            pl[slot[1] - 1] = a
                        else:
                            pe[slot[1]][slot[2]] = a
                ds = make_stratum(graph, kappa=kappa, psi_leg=pl, psi_edge=pe)
                found[ds] = None
                return
            for tot, kap, psis in options[v]:
                if tot <= left:
                    rec(v + 1, left - tot, chosen + [(tot, kap, psis)])

        rec(0, rem, [])
    return tuple(sorted(found, key=lambda ds: ds.encode()))


# -- decoration transport helpers --------------------------------------


def _blank_items(graph):
    return [(ONE,
             tuple({} for _ in range(graph.num_vertices)),
             (0,) * graph.num_legs,
             tuple((0, 0) for _ in range(graph.num_edges)))]


def _bump_leg(items, m, a):
    out = []
    for coeff, kap, pl, pe in items:
        pl2 = list(pl)
        pl2[m - 1] += a
        out.append((coeff, kap, tuple(pl2), pe))
    return out


def _bump_edge(items, e, side, a):
    out = []
    for coeff, kap, pl, pe in items:
        pe2 = [list(p) for p in pe]
        pe2[e][side] += a
        out.append((coeff, kap, pl, tuple(tuple(p) for p in pe2)))
    return out


def _bump_kappa(items, verts, r, m):
    """Multiply by (Σ_{v in verts} κ_r[v])^m, expanded multinomially."""
    out = []
    for coeff, kap, pl, pe in items:
        for split in _compositions(m, len(verts)):
            c = coeff * Fraction(factorial(m))
            kap2 = tuple(dict(kv) for kv in kap)
            for v, part in zip(verts, split):
                c /= factorial(part)
                if part:
                    kap2[v][r] = kap2[v].get(r, 0) + part
            out.append((c, kap2, pl, pe))
    return out


def _scale_items(items, c):
    return [(coeff * c, kap, pl, pe) for coeff, kap, pl, pe in items]


# -- product -----------------------------------------------------------

_PAIR_CACHE = {}
_CANDIDATE_CACHE = {}
_CONTRACT_CACHE = {}


def _candidate_graphs(base, budget):
    """Canonical graphs obtained from `base` by inserting stable graphs at
    its vertices with at most `budget` new edges in total."""
    key = (base, budget)
    got = _CANDIDATE_CACHE.get(key)
    if got is not None:
        return got
    V = base.num_vertices
    per_vertex = [enumerate_stable_graphs(base.genera[v], base.valence(v),
                                          max_edges=budget)
                  for v in range(V)]
    found = {}

    def rec(v, left, chosen):
        if v == V:
            comp = base
            for w in range(V - 1, -1, -1):
                comp = comp.insert_at_vertex(w, chosen[w])[0]
            canon = comp.canonical()
            found.setdefault(canon, None)
            return
        for inner in per_vertex[v]:
            if inner.num_edges <= left:
                rec(v + 1, left - inner.num_edges, chosen + [inner])

    rec(0, budget, [])
    out = tuple(sorted(found, key=lambda gr: (gr.num_edges, gr.encode())))
    _CANDIDATE_CACHE[key] = out
    return out


def _contraction(graph, subset):
    """Cached (contracted graph, vertex map, edge map, isos to canonical)."""
    key = (graph, subset)
    got = _CONTRACT_CACHE.get(key)
    if got is None:
        raw, vmap, emap = graph.contract_edges(subset)
        got = (raw.canonical(), raw, vmap, emap)
        _CONTRACT_CACHE[key] = got
    return got


def _pullback_items(items, target, cand, vmap, emap, iso):
    """Multiply `items` by the decoration of `target` pulled back to `cand`.

    vmap/emap contract cand onto a graph isomorphic to target.graph and iso
    is a full isomorphism (perm, hemap) from that contraction to it.
    """
    perm, hemap = iso
    # half-edge of target.graph -> half-edge of cand
    to_raw = {}
    for src, dst in hemap.items():
        to_raw[dst] = src
    inv_emap = {dst: src for src, dst in emap.items()}
    for m, a in enumerate(target.psi_leg):
        if a:
            items = _bump_leg(items, m + 1, a)
    for e in range(target.graph.num_edges):
        for side in (0, 1):
            a = target.psi_edge[e][side]
            if a:
                ce, cs = inv_emap[to_raw[(e, side)]]
                items = _bump_edge(items, ce, cs, a)
    npre = {}
    for v in range(cand.num_vertices):
        npre.setdefault(perm[vmap[v]], []).append(v)
    for w in range(target.graph.num_vertices):
        for r, m in target.kappa[w]:
            items = _bump_kappa(items, npre[w], r, m)
    return items


def _finalize_items(cand, items, out, scale):
    for coeff, kap, pl, pe in items:
        c = coeff * scale
        if not c:
            continue
        ds = make_stratum(cand, kappa=list(kap), psi_leg=pl, psi_edge=pe,
                          strict=False)
        if ds is None:
            continue
        v = out.get(ds, ZERO) + c
        if v:
            out[ds] = v
        else:
            out.pop(ds, None)


def _pair_product(d1, d2):
    if d2.encode() < d1.encode():
        d1, d2 = d2, d1
    key = (d1, d2)
    got = _PAIR_CACHE.get(key)
    if got is not None:
        return got
    G1, G2 = d1.graph, d2.graph
    E1, E2 = G1.num_edges, G2.num_edges
    out = {}
    for cand in _candidate_graphs(G1, E2):
        E = cand.num_edges
        if E - E2 < 0:
            continue
        inv_aut = Fraction(1, cand.aut_order())
        for s1 in combinations(range(E), E - E1):
            c1_canon, raw1, vmap1, emap1 = _contraction(cand, s1)
            if c1_canon != G1.canonical():
                continue
            isos1 = raw1.all_isomorphisms(G1)
            if not isos1:
                continue
            rest = [e for e in range(E) if e not in s1]
            for s2 in combinations(rest, E - E2):
                c2_canon, raw2, vmap2, emap2 = _contraction(cand, s2)
                if c2_canon != G2.canonical():
                    continue
                isos2 = raw2.all_isomorphisms(G2)
                if not isos2:
                    continue
                excess = [e for e in rest if e not in s2]
                for iso1 in isos1:
                    base = _pullback_items(_blank_items(cand), d1, cand,
                                           vmap1, emap1, iso1)
                    for iso2 in isos2:
                        items = _pullback_items(base, d2, cand,
                                                vmap2, emap2, iso2)
                        for e in excess:
                            items = (_scale_items(_bump_edge(items, e, 0, 1), -1)
                                     + _scale_items(_bump_edge(items, e, 1, 1), -1))
                        _finalize_items(cand, items, out, inv_aut)
    _PAIR_CACHE[key] = out
    return out


def product(x, y):
    x._check(y)
    out = StrataElement(x.g, x.n)
    acc = out.terms
    for d1, c1 in x.terms.items():
        for d2, c2 in y.terms.items():
            c = c1 * c2
            for ds, v in _pair_product(d1, d2).items():
                w = acc.get(ds, ZERO) + c * v
                if w:
                    acc[ds] = w
                else:
                    acc.pop(ds, None)
    return out


# -- boundary push-forward ---------------------------------------------


def xi_pushforward(graph, vertex_classes):
    """Push a tuple of per-vertex classes forward along ξ_Γ.

    vertex_classes[v] must live on (g(v), n(v)) where n(v) counts the slots
    of v in slots(v) order; markings of the vertex class correspond to those
    slots.
    """
    V = graph.num_vertices
    if len(vertex_classes) != V:
        raise StrataError("one class per vertex required")
    for v in range(V):
        vc = vertex_classes[v]
        if (vc.g, vc.n) != (graph.genera[v], graph.valence(v)):
            raise StrataError(f"class at vertex {v} lives on the wrong space")
    g, n = graph.genus(), graph.num_legs
    out = StrataElement(g, n)
    acc = out.terms
    for combo in iproduct(*[vc.terms.items() for vc in vertex_classes]):
        coeff = ONE
        for _, c in combo:
            coeff *= c
        comp = graph
        # current composite decoration state
        kap = [dict() for _ in range(V)]
        pl = [0] * n
        pe = []
        for v in range(V - 1, -1, -1):
            inner_ds = combo[v][0]
            comp, outer_map, inner_map, slot_target = comp.insert_at_vertex(
                v, inner_ds.graph)
            # remap existing state through the insertion
            kap2 = [dict() for _ in range(comp.num_vertices)]
            for u, kv in enumerate(kap):
                if u == v or not kv:
                    continue
                kap2[u if u < v else u - 1] = kv
            W = comp.num_vertices - inner_ds.graph.num_vertices
            pe2 = [[0, 0] for _ in range(comp.num_edges)]
            for e, pair in enumerate(pe):
                f, t = outer_map[(e, 0)]
                pe2[f][t] = pair[0]
                f, t = outer_map[(e, 1)]
                pe2[f][t] = pair[1]
            # place the inner decoration
            for w, kv in enumerate(inner_ds.kappa):
                kap2[W + w] = dict(kv)
            for e in range(inner_ds.graph.num_edges):
                f, t = inner_map[(e, 0)]
                pe2[f][t] = inner_ds.psi_edge[e][0]
                f, t = inner_map[(e, 1)]
                pe2[f][t] = inner_ds.psi_edge[e][1]
            for j in range(1, inner_ds.graph.num_legs + 1):
                a = inner_ds.psi_leg[j - 1]
                if not a:
                    continue
                tgt = slot_target[j]
                if tgt[0] == "leg":
                    pl[tgt[1] - 1] += a
                else:
                    pe2[tgt[1]][tgt[2]] += a
            kap = kap2
            pe = pe2
        ds = make_stratum(comp, kappa=kap, psi_leg=pl, psi_edge=pe)
        v2 = acc.get(ds, ZERO) + coeff
        if v2:
            acc[ds] = v2
        else:
            acc.pop(ds, None)
    return out


# -- forgetful push-forward --------------------------------------------


def _push_vertex(gv, n_after, kappa_v, psi_m, psi_others):
    """Push one vertex factor along the map forgetting one marking.

    kappa_v: dict r -> mult; psi_m: ψ-exponent of the forgotten marking;
    psi_others: dict slot_key -> exponent for the remaining slots.  Yields
    (coeff, kappa', psi_others') triples.
    """
    out = []
    kitems = sorted(kappa_v.items())
    # branch 1: κ factors trade powers against ψ at the forgotten marking
    ranges = [range(q + 1) for _, q in kitems]
    for js in iproduct(*ranges):
        K = psi_m + sum(r * j for (r, _), j in zip(kitems, js))
        if K == 0:
            continue
        coeff = ONE
        kap2 = {}
        for (r, q), j in zip(kitems, js):
            coeff *= comb(q, j)
            if q - j:
                kap2[r] = q - j
        if K - 1 == 0:
            coeff *= 2 * gv - 2 + n_after
        else:
            kap2[K - 1] = kap2.get(K - 1, 0) + 1
        out.append((coeff, kap2, dict(psi_others)))
    # branch 2: a diagonal class absorbs one ψ power at a remaining slot
    if psi_m == 0:
        for slot, b in psi_others.items():
            if b >= 1:
                po = dict(psi_others)
                po[slot] = b - 1
                out.append((ONE, dict(kappa_v), po))
    return out


def forgetful_pushforward(x, forget=None):
    """Push forward along the map forgetting one marking (default: the last).

    Degree drops by one; after the marking is dropped an unstable (0, 3)
    vertex is stabilized by contraction.
    """
    g, n = x.g, x.n
    m = n if forget is None else forget
    if not 1 <= m <= n:
        raise StrataError("no such marking")
    if 2 * g - 2 + (n - 1) <= 0:
        raise StrataError("target space is unstable")
    out = StrataElement(g, n - 1)
    acc = out.terms
    for ds, c in x.terms.items():
        for ds2, c2 in _push_term(ds, m):
            v = acc.get(ds2, ZERO) + c * c2
            if v:
                acc[ds2] = v
            else:
                acc.pop(ds2, None)
    return out


def _relabel_marking_maps(graph, m):
    """Drop marking m: legs list without it, markings above m shifted down."""
    legs = [v for mm, v in enumerate(graph.legs) if mm + 1 != m]
    return legs


def _push_term(ds, m):
    graph = ds.graph
    v = graph.legs[m - 1]
    gv = graph.genera[v]
    nv = graph.valence(v)
    results = []
    if 2 * gv - 2 + (nv - 1) > 0:
        legs = _relabel_marking_maps(graph, m)
        new_graph = StableGraph(graph.genera, legs, graph.edges)
        kappa_v = dict(ds.kappa[v])
        psi_m = ds.psi_leg[m - 1]
        psi_others = {}
        for mm, u in enumerate(graph.legs):
            if u == v and mm + 1 != m:
                psi_others[("leg", mm + 1)] = ds.psi_leg[mm]
        for e, (a, b) in enumerate(graph.edges):
            if a == v:
                psi_others[("he", e, 0)] = ds.psi_edge[e][0]
            if b == v:
                psi_others[("he", e, 1)] = ds.psi_edge[e][1]
        for coeff, kap2, po in _push_vertex(gv, nv - 1, kappa_v, psi_m,
                                            psi_others):
            kap = [dict(kv) for kv in ds.kappa]
            kap[v] = kap2
            pl = [0] * (graph.num_legs - 1)
            shift = 0
            for mm in range(1, graph.num_legs + 1):
                if mm == m:
                    shift = 1
                    continue
                val = ds.psi_leg[mm - 1]
                if graph.legs[mm - 1] == v:
                    val = po[("leg", mm)]
                pl[mm - 1 - shift] = val
            pe = [list(p) for p in ds.psi_edge]
            for slot, val in po.items():
                if slot[0] == "he":
                    pe[slot[1]][slot[2]] = val
            results.append((make_stratum(new_graph, kappa=kap, psi_leg=pl,
                                         psi_edge=pe), coeff))
        return results
    # unstable (0, 3) vertex: no decorations can sit at it, contract
    slots = [s for s in graph.slots(v) if s != ("leg", m)]
    assert gv == 0 and len(slots) == 2
    if slots[0][0] == "leg" and slots[1][0] == "leg":
        raise StrataError("cannot stabilize: twin markings on a vanishing vertex")
    legs = list(graph.legs)
    genera = list(graph.genera)
    if slots[0][0] == "leg" or slots[1][0] == "leg":
        leg_slot = slots[0] if slots[0][0] == "leg" else slots[1]
        he_slot = slots[1] if slots[0][0] == "leg" else slots[0]
        _, e, side = he_slot
        far_v = graph.edges[e][1 - side]
        far_psi = ds.psi_edge[e][1 - side]
        if far_v == v:
            raise StrataError("cannot stabilize a self-glued vanishing vertex")
        # marking moves to the far vertex and inherits the far ψ exponent
        legs[leg_slot[1] - 1] = far_v
        legs_after = [u for mm, u in enumerate(legs) if mm + 1 != m]
        edges = []
        pe = []
        for f, pair in enumerate(graph.edges):
            if f == e:
                continue
            edges.append(pair)
            pe.append(list(ds.psi_edge[f]))
        pl = [0] * (graph.num_legs - 1)
        shift = 0
        for mm in range(1, graph.num_legs + 1):
            if mm == m:
                shift = 1
                continue
            pl[mm - 1 - shift] = (far_psi if mm == leg_slot[1]
                                  else ds.psi_leg[mm - 1])
        deleted = _delete_vertex(genera, legs_after, edges, v)
        genera2, legs2, edges2, vmap = deleted
        kap = [dict() for _ in range(len(genera2))]
        for u, kv in enumerate(ds.kappa):
            if u != v:
                kap[vmap[u]] = dict(kv)
        edges3 = []
        pe3 = []
        for (a, b), pair in zip(edges2, pe):
            edges3.append((a, b))
            pe3.append(pair)
        return [(make_stratum(StableGraph(genera2, legs2, edges3),
                              kappa=kap, psi_leg=pl, psi_edge=pe3), ONE)]
    # two half-edge slots: splice the two edges into one
    (_, e1, s1), (_, e2, s2) = slots
    if e1 == e2:
        raise StrataError("cannot stabilize a self-glued vanishing vertex")
    far1 = graph.edges[e1][1 - s1]
    far2 = graph.edges[e2][1 - s2]
    psi1 = ds.psi_edge[e1][1 - s1]
    psi2 = ds.psi_edge[e2][1 - s2]
    if far1 == v or far2 == v:
        raise StrataError("cannot stabilize a self-glued vanishing vertex")
    legs_after = [u for mm, u in enumerate(graph.legs) if mm + 1 != m]
    pl = [a for mm, a in enumerate(ds.psi_leg) if mm + 1 != m]
    edges = []
    pe = []
    for f, pair in enumerate(graph.edges):
        if f in (e1, e2):
            continue
        edges.append(pair)
        pe.append(list(ds.psi_edge[f]))
    a, b = (far1, far2) if far1 <= far2 else (far2, far1)
    pa, pb = (psi1, psi2) if far1 <= far2 else (psi2, psi1)
    edges.append((a, b))
    pe.append([pa, pb])
    genera = list(graph.genera)
    genera2, legs2, edges2, vmap = _delete_vertex(genera, legs_after, edges, v)
    kap = [dict() for _ in range(len(genera2))]
    for u, kv in enumerate(ds.kappa):
        if u != v:
            kap[vmap[u]] = dict(kv)
    return [(make_stratum(StableGraph(genera2, legs2, edges2),
                          kappa=kap, psi_leg=pl, psi_edge=pe), ONE)]


def _delete_vertex(genera, legs, edges, v):
    """Remove isolated vertex v, shifting higher indices down."""
    vmap = [u if u < v else u - 1 for u in range(len(genera))]
    genera2 = [gg for u, gg in enumerate(genera) if u != v]
    legs2 = [vmap[u] for u in legs]
    edges2 = [tuple(sorted((vmap[a], vmap[b]))) for a, b in edges]
    return genera2, legs2, edges2, vmap


# -- kappa insertion ---------------------------------------------------


def push_psi_powers(g, n, exps):
    """p_{m*}(Πψ^{e_j}) over the extra markings, as {κ-monomial: coeff}.

    The forgetful maps are applied innermost-first; ψ factors of markings
    not yet forgotten ride along untouched (they are genuinely ψ classes of
    the intermediate spaces, and the push-forward rules treat each marking
    independently).
    """
    return dict(_push_psi_cached(g, n, tuple(exps)))


@lru_cache(maxsize=None)
def _push_psi_cached(g, n, exps):
    m = len(exps)
    if m == 0:
        return (((), ONE),)
    # state: list of (coeff, kappa dict, remaining psi exponents tuple)
    states = [(ONE, {}, exps)]
    for level in range(m, 0, -1):
        n_after = n + level - 1
        nxt = {}
        for coeff, kap, rem in states:
            psi_m = rem[-1]
            others = {("x", j): rem[j] for j in range(len(rem) - 1)}
            for c2, kap2, po in _push_vertex(g, n_after, kap, psi_m, others):
                rem2 = tuple(po[("x", j)] for j in range(len(rem) - 1))
                key = (tuple(sorted(kap2.items())), rem2)
                nxt[key] = nxt.get(key, ZERO) + coeff * c2
        states = [(c, dict(k), r) for (k, r), c in nxt.items() if c]
    out = {}
    for coeff, kap, rem in states:
        assert not rem
        key = tuple(sorted(kap.items()))
        out[key] = out.get(key, ZERO) + coeff
    return tuple(sorted(out.items()))


def kappa_of_f(f, g, n, degree_bound):
    """κ(f) = Σ_m (1/m!) p_{m*}(f(ψ)⋯f(ψ)) as a single-vertex κ-polynomial.

    f is a univariate series with zero constant and linear coefficients.
    """
    if f.coefficient((0,)) or f.coefficient((1,)):
        raise StrataError("series must vanish to second order")
    coeffs = {}
    for i in range(2, degree_bound + 2):
        c = f.coefficient((i,))
        if c:
            coeffs[i] = c
    parts = kappa_of_f_parts(tuple(sorted(coeffs.items())), (), g, n,
                             degree_bound)
    return parts[0]


def kappa_of_f_parts(plain_coeffs, marked_coeffs, g, n, degree_bound):
    """Two-channel κ(f) for f = f_plain + (marker)·f_marked.

    Coefficients are ((power, coeff), ...) with powers ≥ 2; the marker
    squares to 1, so the result splits by the parity of marked insertions.
    Returns (even_part, odd_part) as StrataElements on (g, n).
    """
    plain = dict(plain_coeffs)
    marked = dict(marked_coeffs)
    choices = ([(i, c, 0) for i, c in plain.items()]
               + [(i, c, 1) for i, c in marked.items()])
    choices.sort(key=lambda t: (t[0], t[2]))
    even = {(): ONE}
    odd = {}
    acc = [even, odd]

    def add_multiset(sel):
        # sel: list of (power, coeff, flag) with repetition counts
        total_deg = sum(i - 1 for i, _, _ in sel)
        if total_deg > degree_bound:
            return
        coeff = ONE
        mult = {}
        for item in sel:
            mult[item] = mult.get(item, 0) + 1
        for (i, c, _), q in mult.items():
            coeff *= c ** q / factorial(q)
        parity = sum(flag for _, _, flag in sel) % 2
        kpoly = push_psi_powers(g, n, tuple(i for i, _, _ in sel))
        for kmono, kc in kpoly.items():
            if _kappa_degree(kmono) > 3 * g - 3 + n:
                continue
            tgt = acc[parity]
            tgt[kmono] = tgt.get(kmono, ZERO) + coeff * kc

    def rec(idx, sel, deg):
        if idx == len(choices):
            if sel:
                add_multiset(sel)
            return
        i, c, flag = choices[idx]
        # take k >= 0 copies of this choice, then move on
        rec(idx + 1, sel, deg)
        k = 1
        while deg + k * (i - 1) <= degree_bound:
            rec(idx + 1, sel + [(i, c, flag)] * k, deg + k * (i - 1))
            k += 1

    rec(0, [], 0)
    outs = []
    for table in acc:
        el = StrataElement(g, n)
        for kmono, c in table.items():
            if not c:
                continue
            el = el + monomial_stratum(g, n, kappa=dict(kmono)).scale(c)
        outs.append(el)
    return outs[0], outs[1]


# -- pullback and restriction ------------------------------------------


def pullback_monomial(graph, kappa=None, psi=None):
    """ξ*-pullback of Πκ_r^{m}Πψ_i^{a} to M̄_Γ, expanded multilinearly.

    Returns raw items (coeff, per-vertex κ dicts, ψ-per-marking, ψ-per-edge).
    """
    items = _blank_items(graph)
    for i, a in (psi or {}).items():
        items = _bump_leg(items, i, a)
    verts = list(range(graph.num_vertices))
    for r, m in (kappa or {}).items():
        if r == 0:
            items = _scale_items(items, Fraction(2 * graph.genus() - 2
                                                 + graph.num_legs) ** m)
        else:
            items = _bump_kappa(items, verts, r, m)
    return items


def restrict(x, locus):
    """Restrict to an open locus: keep the graphs whose strata meet it."""
    if locus not in ("smooth", "compact_type", "rational_tails"):
        raise StrataError(f"unknown locus {locus!r}")
    out = {}
    for ds, c in x.terms.items():
        graph = ds.graph
        if locus == "smooth":
            keep = graph.num_edges == 0
        elif locus == "compact_type":
            keep = graph.h1() == 0
        else:
            keep = graph.h1() == 0 and any(gg == x.g for gg in graph.genera)
        if keep:
            out[ds] = c
    return StrataElement(x.g, x.n, out)


# -- serialization -----------------------------------------------------


def element_to_json(x):
    from .graphs import graph_to_json
    terms = []
    for ds in sorted(x.terms, key=lambda d: d.encode()):
        c = x.terms[ds]
        terms.append({
            "graph": graph_to_json(ds.graph),
            "kappa": [[[r, m] for r, m in kv] for kv in ds.kappa],
            "psi_legs": list(ds.psi_leg),
            "psi_edges": [list(p) for p in ds.psi_edge],
            "coeff": f"{c.numerator}/{c.denominator}",
        })
    return {"ambient": {"g": x.g, "n": x.n}, "terms": terms}


def element_from_json(payload):
    from .graphs import graph_from_json
    g = payload["ambient"]["g"]
    n = payload["ambient"]["n"]
    out = StrataElement(g, n)
    acc = out.terms
    for item in payload["terms"]:
        graph = graph_from_json(item["graph"])
        kappa = [{r: m for r, m in kv} for kv in item["kappa"]]
        num, _, den = item["coeff"].partition("/")
        c = Fraction(int(num), int(den or 1))
        ds = make_stratum(graph, kappa=kappa, psi_leg=item["psi_legs"],
                          psi_edge=item["psi_edges"])
        v = acc.get(ds, ZERO) + c
        if v:
            acc[ds] = v
        else:
            acc.pop(ds, None)
    return out


def clear_caches():
    _PAIR_CACHE.clear()
    _CANDIDATE_CACHE.clear()
    _CONTRACT_CACHE.clear()
    _push_psi_cached.cache_clear()
    basis.cache_clear()
