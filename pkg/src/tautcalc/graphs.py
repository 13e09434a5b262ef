"""Stable graphs: canonical forms, automorphism counts, enumeration, and the
structural surgeries (contraction, vertex substitution, leg gluing) behind
the strata-algebra push-forwards.

A graph stores per-vertex genus labels, a marking -> vertex table for the
legs, and edges as (u, v) pairs with u <= v; self-loops and parallel edges
are allowed.  Half-edges are addressed as (edge_index, side) with side 0 at
the first endpoint.  Stability 2g(v) - 2 + n(v) > 0 is enforced at every
vertex on construction, as is connectivity.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from math import factorial


class GraphError(ValueError):
    pass


# canonical forms depend only on the labeled structure, so they are shared
# between equal-encoding graph objects
_CANON_CACHE = {}


class StableGraph:
    __slots__ = ("genera", "legs", "edges", "_canon")

    def __init__(self, genera, legs, edges):
        self.genera = tuple(int(g) for g in genera)
        self.legs = tuple(int(v) for v in legs)
        self.edges = tuple((int(u), int(v)) for u, v in edges)
        self._canon = None
        self._validate()

    # -- bookkeeping ----------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.genera)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_legs(self):
        return len(self.legs)

    def h1(self):
        return len(self.edges) - len(self.genera) + 1

    def genus(self):
        return sum(self.genera) + self.h1()

    def valence(self, v):
        n = sum(1 for u in self.legs if u == v)
        for a, b in self.edges:
            n += (a == v) + (b == v)
        return n

    def slots(self, v):
        """Ordered incidence list at v: legs by marking, then half-edges."""
        out = [("leg", m + 1) for m, u in enumerate(self.legs) if u == v]
        for e, (a, b) in enumerate(self.edges):
            if a == v:
                out.append(("he", e, 0))
            if b == v:
                out.append(("he", e, 1))
        return out

    def _validate(self):
        V = len(self.genera)
        if V == 0:
            raise GraphError("graph needs at least one vertex")
        if any(g < 0 for g in self.genera):
            raise GraphError("negative genus label")
        if any(not 0 <= u < V for u in self.legs):
            raise GraphError("leg attached to a missing vertex")
        for u, v in self.edges:
            if not (0 <= u < V and 0 <= v < V):
                raise GraphError("edge endpoint out of range")
            if u > v:
                raise GraphError("edges must be stored with u <= v")
        for v in range(V):
            if 2 * self.genera[v] - 2 + self.valence(v) <= 0:
                raise GraphError(f"vertex {v} violates stability")
        # connectivity
        seen = {0}
        frontier = [0]
        adj = [[] for _ in range(V)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        while frontier:
            u = frontier.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        if len(seen) != V:
            raise GraphError("graph is not connected")

    def encode(self):
        return (self.genera, self.legs, self.edges)

    def encoding_bytes(self):
        """Canonical byte-string encoding (for golden files and dedup sets)."""
        g, l, e = self.canonical().encode()
        return repr((g, l, e)).encode()

    def __eq__(self, other):
        if not isinstance(other, StableGraph):
            return NotImplemented
        return self.encode() == other.encode()

    def __hash__(self):
        return hash(self.encode())

    def __repr__(self):
        return f"StableGraph(genera={self.genera}, legs={self.legs}, edges={self.edges})"

    # -- relabeling and canonical form ----------------------------------

    def relabel(self, perm):
        """Apply vertex permutation perm (perm[old] = new).

        Returns (graph, hemap) where hemap maps (edge, side) of self to
        (edge, side) of the result.
        """
        V = len(self.genera)
        genera = [0] * V
        for old, new in enumerate(perm):
            genera[new] = self.genera[old]
        legs = tuple(perm[u] for u in self.legs)
        moved = []
        for e, (a, b) in enumerate(self.edges):
            na, nb = perm[a], perm[b]
            flip = na > nb
            if flip:
                na, nb = nb, na
            moved.append(((na, nb), e, flip))
        moved.sort(key=lambda item: (item[0], item[1]))
        edges = tuple(item[0] for item in moved)
        hemap = {}
        for new_e, (_, old_e, flip) in enumerate(moved):
            hemap[(old_e, 0)] = (new_e, 1 if flip else 0)
            hemap[(old_e, 1)] = (new_e, 0 if flip else 1)
        return StableGraph(genera, legs, edges), hemap

    def _color_classes(self):
        """Vertex classes under iterative refinement; returns a list of
        lists of vertices, in a canonical class order."""
        V = len(self.genera)
        marks = [tuple(sorted(m + 1 for m, u in enumerate(self.legs) if u == v))
                 for v in range(V)]
        loops = [sum(1 for a, b in self.edges if a == b == v) for v in range(V)]
        mult = {}
        for a, b in self.edges:
            if a != b:
                mult[(a, b)] = mult.get((a, b), 0) + 1
                mult[(b, a)] = mult.get((b, a), 0) + 1
        colors = [(self.genera[v], marks[v], loops[v], self.valence(v)) for v in range(V)]
        while True:
            buckets = sorted(set(colors))
            idx = {c: i for i, c in enumerate(buckets)}
            refined = []
            for v in range(V):
                nbr = sorted((idx[colors[u]], m) for (w, u), m in mult.items() if w == v)
                refined.append((idx[colors[v]], tuple(nbr)))
            if len(set(refined)) == len(set(colors)):
                canon_key = {}
                for v in range(V):
                    canon_key.setdefault(refined[v], []).append(v)
                return [canon_key[c] for c in sorted(canon_key)]
            colors = refined

    def canonical_maps(self):
        """(canonical graph, all relabelings achieving it).

        The relabelings are (perm, hemap) pairs from self to the canonical
        graph; their count equals the number of vertex-level automorphisms.
        """
        if self._canon is not None:
            return self._canon
        cached = _CANON_CACHE.get(self.encode())
        if cached is not None:
            self._canon = cached
            return cached
        classes = self._color_classes()
        V = len(self.genera)
        best = None
        best_maps = []
        for assignment in _class_orderings(classes):
            perm = [0] * V
            for i, v in enumerate(assignment):
                perm[v] = i
            graph, hemap = self.relabel(perm)
            key = graph.encode()
            if best is None or key < best[0]:
                best = (key, graph)
                best_maps = [(tuple(perm), hemap)]
            elif key == best[0]:
                best_maps.append((tuple(perm), hemap))
        canon = best[1]
        self._canon = (canon, best_maps)
        _CANON_CACHE[self.encode()] = self._canon
        return self._canon

    def canonical(self):
        return self.canonical_maps()[0]

    def is_canonical(self):
        return self.canonical().encode() == self.encode()

    def vertex_aut_count(self):
        return len(self.canonical_maps()[1])

    def edge_sym_factor(self):
        """Parallel-bundle and loop contributions to |Aut|."""
        bundles = {}
        for a, b in self.edges:
            bundles[(a, b)] = bundles.get((a, b), 0) + 1
        out = 1
        for (a, b), m in bundles.items():
            out *= factorial(m)
            if a == b:
                out *= 2 ** m
        return out

    def aut_order(self):
        return self.vertex_aut_count() * self.edge_sym_factor()

    def is_isomorphic(self, other):
        return self.canonical().encode() == other.canonical().encode()

    def all_isomorphisms(self, other):
        """All full isomorphisms self -> other as (perm, hemap) pairs.

        hemap covers every half-edge, including the parallel-edge matchings
        and self-loop orientations; the count equals aut_order() when the
        graphs are isomorphic and 0 otherwise.
        """
        c1, maps1 = self.canonical_maps()
        c2, maps2 = other.canonical_maps()
        if c1.encode() != c2.encode():
            return []
        # one fixed map other -> canonical, inverted
        perm2, hemap2 = maps2[0]
        inv_perm2 = [0] * len(perm2)
        for old, new in enumerate(perm2):
            inv_perm2[new] = old
        inv_hemap2 = {dst: src for src, dst in hemap2.items()}
        out = []
        for perm1, hemap1 in maps1:
            perm = tuple(inv_perm2[p] for p in perm1)
            base = {src: inv_hemap2[dst] for src, dst in hemap1.items()}
            # expand over parallel-edge permutations and loop flips in other
            out.extend(_bundle_expansions(self, other, perm, base))
        return out

    # -- surgeries ------------------------------------------------------

    def contract_edges(self, contracted):
        """Contract the edge set `contracted` (indices).

        Returns (graph, vertex_map, edge_map): vertex_map maps old vertex ->
        new vertex; edge_map maps each kept old (edge, side) -> new
        (edge, side).  Loops add one to the genus of their vertex.
        """
        contracted = frozenset(contracted)
        V = len(self.genera)
        parent = list(range(V))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in contracted:
            a, b = self.edges[e]
            if a != b:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
        reps = []
        rep_index = {}
        for v in range(V):
            r = find(v)
            if r not in rep_index:
                rep_index[r] = len(reps)
                reps.append(r)
        vertex_map = [rep_index[find(v)] for v in range(V)]
        genera = [0] * len(reps)
        class_size = [0] * len(reps)
        edge_count = [0] * len(reps)
        for v in range(V):
            genera[vertex_map[v]] += self.genera[v]
            class_size[vertex_map[v]] += 1
        for e in contracted:
            edge_count[vertex_map[self.edges[e][0]]] += 1
        # each merged vertex absorbs the first Betti number of the part of
        # the contracted subgraph sitting over it
        for i in range(len(reps)):
            if edge_count[i]:
                genera[i] += edge_count[i] - class_size[i] + 1
        legs = tuple(vertex_map[u] for u in self.legs)
        new_edges = []
        edge_map = {}
        for e, (a, b) in enumerate(self.edges):
            if e in contracted:
                continue
            na, nb = vertex_map[a], vertex_map[b]
            flip = na > nb
            if flip:
                na, nb = nb, na
            idx = len(new_edges)
            new_edges.append((na, nb))
            edge_map[(e, 0)] = (idx, 1 if flip else 0)
            edge_map[(e, 1)] = (idx, 0 if flip else 1)
        return StableGraph(genera, legs, new_edges), vertex_map, edge_map

    def insert_at_vertex(self, v, inner, slot_map=None):
        """Substitute the stable graph `inner` for vertex v.

        inner must have genus equal to g(v) and as many legs as v has
        incident slots.  slot_map[j] gives the slot of self at v that
        inner's marking j+1 is glued to; it defaults to slots(v) order.

        Returns (graph, outer_hemap, inner_hemap, slot_target) where the
        hemaps track half-edges of self and of inner into the result, and
        slot_target maps each inner marking to its landing place in the
        result: ("leg", m) or ("he", e, side).
        """
        if inner.genus() != self.genera[v]:
            raise GraphError("genus mismatch in vertex substitution")
        slots = self.slots(v) if slot_map is None else list(slot_map)
        if len(slots) != inner.num_legs:
            raise GraphError("valence mismatch in vertex substitution")
        V = len(self.genera)
        W = inner.num_vertices

        def outer_vertex(u):
            # vertices keep their index below v, shift down above it
            return u if u < v else u - 1

        def inner_vertex(w):
            return V - 1 + w

        genera = [self.genera[u] for u in range(V) if u != v]
        genera.extend(inner.genera)
        slot_of_marking = {j + 1: slots[j] for j in range(len(slots))}
        marking_of_slot = {tuple(s): j + 1 for j, s in enumerate(slots)}

        legs = []
        for m, u in enumerate(self.legs):
            if u != v:
                legs.append(outer_vertex(u))
            else:
                j = marking_of_slot[("leg", m + 1)]
                legs.append(inner_vertex(inner.legs[j - 1]))
        new_edges = []
        outer_hemap = {}
        slot_target = {}
        for e, (a, b) in enumerate(self.edges):
            ends = []
            for side, u in ((0, a), (1, b)):
                if u != v:
                    ends.append(outer_vertex(u))
                else:
                    j = marking_of_slot[("he", e, side)]
                    ends.append(inner_vertex(inner.legs[j - 1]))
            na, nb = ends
            flip = na > nb
            if flip:
                na, nb = nb, na
            idx = len(new_edges)
            new_edges.append((na, nb))
            outer_hemap[(e, 0)] = (idx, 1 if flip else 0)
            outer_hemap[(e, 1)] = (idx, 0 if flip else 1)
        for j in range(1, inner.num_legs + 1):
            s = slot_of_marking[j]
            if s[0] == "leg":
                slot_target[j] = ("leg", s[1])
            else:
                _, e, side = s
                slot_target[j] = ("he",) + outer_hemap[(e, side)]
        inner_hemap = {}
        base = len(new_edges)
        for e, (a, b) in enumerate(inner.edges):
            idx = base + e
            new_edges.append((inner_vertex(a), inner_vertex(b)))
            inner_hemap[(e, 0)] = (idx, 0)
            inner_hemap[(e, 1)] = (idx, 1)
        graph = StableGraph(genera, legs, new_edges)
        return graph, outer_hemap, inner_hemap, slot_target

    def glue_legs(self, leg_a, leg_b):
        """Join the legs with markings leg_a and leg_b into a new edge.

        Remaining markings are renumbered in order; returns
        (graph, marking_map, new_edge_index).
        """
        if leg_a == leg_b:
            raise GraphError("cannot glue a leg to itself")
        va = self.legs[leg_a - 1]
        vb = self.legs[leg_b - 1]
        legs = []
        marking_map = {}
        for m, u in enumerate(self.legs):
            if m + 1 in (leg_a, leg_b):
                continue
            marking_map[m + 1] = len(legs) + 1
            legs.append(u)
        a, b = min(va, vb), max(va, vb)
        edges = list(self.edges) + [(a, b)]
        graph = StableGraph(self.genera, legs, edges)
        return graph, marking_map, len(edges) - 1


def _class_orderings(classes):
    """All vertex orderings that respect the color classes."""
    if not classes:
        yield []
        return
    first, rest = classes[0], classes[1:]
    for perm in permutations(first):
        for tail in _class_orderings(rest):
            yield list(perm) + tail


def _bundle_expansions(src, dst, perm, base):
    """Expand a vertex-level iso map into all full half-edge isomorphisms.

    base maps each (edge, side) of src to some (edge, side) of dst landing in
    the right bundle; parallel edges of dst may be permuted within their
    bundle and each matched self-loop's orientation may flip.
    """
    bundles_dst = {}
    for e, (a, b) in enumerate(dst.edges):
        bundles_dst.setdefault((a, b), []).append(e)
    bundles_src = {}
    for e, (a, b) in enumerate(src.edges):
        bundles_src.setdefault((a, b), []).append(e)

    per_bundle = []
    for key, src_edges in sorted(bundles_src.items()):
        a, b = key
        ka, kb = perm[a], perm[b]
        if ka > kb:
            ka, kb = kb, ka
        dst_edges = bundles_dst.get((ka, kb), [])
        if len(dst_edges) != len(src_edges):
            return
        is_loop = a == b
        options = []
        for matching in permutations(dst_edges):
            if is_loop:
                flip_patterns = _bit_patterns(len(src_edges))
            else:
                flip_patterns = [(False,) * len(src_edges)]
            for flips in flip_patterns:
                options.append((tuple(src_edges), matching, flips))
        per_bundle.append(options)

    def rec(i, acc):
        if i == len(per_bundle):
            hemap = {}
            for src_edges, matching, flips in acc:
                for pos, e in enumerate(src_edges):
                    f = matching[pos]
                    s0, s1 = base[(e, 0)][1], base[(e, 1)][1]
                    if flips[pos]:
                        s0, s1 = s1, s0
                    hemap[(e, 0)] = (f, s0)
                    hemap[(e, 1)] = (f, s1)
            yield (perm, hemap)
            return
        for opt in per_bundle[i]:
            yield from rec(i + 1, acc + [opt])

    yield from rec(0, [])


def _bit_patterns(k):
    out = []
    for bits in range(2 ** k):
        out.append(tuple(bool(bits >> i & 1) for i in range(k)))
    return out


def trivial_graph(g, n):
    """The one-vertex graph with no edges."""
    if 2 * g - 2 + n <= 0:
        raise GraphError(f"(g, n) = ({g}, {n}) is not stable")
    return StableGraph((g,), (0,) * n, ())


def one_edge_degenerations(graph):
    """All graphs obtained from `graph` by a single edge degeneration:
    either dropping a vertex genus and adding a self-loop, or splitting a
    vertex in two along a new edge.  Raw (non-canonical) graphs."""
    out = []
    V = graph.num_vertices
    for v in range(V):
        if graph.genera[v] >= 1:
            genera = list(graph.genera)
            genera[v] -= 1
            edges = list(graph.edges) + [(v, v)]
            out.append(StableGraph(genera, graph.legs, edges))
    for v in range(V):
        items = graph.slots(v)
        gv = graph.genera[v]
        for g1 in range(gv + 1):
            g2 = gv - g1
            for bits in range(2 ** len(items)):
                moved = [items[i] for i in range(len(items)) if bits >> i & 1]
                genera = list(graph.genera) + [g2]
                genera[v] = g1
                w = V
                legs = list(graph.legs)
                edges = [list(e) for e in graph.edges]
                for item in moved:
                    if item[0] == "leg":
                        legs[item[1] - 1] = w
                    else:
                        _, e, side = item
                        edges[e][side] = w
                edges = [tuple(sorted(e)) for e in edges]
                edges.append((v, w))
                try:
                    out.append(StableGraph(genera, legs, edges))
                except GraphError:
                    continue
    return out


@lru_cache(maxsize=None)
def enumerate_stable_graphs(g, n, max_edges=None):
    """All stable graphs of genus g with n legs, canonical, one per iso
    class, sorted by (edge count, encoding).  max_edges caps the codimension
    (defaults to the full 3g - 3 + n)."""
    if 2 * g - 2 + n <= 0:
        raise GraphError(f"(g, n) = ({g}, {n}) is not stable")
    cap = 3 * g - 3 + n
    if max_edges is not None:
        cap = min(cap, max_edges)
    seen = {}
    level = [trivial_graph(g, n).canonical()]
    seen[level[0].encode()] = level[0]
    depth = 0
    while level and depth < cap:
        depth += 1
        nxt = {}
        for graph in level:
            for raw in one_edge_degenerations(graph):
                canon = raw.canonical()
                key = canon.encode()
                if key not in seen and key not in nxt:
                    nxt[key] = canon
        seen.update(nxt)
        level = list(nxt.values())
    return tuple(sorted(seen.values(), key=lambda gr: (gr.num_edges, gr.encode())))


def graph_to_json(graph):
    return {
        "vertices": [{"genus": g} for g in graph.genera],
        "edges": [[a, b] for a, b in graph.edges],
        "legs": [{"vertex": v, "marking": m + 1} for m, v in enumerate(graph.legs)],
    }


def graph_from_json(payload):
    genera = [v["genus"] for v in payload["vertices"]]
    legs = [0] * len(payload["legs"])
    for item in payload["legs"]:
        legs[item["marking"] - 1] = item["vertex"]
    edges = [tuple(e) for e in payload["edges"]]
    return StableGraph(genera, legs, edges)
