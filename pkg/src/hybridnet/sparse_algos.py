"""The sparse-graph pipeline: deterministic Boruvka MST, degree-3
virtualization, balanced decomposition tree, distance graph, nearest
shortcut nodes, min-plus APSP among shortcut nodes, and the 3-approximate
SSSP/diameter built from them.
"""

from __future__ import annotations

from . import primitives as P
from .graphs import classify
from .netsim import ContractViolation, run


def _infw(ctx):
    return 4 * ctx.n * ctx.weight_cap + 4


# ---------------------------------------------------------------------------
# Deterministic Boruvka over supernodes.  Each phase: every component picks
# its lightest outgoing edge (ties by (w, min id, max id)), the chosen edges
# join the forest (reciprocal picks collapse to one edge), and components
# relabel by their minimum id.  Aggregations run over the current forest's
# Euler-tour rings; log n phases suffice, with a global early-exit check.
# ---------------------------------------------------------------------------

def boruvka_gen(ctx, use_weights=True, orient=None):
    """Returns (my tree edges as a sorted tuple of neighbour ids, label).

    orient: optional precomputed edge orientation ({nbr: edge_out_bool})
    reused by every tour build.  Each phase runs two rooted aggregations:
    the component's lightest outgoing edge from the label holder, and the
    min-id relabel from the unique reciprocal pick's smaller endpoint.
    """
    me = ctx.node
    n = ctx.n
    INF = ctx.weight_cap + 1  # above any real edge weight, narrow on the wire
    label = me
    chosen = set()
    phases = P.log2ceil(n) + 1
    for _ in range(phases):
        for u, _w in ctx.neighbors:
            ctx.send_local(u, (50, label))
        inbox = yield
        nbr_label = {}
        for src, body in inbox:
            if body[0] == 50:
                nbr_label[src] = body[1]
        cand = (INF, n, n)
        for u, w in ctx.neighbors:
            if nbr_label.get(u) != label:
                key = (w if use_weights else 1, min(me, u), max(me, u))
                if key < cand:
                    cand = key
        sel = sorted(chosen)
        selw = [1] * len(sel)
        ori = [orient[u] for u in sel] if orient is not None else None
        best = yield from P.agg_component_gen(ctx, cand, "MIN", sel, selw,
                                              is_root=(me == label),
                                              reuse_orientation=ori)
        picked = None
        if best[0] < INF:
            _w, a, b = best
            if me == a or me == b:
                other = b if me == a else a
                if any(u == other for u, _ in ctx.neighbors) and other not in chosen:
                    chosen.add(other)
                    picked = other
        if picked is not None:
            ctx.send_local(picked, (51,))
        inbox = yield
        reciprocal_with = None
        for src, body in inbox:
            if body[0] == 51:
                if src == picked:
                    reciprocal_with = src
                elif src not in chosen:
                    chosen.add(src)
        is_merge_root = reciprocal_with is not None and me < reciprocal_with
        sel = sorted(chosen)
        selw = [1] * len(sel)
        ori = [orient[u] for u in sel] if orient is not None else None
        newlab = yield from P.agg_component_gen(ctx, (label,), "MIN", sel, selw,
                                                is_root=is_merge_root,
                                                reuse_orientation=ori)
        label = newlab[0]
        done = yield from P.global_reduce(
            ctx, (0 if best[0] < INF else 1,), P.op_min)
        if done[0] == 1:
            break
    return tuple(sorted(chosen)), label


def boruvka_rounds_estimate(n):
    return (P.log2ceil(n) + 1) * (2 * P.agg_rounds(n) + P.global_reduce_rounds(n) + 2)


def mst(graph, config=None):
    """Exact MST under the (weight, endpoint-pair) tie-break.
    Returns (edge set, Metrics)."""

    def prog(ctx):
        edges, label = yield from boruvka_gen(ctx)
        return edges

    outputs, metrics = run(graph, prog, config)
    edges = set()
    for v, nbrs in outputs.items():
        for u in nbrs:
            edges.add((min(u, v), max(u, v)))
    return edges, metrics


def oracle_kruskal(graph):
    """Sequential reference MST with the same tie-break."""
    parent = list(range(graph.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = sorted((w, u, v) for (u, v), w in graph.edges.items())
    out = set()
    for w, u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            out.add((u, v))
    return out
