"""Cycle detection, exact SSSP, and exact diameter for pseudotrees.

Cycle detection builds the virtual rings of the tour without dropping the
closing edge: a tree yields one ring, a unicyclic graph two, and exactly
the cycle nodes see two different ring maxima.  SSSP reduces to tree SSSP
inside the hanging trees plus cycle SSSP among the cycle nodes; the
diameter folds tree heights into the cycle machinery's m-values.
"""

from __future__ import annotations

from . import primitives as P
from .graphs import classify
from .line_cycle import cycle_both_sssp, cycle_ecc_machinery, low_sentinel
from .netsim import ContractViolation, run
from .tree_algos import tree_diameter_gen

PSEUDOTREEISH = ("pseudotree", "tree", "path", "cycle")


def _check(graph, check):
    if check:
        cls = classify(graph).name
        if cls not in PSEUDOTREEISH:
            raise ContractViolation(f"expected a pseudotree, got {cls}")


def detect_cycle_gen(ctx):
    """Returns (has_cycle, am_cycle_node, cycle_nbrs) where cycle_nbrs are
    my incident cycle edges as (id, w) pairs."""
    reg = P.Registry(P.slotcap(ctx.n))
    sel = [u for u, _ in ctx.neighbors]
    selw = [w for _, w in ctx.neighbors]
    K = P.log2ceil(2 * ctx.n)
    yield from P.build_tour(ctx, reg, sel, selw, arb=2, rooted=False)
    yield from P.intro_pass(ctx, reg, K)
    ids = {m.slot: (m.owner, m.idx) for m in reg.members.values()}
    win = yield from P.ring_reduce(ctx, reg, P.ring_reduce_rounds(2 * ctx.n),
                                   ids, P.op_max)
    mine = yield from P.report_to_owners(ctx, reg, win)
    maxima = set(mine.values())
    am_cycle = 1 if len(maxima) > 1 else 0
    got = yield from P.global_reduce(ctx, (am_cycle,), P.op_max)
    has_cycle = bool(got[0])
    # cycle edges join two cycle nodes (unique cycle: adjacency suffices)
    for u in sel:
        ctx.send_local(u, (40, am_cycle))
    inbox = yield
    flags = {}
    for src, body in inbox:
        if body[0] == 40:
            flags[src] = body[1]
    cycle_nbrs = [(u, w) for u, w in ctx.neighbors
                  if am_cycle and flags.get(u)] if has_cycle else []
    if am_cycle and len(cycle_nbrs) != 2:
        raise ContractViolation(
            f"cycle node {ctx.node} sees {len(cycle_nbrs)} cycle edges")
    return has_cycle, bool(am_cycle), cycle_nbrs


def detect_cycle(graph, config=None, check=True):
    """({node: is_cycle_node}, has_cycle, Metrics)."""
    if check and graph.m > graph.n:
        raise ContractViolation("not a pseudotree: more than n edges")

    def prog(ctx):
        has_cycle, am, _ = yield from detect_cycle_gen(ctx)
        return has_cycle, am

    outputs, metrics = run(graph, prog, config)
    has = {o[0] for o in outputs.values()}
    assert len(has) == 1
    return {v: o[1] for v, o in outputs.items()}, has.pop(), metrics


def _forest_components(ctx, tree_nbrs, am_cycle):
    """Component machinery over the forest left after removing cycle edges:
    every node learns its component's cycle node (the unique one)."""
    sel = [u for u, _ in tree_nbrs]
    selw = [w for _, w in tree_nbrs]
    comp = yield from P.agg_component_gen(
        ctx, ctx.node if am_cycle else -1, "MAX", sel, selw)
    if comp < 0:
        raise ContractViolation(f"node {ctx.node}: component without cycle node")
    return comp


def pseudotree_sssp_gen(ctx, source):
    has_cycle, am_cycle, cyc_nbrs = yield from detect_cycle_gen(ctx)
    if not has_cycle:
        d = yield from _tree_like_sssp(ctx, source)
        return d
    me = ctx.node
    cyc_ids = {u for u, _ in cyc_nbrs}
    tree_nbrs = [(u, w) for u, w in ctx.neighbors if u not in cyc_ids]
    anchor = yield from _forest_components(ctx, tree_nbrs, am_cycle)
    # does my component contain the source?
    src_anchor = yield from P.global_reduce(
        ctx, (anchor if me == source else -1,), P.op_max)
    in_src_comp = anchor == src_anchor[0]
    reg = P.Registry(P.slotcap(ctx.n))
    sel = [u for u, _ in tree_nbrs]
    selw = [w for _, w in tree_nbrs]
    # tree pass 1: the source's component runs from the source, others from
    # their cycle node (their results are discarded)
    root1 = source if in_src_comp else anchor
    run1 = yield from P.tree_machinery(ctx, reg, sel, selw,
                                       is_root=(me == root1))
    d_here = run1.dist if run1.dist is not None else 0
    # broadcast d(source, anchor-of-source-component)
    d_anchor = yield from P.global_reduce(
        ctx, ((d_here, me) if (in_src_comp and am_cycle) else (-1, -1)), P.op_max)
    seed_root, seed_val = d_anchor[1], d_anchor[0]
    # cycle SSSP from the source component's anchor, seeded
    lnext = None
    if me == seed_root:
        lnext = min(u for u, _ in cyc_nbrs)
    reg2 = P.Registry(P.slotcap(ctx.n))
    _, _, gl, gr = yield from cycle_both_sssp(
        ctx, reg2, cyc_nbrs if am_cycle else [], seed_root, lnext)
    d_cycle = seed_val + min(gl[0], gr[0]) if am_cycle else None
    # tree pass 2 from every cycle node, seeded with its distance
    reg3 = P.Registry(P.slotcap(ctx.n))
    run2 = yield from P.tree_machinery(ctx, reg3, sel, selw,
                                       is_root=am_cycle,
                                       seed=d_cycle if am_cycle else 0)
    if in_src_comp:
        return d_here
    if am_cycle:
        return d_cycle
    return run2.dist


def _tree_like_sssp(ctx, source):
    reg = P.Registry(P.slotcap(ctx.n))
    sel = [u for u, _ in ctx.neighbors]
    selw = [w for _, w in ctx.neighbors]
    run_ = yield from P.tree_machinery(ctx, reg, sel, selw,
                                       is_root=(ctx.node == source))
    return run_.dist


def pseudotree_sssp(graph, source: int, config=None, check=True):
    """Exact distances from source on a pseudotree; ({v: d}, Metrics)."""
    _check(graph, check)
    return run(graph, lambda ctx: pseudotree_sssp_gen(ctx, source), config)


def pseudotree_diameter_gen(ctx):
    has_cycle, am_cycle, cyc_nbrs = yield from detect_cycle_gen(ctx)
    if not has_cycle:
        d = yield from tree_diameter_gen(ctx)
        return d
    me = ctx.node
    cyc_ids = {u for u, _ in cyc_nbrs}
    tree_nbrs = [(u, w) for u, w in ctx.neighbors if u not in cyc_ids]
    sel = [u for u, _ in tree_nbrs]
    selw = [w for _, w in tree_nbrs]
    anchor = yield from _forest_components(ctx, tree_nbrs, am_cycle)
    # heights: SSSP from each component's cycle node, then component max
    reg = P.Registry(P.slotcap(ctx.n))
    run1 = yield from P.tree_machinery(ctx, reg, sel, selw, is_root=am_cycle)
    d1 = run1.dist if run1.dist is not None else 0
    h = yield from P.agg_component_gen(ctx, d1, "MAX", sel, selw)
    # tree diameters: farthest node from the cycle node, then SSSP from it
    far = yield from P.agg_component_gen(ctx, d1 * ctx.n + me, "MAX", sel, selw)
    w_star = far % ctx.n
    reg2 = P.Registry(P.slotcap(ctx.n))
    run2 = yield from P.tree_machinery(ctx, reg2, sel, selw,
                                       is_root=(me == w_star))
    d2 = run2.dist if run2.dist is not None else 0
    d_tree = yield from P.agg_component_gen(ctx, d2, "MAX", sel, selw)
    # eccentricities of cycle nodes with heights folded in
    state = yield from cycle_ecc_machinery(
        ctx, cyc_nbrs if am_cycle else [], h if am_cycle else 0,
        participating=am_cycle)
    LOW = low_sentinel(ctx)
    cand = LOW
    if am_cycle:
        cand = d_tree
        if state.ecc > h:
            cand = max(cand, state.ecc + h)
    best = yield from P.global_reduce(ctx, (cand,), P.op_max)
    return best[0]


def pseudotree_diameter(graph, config=None, check=True):
    """Exact diameter of a pseudotree; (D, Metrics)."""
    _check(graph, check)
    outputs, metrics = run(graph, pseudotree_diameter_gen, config)
    vals = set(outputs.values())
    assert len(vals) == 1
    return vals.pop(), metrics
