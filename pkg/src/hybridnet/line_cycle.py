"""Exact SSSP and diameter for path graphs and cycle graphs.

Path graphs use pointer-jumping shortcuts and a min-broadcast from the
source.  Cycles run the path algorithm along both traversal directions.
The cycle diameter assigns every node a budget, sorts budgets over the
odd-even mergesort network, and lets each far-half node read its farthest
nodes off the nearest preceding other-side record in sorted order; two
executions plus one plain SSSP cover every node.

The same machinery computes pseudotree eccentricities: callers inject
per-node tree heights, which flow into the m-value recurrence and the
alpha/beta combinations; plain cycles use height zero everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import primitives as P
from .graphs import classify
from .netsim import ContractViolation, run

BIG = 1 << 40


def low_sentinel(ctx) -> int:
    # narrow stand-in for minus infinity: below any height/m-value but
    # within the payload budget
    return -(4 * ctx.n * ctx.weight_cap + 4)


@dataclass
class CycleState:
    d_left: int
    d_right: int
    budget: int | None
    side_a: bool | None
    v_left: int | None
    v_right: int | None
    ecc: int | None


def _wrong_class(got, want):
    raise ContractViolation(f"expected a {want} graph, got {got}")


# ---------------------------------------------------------------------------
# Chain machinery over the raw nodes of a path / cut cycle
# ---------------------------------------------------------------------------

def chain_member(ctx, reg, nbrs):
    """Allocate this node's member over the given (<= 2) incident edges.
    Every node allocates in lockstep, so slot numbers agree globally."""
    if len(nbrs) > 2:
        raise ContractViolation(f"node {ctx.node} has chain degree {len(nbrs)}")
    m = reg.alloc(ctx.node, 0)
    cap = reg.cap
    ends, hops, wts = [None, None], [None, None], [None, None]
    for k, (u, w) in enumerate(nbrs):
        ends[k] = u * cap + m.slot
        hops[k] = 1
        wts[k] = w
    m.ends = [[ends[0]], [ends[1]]]
    m.hops = [[hops[0]], [hops[1]]]
    m.data["ew"] = wts
    return m


def chain_sssp(ctx, group, m, K, is_source):
    """Shortcuts + weighted scan + min-broadcast from the source.  Returns
    (dist, hops); sets m.pos (hop position) and m.fwd (side away from the
    source)."""
    yield from P.intro_pass(ctx, group, K)
    spans = yield from P.scan_pass(
        ctx, group, K,
        init=lambda mm, s: ((mm.data["ew"][s], 1)
                            if mm.data["ew"][s] is not None else None),
        combine=P.op_sum)
    holders = {m.slot: (0, 0)} if is_source else {}
    vals = yield from P.bcast_pass(ctx, group, K, spans, holders,
                                   minimize=True, sides=(0, 1),
                                   record_side=True)
    got = vals.get(m.slot)
    if got is None:
        if is_source or m.ends[0][0] is not None or m.ends[1][0] is not None:
            raise ContractViolation(f"node {ctx.node} unreached on the chain")
        return None
    m.pos = got[1]
    if is_source:
        m.fwd = 0 if m.data["ew"][0] is not None else 1
    m.data["spans_w"] = spans
    return got


def chain_rounds(n: int) -> int:
    K = P.intro_rounds(n)
    return 3 * K + 1


# ---------------------------------------------------------------------------
# Path graphs
# ---------------------------------------------------------------------------

def _path_sssp_gen(ctx, source):
    reg = P.Registry(P.slotcap(ctx.n))
    K = P.intro_rounds(ctx.n)
    m = chain_member(ctx, reg, ctx.neighbors)
    got = yield from chain_sssp(ctx, reg, m, K, ctx.node == source)
    return got[0]


def path_sssp(graph, source: int, config=None, check=True):
    """Exact distances from source on a path graph; ({v: d}, Metrics)."""
    if check and classify(graph).name != "path":
        _wrong_class(classify(graph).name, "path")
    return run(graph, lambda ctx: _path_sssp_gen(ctx, source), config)


def path_diameter(graph, config=None, check=True):
    """Exact diameter of a path graph, known to every node; (D, Metrics)."""
    if check and classify(graph).name != "path":
        _wrong_class(classify(graph).name, "path")

    def prog(ctx):
        endpoint = len(ctx.neighbors) == 1
        src = yield from P.global_reduce(
            ctx, (ctx.node if endpoint else -1,), P.op_max)
        d = yield from _path_sssp_gen(ctx, src[0])
        far = yield from P.global_reduce(
            ctx, (d if (endpoint and ctx.node != src[0]) else -1,), P.op_max)
        return far[0]

    outputs, metrics = run(graph, prog, config)
    vals = set(outputs.values())
    assert len(vals) == 1
    return vals.pop(), metrics


# ---------------------------------------------------------------------------
# Cycle machinery, parameterized over a participant edge set so pseudotree
# and cactus code can run it on embedded cycles as well.  Here participants
# are all nodes and the edges are the graph's.
# ---------------------------------------------------------------------------

def cycle_both_sssp(ctx, reg, nbrs, source, lnext):
    """Left/right traversal distances from source over the 2-regular edge
    set nbrs.  The left traversal continues at lnext (source's choice).
    Returns (member_L, group_L, (d_l, pos_l), (d_r, pos_r))."""
    me = ctx.node
    rnext = None
    if me == source:
        ids = [u for u, _ in nbrs]
        rnext = ids[0] if ids[1] == lnext else ids[1]
        ctx.send_local(lnext, (20, 1))
        ctx.send_local(rnext, (20, 0))
    inbox = yield
    cut_l = cut_r = False
    srcnbr = None
    for src, body in inbox:
        if body[0] == 20:
            srcnbr = src
            if body[1] == 1:
                cut_r = True   # I am lnext: the right run drops my source edge
            else:
                cut_l = True
    K = P.intro_rounds(ctx.n)
    skip_l = rnext if me == source else (srcnbr if cut_l else None)
    skip_r = lnext if me == source else (srcnbr if cut_r else None)
    mL = chain_member(ctx, reg, [e for e in nbrs if e[0] != skip_l])
    gL = reg.subset([mL])
    got_l = yield from chain_sssp(ctx, gL, mL, K, me == source)
    mR = chain_member(ctx, reg, [e for e in nbrs if e[0] != skip_r])
    gR = reg.subset([mR])
    got_r = yield from chain_sssp(ctx, gR, mR, K, me == source)
    return mL, gL, got_l, got_r


def _cycle_sssp_gen(ctx, source):
    reg = P.Registry(P.slotcap(ctx.n))
    lnext = None
    if ctx.node == source:
        lnext = min(u for u, _ in ctx.neighbors)
    _, _, gl, gr = yield from cycle_both_sssp(ctx, reg, ctx.neighbors, source, lnext)
    return {"d": min(gl[0], gr[0]), "d_l": gl[0], "d_r": gr[0]}


def cycle_sssp(graph, source: int, config=None, check=True):
    """Exact distances from source on a cycle; ({v: d}, Metrics)."""
    if check and classify(graph).name != "cycle":
        _wrong_class(classify(graph).name, "cycle")
    outputs, metrics = run(graph, lambda ctx: _cycle_sssp_gen(ctx, source), config)
    return {v: o["d"] for v, o in outputs.items()}, metrics


def m_value_recurrence(ctx, group, m, K, my_h, span_side):
    """Doubling recurrence for the height maxima: after round i the value
    folds h(u) - (traversal distance to u) over all u within 2^i - 1 hops
    in the walk direction.  span_side names the member side whose spans
    walk that direction (values travel against it).  K+1 rounds."""
    x = my_h
    cap = group.cap
    for lvl in range(K + 1):
        tgt = m.end(span_side, lvl) if span_side is not None else None
        sp = None
        if span_side is not None:
            sps = m.data["m_spans"][span_side]
            sp = sps[lvl] if lvl < len(sps) else None
        if tgt is not None and sp is not None:
            ctx.send_global(tgt // cap,
                            (P.mkkey(0, tgt % cap, m.slot, cap), x - sp[0]))
        inbox = yield
        for src, body in inbox:
            if body[1] > x:
                x = body[1]
    return x


# ---------------------------------------------------------------------------
# Farthest nodes and eccentricities.
#
# cycle_ecc_machinery runs on the whole graph when it is a cycle; pseudotree
# and cactus code reuse it with a participant subset (the cycle nodes) and
# injected tree heights.  Non-participants idle through the fixed schedule.
# ---------------------------------------------------------------------------

def cycle_ecc_machinery(ctx, nbrs, my_h, participating=True):
    """Returns a CycleState; fields stay None for non-participants.

    nbrs: the two incident cycle edges as (id, weight) pairs; my_h: height
    folded into the m-values (0 on plain cycles)."""
    me = ctx.node
    n = ctx.n
    reg = P.Registry(P.slotcap(n))
    K = P.intro_rounds(n)
    part = participating

    lead = yield from P.global_reduce(ctx, (me if part else -1,), P.op_max)
    leader = lead[0]

    # base pass fixes the left-traversal direction: the leader continues at
    # its smaller-id cycle neighbour
    lnext = min(u for u, _ in nbrs) if me == leader else None
    mL, gL, gl, gr = yield from cycle_both_sssp(
        ctx, reg, nbrs if part else [], leader, lnext)
    d_l, pos_l = gl if part else (None, None)
    d_r = gr[0] if part else None

    # successor along L (unique d_l continuation; the leader knows its own;
    # the last node wraps to the leader over the cut edge)
    nb = yield from P.neighbor_exchange(ctx, gL, {mL.slot: (d_l,)} if part else {})
    succ_id = succ_w = None
    if part:
        if me == leader:
            succ_id = lnext
            succ_w = dict(nbrs)[lnext]
        else:
            for k in (0, 1):
                if nb[mL.slot][k] is not None and mL.data["ew"][k] is not None:
                    u = mL.end(k, 0) // reg.cap
                    w = mL.data["ew"][k]
                    if nb[mL.slot][k][0] == d_l + w:
                        succ_id, succ_w = u, w
            if succ_id is None:
                for u, w in nbrs:
                    if u == leader:
                        succ_id, succ_w = u, w
            if succ_id is None:
                raise ContractViolation(f"node {me}: no left successor")

    # ring size and total cycle weight, learned from the last node of L
    is_last = part and me != leader and succ_id == leader
    mtot = yield from P.global_reduce(
        ctx, (pos_l + 1 if is_last else -1, d_l + succ_w if is_last else -1),
        P.op_max)
    ring_n, W = mtot
    half = W // 2 if part else None

    # m-values over the uncut ring
    mU = chain_member(ctx, reg, nbrs if part else [])
    gU = reg.subset([mU])
    yield from P.intro_pass(ctx, gU, K)
    spans = yield from P.scan_pass(
        ctx, gU, K,
        init=lambda mm, s: ((mm.data["ew"][s],)
                            if mm.data["ew"][s] is not None else None),
        combine=P.op_sum)
    mU.data["m_spans"] = spans[mU.slot]
    fwd_side = None
    if part:
        cap = reg.cap
        for k in (0, 1):
            if mU.end(k, 0) is not None and mU.end(k, 0) // cap == succ_id:
                fwd_side = k
    LOW = low_sentinel(ctx)
    m_l = yield from m_value_recurrence(
        ctx, gU, mU, K, my_h if part else LOW,
        (1 - fwd_side) if fwd_side is not None else None)
    m_r = yield from m_value_recurrence(
        ctx, gU, mU, K, my_h if part else LOW,
        fwd_side if fwd_side is not None else None)
    # everyone learns m_l of its successor (one local request/reply)
    succ_ml = None
    if part:
        ctx.send_local(succ_id, (30, 0))
    inbox = yield
    for src, body in inbox:
        if body[0] == 30:
            ctx.send_local(src, (31, m_l))
    inbox = yield
    for src, body in inbox:
        if body[0] == 31 and src == succ_id:
            succ_ml = body[1]

    state = CycleState(d_l, d_r, None, None, None, None, None)
    pass_ctx = dict(me=me, succ_id=succ_id, succ_w=succ_w, m_l=m_l, m_r=m_r,
                    succ_ml=succ_ml, half=half, W=W, ring_n=ring_n)

    first = yield from _ecc_pass(ctx, reg, nbrs if part else [], leader,
                                 None, mL, gL, state, part, True,
                                 base=(d_l, d_r), pc=pass_ctx)
    yield from _ecc_pass(ctx, reg, nbrs if part else [], first[0],
                         None, mL, gL, state, part, True, pc=pass_ctx)
    yield from _ecc_pass(ctx, reg, nbrs if part else [], first[1],
                         None, mL, gL, state, part, False, pc=pass_ctx)
    if part and state.ecc is None:
        raise ContractViolation(f"node {me}: farthest nodes incomplete")
    return state


def _ecc_pass(ctx, reg, nbrs, source, _unused, wire_m, wire_g,
              state, part, run_sort, base=None, pc=None):
    """One farthest-node execution from source.  Wires (positions, chain
    tables) come from the machinery's base chain.  Returns this pass's
    (s_left, s_right)."""
    n = ctx.n
    me = pc["me"]
    K = P.intro_rounds(n)
    W, half, ring_n = pc["W"], pc["half"], pc["ring_n"]
    succ_id, succ_w = pc["succ_id"], pc["succ_w"]
    m_l, m_r, succ_ml = pc["m_l"], pc["m_r"], pc["succ_ml"]

    if base is not None:
        d_l, d_r = base
    else:
        lnext = succ_id if me == source else None
        _, _, gl2, gr2 = yield from cycle_both_sssp(ctx, reg, nbrs, source, lnext)
        d_l = gl2[0] if part else None
        d_r = gr2[0] if part else None

    LOW = low_sentinel(ctx)
    elig = d_l if part and (d_l <= half or me == source) else -1
    best = yield from P.global_reduce(ctx, (elig, me), P.op_max)
    dl_sl, s_left = best
    win = me == s_left
    info = yield from P.global_reduce(
        ctx, (succ_id if win else -1, succ_w if win else -1,
              m_r if win else LOW), P.op_max)
    s_right, w_cut, mr_sl = info
    info2 = yield from P.global_reduce(
        ctx, (m_l if me == s_right else LOW,), P.op_max)
    ml_sr = info2[0]
    if me == source and part and state.ecc is None:
        dr_sr = W - dl_sl - w_cut
        state.ecc = max(dl_sl + mr_sl, dr_sr + ml_sr)
        state.v_left, state.v_right = s_left, s_right

    if not run_sort:
        return (s_left, s_right)

    in_a = part and me != source and d_l > half
    if part:
        budget = (half - d_r) if in_a else d_l
        if in_a and budget < 0:
            raise ContractViolation(f"negative budget at node {me}")
        if state.budget is None:
            state.budget, state.side_a = budget, in_a
    else:
        budget = 0

    key = (budget * 2 + (1 if in_a else 0)) if part else 8 * ctx.n * ctx.weight_cap + 8
    recs = yield from P.sort_pass(ctx, wire_g, ring_n,
                                  {wire_m.slot: (key, me)} if part else {})
    rec = recs.get(wire_m.slot) if part else None
    owner = rec[1] if rec else None
    if part:
        ctx.send_global(owner, (32, 0))
    inbox = yield
    asks = [s for s, body in inbox if body[0] == 32]
    # packed alpha/beta records: zero means "not a B record"
    off_a = 2 * n * ctx.weight_cap + 1
    off_b = 3 * n * ctx.weight_cap + 1
    alpha = (d_l + m_r + off_a) if part and not in_a else 0
    beta = (-d_l - succ_w + succ_ml + off_b) if part and not in_a else 0
    ids = (me * n + succ_id) if part and not in_a else 0
    for t in asks:
        ctx.send_global(t, (33, alpha, ids))
    inbox = yield
    o_alpha = o_ids = None
    for src, body in inbox:
        if body[0] == 33 and src == owner:
            o_alpha, o_ids = body[1], body[2]
    for t in asks:
        ctx.send_global(t, (34, beta))
    inbox = yield
    o_beta = None
    for src, body in inbox:
        if body[0] == 34 and src == owner:
            o_beta = body[1]

    pick = lambda l, r: r if r[0] else l
    pa = yield from P.prefix_pass(
        ctx, wire_g, ring_n,
        {wire_m.slot: (o_alpha or 0, o_ids or 0)} if part else {}, pick, K + 1)
    pb = yield from P.prefix_pass(
        ctx, wire_g, ring_n,
        {wire_m.slot: (o_beta or 0,)} if part else {}, pick, K + 1)
    if part:
        fa, fb = pa[wire_m.slot], pb[wire_m.slot]
        if fa[0]:
            ctx.send_global(owner, (35, fa[0], fa[1]))
    inbox = yield
    got_a = None
    for src, body in inbox:
        if body[0] == 35:
            got_a = (body[1], body[2])
    if part and fb[0]:
        ctx.send_global(owner, (36, fb[0]))
    inbox = yield
    got_b = None
    for src, body in inbox:
        if body[0] == 36:
            got_b = body[1]

    if in_a and state.ecc is None:
        if got_a is None or got_b is None:
            raise ContractViolation(f"node {me}: missing preceding B record")
        alpha_x = got_a[0] - off_a
        state.ecc = max(d_r + alpha_x, (W - d_r) + (got_b - off_b))
        state.v_left = got_a[1] // n
        state.v_right = got_a[1] % n
    return (s_left, s_right)


def cycle_farthest_and_diameter(graph, config=None, check=True):
    """Per-node farthest nodes and eccentricity plus the cycle diameter.
    Returns ({v: (v_left, v_right, ecc)}, D, Metrics)."""
    if check and classify(graph).name != "cycle":
        _wrong_class(classify(graph).name, "cycle")

    def prog(ctx):
        state = yield from cycle_ecc_machinery(ctx, ctx.neighbors, 0)
        d = yield from P.global_reduce(ctx, (state.ecc,), P.op_max)
        return (state.v_left, state.v_right, state.ecc, d[0])

    outputs, metrics = run(graph, prog, config)
    per_node = {v: (o[0], o[1], o[2]) for v, o in outputs.items()}
    ds = {o[3] for o in outputs.values()}
    assert len(ds) == 1
    return per_node, ds.pop(), metrics
