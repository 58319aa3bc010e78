"""Block identification, anchors, shortest-path-tree extraction, exact SSSP
and exact diameter on cactus graphs.

Blocks: a deterministic Boruvka spanning tree, then fundamental-cycle
coverage counting over the rooted Euler tour.  Each non-tree edge locates
its apex (the range-minimum depth between its endpoints' first visits),
routes a -2 charge to that tour position, and adds +1 at both endpoints'
first virtuals; prefix sums along the tour turn the charges into per-edge
coverage counts and covering-id sums.  Any count of 2 or more rejects the
input as non-cactus.

Cycles then become member rings (one member per (node, cycle), redistributed
along the arboricity-2 orientation).  The anchor of a cycle is the ring
minimum of spanning-tree distances from the source; removing the edge
between each anchor's two farthest cycle nodes yields the shortest-path
tree S_G.  The diameter folds S_G subtree heights into per-cycle pseudotree
runs (the budget-sort machinery executed on all rings in parallel) and
maximizes over the local top-two height combinations.
"""

from __future__ import annotations

from . import primitives as P
from .graphs import classify
from .netsim import ContractViolation, run
from .sparse_algos import boruvka_gen

BRIDGE = -1
CACTUSISH = ("cactus", "pseudotree", "cycle", "tree", "path")


def _check(graph, check):
    if check:
        cls = classify(graph).name
        if cls not in CACTUSISH:
            raise ContractViolation(f"expected a cactus, got {cls}")


def _pack_edge(u, v, n):
    return min(u, v) * n + max(u, v)


# ---------------------------------------------------------------------------
# Ring routing along tour chains
# ---------------------------------------------------------------------------

def ring_route(ctx, group, K, inject, deposit, tag=0):
    """inject: list of (member, target_pos, payload); each hop jumps the
    largest forward chain level that does not overshoot.  deposit(member,
    payload) fires at the target.  K+2 rounds."""
    cap = group.cap
    members = group.members
    pending = list(inject)
    for _ in range(K + 2):
        nxt = []
        for m, target, payload in pending:
            if target == m.pos:
                deposit(m, payload)
                continue
            gap = target - m.pos
            if gap < 0:
                raise ContractViolation("route target behind the router")
            lvl = min(gap.bit_length() - 1, K)
            tgt = m.end(1, lvl)
            while tgt is None and lvl > 0:
                lvl -= 1
                tgt = m.end(1, lvl)
            if tgt is None:
                raise ContractViolation("route chain missing")
            ctx.send_global(tgt // cap,
                            (P.mkkey(tag, tgt % cap, m.slot, cap), target) + payload)
        inbox = yield
        for src, body in inbox:
            _t, dst_slot, _s = P.splitkey(body[0], cap)
            m = members.get(dst_slot)
            if m is not None:
                nxt.append((m, body[1], tuple(body[2:])))
        pending = nxt
    for m, target, payload in pending:
        if target == m.pos:
            deposit(m, payload)
        else:
            raise ContractViolation("route did not converge")


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------

def blocks_gen(ctx, orient_flags, tree_nbrs):
    """Returns ({neighbour: label}, tree_run) where label is the packed id
    of the covering non-tree edge or BRIDGE; non-tree edges carry their own
    pack."""
    me = ctx.node
    n = ctx.n
    reg = P.Registry(P.slotcap(n))
    cap = reg.cap
    K = P.log2ceil(2 * n)
    sel = sorted(tree_nbrs)
    selw = [1] * len(sel)
    deg = len(sel)
    ori = [orient_flags[u] for u in sel]
    runt = yield from P.tree_machinery(ctx, reg, sel, selw,
                                       is_root=(me == n - 1),
                                       reuse_orientation=ori)
    depth = runt.dist if runt.dist is not None else 0
    fourn = 4 * n

    def pack_rmq(d, pos):
        return d * fourn + (fourn - 1 - pos)

    # range-min over packed (depth, rightmost pos) values on the tour
    hosted_depth = yield from P.send_to_members(
        ctx, reg, runt.handle, {i: (depth,) for i in range(deg)})
    mvals = {}
    for m in reg.members.values():
        v = hosted_depth.get(m.slot)
        mvals[m.slot] = (pack_rmq(v[0], m.pos),) if v is not None else None
    nb = yield from P.neighbor_exchange(ctx, reg, mvals)
    rmq = yield from P.scan_pass(
        ctx, reg, K,
        init=lambda m, s: nb[m.slot][s],
        combine=P.op_min, sides=(0, 1))

    # every node collects all window levels anchored at its first member
    first_idx = runt.parent_idx if deg else None
    win_r = {}
    win_l = {}
    for m in reg.members.values():
        if m.owner == me and m.idx == first_idx:
            for lvl in range(K + 1):
                sp = rmq[m.slot]
                win_r[lvl] = sp[1][lvl] if lvl < len(sp[1]) else None
                win_l[lvl] = sp[0][lvl] if lvl < len(sp[0]) else None
    for side_tag, store_side in ((66, 1), (67, 0)):
        for lvl in range(K + 1):
            for m in reg.members.values():
                if m.owner != me:
                    sp = rmq[m.slot][store_side]
                    val = sp[lvl] if lvl < len(sp) and sp[lvl] is not None else None
                    ctx.send_local(m.owner,
                                   (side_tag, m.idx, lvl,
                                    -1 if val is None else val[0]))
            inbox = yield
            for src, body in inbox:
                if body[0] == side_tag and body[1] == first_idx:
                    tgtmap = win_r if side_tag == 66 else win_l
                    tgtmap[body[2]] = None if body[3] < 0 else (body[3],)

    myfirst = runt.first if deg else 0
    tree_set = set(sel)
    nontree = [(u, w) for u, w in ctx.neighbors if u not in tree_set]
    for u, _w in nontree:
        ctx.send_local(u, (62, myfirst))
    inbox = yield
    other_first = {}
    for src, body in inbox:
        if body[0] == 62:
            other_first[src] = body[1]
    # the larger-first endpoint ships its backward window and its own pack
    for u, _w in nontree:
        of = other_first[u]
        if of < myfirst:
            j = (myfirst - of).bit_length() - 1
            wl = win_l.get(j)
            ctx.send_local(u, (63, -1 if wl is None else wl[0],
                               pack_rmq(depth, myfirst)))
    inbox = yield
    apex = {}
    for src, body in inbox:
        if body[0] == 63:
            of = other_first[src]
            j = (of - myfirst).bit_length() - 1
            wr = win_r.get(j)
            cands = [pack_rmq(depth, myfirst), body[2]]
            if wr is not None:
                cands.append(wr[0])
            if body[1] >= 0:
                cands.append(body[1])
            best = min(cands)
            apex[src] = fourn - 1 - (best % fourn)

    # charges: +1/+pack at both endpoints' first virtuals; -2/-2pack routed
    # to the apex by the smaller-first endpoint
    cnt_first = 0
    ids_first = 0
    inject_vals = []
    for u, _w in nontree:
        pk = _pack_edge(me, u, n)
        cnt_first += 1
        ids_first += pk
        if u in apex:
            inject_vals.append((apex[u], -2 * pk))
    ship_first = {first_idx: (cnt_first, ids_first)} if deg else {}
    hosted_charge = yield from P.send_to_members(ctx, reg, runt.handle, ship_first)
    for m in reg.members.values():
        ch = hosted_charge.get(m.slot)
        m.data["cnt"] = ch[0] if ch else 0
        m.data["ids"] = ch[1] if ch else 0

    # injections start at my first member (ship to its host if needed)
    if deg:
        addr = runt.handle.mine[first_idx]
        if addr // cap != me:
            for tpos, idc in inject_vals:
                ctx.send_global(addr // cap, (P.mkkey(1, addr % cap, 0, cap),
                                              tpos, idc))
    inbox = yield
    start_routes = []
    for src, body in inbox:
        key = body[0]
        t, dst_slot, _s = P.splitkey(key, cap)
        if t == 1 and dst_slot in reg.members:
            start_routes.append((reg.members[dst_slot], body[1], (body[2],)))
    if deg:
        addr = runt.handle.mine[first_idx]
        if addr // cap == me:
            for tpos, idc in inject_vals:
                start_routes.append((reg.members[addr % cap], tpos, (idc,)))

    def deposit(m, payload):
        m.data["cnt"] -= 2
        m.data["ids"] += payload[0]

    yield from ring_route(ctx, reg, K, start_routes, deposit)

    # prefix sums over tour positions (saturating backward scans)
    cvals = {m.slot: (m.data["cnt"],) for m in reg.members.values()}
    nb1 = yield from P.neighbor_exchange(ctx, reg, cvals)
    pcnt = yield from P.scan_pass(
        ctx, reg, K,
        init=lambda m, s: nb1[m.slot][s] if s == 0 else None,
        combine=P.op_sum, saturate=True, sides=(0,))
    ivals = {m.slot: (m.data["ids"],) for m in reg.members.values()}
    nb2 = yield from P.neighbor_exchange(ctx, reg, ivals)
    pids = yield from P.scan_pass(
        ctx, reg, K,
        init=lambda m, s: nb2[m.slot][s] if s == 0 else None,
        combine=P.op_sum, saturate=True, sides=(0,))

    def strict_prefix(scan, m):
        sp = scan[m.slot][0][K] if K < len(scan[m.slot][0]) else None
        return sp[0] if sp is not None else 0

    rep_cnt = {m.slot: (m.data["cnt"], m.data["cnt"] + strict_prefix(pcnt, m))
               for m in reg.members.values()}
    mine_cnt = yield from P.report_to_owners(ctx, reg, rep_cnt)
    rep_ids = {m.slot: (m.data["ids"], m.data["ids"] + strict_prefix(pids, m))
               for m in reg.members.values()}
    mine_ids = yield from P.report_to_owners(ctx, reg, rep_ids)

    labels = {}
    for u, _w in nontree:
        labels[u] = _pack_edge(me, u, n)
    if deg and me != n - 1:
        last_idx = (first_idx - 1) % deg
        count = mine_cnt[last_idx][1] - mine_cnt[first_idx][1] + mine_cnt[first_idx][0]
        idsum = mine_ids[last_idx][1] - mine_ids[first_idx][1] + mine_ids[first_idx][0]
        if count >= 2:
            raise ContractViolation(
                f"edge ({me},{runt.parent}) lies on {count} cycles: not a cactus")
        labels[runt.parent] = idsum if count == 1 else BRIDGE
        ctx.send_local(runt.parent, (65, labels[runt.parent]))
    else:
        pass
    inbox = yield
    for src, body in inbox:
        if body[0] == 65:
            labels[src] = body[1]
    return labels


# ---------------------------------------------------------------------------
# Cycle member rings
# ---------------------------------------------------------------------------

def build_rings(ctx, reg, labels, orient_flags):
    """One member per (node, cycle), moved to the designated lower-id cycle
    neighbour when that edge points in; ring links connect same-cycle
    members.  Returns {label: member} for my OWN cycles (address handles)
    plus the hosted members in reg.  Member.data: ring sides carry
    (addr, weight, owner) per side."""
    me = ctx.node
    cap = reg.cap
    weights = dict(ctx.neighbors)
    cycles = {}
    for u, lab in labels.items():
        if lab != BRIDGE:
            cycles.setdefault(lab, []).append(u)
    for lab, us in cycles.items():
        if len(us) != 2:
            raise ContractViolation(
                f"node {me}: cycle label {lab} on {len(us)} edges")
    # designated edge: toward the lower-id cycle neighbour; move when it
    # points in
    move = {}
    for lab, (a, b) in sorted(cycles.items()):
        desig = min(a, b)
        if orient_flags[desig]:
            move[lab] = None  # stays home
        else:
            move[lab] = desig
    handles = {}
    for lab in sorted(cycles):
        if move[lab] is None:
            m = reg.alloc(me, lab % ctx.n)
            m.data["label"] = lab
            m.data["ring_owner"] = me
            handles[lab] = me * cap + m.slot
        else:
            ctx.send_local(move[lab], (70, lab))
    inbox = yield
    grants = []
    for src, body in inbox:
        if body[0] == 70:
            m = reg.alloc(src, body[1] % ctx.n)
            m.data["label"] = body[1]
            m.data["ring_owner"] = src
            grants.append((src, body[1], m))
    for src, lab, m in grants:
        ctx.send_local(src, (71, lab, m.slot))
    inbox = yield
    for src, body in inbox:
        if body[0] == 71:
            handles[body[1]] = src * cap + body[2]
    # exchange member addresses over each cycle edge
    for lab, (a, b) in sorted(cycles.items()):
        ctx.send_local(a, (72, lab, handles[lab]))
        ctx.send_local(b, (73, lab, handles[lab]))
    inbox = yield
    # over edge {me,u} for label lab I receive u's member address; a node
    # can share two cycle edges with u only in a 2-cycle, which the graph
    # model excludes, so (src, lab) is unambiguous
    link = {}
    for src, body in inbox:
        if body[0] in (72, 73):
            link[(src, body[1])] = body[2]
    # ship both links to the member's host: sides ordered by neighbour id
    for lab, (a, b) in sorted(cycles.items()):
        lo, hi = min(a, b), max(a, b)
        addr = handles[lab]
        payload = (74, addr % cap, link[(lo, lab)], link[(hi, lab)],
                   weights[lo], weights[hi], lo, hi)
        if addr // cap == me:
            _fill_ring(reg.members[addr % cap], payload)
        else:
            ctx.send_local(addr // cap, (74, addr % cap, link[(lo, lab)], weights[lo], lo))
            ctx.send_local(addr // cap, (75, addr % cap, link[(hi, lab)], weights[hi], hi))
    inbox = yield
    for src, body in inbox:
        if body[0] == 74 and len(body) == 5:
            m = reg.members[body[1]]
            m.data["ring0"] = m.data.get("ring0", [None, None])
            m.data["ring0"][0] = (body[2], body[3], body[4])
        elif body[0] == 75:
            m = reg.members[body[1]]
            m.data["ring0"] = m.data.get("ring0", [None, None])
            m.data["ring0"][1] = (body[2], body[3], body[4])
    return handles


def _fill_ring(m, payload):
    _t, _slot, la, lb, wa, wb, ida, idb = payload
    m.data["ring0"] = [(la, wa, ida), (lb, wb, idb)]


def relink_ring(group, cut_owner_pairs=None):
    """Reset every member's chains to the ring links, optionally dropping
    the edges whose (my ring owner, neighbour owner) pair appears in
    cut_owner_pairs."""
    for m in group.members.values():
        ring0 = m.data.get("ring0")
        if ring0 is None:
            continue
        ends = [None, None]
        hops = [None, None]
        for s in (0, 1):
            if ring0[s] is None:
                continue
            if cut_owner_pairs and (m.data["ring_owner"], ring0[s][2]) in cut_owner_pairs:
                continue
            ends[s] = ring0[s][0]
            hops[s] = 1
        m.ends = [[ends[0]], [ends[1]]]
        m.hops = [[hops[0]], [hops[1]]]


# ---------------------------------------------------------------------------
# Ring chain SSSP (per-cycle, all rings in parallel)
# ---------------------------------------------------------------------------

def ring_cut_sssp(ctx, group, K, sources, side_key, primary=True):
    """One directional traversal per ring.  sources: source member slot ->
    ring side to KEEP (the traversal continues there); the other side's
    edge drops on both endpoints.  With primary=True the run records
    member.pos and member.fwd (the rotation direction); the mirrored run
    passes primary=False and only returns distances.
    Returns slot -> (dist, pos)."""
    cap = group.cap
    members = group.members
    cuts = set()
    for slot, keep in sources.items():
        m = members[slot]
        drop = 1 - keep
        tgt = m.data["ring0"][drop][0]
        ctx.send_global(tgt // cap, (P.mkkey(side_key, tgt % cap, m.slot, cap),))
        cuts.add((slot, drop))
    inbox = yield
    for src, body in inbox:
        t, dst_slot, src_slot = P.splitkey(body[0], cap)
        if t != side_key or dst_slot not in members:
            continue
        m = members[dst_slot]
        sender = src * cap + src_slot
        for s in (0, 1):
            if m.data["ring0"][s] is not None and m.data["ring0"][s][0] == sender:
                cuts.add((dst_slot, s))
    for m in members.values():
        ring0 = m.data.get("ring0")
        if ring0 is None:
            continue
        ends, hops, ew = [None, None], [None, None], [None, None]
        for s in (0, 1):
            if ring0[s] is not None and (m.slot, s) not in cuts:
                ends[s] = ring0[s][0]
                hops[s] = 1
                ew[s] = ring0[s][1]
        m.ends = [[ends[0]], [ends[1]]]
        m.hops = [[hops[0]], [hops[1]]]
        m.data["ew"] = ew
    yield from P.intro_pass(ctx, group, K)
    spans = yield from P.scan_pass(
        ctx, group, K,
        init=lambda mm, s: ((mm.data["ew"][s], 1)
                            if mm.data.get("ew") and mm.data["ew"][s] is not None else None),
        combine=P.op_sum)
    holders = {slot: (0, 0) for slot in sources}
    vals = yield from P.bcast_pass(ctx, group, K, spans, holders,
                                   minimize=True, sides=(0, 1),
                                   record_side=primary)
    out = {}
    for slot, v in vals.items():
        m = members[slot]
        if primary:
            m.pos = v[1]
            if slot in sources:
                m.fwd = sources[slot]
        out[slot] = (v[0], v[1])
    return out


# ---------------------------------------------------------------------------
# Per-ring eccentricity machinery (heights folded in), all rings parallel
# ---------------------------------------------------------------------------

def ring_ecc_machinery(ctx, group, heights):
    """heights: slot -> folded height value.  Every participating member
    ends with data['ecc'], ['v_left'], ['v_right'] (eccentricity of its
    ring owner in the cycle-plus-pendants pseudotree)."""
    members = group.members
    n = ctx.n
    K = P.intro_rounds(n)
    K2 = K + 2
    LOW = -(4 * n * ctx.weight_cap + 4)

    relink_ring(group)
    yield from P.intro_pass(ctx, group, K)
    ids = {m.slot: (m.data["ring_owner"],) for m in members.values()}
    win = yield from P.ring_reduce(ctx, group, K2, ids, P.op_max)
    sources = {}
    for m in members.values():
        m.data["leader"] = win[m.slot][0]
        if m.data["ring_owner"] == win[m.slot][0]:
            ring0 = m.data["ring0"]
            sources[m.slot] = 0 if ring0[0][2] < ring0[1][2] else 1
    base_l = yield from ring_cut_sssp(ctx, group, K, sources, 1, primary=True)
    rsources = {slot: 1 - keep for slot, keep in sources.items()}
    base_r = yield from ring_cut_sssp(ctx, group, K, rsources, 2, primary=False)
    for m in members.values():
        m.data["d_l"] = base_l.get(m.slot, (None, None))[0]
        m.data["d_r"] = base_r.get(m.slot, (None, None))[0]
        ring0 = m.data.get("ring0")
        if ring0 is None or m.pos is None:
            continue
        m.data["rot"] = m.fwd  # rotation side: the left-traversal direction
        m.data["succ_owner"] = ring0[m.fwd][2]
        m.data["succ_w"] = ring0[m.fwd][1]

    sz = yield from P.ring_reduce(
        ctx, group, K2,
        {m.slot: (m.pos + 1,) for m in members.values() if m.pos is not None},
        P.op_max)
    wtot = {}
    for m in members.values():
        if m.pos is None:
            continue
        last = m.data["succ_owner"] == m.data["leader"] and m.pos > 0
        wtot[m.slot] = (m.data["d_l"] + m.data["succ_w"],) if last else (-1,)
    ww = yield from P.ring_reduce(ctx, group, K2, wtot, P.op_max)
    import os
    if os.environ.get("HN_DEBUG"):
        for m in members.values():
            print("DBG", ctx.node, m.slot, m.data.get("ring_owner"), "leader", m.data.get("leader"),
                  "succ", m.data.get("succ_owner"), "pos", m.pos, "wtot", wtot.get(m.slot),
                  "ww", ww.get(m.slot), "dl", m.data.get("d_l"), "dr", m.data.get("d_r"))
    for m in members.values():
        if m.pos is None:
            continue
        m.data["ring_n"] = sz[m.slot][0]
        m.data["W"] = ww[m.slot][0]

    # m-values over the full ring
    relink_ring(group)
    yield from P.intro_pass(ctx, group, K)
    mspans = yield from P.scan_pass(
        ctx, group, K,
        init=lambda mm, s: ((mm.data["ring0"][s][1],)
                            if mm.data.get("ring0") and mm.data["ring0"][s] else None),
        combine=P.op_sum)
    for m in members.values():
        m.data["m_spans"] = mspans[m.slot]
    m_l = yield from _ring_m_recurrence(ctx, group, K, heights, pred_dir=True, low=LOW)
    m_r = yield from _ring_m_recurrence(ctx, group, K, heights, pred_dir=False, low=LOW)
    succ_ml = yield from _ring_shift_to_pred(ctx, group, m_l)

    for m in members.values():
        m.data["ecc"] = None
        m.data["v_left"] = None
        m.data["v_right"] = None
        m.data["m_l"] = m_l.get(m.slot, LOW)
        m.data["m_r"] = m_r.get(m.slot, LOW)
        m.data["succ_ml"] = succ_ml.get(m.slot, (LOW,))[0]
        m.data["pass_src"] = m.data["leader"]

    yield from _ring_ecc_pass(ctx, group, K, K2, LOW, run_sort=True)
    for m in members.values():
        if m.pos is not None:
            m.data["pass_src"] = m.data["pass2"]
    yield from _ring_ecc_pass(ctx, group, K, K2, LOW, run_sort=True)
    for m in members.values():
        if m.pos is not None:
            m.data["pass_src"] = m.data["pass3"]
    yield from _ring_ecc_pass(ctx, group, K, K2, LOW, run_sort=False)
    for m in members.values():
        if m.pos is not None and m.data["ecc"] is None:
            raise ContractViolation(
                f"member of {m.data['ring_owner']}: eccentricity incomplete")


def _ring_shift_to_pred(ctx, group, values, tag=3):
    cap = group.cap
    members = group.members
    for m in members.values():
        if m.slot not in values or m.data.get("ring0") is None or m.pos is None:
            continue
        pred = m.data["ring0"][1 - m.fwd]
        if pred is None:
            continue
        tgt = pred[0]
        ctx.send_global(tgt // cap,
                        (P.mkkey(tag, tgt % cap, m.slot, cap), values[m.slot]))
    inbox = yield
    got = {}
    for src, body in inbox:
        _t, dst_slot, _s = P.splitkey(body[0], cap)
        if dst_slot in members:
            got[dst_slot] = (body[1],)
    return got


def _ring_m_recurrence(ctx, group, K, heights, pred_dir, low):
    cap = group.cap
    members = group.members
    x = {}
    for m in members.values():
        x[m.slot] = heights.get(m.slot, low) if m.pos is not None else low
    for lvl in range(K + 1):
        for m in members.values():
            if m.pos is None:
                continue
            side = (1 - m.fwd) if pred_dir else m.fwd
            tgt = m.end(side, lvl)
            sp = m.data["m_spans"][side]
            span = sp[lvl] if lvl < len(sp) and sp[lvl] is not None else None
            if tgt is None or span is None:
                continue
            ctx.send_global(tgt // cap,
                            (P.mkkey(0, tgt % cap, m.slot, cap),
                             x[m.slot] - span[0]))
        inbox = yield
        for src, body in inbox:
            _t, dst_slot, _s = P.splitkey(body[0], cap)
            if dst_slot in x and body[1] > x[dst_slot]:
                x[dst_slot] = body[1]
    return x


def _ring_ecc_pass(ctx, group, K, K2, LOW, run_sort):
    """One farthest-node execution per ring from each ring's pass_src."""
    members = group.members
    cap = group.cap
    n = ctx.n
    me = ctx.node

    sources = {}
    for m in members.values():
        if m.pos is None:
            continue
        if m.data["ring_owner"] == m.data["pass_src"]:
            sources[m.slot] = m.data["rot"]
    dl = yield from ring_cut_sssp(ctx, group, K, sources, 1, primary=False)
    rs = {slot: 1 - keep for slot, keep in sources.items()}
    # the mirrored run goes last so the live chains match the wire
    # positions the sort and prefixes use
    dr = yield from ring_cut_sssp(ctx, group, K, rs, 2, primary=True)
    for m in members.values():
        if m.slot in dl:
            m.data["p_dl"] = dl[m.slot][0]
        if m.slot in dr:
            m.data["p_dr"] = dr[m.slot][0]

    elig = {}
    for m in members.values():
        if m.pos is None:
            continue
        d_l = m.data["p_dl"]
        ok = d_l <= m.data["W"] // 2 or m.data["ring_owner"] == m.data["pass_src"]
        elig[m.slot] = (d_l if ok else -1, m.data["ring_owner"])
    best = yield from P.ring_reduce(ctx, group, K2, elig, P.op_max)
    info = {}
    for m in members.values():
        if m.pos is None:
            continue
        winner = best[m.slot][1]
        m.data["s_left"] = winner
        if m.data["ring_owner"] == winner:
            info[m.slot] = (m.data["succ_owner"], m.data["succ_w"], m.data["m_r"])
        else:
            info[m.slot] = (-1, -1, LOW)
    info2 = yield from P.ring_reduce(ctx, group, K2, info, P.op_max)
    info3 = {}
    for m in members.values():
        if m.pos is None:
            continue
        s_right = info2[m.slot][0]
        m.data["s_right"] = s_right
        info3[m.slot] = (m.data["m_l"],) if m.data["ring_owner"] == s_right else (LOW,)
    ml_sr = yield from P.ring_reduce(ctx, group, K2, info3, P.op_max)
    for m in members.values():
        if m.pos is None:
            continue
        if m.data["ring_owner"] == m.data["pass_src"] and m.data["ecc"] is None:
            dl_sl = best[m.slot][0]
            _sr, w_cut, mr_sl = info2[m.slot]
            dr_sr = m.data["W"] - dl_sl - w_cut
            m.data["ecc"] = max(dl_sl + mr_sl, dr_sr + ml_sr[m.slot][0])
            m.data["v_left"] = m.data["s_left"]
            m.data["v_right"] = m.data["s_right"]
        m.data["pass2"] = m.data["s_left"]
        m.data["pass3"] = m.data["s_right"]
    if not run_sort:
        return

    recs = {}
    totals = {}
    for m in members.values():
        if m.pos is None:
            continue
        totals[m.slot] = m.data["ring_n"]
        d_l, d_r = m.data["p_dl"], m.data["p_dr"]
        half = m.data["W"] // 2
        in_a = (m.data["ring_owner"] != m.data["pass_src"]) and d_l > half
        m.data["in_a"] = in_a
        budget = (half - d_r) if in_a else d_l
        if in_a and budget < 0:
            raise ContractViolation(
                f"negative budget on a ring: owner={m.data['ring_owner']} "
                f"src={m.data['pass_src']} W={m.data['W']} dl={d_l} dr={d_r} "
                f"half={half} ring_n={m.data['ring_n']}")
        recs[m.slot] = (budget * 2 + (1 if in_a else 0), me * cap + m.slot)
    sorted_recs = yield from P.sort_pass(ctx, group, n, recs, totals=totals)

    # fetch alpha / ids / beta from the record's member
    for m in members.values():
        if m.slot in sorted_recs:
            tgt = sorted_recs[m.slot][1]
            ctx.send_global(tgt // cap, (P.mkkey(0, tgt % cap, m.slot, cap),))
    inbox = yield
    asks = {}
    for src, body in inbox:
        _t, dst_slot, src_slot = P.splitkey(body[0], cap)
        if dst_slot in members:
            asks.setdefault(dst_slot, []).append(src * cap + src_slot)
    off_a = 2 * n * ctx.weight_cap + 2
    off_b = 4 * n * ctx.weight_cap + 4
    for m in members.values():
        if m.pos is None or m.slot not in asks:
            continue
        if m.data["in_a"]:
            alpha = 0
            ids = 0
            beta = 0
        else:
            alpha = m.data["p_dl"] + m.data["m_r"] + off_a
            ids = m.data["ring_owner"] * n + m.data["succ_owner"]
            beta = -m.data["p_dl"] - m.data["succ_w"] + m.data["succ_ml"] + off_b
        for tgt in asks[m.slot]:
            ctx.send_global(tgt // cap,
                            (P.mkkey(1, tgt % cap, m.slot, cap), alpha, ids))
        m.data["beta_ship"] = (beta, asks[m.slot])
    inbox = yield
    aval = {}
    for src, body in inbox:
        _t, dst_slot, _s = P.splitkey(body[0], cap)
        if _t == 1 and dst_slot in members:
            aval[dst_slot] = (body[1], body[2])
    for m in members.values():
        ship = m.data.pop("beta_ship", None)
        if ship is None:
            continue
        for tgt in ship[1]:
            ctx.send_global(tgt // cap,
                            (P.mkkey(2, tgt % cap, m.slot, cap), ship[0]))
    inbox = yield
    bval = {}
    for src, body in inbox:
        _t, dst_slot, _s = P.splitkey(body[0], cap)
        if _t == 2 and dst_slot in members:
            bval[dst_slot] = (body[1],)

    pick = lambda l, r: r if r[0] else l
    pa = yield from P.prefix_pass(ctx, group, n,
                                  {s: aval.get(s, (0, 0)) for s in sorted_recs},
                                  pick, K + 1, totals=totals)
    pb = yield from P.prefix_pass(ctx, group, n,
                                  {s: bval.get(s, (0,)) for s in sorted_recs},
                                  pick, K + 1, totals=totals)
    # deliver the folds back to the record's member
    for m in members.values():
        if m.slot not in sorted_recs:
            continue
        fa = pa[m.slot]
        fb = pb[m.slot]
        tgt = sorted_recs[m.slot][1]
        if fa[0]:
            ctx.send_global(tgt // cap,
                            (P.mkkey(1, tgt % cap, m.slot, cap), fa[0], fa[1]))
    inbox = yield
    got_a = {}
    for src, body in inbox:
        _t, dst_slot, _s = P.splitkey(body[0], cap)
        if _t == 1 and dst_slot in members:
            got_a[dst_slot] = (body[1], body[2])
    for m in members.values():
        if m.slot not in sorted_recs:
            continue
        fb = pb[m.slot]
        tgt = sorted_recs[m.slot][1]
        if fb[0]:
            ctx.send_global(tgt // cap,
                            (P.mkkey(2, tgt % cap, m.slot, cap), fb[0]))
    inbox = yield
    got_b = {}
    for src, body in inbox:
        _t, dst_slot, _s = P.splitkey(body[0], cap)
        if _t == 2 and dst_slot in members:
            got_b[dst_slot] = body[1]
    for m in members.values():
        if m.pos is None or not m.data.get("in_a") or m.data["ecc"] is not None:
            continue
        if m.slot not in got_a or m.slot not in got_b:
            raise ContractViolation(f"ring member missing preceding B record")
        alpha = got_a[m.slot][0] - off_a
        ids = got_a[m.slot][1]
        beta = got_b[m.slot] - off_b
        d_r = m.data["p_dr"]
        m.data["ecc"] = max(d_r + alpha, (m.data["W"] - d_r) + beta)
        m.data["v_left"] = ids // n
        m.data["v_right"] = ids % n


# ---------------------------------------------------------------------------
# The cactus pipeline
# ---------------------------------------------------------------------------

def cactus_pipeline_gen(ctx, source, want):
    """Stages: spanning tree -> blocks -> rings -> anchors -> spt -> sssp
    -> diameter.  `want` names the stage whose result this run returns."""
    me = ctx.node
    n = ctx.n
    K = P.intro_rounds(n)
    K2 = K + 2
    weights = dict(ctx.neighbors)

    sel_all = [u for u, _ in ctx.neighbors]
    my_phase, nbr_phase = yield from P.orientation_pass(
        ctx, sel_all, 2, P.orientation_rounds(n))
    orient_flags = {u: P.edge_out(my_phase, me, nbr_phase[i], u)
                    for i, u in enumerate(sel_all)}

    tree_nbrs, _label = yield from boruvka_gen(ctx, orient=orient_flags)
    if want == "spanning_tree":
        return {"tree": tree_nbrs}

    labels = yield from blocks_gen(ctx, orient_flags, tree_nbrs)
    if want == "blocks":
        return {"labels": labels}

    reg = P.Registry(P.slotcap(n))
    handles = yield from build_rings(ctx, reg, labels, orient_flags)
    group = reg
    relink_ring(group)
    yield from P.intro_pass(ctx, group, P.intro_rounds(n))

    # anchors: spanning-tree SSSP from the source, ring minimum
    rega = P.Registry(P.slotcap(n))
    tsel = sorted(tree_nbrs)
    ori = [orient_flags[u] for u in tsel]
    runa = yield from P.tree_machinery(ctx, rega, tsel, [1] * len(tsel),
                                       is_root=(me == source),
                                       reuse_orientation=ori)
    dT = runa.dist if runa.dist is not None else 0
    # ship the owner's distance to each of its ring members
    ship = {}
    for lab, addr in handles.items():
        hh, ss = addr // reg.cap, addr % reg.cap
        if hh == me:
            reg.members[ss].data["dT"] = dT
        else:
            ctx.send_local(hh, (76, ss, dT))
    inbox = yield
    for src, body in inbox:
        if body[0] == 76:
            reg.members[body[1]].data["dT"] = body[2]
    anch = yield from P.ring_reduce(
        ctx, group, K2,
        {m.slot: (m.data["dT"], n - 1 - m.data["ring_owner"])
         for m in reg.members.values()},
        P.op_min)
    for m in reg.members.values():
        m.data["anchor"] = n - 1 - anch[m.slot][1]
    if want == "anchors":
        anchors = yield from _collect_anchor(ctx, reg, handles)
        return {"anchors": anchors, "labels": labels}

    # shortest path tree: per ring, SSSP from the anchor, cut between the
    # anchor's farthest pair
    sources = {}
    for m in reg.members.values():
        if m.data["ring_owner"] == m.data["anchor"]:
            ring0 = m.data["ring0"]
            sources[m.slot] = 0 if ring0[0][2] < ring0[1][2] else 1
    sl = yield from ring_cut_sssp(ctx, group, K, sources, 1, primary=True)
    rs = {slot: 1 - keep for slot, keep in sources.items()}
    sr = yield from ring_cut_sssp(ctx, group, K, rs, 2, primary=False)
    for m in reg.members.values():
        m.data["d_l"] = sl.get(m.slot, (None, None))[0]
        m.data["d_r"] = sr.get(m.slot, (None, None))[0]
        if m.pos is not None:
            ring0 = m.data["ring0"]
            m.data["succ_owner"] = ring0[m.fwd][2]
            m.data["succ_w"] = ring0[m.fwd][1]
    wtot = {}
    for m in reg.members.values():
        if m.pos is None:
            continue
        last = m.data["succ_owner"] == m.data["anchor"] and m.pos > 0
        wtot[m.slot] = (m.data["d_l"] + m.data["succ_w"],) if last else (-1,)
    ww = yield from P.ring_reduce(ctx, group, K2, wtot, P.op_max)
    elig = {}
    for m in reg.members.values():
        if m.pos is None:
            continue
        m.data["W"] = ww[m.slot][0]
        ok = m.data["d_l"] <= m.data["W"] // 2 or m.data["ring_owner"] == m.data["anchor"]
        elig[m.slot] = (m.data["d_l"] if ok else -1, m.data["ring_owner"])
    best = yield from P.ring_reduce(ctx, group, K2, elig, P.op_max)
    pair = {}
    for m in reg.members.values():
        if m.pos is None:
            continue
        if m.data["ring_owner"] == best[m.slot][1]:
            pair[m.slot] = (m.data["ring_owner"], m.data["succ_owner"])
        else:
            pair[m.slot] = (-1, -1)
    cutp = yield from P.ring_reduce(ctx, group, K2, pair, P.op_max)
    rep = yield from P.report_to_owners(
        ctx, group, {s: v for s, v in cutp.items()})
    cut_nbrs = set()
    for _idx, (a, b) in rep.items():
        if me == a:
            cut_nbrs.add(b)
        elif me == b:
            cut_nbrs.add(a)
    if want == "spt":
        return {"cut": sorted(cut_nbrs), "labels": labels}

    sg_nbrs = [(u, w) for u, w in ctx.neighbors if u not in cut_nbrs]
    sgsel = [u for u, _ in sg_nbrs]
    sgw = [w for _, w in sg_nbrs]
    regs = P.Registry(P.slotcap(n))
    oris = [orient_flags[u] for u in sgsel]
    runsg = yield from P.tree_machinery(ctx, regs, sgsel, sgw,
                                        is_root=(me == source),
                                        reuse_orientation=oris)
    if want == "sssp":
        return {"dist": runsg.dist}

    # diameter: heights on S_G, local top-two combinations, pendant weights
    # per cycle, per-ring pseudotree eccentricities, global max
    h = yield from P.heights_gen(ctx, regs, sgsel, sgw, me == source, run=runsg)
    parent = runsg.parent
    if parent is not None:
        ctx.send_local(parent, (77, h + weights[parent]))
    inbox = yield
    child_vals = {}
    for src, body in inbox:
        if body[0] == 77:
            child_vals[src] = body[1]
    top = sorted(child_vals.values(), reverse=True)
    m_v = (top[0] if top else 0) + (top[1] if len(top) > 1 else 0)
    # pendant weight per cycle: best child value outside that cycle
    pend = {}
    for lab in handles:
        ring_nb = {u for u, l in labels.items() if l == lab}
        vals = [val for u, val in child_vals.items() if u not in ring_nb]
        pend[lab] = max(vals) if vals else 0
    for lab, addr in handles.items():
        hh, ss = addr // reg.cap, addr % reg.cap
        val = pend[lab]
        if hh == me:
            reg.members[ss].data["pend"] = val
        else:
            ctx.send_local(hh, (78, ss, val))
    inbox = yield
    for src, body in inbox:
        if body[0] == 78:
            reg.members[body[1]].data["pend"] = body[2]
    heights_map = {}
    for m in reg.members.values():
        hp = m.data.get("pend", 0)
        if m.data["ring_owner"] == m.data["anchor"]:
            hp = 0
        m.data["h_pi"] = hp
        heights_map[m.slot] = hp
    yield from ring_ecc_machinery(ctx, group, heights_map)
    cand = m_v
    for m in reg.members.values():
        if m.pos is None:
            continue
        hp = m.data["h_pi"]
        c = hp
        if m.data["ecc"] > hp:
            c = max(c, m.data["ecc"] + hp)
        cand = max(cand, c)
    got = yield from P.global_reduce(ctx, (cand,), P.op_max)
    return {"diameter": got[0]}


def _collect_anchor(ctx, reg, handles):
    cap = reg.cap
    out = {}
    ask = []
    for lab, addr in handles.items():
        hh, ss = addr // cap, addr % cap
        if hh == ctx.node:
            out[lab] = reg.members[ss].data["anchor"]
        else:
            ctx.send_local(hh, (79, ss, lab))
    inbox = yield
    for src, body in inbox:
        if body[0] == 79:
            ctx.send_local(src, (80, body[2], reg.members[body[1]].data["anchor"]))
    inbox = yield
    for src, body in inbox:
        if body[0] == 80:
            out[body[1]] = body[2]
    return out


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def cactus_spanning_tree(graph, config=None, check=True):
    """Deterministic spanning tree (the Boruvka MST); (edge set, Metrics)."""
    _check(graph, check)
    outputs, metrics = run(
        graph, lambda ctx: cactus_pipeline_gen(ctx, graph.n - 1, "spanning_tree"),
        config)
    edges = set()
    for v, o in outputs.items():
        for u in o["tree"]:
            edges.add((min(u, v), max(u, v)))
    return edges, metrics


def _label_name(lab, n):
    return "bridge" if lab == BRIDGE else (lab // n, lab % n)


def cactus_blocks(graph, config=None, check=True):
    """Per-edge block labels: the covering non-tree edge as a (u, v) pair,
    or 'bridge'.  Returns ({(u, v): label}, Metrics)."""
    _check(graph, check)
    outputs, metrics = run(
        graph, lambda ctx: cactus_pipeline_gen(ctx, graph.n - 1, "blocks"),
        config)
    out = {}
    n = graph.n
    for v, o in outputs.items():
        for u, lab in o["labels"].items():
            key = (min(u, v), max(u, v))
            name = _label_name(lab, n)
            if key in out and out[key] != name:
                raise ContractViolation(f"label mismatch on edge {key}")
            out[key] = name
    return out, metrics


def cactus_anchors(graph, source, config=None, check=True):
    """Anchor node of every cycle: ({cycle label: anchor id}, Metrics)."""
    _check(graph, check)
    outputs, metrics = run(
        graph, lambda ctx: cactus_pipeline_gen(ctx, source, "anchors"), config)
    anchors = {}
    n = graph.n
    for v, o in outputs.items():
        for lab, a in o["anchors"].items():
            anchors[_label_name(lab, n)] = a
    return anchors, metrics


def cactus_spt(graph, source, config=None, check=True):
    """Shortest-path-tree edge set from source (one cycle edge removed per
    cycle).  Returns (edge set, Metrics)."""
    _check(graph, check)
    outputs, metrics = run(
        graph, lambda ctx: cactus_pipeline_gen(ctx, source, "spt"), config)
    removed = set()
    for v, o in outputs.items():
        for u in o["cut"]:
            removed.add((min(u, v), max(u, v)))
    edges = {(min(u, v), max(u, v)) for u, v, _ in graph.edge_list()}
    return edges - removed, metrics


def cactus_sssp(graph, source, config=None, check=True):
    """Exact distances from source; ({v: d}, Metrics)."""
    _check(graph, check)
    outputs, metrics = run(
        graph, lambda ctx: cactus_pipeline_gen(ctx, source, "sssp"), config)
    return {v: o["dist"] for v, o in outputs.items()}, metrics


def cactus_diameter(graph, config=None, check=True):
    """Exact diameter; (D, Metrics)."""
    _check(graph, check)
    outputs, metrics = run(
        graph, lambda ctx: cactus_pipeline_gen(ctx, graph.n - 1, "diameter"),
        config)
    vals = {o["diameter"] for o in outputs.values()}
    assert len(vals) == 1
    return vals.pop(), metrics
