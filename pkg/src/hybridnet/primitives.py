"""Distributed building blocks shared by every algorithm module.

Everything here is a node-program fragment: a generator that runs inside the
netsim engine and communicates only through messages.  The central
abstraction is a chain structure over *members* (virtual participants hosted
by real nodes, addressed as host*SLOTCAP+slot).  On top of it sit the
pointer-jumping introduction pass with per-level endpoint tables, value scans
over those tables, staggered positional broadcasts from a head, an odd-even
mergesort network, and a heap-tree reduce over the global clique.

Wire format: body[0] packs (tag, dst slot, src slot); the round schedule
plus the src address disambiguates everything else.  Bodies stay within the
payload budget down to n = 8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .netsim import ContractViolation

NONE_ADDR = -1


def slotcap(n: int) -> int:
    return 16 if n < 64 else 64


def log2ceil(x: int) -> int:
    return max(1, math.ceil(math.log2(max(2, x))))


def mkkey(tag: int, dst_slot: int, src_slot: int, cap: int) -> int:
    return (tag * cap + dst_slot) * cap + src_slot


def splitkey(key: int, cap: int):
    src = key % cap
    key //= cap
    return key // cap, key % cap, src


# ---------------------------------------------------------------------------
# Global clique reduce over the static heap tree on node ids
# ---------------------------------------------------------------------------

def _depth_of(i: int) -> int:
    return (i + 1).bit_length() - 1


def global_reduce(ctx, value, op):
    """All nodes contribute a tuple; all learn the op-fold.  Uses the static
    binary heap tree over ids; 2*depth rounds, <= 2 sends per node per
    round."""
    n = ctx.n
    if n == 1:
        return tuple(value)
    me = ctx.node
    maxdepth = _depth_of(n - 1)
    mydepth = _depth_of(me)
    acc = tuple(value)
    for t in range(maxdepth):
        if mydepth == maxdepth - t and me != 0:
            ctx.send_global((me - 1) // 2, (0,) + acc)
        inbox = yield
        for _, body in inbox:
            acc = op(acc, tuple(body[1:]))
    for t in range(maxdepth):
        if mydepth == t:
            c1, c2 = 2 * me + 1, 2 * me + 2
            if c1 < n:
                ctx.send_global(c1, (0,) + acc)
            if c2 < n:
                ctx.send_global(c2, (0,) + acc)
        inbox = yield
        for _, body in inbox:
            acc = tuple(body[1:])
    return acc


def global_reduce_rounds(n: int) -> int:
    return 0 if n == 1 else 2 * _depth_of(n - 1)


def op_max(a, b):
    return a if a >= b else b


def op_min(a, b):
    return a if a <= b else b


def op_sum(a, b):
    return tuple(x + y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# Members
# ---------------------------------------------------------------------------

class Member:
    """A hosted virtual participant.  Sides are chain directions: for tours
    side 0 points at the predecessor and side 1 at the successor; for raw
    paths/cycles the side labels are local and arbitrary."""

    __slots__ = ("slot", "owner", "idx", "ends", "hops", "pos", "fwd", "data")

    def __init__(self, slot, owner, idx):
        self.slot = slot
        self.owner = owner
        self.idx = idx
        self.ends = [[None], [None]]   # per side, per level: packed addr
        self.hops = [[None], [None]]
        self.pos = None
        self.fwd = 1                   # side toward increasing position
        self.data = {}

    def end(self, side, level):
        e = self.ends[side]
        return e[level] if level < len(e) else None

    def hop(self, side, level):
        h = self.hops[side]
        return h[level] if level < len(h) else None


class Group:
    """A subset of a registry's members that one chain structure runs over;
    pass functions take groups so several structures can coexist in a run."""

    __slots__ = ("cap", "members")

    def __init__(self, cap, members):
        self.cap = cap
        self.members = members


class Registry:
    __slots__ = ("cap", "members", "_next")

    def __init__(self, cap):
        self.cap = cap
        self.members = {}
        self._next = 0

    def subset(self, members) -> "Group":
        return Group(self.cap, {m.slot: m for m in members})

    def alloc(self, owner, idx) -> Member:
        slot = self._next
        self._next += 1
        if slot >= self.cap:
            raise ContractViolation(f"participant slots exhausted (cap {self.cap})")
        m = Member(slot, owner, idx)
        self.members[slot] = m
        return m

    def clear(self):
        self.members.clear()
        self._next = 0


def _addr_map(members, level):
    """addr -> (member, side) for the given level (addresses are distinct
    while spans stay below half the ring, which intro level caps ensure)."""
    out = {}
    for m in members.values():
        for side in (0, 1):
            a = m.end(side, level)
            if a is not None:
                out[(a, side)] = m
    return out


# ---------------------------------------------------------------------------
# Introduction pass (pointer jumping)
# ---------------------------------------------------------------------------

def intro_pass(ctx, group, K: int, tag: int = 0):
    """Run K introduction rounds.  After the pass, ends[side][k] is the
    participant at 2^k hops on that side where the structure extends that
    far.  A member introduces its two level-k endpoints to each other iff
    both chains advanced to level k; endpoints extend one-sidedly by
    receiving such introductions (that is how heads of cut chains and nodes
    near path ends keep learning farther endpoints)."""
    cap = group.cap
    members = group.members
    for lvl in range(K):
        for m in members.values():
            a0, a1 = m.end(0, lvl), m.end(1, lvl)
            if a0 is None or a1 is None:
                continue
            hops = m.hops[0][lvl] + m.hops[1][lvl]
            ctx.send_global(a0 // cap, (mkkey(tag, a0 % cap, m.slot, cap), a1, hops))
            ctx.send_global(a1 // cap, (mkkey(tag, a1 % cap, m.slot, cap), a0, hops))
        inbox = yield
        lookup = _addr_map(members, lvl)
        ext = {}
        for src, body in inbox:
            _, dst_slot, src_slot = splitkey(body[0], cap)
            sender = src * cap + src_slot
            for side in (0, 1):
                m = lookup.get((sender, side))
                if m is not None and m.slot == dst_slot:
                    ext[(m.slot, side)] = (body[1], body[2])
                    break
        for m in members.values():
            for side in (0, 1):
                got = ext.get((m.slot, side))
                m.ends[side].append(got[0] if got else None)
                m.hops[side].append(got[1] if got else None)


def intro_rounds(participants: int) -> int:
    if participants <= 2:
        return 1
    return math.floor(math.log2(participants - 1))


# ---------------------------------------------------------------------------
# Value scans over the recorded endpoint tables
# ---------------------------------------------------------------------------

def scan_pass(ctx, group, K: int, init, combine, saturate=False,
              sides=(0, 1), tag=0):
    """Compute per-member per-side folds over the 2^k windows recorded by
    intro_pass.  span[s][k] folds the 2^k participants following the member
    on side s (endpoint included, member excluded).

    init(member, side) gives the level-0 span (edge value toward that
    neighbour, or that neighbour's node value), or None when absent.
    Update: span[s][k+1] = combine(span[s][k], span of the level-k endpoint
    continuing away).  With saturate=True a missing continuation keeps the
    partial fold (list-ranking); otherwise the entry becomes None so only
    exact power-of-two spans are recorded.  `sides` restricts which sides
    are computed (each costs one send per member per round).  Only valid on
    cut chains or below half the ring length (intro level caps ensure it).

    Returns slot -> [side0 spans, side1 spans] (levels 0..K)."""
    cap = group.cap
    members = group.members
    spans = {m.slot: [[init(m, 0)], [init(m, 1)]] for m in members.values()}
    for lvl in range(K):
        for m in members.values():
            sp = spans[m.slot]
            for s in sides:
                # my side-s span is the continuation for the member at my
                # side-(1-s) endpoint (it sees me on its side s)
                tgt = m.end(1 - s, lvl)
                val = sp[s][lvl]
                if tgt is None or val is None:
                    continue
                ctx.send_global(tgt // cap,
                                (mkkey(tag, tgt % cap, m.slot, cap),) + tuple(val))
        inbox = yield
        lookup = _addr_map(members, lvl)
        got = {}
        for src, body in inbox:
            _, dst_slot, src_slot = splitkey(body[0], cap)
            for s in sides:
                mm = lookup.get((src * cap + src_slot, s))
                if mm is not None and mm.slot == dst_slot:
                    got[(dst_slot, s)] = tuple(body[1:])
                    break
        for m in members.values():
            sp = spans[m.slot]
            for s in (0, 1):
                cur = sp[s][lvl]
                if s not in sides:
                    sp[s].append(None)
                    continue
                inc = got.get((m.slot, s))
                if cur is None:
                    sp[s].append(None)
                elif inc is None:
                    sp[s].append(tuple(cur) if saturate else None)
                else:
                    sp[s].append(combine(tuple(cur), inc))
    return spans


# ---------------------------------------------------------------------------
# Staggered positional broadcast from head members along chains
# ---------------------------------------------------------------------------

def bcast_pass(ctx, group, K: int, spans, holders, combine=None,
               minimize=False, sides=(1,), tag=0, record_side=False):
    """Staggered positional broadcast from holder members.

    holders: slot -> initial tuple.  At round t every holder forwards its
    value combined with its level-(K-t) span over the given sides' level-
    (K-t) endpoints.  spans is a scan_pass result, or None to combine with
    hop counts.  Two modes:

    - first receipt wins (directed cut chains: all receipts agree), or
    - minimize=True: adopt the tuple-min of receipts and keep forwarding
      the current best (undirected chains with positive weights).

    With record_side=True each adopting member marks m.fwd = the side
    pointing away from the sender (positions increase along fwd).
    Returns slot -> value."""
    cap = group.cap
    members = group.members
    if combine is None:
        combine = lambda val, span: tuple(v + s for v, s in zip(val, span))
    have = dict(holders)
    for t in range(K + 1):
        lvl = K - t
        for slot in list(have):
            m = members[slot]
            val = have[slot]
            for side in sides:
                tgt = m.end(side, lvl)
                if tgt is None:
                    continue
                if spans is None:
                    span = (m.hop(side, lvl),)
                else:
                    sp = spans[slot][side]
                    span = sp[lvl] if lvl < len(sp) else None
                if span is None or span[0] is None:
                    continue
                ctx.send_global(tgt // cap,
                                (mkkey(tag, tgt % cap, m.slot, cap),)
                                + tuple(combine(val, span)))
        inbox = yield
        lookup = _addr_map(members, lvl)
        for src, body in inbox:
            _, dst_slot, src_slot = splitkey(body[0], cap)
            m = members.get(dst_slot)
            if m is None:
                continue
            val = tuple(body[1:])
            old = have.get(dst_slot)
            if old is not None and (not minimize or old <= val):
                continue
            have[dst_slot] = val
            if record_side:
                import os
                matched = False
                for side in (0, 1):
                    if m.end(side, lvl) == src * cap + src_slot:
                        m.fwd = 1 - side
                        matched = True
                        break
                if not matched and os.environ.get("HN_DEBUG"):
                    print("BCAST-NOMATCH", "node", src, "dstslot", dst_slot,
                          "lvl", lvl, "ends", m.ends)
    return have


def bcast_rounds(K: int) -> int:
    return K + 1


def neighbor_exchange(ctx, group, values: dict, tag=3):
    """One round: every member sends its value to both level-0 neighbours.
    Returns slot -> [value from side 0, value from side 1] (None when
    absent).  Used to seed value scans whose level-0 span is the
    neighbour's node value."""
    cap = group.cap
    members = group.members
    for m in members.values():
        val = values.get(m.slot)
        if val is None:
            continue
        for side in (0, 1):
            tgt = m.end(side, 0)
            if tgt is not None:
                ctx.send_global(tgt // cap,
                                (mkkey(tag, tgt % cap, m.slot, cap),) + tuple(val))
    inbox = yield
    got = {m.slot: [None, None] for m in members.values()}
    for src, body in inbox:
        _, dst_slot, src_slot = splitkey(body[0], cap)
        m = members.get(dst_slot)
        if m is None:
            continue
        a = src * cap + src_slot
        for side in (0, 1):
            if m.end(side, 0) == a:
                got[dst_slot][side] = tuple(body[1:])
    return got


# ---------------------------------------------------------------------------
# Full-structure reduce (idempotent folds; windows may overlap or truncate)
# ---------------------------------------------------------------------------

def ring_reduce(ctx, group, K: int, values: dict, combine, tag=0):
    """Every member ends with the fold of all members' values over its
    reachable window (the whole ring when K covers the length, both sides).
    combine must be idempotent (MIN/MAX style).  Returns slot -> value."""
    cap = group.cap
    members = group.members
    acc = dict(values)
    for lvl in range(K):
        for m in members.values():
            if m.slot not in acc:
                continue
            for side in (0, 1):
                tgt = m.end(side, lvl)
                if tgt is None:
                    continue
                ctx.send_global(tgt // cap,
                                (mkkey(tag, tgt % cap, m.slot, cap),) + tuple(acc[m.slot]))
        inbox = yield
        for src, body in inbox:
            _, dst_slot, _ = splitkey(body[0], cap)
            if dst_slot in acc:
                acc[dst_slot] = combine(acc[dst_slot], tuple(body[1:]))
    return acc


def ring_reduce_rounds(participants: int) -> int:
    return log2ceil(max(2, participants)) + 1


# ---------------------------------------------------------------------------
# Batcher odd-even mergesort over positioned members
# ---------------------------------------------------------------------------

def sort_stages(total: int):
    stages = []
    p = 1
    while p < total:
        k = p
        while k >= 1:
            stages.append((p, k))
            k //= 2
        p *= 2
    return stages


def comparator_low(x: int, p: int, k: int, total: int) -> bool:
    """Is position x the low end of comparator (x, x+k) in stage (p, k)?"""
    if x + k >= total:
        return False
    j = k % p
    if x < j or ((x - j) % (2 * k)) >= k:
        return False
    return (x // (p * 2)) == ((x + k) // (p * 2))


def sort_pass(ctx, group, total: int, records: dict, tag: int = 0,
              totals: dict | None = None):
    """Sort the records ascending across positions 0..total-1.  Members need
    .pos, .fwd and intro tables; partner of x is x+k = level-(log2 k)
    endpoint on the fwd side.  With `totals` (slot -> ring size) several
    rings sort in parallel: the stage list for a smaller ring is a prefix
    of the global one, so stages with p >= ring size are skipped there.
    Returns slot -> record now at that wire."""
    cap = group.cap
    members = group.members
    rec = dict(records)
    for (p, k) in sort_stages(total):
        lvl = k.bit_length() - 1
        for m in members.values():
            x = m.pos
            if x is None or m.slot not in rec:
                continue
            t = totals[m.slot] if totals is not None else total
            if p >= t:
                continue
            if comparator_low(x, p, k, t):
                tgt = m.end(m.fwd, lvl)
            elif x >= k and comparator_low(x - k, p, k, t):
                tgt = m.end(1 - m.fwd, lvl)
            else:
                continue
            if tgt is None:
                raise ContractViolation(f"sort partner missing at pos {x} stage {(p, k)}")
            ctx.send_global(tgt // cap,
                            (mkkey(tag, tgt % cap, m.slot, cap),) + tuple(rec[m.slot]))
        inbox = yield
        for src, body in inbox:
            _, dst_slot, _ = splitkey(body[0], cap)
            m = members.get(dst_slot)
            if m is None:
                continue
            t = totals[dst_slot] if totals is not None else total
            other = tuple(body[1:])
            mine = rec[dst_slot]
            if comparator_low(m.pos, p, k, t):
                rec[dst_slot] = mine if mine <= other else other
            else:
                rec[dst_slot] = mine if mine > other else other
    return rec


def sort_rounds(total: int) -> int:
    return len(sort_stages(total))


# ---------------------------------------------------------------------------
# Prefix fold over positions (Hillis-Steele doubling)
# ---------------------------------------------------------------------------

def prefix_pass(ctx, group, total: int, values: dict, combine, K: int,
                tag: int = 0, totals: dict | None = None):
    """acc(x) = fold of values at positions 0..x (combine(left, right),
    associative).  `totals` runs several rings in parallel as in sort_pass.
    Returns slot -> folded value."""
    cap = group.cap
    members = group.members
    acc = dict(values)
    for lvl in range(K):
        step = 1 << lvl
        for m in members.values():
            t = totals[m.slot] if totals is not None else total
            if m.pos is None or m.slot not in acc or m.pos + step > t - 1:
                continue
            tgt = m.end(m.fwd, lvl)
            if tgt is None:
                continue
            ctx.send_global(tgt // cap,
                            (mkkey(tag, tgt % cap, m.slot, cap),) + tuple(acc[m.slot]))
        inbox = yield
        nxt = dict(acc)
        for src, body in inbox:
            _, dst_slot, _ = splitkey(body[0], cap)
            if dst_slot in acc:
                nxt[dst_slot] = combine(tuple(body[1:]), acc[dst_slot])
        acc = nxt
    return acc


# ---------------------------------------------------------------------------
# Euler tour construction (local rounds only)
# ---------------------------------------------------------------------------

@dataclass
class TourHandle:
    mine: list = field(default_factory=list)     # my arrival index -> addr
    hosted: list = field(default_factory=list)   # Member objects I simulate
    sel: list = field(default_factory=list)
    selw: list = field(default_factory=list)
    out_edge: list = field(default_factory=list)
    my_phase: int | None = None
    nbr_phase: list = field(default_factory=list)
    head_slot: int | None = None


def peel_threshold(arb: int) -> int:
    return 3 * arb  # (2 + eps)*a with eps = 1


def orientation_pass(ctx, nbr_ids, arb, rounds, tag=1):
    """Nash-Williams forest-decomposition peeling over the given incident
    edges; local messages only.  Returns (my_phase, per-neighbour phase)."""
    thr = peel_threshold(arb)
    alive = [True] * len(nbr_ids)
    nbr_phase = [None] * len(nbr_ids)
    my_phase = None
    deg = len(nbr_ids)
    participating = deg > 0
    for rnd in range(1, rounds + 1):
        if participating and my_phase is None and deg <= thr:
            my_phase = rnd
            for u in nbr_ids:
                ctx.send_local(u, (tag, rnd))
        inbox = yield
        for src, body in inbox:
            if body[0] == tag:
                for i, u in enumerate(nbr_ids):
                    if u == src and alive[i]:
                        alive[i] = False
                        nbr_phase[i] = body[1]
                        if my_phase is None:
                            deg -= 1
                        break
    if participating and my_phase is None:
        raise ContractViolation("orientation peeling stalled: arboricity bound too small")
    return my_phase, nbr_phase


def orientation_rounds(n: int) -> int:
    return log2ceil(n) + 2


def edge_out(my_phase, my_id, nbr_phase, nbr_id) -> bool:
    if my_phase != nbr_phase:
        return my_phase < nbr_phase
    return my_id < nbr_id


def build_tour(ctx, reg: Registry, sel, selw, arb=1, rooted=False,
               reuse_orientation=None):
    """Build the Euler tour members over the selected incident edges.

    sel: sorted selected neighbour ids, selw: weights.  One member per
    selected edge (arrival from sel[i]); the member stays home iff that edge
    is oriented out of me, else it moves to sel[i] (every host ends up with
    at most 6 members for forests).  With rooted=True this node is its
    component's root: the ring is cut in front of my last member, which
    becomes the head.  Fixed schedule: orientation_rounds(n) + 8 local
    rounds (orientation skipped when reuse_orientation is given, then 8).

    Member data carries arrival_w/depart_w (edge weights) for later scans.
    """
    cap = reg.cap
    me = ctx.node
    deg = len(sel)
    h = TourHandle(sel=list(sel), selw=list(selw), mine=[None] * deg)

    for j, u in enumerate(sel):
        ctx.send_local(u, (2, j, deg))
    inbox = yield
    pos_at = {}
    deg_at = {}
    for src, body in inbox:
        if body[0] == 2:
            pos_at[src] = body[1]
            deg_at[src] = body[2]

    if reuse_orientation is None:
        my_phase, nbr_phase = yield from orientation_pass(
            ctx, sel, arb, orientation_rounds(ctx.n))
        h.my_phase, h.nbr_phase = my_phase, nbr_phase
        h.out_edge = [edge_out(my_phase, me, nbr_phase[i], sel[i]) for i in range(deg)]
    else:
        h.out_edge = list(reuse_orientation)

    for i in range(deg):
        if h.out_edge[i]:
            m = reg.alloc(me, i)
            m.data["arrival_w"] = selw[i]
            m.data["depart_w"] = selw[(i + 1) % deg]
            h.mine[i] = me * cap + m.slot
            h.hosted.append(m)
        else:
            ctx.send_local(sel[i], (3, i))
    inbox = yield
    grants = []
    for src, body in inbox:
        if body[0] == 3:
            m = reg.alloc(src, body[1])
            h.hosted.append(m)
            grants.append((src, m))
    for src, m in grants:
        ctx.send_local(src, (4, m.idx, m.slot))
    inbox = yield
    for src, body in inbox:
        if body[0] == 4:
            h.mine[body[1]] = src * cap + body[2]

    # exchange: my member for each edge (the counterpart the neighbour's
    # tour enters), then the predecessor member addr
    for i, u in enumerate(sel):
        ctx.send_local(u, (5, h.mine[i]))
    inbox = yield
    cross = {}
    for src, body in inbox:
        if body[0] == 5:
            cross[src] = body[1]
    for i, u in enumerate(sel):
        ctx.send_local(u, (6, (pos_at[u] - 1) % deg_at[u]))
    inbox = yield
    asked = []
    for src, body in inbox:
        if body[0] == 6:
            asked.append((src, body[1]))
    for src, idx in asked:
        ctx.send_local(src, (7, h.mine[idx]))
    inbox = yield
    prev_addr = {}
    for src, body in inbox:
        if body[0] == 7:
            prev_addr[src] = body[1]

    head_idx = deg - 1 if (rooted and deg) else None
    fills = []
    for i in range(deg):
        succ = cross[sel[(i + 1) % deg]]
        pred = prev_addr[sel[i]]
        if head_idx is not None and i == head_idx:
            pred = NONE_ADDR
        fills.append((h.mine[i], i, pred, succ))
    # two fill rounds: links (plus cut request routed via the tail's owner),
    # then weights (bodies stay small)
    for addr, i, pred, succ in fills:
        hh, ss = addr // cap, addr % cap
        if hh == me:
            _fill_links(reg.members[ss], pred, succ)
        else:
            ctx.send_local(hh, (8, ss, pred, succ))
    if head_idx is not None:
        # the tour edge into my head must be cut; its holder is a member of
        # sel[head_idx], whose host only that owner can reach locally
        ctx.send_local(sel[head_idx], (9,))
    inbox = yield
    cut_fwd = []
    for src, body in inbox:
        if body[0] == 8:
            _fill_links(reg.members[body[1]], body[2], body[3])
        elif body[0] == 9:
            idx = (sel.index(src) - 1) % deg
            cut_fwd.append(h.mine[idx])
    for addr, i, pred, succ in fills:
        hh, ss = addr // cap, addr % cap
        if hh == me:
            _fill_weights(reg.members[ss], selw[i], selw[(i + 1) % deg])
        else:
            ctx.send_local(hh, (10, ss, selw[i], selw[(i + 1) % deg]))
    for addr in cut_fwd:
        th, ts = addr // cap, addr % cap
        if th == me:
            reg.members[ts].data["succ_cut"] = True
        else:
            ctx.send_local(th, (16, ts))
    inbox = yield
    for src, body in inbox:
        if body[0] == 10:
            _fill_weights(reg.members[body[1]], body[2], body[3])
        elif body[0] == 16:
            reg.members[body[1]].data["succ_cut"] = True

    for m in h.hosted:
        pred = m.data.pop("links_pred", None)
        succ = m.data.pop("links_succ", None)
        if m.data.pop("succ_cut", False):
            succ = None
        m.ends = [[pred], [succ]]
        m.hops = [[1 if pred is not None else None],
                  [1 if succ is not None else None]]
        if pred is None and m.owner == me and head_idx is not None and m.idx == head_idx:
            h.head_slot = m.slot
        if pred is None:
            m.data["is_head"] = True
    return h


def _fill_links(m: Member, pred, succ):
    m.data["links_pred"] = None if pred == NONE_ADDR else pred
    m.data["links_succ"] = None if succ == NONE_ADDR else succ


def _fill_weights(m: Member, w_in, w_out):
    m.data["arrival_w"] = w_in
    m.data["depart_w"] = w_out


def tour_rounds(n: int, reuse_orientation=False) -> int:
    base = 8
    return base + (0 if reuse_orientation else orientation_rounds(n))


# ---------------------------------------------------------------------------
# Owner <-> host plumbing (hosts are always the owner itself or one of its
# local neighbours, so these are single local rounds)
# ---------------------------------------------------------------------------

def report_to_owners(ctx, group, values: dict, tag=11):
    """Each hosted member's value goes back to its owner.  values: slot ->
    tuple.  Returns idx -> tuple for my own members."""
    me = ctx.node
    mine = {}
    for m in group.members.values():
        val = values.get(m.slot)
        if val is None:
            continue
        if m.owner == me:
            mine[m.idx] = tuple(val)
        else:
            ctx.send_local(m.owner, (tag, m.idx) + tuple(val))
    inbox = yield
    for src, body in inbox:
        if body[0] == tag:
            mine[body[1]] = tuple(body[2:])
    return mine


def send_to_members(ctx, reg: Registry, handle: TourHandle, values: dict, tag=12):
    """Owner ships values to the hosts of its members.  values: arrival idx
    -> tuple.  Returns slot -> tuple for members hosted here."""
    cap = reg.cap
    me = ctx.node
    got = {}
    for i, val in values.items():
        addr = handle.mine[i]
        hh, ss = addr // cap, addr % cap
        if hh == me:
            got[ss] = tuple(val)
        else:
            ctx.send_local(hh, (tag, ss) + tuple(val))
    inbox = yield
    for src, body in inbox:
        if body[0] == tag:
            got[body[1]] = tuple(body[2:])
    return got


def shift_to_pred(ctx, group, values: dict, tag=13):
    """Every member sends its value to its level-0 predecessor (side 0);
    returns slot -> value received from the successor."""
    cap = group.cap
    for m in group.members.values():
        val = values.get(m.slot)
        if val is None:
            continue
        tgt = m.end(0, 0)
        if tgt is None:
            continue
        ctx.send_global(tgt // cap, (mkkey(tag % 4, tgt % cap, m.slot, cap),) + tuple(val))
    inbox = yield
    got = {}
    for src, body in inbox:
        _, dst_slot, _ = splitkey(body[0], cap)
        got[dst_slot] = tuple(body[1:])
    return got


# ---------------------------------------------------------------------------
# Rooted tree machinery: Euler tour SSSP plus rooting data.
#
# Runs on the forest spanned by the selected edges; every component must
# contain exactly one node with is_root=True.  Distances telescope over
# signed edge weights (+w down from the parent, -w climbing back), so every
# member of v reads off d(root, v) exactly.
# ---------------------------------------------------------------------------

class TreeRun:
    __slots__ = ("handle", "K", "pos", "parent_idx", "parent", "first", "last",
                 "dist", "member_pos", "member_dist", "spans_w", "child_sizes")

    def __init__(self):
        self.handle = None
        self.K = 0
        self.pos = {}
        self.parent_idx = None
        self.parent = None
        self.first = None
        self.last = None
        self.dist = None
        self.member_pos = {}
        self.member_dist = {}
        self.spans_w = None
        self.child_sizes = {}


def tree_rounds(n: int, reuse_orientation=False) -> int:
    K = log2ceil(2 * n)
    return tour_rounds(n, reuse_orientation) + K + (K + 1) + 1 + 1 + 1 + 1 + K + (K + 1) + 1


def tree_machinery(ctx, reg: Registry, sel, selw, is_root, seed=0, arb=1,
                   reuse_orientation=None, signed=True):
    """Build the tour, root every component, and compute seeded distances.

    seed is the root's own distance value (nonzero when a component's root
    already carries an offset, e.g. d(s, root) from an earlier phase).
    With signed=False edge weights are all +w (hop-style distances over the
    tour are then meaningless except on paths; signed is the normal mode).

    Returns a TreeRun; reg keeps the members (callers can run more passes).
    """
    me = ctx.node
    K = log2ceil(2 * ctx.n)
    out = TreeRun()
    out.K = K
    h = yield from build_tour(ctx, reg, sel, selw, arb=arb,
                              rooted=is_root, reuse_orientation=reuse_orientation)
    out.handle = h
    yield from intro_pass(ctx, reg, K)

    heads = {m.slot: (0,) for m in reg.members.values() if m.data.get("is_head")}
    posv = yield from bcast_pass(ctx, reg, K, None, heads)
    for slot, val in posv.items():
        reg.members[slot].pos = val[0]
    mypos = yield from report_to_owners(ctx, reg, posv)
    out.pos = {i: v[0] for i, v in mypos.items()}

    deg = len(sel)
    if deg:
        if is_root:
            out.parent_idx = deg - 1  # the head; no parent
            out.parent = None
        else:
            out.parent_idx = min(out.pos, key=lambda i: out.pos[i])
            out.parent = sel[out.parent_idx]
        out.first = out.pos[out.parent_idx]
        out.last = out.pos[(out.parent_idx - 1) % deg]
        order = [(out.parent_idx + 1 + k) % deg for k in range(deg - 1)]
        prev = out.first
        for j in order:
            out.child_sizes[sel[j]] = (out.pos[j] - prev) // 2
            prev = out.pos[j]
        if is_root and deg >= 1:
            # last child's excursion is truncated by the cut; callers that
            # know the component size recover it as n_comp-1-sum(others)
            out.child_sizes.pop(sel[(out.parent_idx) % deg], None)

    # in-edge signed weight of member i: +w (down from parent) iff i is the
    # first-visited member, else -w (climbing); ship to hosts, then shift to
    # each predecessor which stores it as its succ-edge scan weight
    inw = {}
    for i in range(deg):
        w = selw[i]
        if not is_root and i == out.parent_idx:
            inw[i] = (w,)
        else:
            inw[i] = (-w if signed else w,)
    hosted_in = yield from send_to_members(ctx, reg, h, inw)
    succ_w = yield from shift_to_pred(ctx, reg, hosted_in)
    seed_ship = {deg - 1: (seed,)} if (is_root and deg) else {}
    hosted_seed = yield from send_to_members(ctx, reg, h, seed_ship)
    winit = {m.slot: None for m in reg.members.values()}
    for slot, val in succ_w.items():
        winit[slot] = val
    out.spans_w = yield from scan_pass(
        ctx, reg, K,
        init=lambda m, s: winit[m.slot] if s == 1 else None,
        combine=op_sum, sides=(1,))

    holders = {slot: val for slot, val in hosted_seed.items()
               if reg.members[slot].data.get("is_head")}
    distv = yield from bcast_pass(ctx, reg, K, out.spans_w, holders)
    out.member_dist = {slot: v[0] for slot, v in distv.items()}
    mydist = yield from report_to_owners(ctx, reg, distv)
    if deg == 0:
        out.dist = seed if is_root else None
    else:
        vals = {v[0] for v in mydist.values()}
        out.dist = mydist[min(mydist)][0] if mydist else None
    out.member_pos = {slot: m.pos for slot, m in reg.members.items()}
    return out


# ---------------------------------------------------------------------------
# Standalone operations (spec surface); each spins up its own engine run
# ---------------------------------------------------------------------------

@dataclass
class ShortcutTable:
    node: int
    left: list   # per level: (endpoint id, weight) or None
    right: list


@dataclass
class Orientation:
    directions: dict  # (u, v) oriented u->v
    partition: dict   # node -> H-partition phase index
    max_outdegree: int


@dataclass
class EulerTour:
    virtual_count: int
    host_load: dict          # node -> number of simulated virtual nodes
    succ: dict               # (owner, idx) -> (owner, idx)
    traversal_pos: dict      # (owner, idx) -> position in L
    head: tuple
    signed_dist: dict        # (owner, idx) -> signed distance from head


@dataclass
class RootedTreeInfo:
    root: int
    parent: dict


def _run_program(graph, fn, config):
    from .netsim import run as _run
    return _run(graph, fn, config or SimConfigDefault())


def SimConfigDefault():
    from .netsim import SimConfig
    return SimConfig()


def raw_chain_members(ctx, reg: Registry, excluded=()):
    """One member per node over a path/cycle; level-0 ends are the (<=2)
    neighbours, skipping excluded edges.  All slots are 0."""
    nbrs = [(u, w) for u, w in ctx.neighbors if (ctx.node, u) not in excluded
            and (u, ctx.node) not in excluded]
    if len(nbrs) > 2:
        raise ContractViolation(f"node {ctx.node} has degree {len(nbrs)} > 2")
    m = reg.alloc(ctx.node, 0)
    cap = reg.cap
    ends = [None, None]
    hops = [None, None]
    wts = [None, None]
    for k, (u, w) in enumerate(nbrs):
        ends[k] = u * cap + 0
        hops[k] = 1
        wts[k] = w
    m.ends = [[ends[0]], [ends[1]]]
    m.hops = [[hops[0]], [hops[1]]]
    m.data["ew"] = wts
    return m


def introduce_shortcuts(graph, config=None):
    """Pointer-jumping shortcut construction on a path or cycle graph.
    Returns ({node: ShortcutTable}, Metrics)."""
    n = graph.n
    K = intro_rounds(n)

    def prog(ctx):
        reg = Registry(slotcap(ctx.n))
        m = raw_chain_members(ctx, reg)
        yield from intro_pass(ctx, reg, K)
        spans = yield from scan_pass(
            ctx, reg, K,
            init=lambda mm, s: (mm.data["ew"][s],) if mm.data["ew"][s] is not None else None,
            combine=op_sum)
        sp = spans[m.slot]
        cap = reg.cap
        left = [(m.end(0, k) // cap, sp[0][k][0]) if m.end(0, k) is not None
                and k < len(sp[0]) and sp[0][k] is not None else None
                for k in range(K + 1)]
        right = [(m.end(1, k) // cap, sp[1][k][0]) if m.end(1, k) is not None
                 and k < len(sp[1]) and sp[1][k] is not None else None
                 for k in range(K + 1)]
        return ShortcutTable(ctx.node, left, right)

    return _run_program(graph, prog, config)


def broadcast_min_over_shortcuts(graph, sources: dict, config=None):
    """Min-distance broadcast over path/cycle shortcuts: every node learns
    min over sources of (source value + shortest shortcut-path distance).
    Returns ({node: value}, Metrics)."""
    n = graph.n
    K = intro_rounds(n)

    def prog(ctx):
        reg = Registry(slotcap(ctx.n))
        m = raw_chain_members(ctx, reg)
        yield from intro_pass(ctx, reg, K)
        spans = yield from scan_pass(
            ctx, reg, K,
            init=lambda mm, s: (mm.data["ew"][s],) if mm.data["ew"][s] is not None else None,
            combine=op_sum)
        holders = {}
        if ctx.node in sources:
            holders[m.slot] = (sources[ctx.node],)
        vals = yield from bcast_pass(ctx, reg, K, spans, holders,
                                     minimize=True, sides=(0, 1))
        got = vals.get(m.slot)
        return got[0] if got is not None else None

    return _run_program(graph, prog, config)


def orient_low_outdegree(graph, arboricity_bound: int, config=None):
    """H-partition peeling orientation; outdegree <= 3*arboricity_bound."""

    def prog(ctx):
        sel = [u for u, _ in ctx.neighbors]
        my_phase, nbr_phase = yield from orientation_pass(
            ctx, sel, arboricity_bound, orientation_rounds(ctx.n))
        outs = [u for i, u in enumerate(sel)
                if edge_out(my_phase, ctx.node, nbr_phase[i], u)]
        return my_phase, outs

    outputs, metrics = _run_program(graph, prog, config)
    directions = {}
    partition = {}
    maxout = 0
    for v, (phase, outs) in outputs.items():
        partition[v] = phase
        maxout = max(maxout, len(outs))
        for u in outs:
            directions[(v, u)] = True
    return Orientation(directions, partition, maxout), metrics


def build_euler_tour(tree, source: int, config=None):
    """Euler tour of a tree from the given source, with redistribution.
    Returns (EulerTour, Metrics)."""
    from .graphs import classify
    cls = classify(tree)
    if cls.name not in ("tree", "path"):
        raise ContractViolation(f"build_euler_tour needs a tree, got {cls.name}")

    def prog(ctx):
        reg = Registry(slotcap(ctx.n))
        sel = [u for u, _ in ctx.neighbors]
        selw = [w for _, w in ctx.neighbors]
        run = yield from tree_machinery(ctx, reg, sel, selw,
                                        is_root=(ctx.node == source))
        cap = reg.cap
        hosted = []
        for m in reg.members.values():
            succ = m.data.get("links_succ")
            succ0 = m.end(1, 0)
            hosted.append((m.owner, m.idx, m.pos,
                           None if succ0 is None else succ0,
                           run.member_dist.get(m.slot)))
        return {"hosted": hosted, "pos": run.pos, "dist": run.dist,
                "parent": run.parent}

    outputs, metrics = _run_program(tree, prog, config)
    succ = {}
    traversal = {}
    signed_dist = {}
    load = {}
    head = None
    by_pos = {}
    for v, o in outputs.items():
        load[v] = len(o["hosted"])
        for owner, idx, pos, _succ, sd in o["hosted"]:
            by_pos[pos] = (owner, idx)
            traversal[(owner, idx)] = pos
            signed_dist[(owner, idx)] = sd
            if pos == 0:
                head = (owner, idx)
    total = len(traversal)
    for (owner, idx), pos in traversal.items():
        if pos + 1 < total:
            succ[(owner, idx)] = by_pos[pos + 1]
    return EulerTour(total, load, succ, traversal, head, signed_dist), metrics


def root_tree(tree, config=None, root=None):
    """Root a tree (default: highest id); every node learns its parent."""
    if root is None:
        root = tree.n - 1

    def prog(ctx):
        reg = Registry(slotcap(ctx.n))
        sel = [u for u, _ in ctx.neighbors]
        selw = [w for _, w in ctx.neighbors]
        run = yield from tree_machinery(ctx, reg, sel, selw,
                                        is_root=(ctx.node == root))
        return run.parent

    outputs, metrics = _run_program(tree, prog, config)
    return RootedTreeInfo(root, outputs), metrics


def aggregate_component(forest, values: dict, fn: str, config=None):
    """Every node learns fn over its component's values (fn in MIN/MAX/SUM).
    Works on forests; leaderless (per-component head elected on the ring).
    Returns ({node: aggregate}, Metrics)."""
    if fn not in ("MIN", "MAX", "SUM"):
        raise ValueError(fn)

    def prog(ctx):
        return agg_component_gen(ctx, values.get(ctx.node, 0), fn)

    return _run_program(forest, prog, config)


def agg_rounds(n: int) -> int:
    K = log2ceil(2 * n)
    return tour_rounds(n) + K + (ring_reduce_rounds(2 * n)) + 1 + K + K + (K + 1) + 1


def agg_component_gen(ctx, my_value, fn, sel=None, selw=None, is_root=None,
                      reuse_orientation=None):
    """Generator form of aggregate_component, reusable inside pipelines.

    With is_root given (exactly one true per component) the tour is rooted
    there and chains stay cut, which keeps message volume proportional to
    the component size; otherwise a head is elected on the ring first.
    Isolated nodes return their own value."""
    reg = Registry(slotcap(ctx.n))
    if sel is None:
        sel = [u for u, _ in ctx.neighbors]
        selw = [w for _, w in ctx.neighbors]
    K = log2ceil(2 * ctx.n)
    rooted = is_root is not None
    h = yield from build_tour(ctx, reg, sel, selw, arb=2,
                              rooted=bool(is_root) if rooted else False,
                              reuse_orientation=reuse_orientation)
    yield from intro_pass(ctx, reg, K)
    deg = len(sel)
    if not rooted:
        # elect a head (max (owner, idx)) and cut in front of it
        cap = reg.cap
        ids = {m.slot: (m.owner, m.idx, m.slot) for m in reg.members.values()}
        win = yield from ring_reduce(ctx, reg, ring_reduce_rounds(2 * ctx.n),
                                     ids, op_max)
        cut_req = {}
        for m in reg.members.values():
            if win.get(m.slot) == (m.owner, m.idx, m.slot):
                m.data["agg_head"] = True
                tgt = m.end(0, 0)
                if tgt is not None:
                    cut_req[m.slot] = tgt
        for slot, tgt in cut_req.items():
            ctx.send_global(tgt // cap, (mkkey(0, tgt % cap, slot, cap),))
        inbox = yield
        cut_succ = set()
        for _src, body in inbox:
            _, dst_slot, _ = splitkey(body[0], cap)
            cut_succ.add(dst_slot)
        for m in reg.members.values():
            pred = None if m.data.get("agg_head") else m.end(0, 0)
            succ = None if m.slot in cut_succ else m.end(1, 0)
            m.ends = [[pred], [succ]]
            m.hops = [[1 if pred is not None else None],
                      [1 if succ is not None else None]]
        yield from intro_pass(ctx, reg, K)
    else:
        for m in reg.members.values():
            if m.data.get("is_head"):
                m.data["agg_head"] = True

    if fn in ("MIN", "MAX"):
        hosted_vals = yield from send_to_members(
            ctx, reg, h, {i: (my_value,) for i in range(deg)})
        getter = {m.slot: hosted_vals.get(m.slot, (my_value,))
                  for m in reg.members.values()}
        comb = op_min if fn == "MIN" else op_max
        acc = yield from ring_reduce(ctx, reg, K + 1, getter, comb)
        mine = yield from report_to_owners(ctx, reg, acc)
        if not mine:
            return my_value
        best = None
        for v in mine.values():
            best = v if best is None else comb(best, v)
        return best[0] if len(best) == 1 else best

    # SUM: the owner's value rides on its arrival-index-0 member
    handle_vals = {}
    for i in range(deg):
        handle_vals[i] = (my_value if i == 0 else 0,)
    hosted_vals = yield from send_to_members(ctx, reg, h, handle_vals)
    vals = {m.slot: hosted_vals.get(m.slot, (0,)) for m in reg.members.values()}
    nb = yield from neighbor_exchange(ctx, reg, vals)
    spans = yield from scan_pass(
        ctx, reg, K,
        init=lambda m, s: nb[m.slot][s],
        combine=op_sum, saturate=True, sides=(0, 1))
    holders = {}
    for m in reg.members.values():
        if m.data.get("agg_head"):
            suf = spans[m.slot][1][K]
            tot = vals[m.slot][0] + (suf[0] if suf is not None else 0)
            holders[m.slot] = (tot,)
    got = yield from bcast_pass(ctx, reg, K, None, holders,
                                combine=lambda v, s: v)
    mine = yield from report_to_owners(ctx, reg, got)
    if not mine:
        return my_value
    return next(iter(mine.values()))[0]


def subtree_sums(forest, values: dict, config=None):
    """For every node v and neighbour u: the sum of values in u's component
    after removing v.  Returns ({v: {u: sum}}, Metrics)."""

    def prog(ctx):
        reg = Registry(slotcap(ctx.n))
        sel = [u for u, _ in ctx.neighbors]
        selw = [w for _, w in ctx.neighbors]
        comp_max = yield from agg_component_gen(ctx, ctx.node, "MAX")
        total = yield from agg_component_gen(ctx, values.get(ctx.node, 0), "SUM")
        run = yield from subtree_sums_gen(ctx, reg, sel, selw,
                                          values.get(ctx.node, 0),
                                          ctx.node == comp_max, total)
        return run

    return _run_program(forest, prog, config)


def subtree_sums_gen(ctx, reg, sel, selw, my_p, is_root, total):
    """Inner machinery: returns {neighbour u: sum over C_u}.  Uses the tour
    from the component root with climb weights p_u and the hat-distance
    telescopes."""
    me = ctx.node
    K = log2ceil(2 * ctx.n)
    run = yield from tree_machinery(ctx, reg, sel, selw, is_root=is_root)
    deg = len(sel)
    # climb weight of the tour edge leaving member i: p_me iff that edge
    # climbs to my parent, i.e. the NEXT member's owner is my parent...
    # the edge (v_i -> succ) departs to sel[(i+1) mod deg]; it climbs iff
    # sel[(i+1) mod deg] is my parent.
    outw = {}
    for i in range(deg):
        goes_to = sel[(i + 1) % deg]
        climbs = run.parent is not None and goes_to == run.parent
        outw[i] = (my_p if climbs else 0,)
    hosted = yield from send_to_members(ctx, reg, run.handle, outw)
    # hat value: seed p_root at the head, scan over departure weights
    winit = {m.slot: hosted.get(m.slot) for m in reg.members.values()}
    spans = yield from scan_pass(
        ctx, reg, K,
        init=lambda m, s: winit[m.slot] if s == 1 else None,
        combine=op_sum, sides=(1,))
    holders = {m.slot: (my_p if m.owner == me else 0,)
               for m in reg.members.values() if m.data.get("is_head")}
    # head seed: p of the root (the head's owner is the root)
    hat = yield from bcast_pass(ctx, reg, K, spans, holders)
    myhat = yield from report_to_owners(ctx, reg, hat)
    out = {}
    if deg == 0:
        return out
    d = deg
    for i in range(d):
        u = sel[i]
        prev = myhat[(i - 1) % d][0]
        cur = myhat[i][0]
        if run.parent is not None and u == run.parent:
            out[u] = total - my_p - (prev - cur)
        elif is_root and i == run.parent_idx:
            out[u] = total - prev
        else:
            out[u] = cur - prev
    return out


def heights(tree, root: int, config=None):
    """Weighted height of every node in the tree rooted at root."""

    def prog(ctx):
        reg = Registry(slotcap(ctx.n))
        sel = [u for u, _ in ctx.neighbors]
        selw = [w for _, w in ctx.neighbors]
        h = yield from heights_gen(ctx, reg, sel, selw, ctx.node == root)
        return h

    return _run_program(tree, prog, config)


NEG = None  # placeholder for -infinity in max scans; encoded as a big negative


def heights_gen(ctx, reg, sel, selw, is_root, run=None):
    """Height h(v) in the rooted tree: max over leaves below of
    (d(root,leaf)) minus d(root,v).  Leaves carry their depth on their sole
    member; a max-scan plus the two covering-window queries gives the
    subtree maximum."""
    K = log2ceil(2 * ctx.n)
    if run is None:
        run = yield from tree_machinery(ctx, reg, sel, selw, is_root=is_root)
    me = ctx.node
    deg = len(sel)
    big = -(4 * ctx.n * ctx.weight_cap + 4)
    # leaf = non-root with a single neighbour; its depth rides its member
    leaf_val = run.dist if (deg == 1 and not is_root) else big
    vals = {}
    for i in range(deg):
        vals[i] = (leaf_val,)
    hosted = yield from send_to_members(ctx, reg, run.handle, vals)
    mvals = {m.slot: hosted.get(m.slot, (big,)) for m in reg.members.values()}
    nb = yield from neighbor_exchange(ctx, reg, mvals)
    spans = yield from scan_pass(
        ctx, reg, K,
        init=lambda m, s: nb[m.slot][s],
        combine=op_max, saturate=True, sides=(0, 1))
    # query: covering windows anchored at my first and last member
    if deg == 0:
        return 0
    span_len = run.last - run.first
    if span_len == 0:
        return 0  # leaf (single member interval)
    k = span_len.bit_length() - 1  # floor(log2)
    reqs = {run.parent_idx: (1, k), (run.parent_idx - 1) % deg: (0, k)}
    cap = reg.cap
    for i, (side, lvl) in reqs.items():
        addr = run.handle.mine[i]
        hh, ss = addr // cap, addr % cap
        if hh == me:
            pass
        else:
            ctx.send_local(hh, (14, ss, side, lvl))
    inbox = yield
    for src, body in inbox:
        if body[0] == 14:
            sp = spans[body[1]][body[2]]
            v = sp[body[3]] if body[3] < len(sp) and sp[body[3]] is not None else (big,)
            ctx.send_local(src, (15, body[1], v[0]))
    inbox2 = yield
    got = {}
    for src, body in inbox2:
        if body[0] == 15:
            got[body[1]] = body[2]
    best = big
    for i, (side, lvl) in reqs.items():
        addr = run.handle.mine[i]
        hh, ss = addr // cap, addr % cap
        if hh == me:
            sp = spans[ss][side]
            v = sp[lvl] if lvl < len(sp) and sp[lvl] is not None else (big,)
            best = max(best, v[0])
        elif ss in got:
            best = max(best, got[ss])
    # include my own members' stored leaf values? my subtree includes me
    # only via leaves below; my own value only matters if I am a leaf
    # (handled above).  Subtree max depth minus my depth:
    if best <= big // 2:
        return 0
    return best - run.dist


def distributed_sort(graph, keys: dict, config=None):
    """Global sort over the clique: every node learns its rank and its
    rank-neighbours' ids.  keys: node -> int key (ties broken by id).
    Returns ({node: (rank, pred_id, succ_id)}, Metrics)."""
    n = graph.n

    def prog(ctx):
        return global_sort_gen(ctx, (keys[ctx.node], ctx.node))

    return _run_program(graph, prog, config)


def global_sort_gen(ctx, record):
    """Sort records over wires = node ids (every id exists in the clique).
    record must end with the owner id.  Returns (rank, pred_rec, succ_rec)."""
    n = ctx.n
    me = ctx.node
    reg = Registry(slotcap(n))
    m = reg.alloc(me, 0)
    cap = reg.cap
    m.pos = me
    m.fwd = 1
    K = log2ceil(max(2, n))
    m.ends = [[(me - 1) * cap if me > 0 else None],
              [(me + 1) * cap if me + 1 < n else None]]
    m.hops = [[1 if me > 0 else None], [1 if me + 1 < n else None]]
    for lvl in range(1, K + 1):
        step = 1 << lvl
        m.ends[0].append((me - step) * cap if me - step >= 0 else None)
        m.ends[1].append((me + step) * cap if me + step < n else None)
        m.hops[0].append(step if me - step >= 0 else None)
        m.hops[1].append(step if me + step < n else None)
    rec = yield from sort_pass(ctx, reg, n, {m.slot: tuple(record)})
    final = rec[m.slot]
    # exchange with wire neighbours for pred/succ records
    if me > 0:
        ctx.send_global(me - 1, (0,) + final)
    if me + 1 < n:
        ctx.send_global(me + 1, (1,) + final)
    inbox = yield
    pred_rec = succ_rec = None
    for src, body in inbox:
        if body[0] == 0 and src == me + 1:
            succ_rec = tuple(body[1:])
        elif body[0] == 1 and src == me - 1:
            pred_rec = tuple(body[1:])
    # deliver (rank, neighbours) to the record owner
    owner = final[-1]
    ctx.send_global(owner, (2, me,
                            NONE_ADDR if pred_rec is None else pred_rec[-1],
                            NONE_ADDR if succ_rec is None else succ_rec[-1]))
    inbox = yield
    out = None
    for src, body in inbox:
        if body[0] == 2:
            out = (body[1],
                   None if body[2] == NONE_ADDR else body[2],
                   None if body[3] == NONE_ADDR else body[3])
    return out
