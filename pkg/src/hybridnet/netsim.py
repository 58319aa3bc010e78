"""Round-synchronous execution engine for the hybrid network model.

Nodes communicate over two channels per round: the local network (the input
graph, lambda messages per edge direction per round) and the global clique
(gamma sends and gamma receives per node per round).  Messages sent in round
i are delivered at the beginning of round i+1.  The engine enforces both
capacities plus a per-message payload budget and records metrics.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

GLOBAL = -1  # channel marker for clique messages

_EMPTY: list = []


class SimError(Exception):
    pass


class CapacityViolation(SimError):
    """A node exceeded a communication budget under the fail_fast policy."""

    def __init__(self, round_no, node, kind, detail=""):
        self.round = round_no
        self.node = node
        self.kind = kind
        super().__init__(f"round {round_no}: node {node}: {kind} {detail}".rstrip())


class RoundLimitExceeded(SimError):
    def __init__(self, limit):
        self.limit = limit
        super().__init__(f"round limit {limit} exceeded before all nodes halted")


class ContractViolation(SimError):
    """A node program was run on a structure it does not support."""


@dataclass
class SimConfig:
    """Model parameters.  gamma and the payload budget are recomputed from n
    at the start of every run; lam is the per-edge-direction local budget."""

    lam: int = 2
    gamma_factor: int = 8
    payload_factor: int = 8
    overflow_policy: str = "fail_fast"  # or "drop_by_sender_id"
    knowledge_model: str = "NCC"  # or "NCC0"
    seed: int = 0
    round_limit: int | None = None

    def __post_init__(self):
        if self.lam < 1 or self.gamma_factor < 1 or self.payload_factor < 1:
            raise ValueError("capacity factors must be >= 1")
        if self.overflow_policy not in ("fail_fast", "drop_by_sender_id"):
            raise ValueError(f"unknown overflow_policy {self.overflow_policy!r}")
        if self.knowledge_model not in ("NCC", "NCC0"):
            raise ValueError(f"unknown knowledge_model {self.knowledge_model!r}")

    def gamma(self, n: int) -> int:
        return self.gamma_factor * self.id_bits(n)

    def id_bits(self, n: int) -> int:
        # id fields are padded to at least 3 bits: below n = 8 the model's
        # O(log n) budgets have no meaningful constants
        return math.ceil(math.log2(max(8, n)))

    def payload_bits(self, n: int) -> int:
        return self.payload_factor * self.id_bits(n)

    def round_cap(self, n: int) -> int:
        if self.round_limit is not None:
            return self.round_limit
        # the log term is floored like id_bits: below n = 16 the guard's
        # O(log^2 n) headroom has no meaningful constants
        lg = max(4, math.ceil(math.log2(max(2, n))))
        return 50 * lg * lg

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        return cls(**json.loads(text))


class Message(NamedTuple):
    src: int
    dst: int
    channel: int  # GLOBAL or, for local messages, the neighbour id
    body: tuple


@dataclass
class Metrics:
    rounds: int = 0
    local_msgs: int = 0
    global_msgs: int = 0
    per_round: list = field(default_factory=list)  # (round, local, global, max_in, max_out)
    overflow_events: list = field(default_factory=list)  # (round, node, kind)

    @property
    def max_global_out(self) -> int:
        return max((r[4] for r in self.per_round), default=0)

    @property
    def max_global_in(self) -> int:
        return max((r[3] for r in self.per_round), default=0)

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "local_msgs": self.local_msgs,
            "global_msgs": self.global_msgs,
            "max_global_in": self.max_global_in,
            "max_global_out": self.max_global_out,
            "overflow_events": list(self.overflow_events),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "local_msgs", "global_msgs", "max_in", "max_out"])
            for row in self.per_round:
                w.writerow(row)


class Ctx:
    """Per-node view handed to a node program.

    Programs may only use what is here: the node id, the sorted local
    neighbour list with weights, n, and the config.  Outgoing messages are
    queued with send_local/send_global and shipped at the next yield.
    """

    __slots__ = ("node", "n", "neighbors", "config", "out", "weight_cap")

    def __init__(self, node, n, neighbors, config, weight_cap):
        self.node = node
        self.n = n
        self.neighbors = neighbors  # list[(nbr_id, weight)] sorted by nbr_id
        self.config = config
        self.weight_cap = weight_cap  # max edge weight in the graph
        self.out = []

    def send_local(self, dst, body):
        self.out.append((dst, body, False))

    def send_global(self, dst, body):
        self.out.append((dst, body, True))

    def nbr_ids(self):
        return [u for u, _ in self.neighbors]


class NodeProgram:
    """Behavioural interface: a per-node state machine.

    Subclasses implement init() and step().  step must depend only on node
    state and the inbox.  GenProgram adapts a generator to this interface and
    is what the algorithm modules use.
    """

    def init(self, ctx: Ctx) -> None:
        raise NotImplementedError

    def step(self, round_no: int, inbox: list):
        """Return (outbox, halted, output); outbox entries are
        (dst, body, is_global)."""
        raise NotImplementedError


class GenProgram(NodeProgram):
    def __init__(self, gen_fn: Callable):
        self._gen_fn = gen_fn
        self._gen = None
        self._ctx = None

    def init(self, ctx: Ctx) -> None:
        self._ctx = ctx
        self._gen = self._gen_fn(ctx)

    def step(self, round_no: int, inbox: list):
        try:
            if round_no == 1:
                self._gen.send(None)
            else:
                self._gen.send(inbox)
        except StopIteration as stop:
            return _EMPTY, True, stop.value
        out = self._ctx.out
        self._ctx.out = []
        return out, False, None


def body_bits(body, id_bits: int) -> int:
    """Serialized size of a message body.  Ints cost max(id_bits, bit length)
    so ids, slots and counters are charged one id field while weights and
    distances are charged their true width."""
    total = 0
    for x in body:
        if type(x) is int:
            b = x.bit_length() + (1 if x < 0 else 0)
            total += b if b > id_bits else id_bits
        elif x is None:
            total += 1
        else:
            total += body_bits(x, id_bits)
    return total


def _learn_ids(known: set, body, n: int) -> None:
    for x in body:
        if type(x) is int:
            if 0 <= x < n:
                known.add(x)
        elif x is not None:
            _learn_ids(known, x, n)


def run(graph, program_factory, config: SimConfig | None = None):
    """Execute program_factory on every node of graph until all halt.

    program_factory(ctx) returns either a generator (the common case) or a
    NodeProgram.  Returns (outputs, Metrics); outputs maps node id to the
    program's return value.  Deterministic for a fixed (graph, program,
    config).
    """
    if config is None:
        config = SimConfig()
    n = graph.n
    if n < 1:
        raise ValueError("graph must have at least one node")
    gamma = config.gamma(n)
    lam = config.lam
    idb = config.id_bits(n)
    budget = config.payload_bits(n)
    cap = config.round_cap(n)
    fail_fast = config.overflow_policy == "fail_fast"
    ncc0 = config.knowledge_model == "NCC0"
    weight_cap = max((w for _, _, w in graph.edge_list()), default=1)

    metrics = Metrics()
    programs = {}
    nbr_sets = []
    known = []
    for v in range(n):
        ctx = Ctx(v, n, graph.adjacency[v], config, weight_cap)
        prog = program_factory(ctx)
        if not isinstance(prog, NodeProgram):
            gen = prog
            prog = GenProgram(lambda c, _g=gen: _g)
            prog._gen = gen
            prog._ctx = ctx
        else:
            prog.init(ctx)
        programs[v] = prog
        nbr_sets.append({u for u, _ in graph.adjacency[v]})
        if ncc0:
            known.append({v} | nbr_sets[v])

    outputs = {}
    inboxes = [_EMPTY] * n
    alive = list(range(n))
    round_no = 0

    while alive:
        round_no += 1
        if round_no > cap:
            raise RoundLimitExceeded(cap)
        locals_cnt = 0
        pending_global = {}
        next_inboxes = [None] * n
        edge_counts = {}
        out_counts = {}
        still_alive = []

        for v in alive:
            inbox = inboxes[v]
            outbox, halted, output = programs[v].step(round_no, inbox)
            if halted:
                outputs[v] = output
            else:
                still_alive.append(v)
            if not outbox:
                continue
            nbrs = nbr_sets[v]
            gout = 0
            for dst, body, is_global in outbox:
                if body_bits(body, idb) > budget:
                    metrics.overflow_events.append((round_no, v, "payload"))
                    if fail_fast:
                        metrics.rounds = round_no
                        raise CapacityViolation(round_no, v, "payload", repr(body))
                    continue
                if is_global:
                    if dst == v:
                        # a node simulating several participants talks to
                        # itself without using the network
                        box = next_inboxes[v]
                        if box is None:
                            box = next_inboxes[v] = []
                        box.append((v, body))
                        continue
                    if ncc0 and dst not in known[v]:
                        metrics.overflow_events.append((round_no, v, "ncc0_unknown_dst"))
                        if fail_fast:
                            metrics.rounds = round_no
                            raise CapacityViolation(round_no, v, "ncc0_unknown_dst", str(dst))
                        continue
                    gout += 1
                    if gout > gamma:
                        metrics.overflow_events.append((round_no, v, "global_send"))
                        if fail_fast:
                            metrics.rounds = round_no
                            raise CapacityViolation(round_no, v, "global_send")
                        continue
                    pending_global.setdefault(dst, []).append((v, body))
                else:
                    if dst not in nbrs:
                        raise ContractViolation(
                            f"node {v} sent local message to non-neighbor {dst}")
                    key = v * n + dst
                    c = edge_counts.get(key, 0) + 1
                    edge_counts[key] = c
                    if c > lam:
                        metrics.overflow_events.append((round_no, v, "local_edge"))
                        if fail_fast:
                            metrics.rounds = round_no
                            raise CapacityViolation(round_no, v, "local_edge", f"edge ({v},{dst})")
                        continue
                    locals_cnt += 1
                    box = next_inboxes[dst]
                    if box is None:
                        box = next_inboxes[dst] = []
                    box.append((v, body))
            if gout:
                out_counts[v] = gout

        globals_cnt = 0
        max_in = 0
        for dst in sorted(pending_global):
            msgs = pending_global[dst]
            cnt = len(msgs)
            if cnt > max_in:
                max_in = cnt
            if cnt > gamma:
                metrics.overflow_events.append((round_no, dst, "global_recv"))
                if fail_fast:
                    metrics.rounds = round_no
                    raise CapacityViolation(round_no, dst, "global_recv", f"{cnt} > {gamma}")
                msgs = msgs[:gamma]  # already ordered by (sender id, emission)
                cnt = gamma
            globals_cnt += cnt
            box = next_inboxes[dst]
            if box is None:
                next_inboxes[dst] = list(msgs)
            else:
                box.extend(msgs)
            if ncc0:
                k = known[dst]
                for src, body in msgs:
                    k.add(src)
                    _learn_ids(k, body, n)

        if ncc0 and locals_cnt:
            for dst in range(n):
                box = next_inboxes[dst]
                if box:
                    k = known[dst]
                    for src, body in box:
                        k.add(src)
                        _learn_ids(k, body, n)

        max_out = max(out_counts.values(), default=0)
        metrics.local_msgs += locals_cnt
        metrics.global_msgs += globals_cnt
        metrics.per_round.append((round_no, locals_cnt, globals_cnt, max_in, max_out))
        inboxes = [box if box is not None else _EMPTY for box in next_inboxes]
        alive = still_alive

    metrics.rounds = round_no
    return outputs, metrics


def enforce_capacities(outboxes: dict, config: SimConfig, n: int, neighbors: dict | None = None):
    """Apply the capacity rules to one round of outboxes.

    outboxes maps sender id to a list of (dst, body, is_global).  Returns
    (delivered, violations) where delivered maps receiver id to the ordered
    surviving messages and violations is a list of (node, kind).  Under
    fail_fast the violations are reported instead of dropping; surviving
    message order is stable by (sender id, emission index).
    """
    gamma = config.gamma(n)
    lam = config.lam
    idb = config.id_bits(n)
    budget = config.payload_bits(n)
    drop = config.overflow_policy == "drop_by_sender_id"
    violations = []
    delivered = {}
    pending = {}
    for src in sorted(outboxes):
        edge_counts = {}
        gout = 0
        for dst, body, is_global in outboxes[src]:
            if body_bits(body, idb) > budget:
                violations.append((src, "payload"))
                if drop:
                    continue
            if is_global:
                gout += 1
                if gout > gamma:
                    violations.append((src, "global_send"))
                    if drop:
                        continue
                pending.setdefault(dst, []).append((src, body))
            else:
                if neighbors is not None and dst not in neighbors.get(src, ()):
                    raise ContractViolation(f"{src} -> {dst} is not a local edge")
                c = edge_counts.get(dst, 0) + 1
                edge_counts[dst] = c
                if c > lam:
                    violations.append((src, "local_edge"))
                    if drop:
                        continue
                delivered.setdefault(dst, []).append((src, body))
    for dst in sorted(pending):
        msgs = pending[dst]
        if len(msgs) > gamma:
            violations.append((dst, "global_recv"))
            if drop:
                msgs = msgs[:gamma]
        delivered.setdefault(dst, []).extend(msgs)
    return delivered, violations
