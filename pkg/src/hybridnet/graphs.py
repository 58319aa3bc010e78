"""Weighted graph model, per-class generators, exact classifier, and the
sequential shortest-path oracle used as ground truth.

The oracle is plain single-machine Dijkstra (scipy.sparse.csgraph) and shares
no code with the distributed implementations.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

CLASSES = ("path", "cycle", "tree", "pseudotree", "cactus", "sparse", "other")


class GraphError(ValueError):
    pass


class WeightedGraph:
    """Undirected connected graph, integer weights in {1..W} (weight 0 is
    reserved for internal virtual edges), no self-loops or parallel edges."""

    __slots__ = ("n", "edges", "adjacency", "_csr")

    def __init__(self, n: int, edges):
        self.n = n
        self.edges = {}
        adj = [[] for _ in range(n)]
        for u, v, w in edges:
            if u == v:
                raise GraphError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) out of range")
            key = (u, v) if u < v else (v, u)
            if key in self.edges:
                raise GraphError(f"parallel edge {key}")
            if w < 0:
                raise GraphError(f"negative weight on {key}")
            self.edges[key] = w
            adj[u].append((v, w))
            adj[v].append((u, w))
        for lst in adj:
            lst.sort()
        self.adjacency = adj
        self._csr = None

    @property
    def m(self) -> int:
        return len(self.edges)

    def weight(self, u, v) -> int:
        return self.edges[(u, v) if u < v else (v, u)]

    def has_edge(self, u, v) -> bool:
        return ((u, v) if u < v else (v, u)) in self.edges

    def edge_list(self):
        return [(u, v, w) for (u, v), w in self.edges.items()]

    def degree(self, v) -> int:
        return len(self.adjacency[v])

    def max_weight(self) -> int:
        return max(self.edges.values(), default=1)

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        if not self.edges:
            return False
        ncomp, _ = connected_components(self._matrix(), directed=False)
        return ncomp == 1

    def validate(self, max_weight_exponent: int = 4) -> None:
        if not self.is_connected():
            raise GraphError("graph is not connected")
        cap = max(2, self.n) ** max_weight_exponent
        if self.max_weight() > cap:
            raise GraphError(f"weight exceeds n^{max_weight_exponent}")

    def _matrix(self):
        if self._csr is None:
            us, vs, ws = [], [], []
            for (u, v), w in self.edges.items():
                us.append(u)
                vs.append(v)
                ws.append(w)
            data = np.array(ws + ws, dtype=np.float64)
            row = np.array(us + vs, dtype=np.int32)
            col = np.array(vs + us, dtype=np.int32)
            self._csr = csr_matrix((data, (row, col)), shape=(self.n, self.n))
        return self._csr

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"{self.n} {self.m}\n")
            for (u, v), w in sorted(self.edges.items()):
                fh.write(f"{u} {v} {w}\n")

    @classmethod
    def from_file(cls, path) -> "WeightedGraph":
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise GraphError("first line must be 'n m'")
            n, m = int(header[0]), int(header[1])
            edges = []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 3:
                    raise GraphError(f"bad edge line {line!r}")
                edges.append((int(parts[0]), int(parts[1]), int(parts[2])))
        if len(edges) != m:
            raise GraphError(f"expected {m} edges, found {len(edges)}")
        return cls(n, edges)


@dataclass
class GraphClass:
    name: str
    evidence: dict = field(default_factory=dict)

    def __eq__(self, other):
        if isinstance(other, str):
            return self.name == other
        return isinstance(other, GraphClass) and self.name == other.name


@dataclass
class OracleTables:
    distances: dict  # source -> np.ndarray
    eccentricities: np.ndarray | None = None
    diameter: int | None = None


# ---------------------------------------------------------------------------
# Oracle (sequential Dijkstra; independent of all distributed code paths)
# ---------------------------------------------------------------------------

def oracle_sssp(graph: WeightedGraph, s: int) -> list[int]:
    if graph.n == 1:
        return [0]
    dist = dijkstra(graph._matrix(), directed=False, indices=s)
    if np.isinf(dist).any():
        raise GraphError("graph is not connected")
    return [int(d) for d in dist]


def oracle_all_pairs(graph: WeightedGraph) -> np.ndarray:
    if graph.n == 1:
        return np.zeros((1, 1))
    mat = dijkstra(graph._matrix(), directed=False)
    if np.isinf(mat).any():
        raise GraphError("graph is not connected")
    return mat


def oracle_eccentricities(graph: WeightedGraph) -> list[int]:
    return [int(e) for e in oracle_all_pairs(graph).max(axis=1)]


def oracle_diameter(graph: WeightedGraph) -> int:
    return int(oracle_all_pairs(graph).max())


def oracle_apsp(graph: WeightedGraph, subset) -> dict:
    """Exact pairwise distances restricted to subset, keyed (u, v)."""
    subset = sorted(subset)
    if not subset:
        return {}
    mat = dijkstra(graph._matrix(), directed=False, indices=subset) if graph.n > 1 \
        else np.zeros((1, 1))
    out = {}
    for i, u in enumerate(subset):
        for v in subset:
            d = mat[i][v]
            if math.isinf(d):
                raise GraphError("graph is not connected")
            out[(u, v)] = int(d)
    return out


def oracle_nearest(graph: WeightedGraph, targets) -> dict:
    """Per node: (distance to nearest target, highest-id nearest target)."""
    targets = sorted(targets)
    mat = dijkstra(graph._matrix(), directed=False, indices=targets) if graph.n > 1 \
        else np.zeros((1, 1))
    out = {}
    for v in range(graph.n):
        bestd = min(int(mat[i][v]) for i in range(len(targets)))
        bestt = max(t for i, t in enumerate(targets) if int(mat[i][v]) == bestd)
        out[v] = (bestd, bestt)
    return out


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def degeneracy_orientation_bound(graph: WeightedGraph) -> int:
    """Degeneracy via repeated min-degree peeling; arboricity <= degeneracy."""
    n = graph.n
    deg = [graph.degree(v) for v in range(n)]
    removed = [False] * n
    buckets: dict[int, set] = {}
    for v in range(n):
        buckets.setdefault(deg[v], set()).add(v)
    k = 0
    for _ in range(n):
        d = 0
        while d not in buckets or not buckets[d]:
            d += 1
        v = buckets[d].pop()
        k = max(k, d)
        removed[v] = True
        for u, _ in graph.adjacency[v]:
            if not removed[u]:
                buckets[deg[u]].discard(u)
                deg[u] -= 1
                buckets.setdefault(deg[u], set()).add(u)
    return k


def _spanning_tree_parents(graph: WeightedGraph):
    """BFS spanning tree; returns (parent, depth, order)."""
    n = graph.n
    parent = [-1] * n
    depth = [0] * n
    seen = [False] * n
    seen[0] = True
    order = [0]
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        for u, _ in graph.adjacency[v]:
            if not seen[u]:
                seen[u] = True
                parent[u] = v
                depth[u] = depth[v] + 1
                order.append(u)
    if len(order) != n:
        raise GraphError("graph is not connected")
    return parent, depth, order


def _cycle_edge_cover_counts(graph: WeightedGraph):
    """Count, per edge, how many fundamental cycles contain it.  Returns
    (counts dict, offending edge or None).  Early-aborts on a double cover."""
    parent, depth, _ = _spanning_tree_parents(graph)
    tree = set()
    for v in range(graph.n):
        if parent[v] >= 0:
            tree.add((v, parent[v]) if v < parent[v] else (parent[v], v))
    counts = {e: 0 for e in graph.edges}
    for (u, v) in graph.edges:
        if (u, v) in tree:
            continue
        counts[(u, v)] += 1
        a, b = u, v
        while a != b:
            if depth[a] < depth[b]:
                a, b = b, a
            e = (a, parent[a]) if a < parent[a] else (parent[a], a)
            counts[e] += 1
            if counts[e] > 1:
                return counts, e
            a = parent[a]
    return counts, None


def classify(graph: WeightedGraph, sparse_extra_factor: float = 1.0) -> GraphClass:
    n, m = graph.n, graph.m
    if not graph.is_connected():
        raise GraphError("graph is not connected")
    degs = [graph.degree(v) for v in range(n)]
    if n >= 2 and m == n - 1 and sorted(degs) == [1, 1] + [2] * (n - 2):
        return GraphClass("path")
    if n >= 3 and m == n and all(d == 2 for d in degs):
        return GraphClass("cycle")
    if m == n - 1:
        return GraphClass("tree")
    if m <= n:
        return GraphClass("pseudotree")
    counts, offender = _cycle_edge_cover_counts(graph)
    if offender is None:
        return GraphClass("cactus")
    extra_cap = math.ceil(sparse_extra_factor * n ** (1.0 / 3.0))
    if m <= n + extra_cap and degeneracy_orientation_bound(graph) <= max(1, math.ceil(math.log2(max(2, n)))):
        return GraphClass("sparse", {"extra_edges": m - (n - 1)})
    return GraphClass("other", {"edge_on_two_cycles": offender})


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def _random_weights(rng, count, weight_range):
    lo, hi = weight_range
    if lo < 1 or hi < lo:
        raise GraphError(f"bad weight range {weight_range}")
    return [rng.randint(lo, hi) for _ in range(count)]


def _random_tree_edges(rng, n):
    """Random attachment tree on labels 0..n-1 (labels permuted later)."""
    return [(v, rng.randrange(v)) for v in range(1, n)]


def _permute(n, edges, rng):
    perm = list(range(n))
    rng.shuffle(perm)
    return [(perm[u], perm[v], w) for u, v, w in edges]


def _tree_paths_not_in_cycles(adj, n, rng, in_cycle, tries):
    """Pick a tree path whose edges are all cycle-free; return it or None."""
    for _ in range(tries):
        a = rng.randrange(n)
        b = rng.randrange(n)
        if a == b:
            continue
        # BFS in the tree
        prev = {a: None}
        queue = [a]
        qi = 0
        while qi < len(queue):
            x = queue[qi]
            qi += 1
            if x == b:
                break
            for y in adj[x]:
                if y not in prev:
                    prev[y] = x
                    queue.append(y)
        path = [b]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        if len(path) < 3:
            continue
        ok = all(
            (min(path[i], path[i + 1]), max(path[i], path[i + 1])) not in in_cycle
            for i in range(len(path) - 1)
        )
        if ok:
            return path
    return None


def generate(cls: str, n: int, weight_range=(1, 100), seed: int = 0, **params) -> WeightedGraph:
    """Generate a connected instance of the requested class; the result
    re-classifies as that class."""
    rng = random.Random(seed)
    if n < 2:
        raise GraphError("n must be >= 2")
    if cls == "path":
        ws = _random_weights(rng, n - 1, weight_range)
        edges = [(i, i + 1, ws[i]) for i in range(n - 1)]
        return WeightedGraph(n, _permute(n, edges, rng))
    if cls == "cycle":
        if n < 3:
            raise GraphError("cycle needs n >= 3")
        ws = _random_weights(rng, n, weight_range)
        edges = [(i, (i + 1) % n, ws[i]) for i in range(n)]
        return WeightedGraph(n, _permute(n, edges, rng))
    if cls == "tree":
        ws = _random_weights(rng, n - 1, weight_range)
        edges = [(u, v, ws[i]) for i, (u, v) in enumerate(_random_tree_edges(rng, n))]
        return WeightedGraph(n, _permute(n, edges, rng))
    if cls == "pseudotree":
        if n < 3:
            raise GraphError("pseudotree with a cycle needs n >= 3")
        cyc_default = max(3, min(n, round(math.sqrt(n))))
        k = params.get("cycle_len", rng.randint(3, max(3, cyc_default)))
        if not (3 <= k <= n):
            raise GraphError(f"cycle_len {k} out of range")
        edges = [(i, (i + 1) % k) for i in range(k)]
        for v in range(k, n):
            edges.append((v, rng.randrange(v)))
        ws = _random_weights(rng, len(edges), weight_range)
        edges = [(u, v, ws[i]) for i, (u, v) in enumerate(edges)]
        return WeightedGraph(n, _permute(n, edges, rng))
    if cls == "cactus":
        if n < 5:
            raise GraphError("cactus with >= 2 cycles needs n >= 5")
        want = params.get("cycles", max(2, n // 8))
        for attempt in range(64):
            sub = random.Random(seed * 2000003 + attempt)
            tree = _random_tree_edges(sub, n)
            adj = [[] for _ in range(n)]
            for u, v in tree:
                adj[u].append(v)
                adj[v].append(u)
            in_cycle = set()
            extra = []
            for _ in range(3 * want):
                if len(extra) >= want:
                    break
                path = _tree_paths_not_in_cycles(adj, n, sub, in_cycle, tries=12)
                if path is None:
                    continue
                extra.append((path[0], path[-1]))
                for i in range(len(path) - 1):
                    a, b = path[i], path[i + 1]
                    in_cycle.add((min(a, b), max(a, b)))
            if len(extra) < 2:
                continue  # would reclassify as tree/pseudotree
            all_edges = tree + extra
            ws = _random_weights(sub, len(all_edges), weight_range)
            edges = [(u, v, ws[i]) for i, (u, v) in enumerate(all_edges)]
            return WeightedGraph(n, _permute(n, edges, sub))
        raise GraphError("could not place two cycles; raise n or cycles param")
    if cls == "sparse":
        cap = math.ceil(params.get("extra_factor", 1.0) * n ** (1.0 / 3.0))
        extras = params.get("extra_edges", cap)
        if extras > cap:
            raise GraphError(f"extra_edges {extras} exceeds cap {cap}")
        arb_cap = max(1, math.ceil(math.log2(max(2, n))))
        for attempt in range(64):
            sub = random.Random(seed * 1000003 + attempt)
            tree = _random_tree_edges(sub, n)
            have = {(min(u, v), max(u, v)) for u, v in tree}
            added = []
            guard = 0
            while len(added) < extras and guard < 50 * (extras + 1):
                guard += 1
                a, b = sub.randrange(n), sub.randrange(n)
                if a == b:
                    continue
                key = (min(a, b), max(a, b))
                if key in have:
                    continue
                have.add(key)
                added.append(key)
            if len(added) < extras:
                continue
            all_edges = tree + added
            ws = _random_weights(sub, len(all_edges), weight_range)
            g = WeightedGraph(n, _permute(n, [(u, v, ws[i]) for i, (u, v) in enumerate(all_edges)], sub))
            if degeneracy_orientation_bound(g) <= arb_cap:
                return g
        raise GraphError("could not satisfy sparse arboricity bound")
    raise GraphError(f"unknown class {cls!r}")
