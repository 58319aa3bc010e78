"""Exact SSSP and diameter on trees via the Euler tour reduction.

The tour of the tree becomes a directed path of virtual nodes with signed
edge weights (+w descending from the parent, -w climbing back); the path
SSSP over shortcuts then telescopes to the tree distances at every virtual
node.  The diameter runs SSSP twice: once from the highest id, once from a
farthest node, whose eccentricity is the diameter.
"""

from __future__ import annotations

from . import primitives as P
from .graphs import classify
from .netsim import ContractViolation, run

TREEISH = ("tree", "path")


def _check(graph, check):
    if check:
        cls = classify(graph).name
        if cls not in TREEISH:
            raise ContractViolation(f"expected a tree, got {cls}")


def _tree_sssp_gen(ctx, source):
    reg = P.Registry(P.slotcap(ctx.n))
    sel = [u for u, _ in ctx.neighbors]
    selw = [w for _, w in ctx.neighbors]
    run_ = yield from P.tree_machinery(ctx, reg, sel, selw,
                                       is_root=(ctx.node == source))
    return run_.dist


def tree_sssp(graph, source: int, config=None, check=True):
    """Exact distances from source on a tree; ({v: d}, Metrics)."""
    _check(graph, check)
    return run(graph, lambda ctx: _tree_sssp_gen(ctx, source), config)


def tree_diameter_gen(ctx):
    """SSSP from the highest id, then from a farthest node; every node
    returns the diameter."""
    s = ctx.n - 1
    d1 = yield from _tree_sssp_gen(ctx, s)
    far = yield from P.global_reduce(ctx, (d1, ctx.node), P.op_max)
    v = far[1]
    d2 = yield from _tree_sssp_gen(ctx, v)
    best = yield from P.global_reduce(ctx, (d2,), P.op_max)
    return best[0]


def tree_diameter(graph, config=None, check=True):
    """Exact tree diameter, known to every node; (D, Metrics)."""
    _check(graph, check)
    outputs, metrics = run(graph, tree_diameter_gen, config)
    vals = set(outputs.values())
    assert len(vals) == 1
    return vals.pop(), metrics
