"""Graph preprocessing and encoding for the classifier.

Two independent choices mirror the preprocessing ablations:

* inverter mode -- "with" materializes one explicit inverter node per
  complemented edge; "without" additionally drops those 2-degree nodes,
  erasing all polarity information and making the encoding blind to
  negation transforms.
* direction mode -- "digraph" keeps fanin-to-fanout edges; "bidigraph"
  adds the reversed edges so aggregation also reaches fanouts.

Primary outputs become explicit sink nodes.  Each node carries a fixed
10-dimensional feature vector and the adjacency is symmetrically degree
normalized over the self-loop-augmented edge set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aig import AND, CONST, PI, Circuit

INV = "inv"
PO = "po"

FEATURE_DIM = 10

WITH_INVERTERS = "with"
WITHOUT_INVERTERS = "without"
DIGRAPH = "digraph"
BIDIGRAPH = "bidigraph"


@dataclass(frozen=True)
class GateGraph:
    """Explicit-inverter view of a circuit: plain edges, no complement flags."""

    name: str
    kinds: tuple[str, ...]
    fanins: tuple[tuple[int, ...], ...]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]   # driver node per output slot

    @property
    def num_nodes(self) -> int:
        return len(self.kinds)

    def num_inverters(self) -> int:
        return sum(1 for k in self.kinds if k == INV)


def materialize_inverters(c: Circuit) -> GateGraph:
    """Replace every complemented edge by its own explicit inverter node."""
    kinds = [n.kind for n in c.nodes]
    fanins: list[list[int]] = [[] for _ in c.nodes]

    def resolve(ref) -> int:
        nid, comp = ref
        if not comp:
            return nid
        kinds.append(INV)
        fanins.append([nid])
        return len(kinds) - 1

    for nid, node in enumerate(c.nodes):
        fanins[nid] = [resolve(r) for r in node.fanins]
    outputs = tuple(resolve(r) for r in c.outputs)
    return GateGraph(c.name, tuple(kinds), tuple(tuple(f) for f in fanins),
                     c.inputs, outputs)


def drop_two_degree(g: GateGraph) -> GateGraph:
    """Remove nodes with one fan-in and one fan-out, reconnecting directly."""
    out_deg = [0] * g.num_nodes
    for fans in g.fanins:
        for u in fans:
            out_deg[u] += 1
    for u in g.outputs:
        out_deg[u] += 1

    forward: dict[int, int] = {}
    for nid in range(g.num_nodes):
        if len(g.fanins[nid]) == 1 and out_deg[nid] == 1:
            forward[nid] = g.fanins[nid][0]

    def chase(nid: int) -> int:
        while nid in forward:
            nid = forward[nid]
        return nid

    keep = [nid for nid in range(g.num_nodes) if nid not in forward]
    remap = {old: new for new, old in enumerate(keep)}
    kinds = tuple(g.kinds[old] for old in keep)
    fanins = tuple(tuple(remap[chase(u)] for u in g.fanins[old]) for old in keep)
    inputs = tuple(remap[i] for i in g.inputs)
    outputs = tuple(remap[chase(u)] for u in g.outputs)
    return GateGraph(g.name, kinds, fanins, inputs, outputs)


def simulate_gate_graph(g: GateGraph, assignment: list[int]) -> list[int]:
    """Reference evaluation of the explicit-inverter view (tests and audits)."""
    values: dict[int, int] = {}
    for slot, nid in enumerate(g.inputs):
        values[nid] = assignment[slot]

    def ev(nid: int) -> int:
        if nid in values:
            return values[nid]
        kind = g.kinds[nid]
        fans = g.fanins[nid]
        if kind == CONST:
            v = 0
        elif kind == INV:
            v = 1 - ev(fans[0])
        else:
            v = ev(fans[0]) & ev(fans[1])
        values[nid] = v
        return v

    return [ev(u) for u in g.outputs]


@dataclass(eq=False)
class EncodedGraph:
    num_nodes: int
    edges: tuple[tuple[int, int], ...]      # (src, dst), no self loops
    features: np.ndarray                    # (num_nodes, FEATURE_DIM)
    norm_adj: np.ndarray                    # (num_nodes, num_nodes), row = receiver
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"num_nodes": self.num_nodes,
                "edges": [list(e) for e in self.edges],
                "features": self.features.tolist(),
                "meta": dict(self.meta)}


_KIND_SLOT = {PI: 0, CONST: 0, AND: 1, INV: 2, PO: 3}


def encode(c: Circuit, direction: str = BIDIGRAPH,
           inverter_mode: str = WITH_INVERTERS,
           label: int | None = None) -> EncodedGraph:
    """Build the model-facing graph for one circuit."""
    if direction not in (DIGRAPH, BIDIGRAPH):
        raise ValueError(f"unknown direction {direction!r}")
    if inverter_mode not in (WITH_INVERTERS, WITHOUT_INVERTERS):
        raise ValueError(f"unknown inverter mode {inverter_mode!r}")

    view = materialize_inverters(c)
    if inverter_mode == WITHOUT_INVERTERS:
        view = drop_two_degree(view)

    n_view = view.num_nodes
    kinds = list(view.kinds) + [PO] * len(view.outputs)
    fanins = [list(f) for f in view.fanins] + [[u] for u in view.outputs]
    n = len(kinds)

    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for dst, fans in enumerate(fanins):
        for src in fans:
            e = (src, dst)
            if e not in seen:
                seen.add(e)
                edges.append(e)
    base_edges = tuple(edges)
    if direction == BIDIGRAPH:
        edges = edges + [(d, s) for (s, d) in base_edges]

    # features
    in_deg = np.zeros(n)
    out_deg = np.zeros(n)
    for s, d in base_edges:
        in_deg[d] += 1
        out_deg[s] += 1
    lvl = np.zeros(n)
    for nid in range(n):
        if fanins[nid]:
            lvl[nid] = 1 + max(lvl[u] for u in fanins[nid])
    max_in = in_deg.max() or 1.0
    max_out = out_deg.max() or 1.0
    max_lvl = lvl.max() or 1.0

    inv_in = np.zeros(n)
    inv_out = np.zeros(n)
    for s, d in base_edges:
        if kinds[s] == INV:
            inv_in[d] += 1
        if kinds[d] == INV:
            inv_out[s] += 1

    feats = np.zeros((n, FEATURE_DIM))
    for nid in range(n):
        feats[nid, _KIND_SLOT[kinds[nid]]] = 1.0
        feats[nid, 4] = in_deg[nid] / max_in
        feats[nid, 5] = out_deg[nid] / max_out
        feats[nid, 6] = lvl[nid] / max_lvl
        feats[nid, 7] = inv_in[nid] / in_deg[nid] if in_deg[nid] else 0.0
        feats[nid, 8] = inv_out[nid] / out_deg[nid] if out_deg[nid] else 0.0
        feats[nid, 9] = 1.0

    # symmetric degree normalization over the self-loop-augmented edges
    neighbors: list[set[int]] = [set() for _ in range(n)]
    for s, d in edges:
        neighbors[s].add(d)
        neighbors[d].add(s)
    deg = np.array([len(nb - {i}) for i, nb in enumerate(neighbors)], dtype=float)
    inv_sqrt = 1.0 / np.sqrt(deg + 1.0)
    adj = np.zeros((n, n))
    for s, d in edges:
        adj[d, s] = inv_sqrt[d] * inv_sqrt[s]
    for i in range(n):
        adj[i, i] = inv_sqrt[i] * inv_sqrt[i]

    meta = {"name": c.name, "direction": direction,
            "inverter_mode": inverter_mode, "num_view_nodes": n_view}
    if label is not None:
        meta["label"] = label
    return EncodedGraph(n, tuple(edges), feats, adj, meta)
