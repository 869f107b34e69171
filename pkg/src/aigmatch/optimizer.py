"""Function-preserving rewrite passes and the random optimization driver
used to populate logic-equivalent groups.

Every pass rebuilds the output cone of the circuit (unreferenced logic
is dropped), keeps the input/output interface intact, and preserves the
exhaustive truth table.  Passes that make random choices take a seed and
are fully deterministic in (circuit, seed).
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from heapq import heappop, heappush

from .aig import (AND, CONST, PI, Circuit, CircuitBuilder, Node, Ref,
                  input_pattern, structurally_equal, topo_order)

STRASH = "strash"
CONST_PROP = "const_prop"
DOUBLE_NEG = "double_neg"
BALANCE = "balance"
DEMORGAN = "demorgan"
LOCAL_REWRITE = "local_rewrite"

PASS_KINDS = (STRASH, CONST_PROP, DOUBLE_NEG, BALANCE, DEMORGAN, LOCAL_REWRITE)


@dataclass(frozen=True)
class OptRecipe:
    seed: int
    passes: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.passes)

    def to_json_dict(self) -> dict:
        return {"seed": self.seed, "passes": list(self.passes)}

    @staticmethod
    def from_json_dict(d: dict) -> "OptRecipe":
        return OptRecipe(d["seed"], tuple(d["passes"]))


def _reachable(c: Circuit) -> set[int]:
    keep = set(c.inputs)
    stack = [r[0] for r in c.outputs]
    while stack:
        nid = stack.pop()
        if nid in keep:
            continue
        keep.add(nid)
        stack.extend(r[0] for r in c.nodes[nid].fanins)
    return keep


def _fanout_counts(c: Circuit, keep: set[int]) -> list[int]:
    counts = [0] * len(c.nodes)
    for nid in keep:
        for r in c.nodes[nid].fanins:
            counts[r[0]] += 1
    for r in c.outputs:
        counts[r[0]] += 1
    return counts


def _rebuild(c: Circuit, and_fn) -> Circuit:
    """Reconstruct the output cone, delegating each AND to and_fn.

    and_fn(builder, fa0, fa1) receives fanin refs already mapped into the
    new circuit and returns the ref that stands for the old node.
    """
    b = CircuitBuilder(c.name)
    mapping: dict[int, Ref] = {}
    for slot, nid in enumerate(c.inputs):
        mapping[nid] = b.add_input(c.input_names[slot])
    keep = _reachable(c)
    for nid in topo_order(c):
        node = c.nodes[nid]
        if node.kind == PI or nid not in keep:
            continue
        if node.kind == CONST:
            mapping[nid] = b.add_const()
            continue
        (a, ca), (bb, cb) = node.fanins
        fa0 = (mapping[a][0], mapping[a][1] ^ ca)
        fa1 = (mapping[bb][0], mapping[bb][1] ^ cb)
        mapping[nid] = and_fn(b, fa0, fa1)
    for (d, comp), name in zip(c.outputs, c.output_names):
        md, mc = mapping[d]
        b.add_output((md, mc ^ comp), name)
    return b.build()


def pass_strash(c: Circuit, seed: int = 0) -> Circuit:
    """Structural hashing: merge AND nodes with identical fanin pairs."""
    table: dict[tuple[Ref, Ref], Ref] = {}

    def and_fn(b: CircuitBuilder, fa0: Ref, fa1: Ref) -> Ref:
        key = tuple(sorted((fa0, fa1)))
        if key not in table:
            table[key] = b.add_and(*key)
        return table[key]

    return _rebuild(c, and_fn)


def pass_const_prop(c: Circuit, seed: int = 0) -> Circuit:
    """Constant simplification: x & 0 = 0 and x & 1 = x."""

    def and_fn(b: CircuitBuilder, fa0: Ref, fa1: Ref) -> Ref:
        cid = b._const_id
        for this, other in ((fa0, fa1), (fa1, fa0)):
            if this[0] == cid and cid is not None:
                return b.add_const() if not this[1] else other
        return b.add_and(fa0, fa1)

    return _rebuild(c, and_fn)


def pass_double_neg(c: Circuit, seed: int = 0) -> Circuit:
    """Collapse buffer nodes AND(l, l) -> l, cancelling paired inversions
    along the chains they form."""

    def and_fn(b: CircuitBuilder, fa0: Ref, fa1: Ref) -> Ref:
        if fa0 == fa1:
            return fa0
        return b.add_and(fa0, fa1)

    return _rebuild(c, and_fn)


def pass_balance(c: Circuit, seed: int = 0) -> Circuit:
    """Re-associate maximal single-fanout AND trees into depth-minimal
    balanced trees.  Depth never increases."""
    keep = _reachable(c)
    fanout = _fanout_counts(c, keep)

    consumer_edge: dict[int, tuple[int, bool]] = {}
    for nid in keep:
        for r in c.nodes[nid].fanins:
            consumer_edge[r[0]] = (nid, r[1])

    absorbed: set[int] = set()
    for nid in sorted(keep):
        node = c.nodes[nid]
        if node.kind != AND or fanout[nid] != 1 or nid not in consumer_edge:
            continue
        consumer, comp = consumer_edge[nid]
        if not comp and c.nodes[consumer].kind == AND:
            absorbed.add(nid)

    b = CircuitBuilder(c.name)
    mapping: dict[int, Ref] = {}
    level: dict[int, int] = {}
    for slot, nid in enumerate(c.inputs):
        mapping[nid] = b.add_input(c.input_names[slot])
        level[mapping[nid][0]] = 0

    def leaves_of(nid: int, out: list[Ref]) -> None:
        for (u, comp) in c.nodes[nid].fanins:
            if u in absorbed and not comp:
                leaves_of(u, out)
            else:
                out.append((mapping[u][0], mapping[u][1] ^ comp))

    seq = 0
    for nid in topo_order(c):
        node = c.nodes[nid]
        if node.kind == PI or nid not in keep or nid in absorbed:
            continue
        if node.kind == CONST:
            mapping[nid] = b.add_const()
            level[mapping[nid][0]] = 0
            continue
        leaves: list[Ref] = []
        leaves_of(nid, leaves)
        heap: list[tuple[int, int, Ref]] = []
        for r in leaves:
            heappush(heap, (level[r[0]], seq, r))
            seq += 1
        while len(heap) > 1:
            l1, _, r1 = heappop(heap)
            l2, _, r2 = heappop(heap)
            nref = b.add_and(r1, r2)
            level[nref[0]] = 1 + max(l1, l2)
            heappush(heap, (level[nref[0]], seq, nref))
            seq += 1
        mapping[nid] = heap[0][2]

    for (d, comp), name in zip(c.outputs, c.output_names):
        md, mc = mapping[d]
        b.add_output((md, mc ^ comp), name)
    return b.build()


def _xor_cone(c: Circuit, nid: int, fanout: list[int]) -> tuple[int, int, tuple] | None:
    """Match z = AND(~u, ~v) with u, v single-fanout ANDs realizing the
    two opposite-polarity products of the same literal pair."""
    node = c.nodes[nid]
    (u, cu), (v, cv) = node.fanins
    if not (cu and cv) or u == v:
        return None
    nu, nv = c.nodes[u], c.nodes[v]
    if nu.kind != AND or nv.kind != AND:
        return None
    if fanout[u] != 1 or fanout[v] != 1:
        return None
    (a, p1), (bb, p2) = nu.fanins
    fv = {r[0]: r[1] for r in nv.fanins}
    if a == bb or set(fv) != {a, bb} or len(fv) != 2:
        return None
    p3, p4 = fv[a], fv[bb]
    if p3 != (not p1) or p4 != (not p2):
        return None
    return u, v, (a, p1, bb, p2)


def pass_demorgan(c: Circuit, seed: int = 0) -> Circuit:
    """Push complements through product patterns.

    Exclusive-or cones are flipped between their minterm and maxterm
    decompositions (the two complement-dual product placements), and a
    random subset of complemented AND-to-AND edges gets an explicit
    inversion pair materialized as a double-negated buffer.
    """
    rng = random.Random(seed)
    keep = _reachable(c)
    fanout = _fanout_counts(c, keep)

    claimed: set[int] = set()
    roots: dict[int, tuple] = {}
    for nid in sorted(keep):
        if c.nodes[nid].kind != AND or nid in claimed:
            continue
        hit = _xor_cone(c, nid, fanout)
        if hit is None:
            continue
        u, v, pat = hit
        if u in claimed or v in claimed or u in roots or v in roots:
            continue
        if rng.random() < 0.5:
            roots[nid] = (u, v, pat)
            claimed.update((nid, u, v))

    absorbed = {u for (u, v, _) in roots.values()} | {v for (u, v, _) in roots.values()}
    wrap_budget = max(2, sum(1 for n in c.nodes if n.kind == AND) // 4)

    b = CircuitBuilder(c.name)
    mapping: dict[int, Ref] = {}
    for slot, nid in enumerate(c.inputs):
        mapping[nid] = b.add_input(c.input_names[slot])

    def mapped(r: Ref) -> Ref:
        return (mapping[r[0]][0], mapping[r[0]][1] ^ r[1])

    wraps = 0
    and_kinds: set[int] = set()
    for nid in topo_order(c):
        node = c.nodes[nid]
        if node.kind == PI or nid not in keep or nid in absorbed:
            continue
        if node.kind == CONST:
            mapping[nid] = b.add_const()
            continue
        if nid in roots:
            a, p1, bb, p2 = roots[nid][2]
            u2 = b.add_and(mapped((a, p1)), mapped((bb, not p2)))
            v2 = b.add_and(mapped((a, not p1)), mapped((bb, p2)))
            z2 = b.add_and((u2[0], True), (v2[0], True))
            mapping[nid] = (z2[0], True)
            and_kinds.update((u2[0], v2[0], z2[0]))
            continue
        fa = []
        for r in node.fanins:
            mr = mapped(r)
            if (mr[1] and mr[0] in and_kinds and wraps < wrap_budget
                    and rng.random() < 0.25):
                w = b.add_and((mr[0], True), (mr[0], True))
                and_kinds.add(w[0])
                mr = (w[0], False)
                wraps += 1
            fa.append(mr)
        nref = b.add_and(fa[0], fa[1])
        and_kinds.add(nref[0])
        mapping[nid] = nref

    for (d, comp), name in zip(c.outputs, c.output_names):
        md, mc = mapping[d]
        b.add_output((md, mc ^ comp), name)
    return b.build()


# --- library of alternative implementations for <=3-leaf cone functions ---

_LIB: dict[tuple[int, int], list[tuple[tuple, Ref]]] = {}


def _leaf_tables() -> list[int]:
    return [input_pattern(i, 3) for i in range(3)]


def _build_library() -> None:
    if _LIB:
        return
    full = 255
    leaf_tabs = _leaf_tables()
    frontier: list[tuple[tuple, list[int]]] = [((), leaf_tabs)]
    for level in range(3):
        nxt: list[tuple[tuple, list[int]]] = []
        for defs, tabs in frontier:
            avail = len(tabs)
            for i in range(avail):
                for j in range(i, avail):
                    for ci in (False, True):
                        for cj in (False, True):
                            ti = tabs[i] ^ (full if ci else 0)
                            tj = tabs[j] ^ (full if cj else 0)
                            ndefs = defs + ((i, ci, j, cj),)
                            ntabs = tabs + [ti & tj]
                            if level < 2:
                                nxt.append((ndefs, ntabs))
                            _register(ndefs, ntabs)
        frontier = nxt


def _register(defs: tuple, tabs: list[int]) -> None:
    full = 255
    root = len(tabs) - 1
    used_nodes = {root}
    stack = [root]
    leaf_mask = 0
    while stack:
        k = stack.pop()
        if k < 3:
            leaf_mask |= 1 << k
            continue
        i, _, j, _ = defs[k - 3]
        for t in (i, j):
            if t not in used_nodes:
                used_nodes.add(t)
                stack.append(t)
    if len(used_nodes - {0, 1, 2}) != len(defs):
        return  # dead intermediate node; a smaller structure covers this
    table = tabs[root]
    for comp in (False, True):
        key = (leaf_mask, table ^ (full if comp else 0))
        bucket = _LIB.setdefault(key, [])
        if len(bucket) < 4:
            bucket.append((defs, (root, comp)))


def _lookup_impls(leaf_mask: int, table: int) -> list[tuple[tuple, Ref]]:
    _build_library()
    out = []
    sub = leaf_mask
    # all non-empty submasks of leaf_mask, plus the constant-leaf case
    masks = []
    s = leaf_mask
    while True:
        masks.append(s)
        if s == 0:
            break
        s = (s - 1) & leaf_mask
    for mk in masks:
        out.extend(_LIB.get((mk, table), ()))
    return out


def pass_local_rewrite(c: Circuit, seed: int = 0) -> Circuit:
    """Replace random 2-3 node cones with alternative implementations of
    the same local function, drawn from the precomputed library."""
    rng = random.Random(seed)
    keep = _reachable(c)
    fanout = _fanout_counts(c, keep)
    full = 255

    claimed: set[int] = set()
    sites: dict[int, tuple[list[int], list[int], tuple, Ref]] = {}
    for nid in sorted(keep):
        if c.nodes[nid].kind != AND or nid in claimed:
            continue
        if rng.random() >= 0.35:
            continue
        members = [nid]
        queue = deque([nid])
        while queue and len(members) < 3:
            cur = queue.popleft()
            for (u, _comp) in c.nodes[cur].fanins:
                if (c.nodes[u].kind == AND and fanout[u] == 1
                        and u not in claimed and u not in members
                        and len(members) < 3):
                    members.append(u)
                    queue.append(u)
        # leaves in first-occurrence order
        mset = set(members)
        leaves: list[int] = []
        for cur in members:
            for (u, _comp) in c.nodes[cur].fanins:
                if u not in mset and u not in leaves:
                    leaves.append(u)
        if len(leaves) > 3:
            continue
        # local truth table of the cone root, plain polarity
        val: dict[int, int] = {}
        leaf_tabs = _leaf_tables()
        for slot, u in enumerate(leaves):
            val[u] = leaf_tabs[slot]

        def ev(u: int) -> int:
            if u in val:
                return val[u]
            (x, cx), (y, cy) = c.nodes[u].fanins
            vx = ev(x) ^ (full if cx else 0)
            vy = ev(y) ^ (full if cy else 0)
            val[u] = vx & vy
            return val[u]

        table = ev(nid)
        leaf_mask = (1 << len(leaves)) - 1
        impls = _lookup_impls(leaf_mask, table)
        if not impls:
            continue
        choice = rng.choice(impls)
        sites[nid] = (members, leaves, choice[0], choice[1])
        claimed.update(members)

    absorbed = set()
    for members, _, _, _ in sites.values():
        absorbed.update(m for m in members if m not in sites)

    b = CircuitBuilder(c.name)
    mapping: dict[int, Ref] = {}
    for slot, nid in enumerate(c.inputs):
        mapping[nid] = b.add_input(c.input_names[slot])

    for nid in topo_order(c):
        node = c.nodes[nid]
        if node.kind == PI or nid not in keep or nid in absorbed:
            continue
        if node.kind == CONST:
            mapping[nid] = b.add_const()
            continue
        if nid in sites:
            _members, leaves, defs, root = sites[nid]
            built: list[Ref] = [mapping[u] for u in leaves]
            while len(built) < 3:
                built.append((0, False))  # unused slot, never referenced
            for (i, ci, j, cj) in defs:
                ri = (built[i][0], built[i][1] ^ ci)
                rj = (built[j][0], built[j][1] ^ cj)
                built.append(b.add_and(ri, rj))
            mapping[nid] = (built[root[0]][0], built[root[0]][1] ^ root[1])
            continue
        (a, ca), (bb, cb) = node.fanins
        mapping[nid] = b.add_and((mapping[a][0], mapping[a][1] ^ ca),
                                 (mapping[bb][0], mapping[bb][1] ^ cb))

    for (d, comp), name in zip(c.outputs, c.output_names):
        md, mc = mapping[d]
        b.add_output((md, mc ^ comp), name)
    return b.build()


PASS_FUNCS = {
    STRASH: pass_strash,
    CONST_PROP: pass_const_prop,
    DOUBLE_NEG: pass_double_neg,
    BALANCE: pass_balance,
    DEMORGAN: pass_demorgan,
    LOCAL_REWRITE: pass_local_rewrite,
}


def make_recipe(seed: int, min_len: int = 2, max_len: int = 10) -> OptRecipe:
    if not 1 <= min_len <= max_len:
        raise ValueError("need 1 <= min_len <= max_len")
    rng = random.Random(seed)
    length = rng.randint(min_len, max_len)
    return OptRecipe(seed, tuple(rng.choice(PASS_KINDS) for _ in range(length)))


def apply_recipe(c: Circuit, recipe: OptRecipe) -> Circuit:
    rng = random.Random(recipe.seed ^ 0x5EED)
    out = c
    for kind in recipe.passes:
        out = PASS_FUNCS[kind](out, rng.randrange(1 << 30))
    return out


def optimize_with_recipe(c: Circuit, seed: int, min_len: int = 2,
                         max_len: int = 10,
                         retries: int = 8) -> tuple[Circuit, OptRecipe]:
    """Seed-derived recipe application, retrying (with fresh recipes) when
    the result is structurally identical to the input."""
    rng = random.Random(seed)
    recipe = make_recipe(rng.randrange(1 << 30), min_len, max_len)
    out = apply_recipe(c, recipe)
    for _ in range(retries):
        if not structurally_equal(out, c):
            break
        recipe = make_recipe(rng.randrange(1 << 30), min_len, max_len)
        out = apply_recipe(c, recipe)
    return out, recipe


def random_optimize(c: Circuit, seed: int, min_len: int = 2,
                    max_len: int = 10) -> Circuit:
    """Functionally identical, usually structurally distinct circuit."""
    out, _recipe = optimize_with_recipe(c, seed, min_len, max_len)
    return out
