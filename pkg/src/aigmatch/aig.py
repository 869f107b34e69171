"""And-Inverter Graph core: data model, AIGER ASCII I/O, ordering, simulation.

A circuit is a DAG of two-input AND nodes over primary inputs, with
inversion carried on edges as complement flags.  Primary outputs are
(driver, complemented) pairs, not nodes.  Everything here is immutable
and pure, so values can be shared freely across threads.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

Ref = tuple[int, bool]  # (node id, complemented edge)

CONST = "const"
PI = "pi"
AND = "and"


class AigError(Exception):
    """Base class for circuit format and validity errors."""


class MalformedHeader(AigError):
    pass


class LatchesUnsupported(AigError):
    pass


class DanglingReference(AigError):
    pass


class CycleDetected(AigError):
    pass


class TooManyInputs(AigError):
    pass


@dataclass(frozen=True)
class Node:
    kind: str
    fanins: tuple[Ref, ...] = ()


@dataclass(frozen=True)
class Circuit:
    name: str
    nodes: tuple[Node, ...]
    inputs: tuple[int, ...]        # PI node ids in declaration order
    outputs: tuple[Ref, ...]       # PO drivers
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]

    @property
    def num_inputs(self) -> int:
        return len(self.inputs)

    @property
    def num_outputs(self) -> int:
        return len(self.outputs)

    @property
    def num_ands(self) -> int:
        return sum(1 for n in self.nodes if n.kind == AND)

    def rename(self, name: str) -> "Circuit":
        return Circuit(name, self.nodes, self.inputs, self.outputs,
                       self.input_names, self.output_names)


@dataclass(frozen=True)
class TruthTable:
    """Exhaustive function fingerprint: one 2^n-bit integer per output.

    Bit k of output j is the value of PO j on the k-th input assignment,
    where input i contributes bit i of k (input 0 is least-significant).
    """

    num_vars: int
    bits: tuple[int, ...]

    @property
    def num_funcs(self) -> int:
        return len(self.bits)

    def to_hex(self) -> tuple[str, ...]:
        width = max(1, (1 << self.num_vars) // 4)
        return tuple(format(b, "x").zfill(width) for b in self.bits)


@dataclass(frozen=True)
class Signature:
    """Random-vector fingerprint; equal functions give equal signatures."""

    seed: int
    num_vars: int
    words: tuple[tuple[int, ...], ...]  # per output, 64-bit words

    @property
    def num_funcs(self) -> int:
        return len(self.words)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


class CircuitBuilder:
    """Incremental construction helper; node ids stay topologically sorted."""

    def __init__(self, name: str = ""):
        self.name = name
        self._nodes: list[Node] = []
        self._inputs: list[int] = []
        self._outputs: list[Ref] = []
        self._input_names: list[str] = []
        self._output_names: list[str] = []
        self._const_id: int | None = None

    def add_input(self, name: str | None = None) -> Ref:
        nid = len(self._nodes)
        self._nodes.append(Node(PI))
        self._inputs.append(nid)
        self._input_names.append(name if name is not None else f"i{len(self._inputs) - 1}")
        return (nid, False)

    def add_const(self) -> Ref:
        if self._const_id is None:
            self._const_id = len(self._nodes)
            self._nodes.append(Node(CONST))
        return (self._const_id, False)

    def add_and(self, a: Ref, b: Ref) -> Ref:
        nid = len(self._nodes)
        self._nodes.append(Node(AND, (a, b)))
        return (nid, False)

    def add_output(self, ref: Ref, name: str | None = None) -> None:
        self._outputs.append(ref)
        self._output_names.append(name if name is not None else f"o{len(self._outputs) - 1}")

    # composite gates, complements stay on edges
    def g_not(self, a: Ref) -> Ref:
        return (a[0], not a[1])

    def g_or(self, a: Ref, b: Ref) -> Ref:
        return self.g_not(self.add_and(self.g_not(a), self.g_not(b)))

    def g_xor(self, a: Ref, b: Ref) -> Ref:
        p = self.add_and(a, self.g_not(b))
        q = self.add_and(self.g_not(a), b)
        return self.g_not(self.add_and(self.g_not(p), self.g_not(q)))

    def build(self) -> Circuit:
        return Circuit(self.name, tuple(self._nodes), tuple(self._inputs),
                       tuple(self._outputs), tuple(self._input_names),
                       tuple(self._output_names))


def validate(c: Circuit) -> list[Violation]:
    """Check all circuit invariants; an empty list means valid."""
    out: list[Violation] = []
    n = len(c.nodes)

    def ok_ref(r: Ref) -> bool:
        return isinstance(r, tuple) and 0 <= r[0] < n

    if c.num_inputs < 1:
        out.append(Violation("NoInputs", "circuit has no primary inputs"))
    if c.num_outputs < 1:
        out.append(Violation("NoOutputs", "circuit has no primary outputs"))

    const_count = 0
    for i, node in enumerate(c.nodes):
        if node.kind == AND:
            if len(node.fanins) != 2:
                out.append(Violation("BadArity", f"AND node {i} has {len(node.fanins)} fan-ins"))
            for r in node.fanins:
                if not ok_ref(r):
                    out.append(Violation("DanglingReference", f"node {i} references {r}"))
        elif node.kind in (PI, CONST):
            if node.fanins:
                out.append(Violation("BadArity", f"{node.kind} node {i} has fan-ins"))
            if node.kind == CONST:
                const_count += 1
        else:
            out.append(Violation("UnknownKind", f"node {i} kind {node.kind!r}"))
    if const_count > 1:
        out.append(Violation("MultipleConstants", f"{const_count} constant nodes"))

    for j, r in enumerate(c.outputs):
        if not ok_ref(r):
            out.append(Violation("DanglingReference", f"output {j} references {r}"))

    pi_ids = {i for i, node in enumerate(c.nodes) if node.kind == PI}
    if set(c.inputs) != pi_ids or len(set(c.inputs)) != len(c.inputs):
        out.append(Violation("BadInputList", "input declaration list does not enumerate the PI nodes"))

    # Kahn pass over well-formed references only; leftovers are cycles.
    remaining = {}
    fanouts: dict[int, list[int]] = {}
    ready = []
    for i, node in enumerate(c.nodes):
        refs = [r for r in node.fanins if ok_ref(r)]
        remaining[i] = len(refs)
        if not refs:
            ready.append(i)
        for r in refs:
            fanouts.setdefault(r[0], []).append(i)
    seen = 0
    queue = deque(ready)
    while queue:
        u = queue.popleft()
        seen += 1
        for v in fanouts.get(u, ()):
            remaining[v] -= 1
            if remaining[v] == 0:
                queue.append(v)
    if seen != n:
        stuck = sorted(i for i, k in remaining.items() if k > 0)
        out.append(Violation("CycleDetected", f"nodes {stuck} lie on a cycle"))
    return out


def topo_order(c: Circuit, method: str = "bfs") -> list[int]:
    """Topological order of all nodes by Kahn traversal.

    method "bfs" uses a FIFO frontier, "dfs" a LIFO one.  Sources are
    seeded with the PIs in declaration order (then any constant node);
    simultaneous ready nodes are taken in ascending id order.
    """
    if method not in ("bfs", "dfs"):
        raise ValueError(f"unknown method {method!r}")
    n = len(c.nodes)
    remaining = [len(node.fanins) for node in c.nodes]
    fanouts: list[list[int]] = [[] for _ in range(n)]
    for i, node in enumerate(c.nodes):
        for r in node.fanins:
            fanouts[r[0]].append(i)

    seeds = list(c.inputs) + [i for i, node in enumerate(c.nodes)
                              if node.kind != PI and remaining[i] == 0]
    order: list[int] = []
    if method == "bfs":
        queue = deque(seeds)
        while queue:
            u = queue.popleft()
            order.append(u)
            batch = []
            for v in fanouts[u]:
                remaining[v] -= 1
                if remaining[v] == 0:
                    batch.append(v)
            queue.extend(sorted(batch))
    else:
        stack = list(reversed(seeds))
        while stack:
            u = stack.pop()
            order.append(u)
            batch = []
            for v in fanouts[u]:
                remaining[v] -= 1
                if remaining[v] == 0:
                    batch.append(v)
            stack.extend(sorted(batch, reverse=True))
    if len(order) != n:
        raise CycleDetected(f"{c.name or 'circuit'}: not a DAG")
    return order


def levels(c: Circuit) -> list[int]:
    """Per-node topological level: PIs and constants 0, ANDs 1+max(fanins)."""
    lv = [0] * len(c.nodes)
    for i in topo_order(c):
        node = c.nodes[i]
        if node.kind == AND:
            lv[i] = 1 + max(lv[r[0]] for r in node.fanins)
    return lv


def depth(c: Circuit) -> int:
    lv = levels(c)
    return max((lv[r[0]] for r in c.outputs), default=0)


def input_pattern(i: int, n: int) -> int:
    """2^n-bit stimulus for input i: blocks of 2^i zeros then 2^i ones."""
    pat = ((1 << (1 << i)) - 1) << (1 << i)
    width = 1 << (i + 1)
    total = 1 << n
    while width < total:
        pat |= pat << width
        width <<= 1
    return pat


def _eval_bitparallel(c: Circuit, stimuli: list[int], mask: int) -> list[int]:
    values = [0] * len(c.nodes)
    for slot, nid in enumerate(c.inputs):
        values[nid] = stimuli[slot]
    for i in topo_order(c):
        node = c.nodes[i]
        if node.kind == AND:
            (a, ca), (b, cb) = node.fanins
            va = values[a] ^ mask if ca else values[a]
            vb = values[b] ^ mask if cb else values[b]
            values[i] = va & vb
    return [values[i] ^ mask if comp else values[i] for i, comp in c.outputs]


def simulate_exhaustive(c: Circuit) -> TruthTable:
    """Evaluate all 2^n assignments at once using big-integer words."""
    n = c.num_inputs
    if n > 16:
        raise TooManyInputs(f"{n} inputs exceed the exhaustive-simulation limit of 16")
    mask = (1 << (1 << n)) - 1
    stimuli = [input_pattern(i, n) for i in range(n)]
    return TruthTable(n, tuple(_eval_bitparallel(c, stimuli, mask)))


def simulate_random(c: Circuit, seed: int, words: int = 1024) -> Signature:
    """Bit-parallel simulation under seeded random stimuli.

    The stimulus for input slot i depends only on (seed, words, i), so
    functionally identical circuits always produce identical signatures.
    """
    if words < 1:
        raise ValueError("words must be >= 1")
    nbits = 64 * words
    mask = (1 << nbits) - 1
    rng = random.Random(seed)
    stimuli = [rng.getrandbits(nbits) for _ in range(c.num_inputs)]
    outs = _eval_bitparallel(c, stimuli, mask)
    split = tuple(tuple((v >> (64 * w)) & 0xFFFFFFFFFFFFFFFF for w in range(words))
                  for v in outs)
    return Signature(seed, c.num_inputs, split)


# ---------------------------------------------------------------------------
# AIGER ASCII ("aag") reader and writer, combinational subset.


def parse_aag(text: str, name: str = "") -> Circuit:
    """Parse an AIGER ASCII file into a validated Circuit.

    Header is "aag M I L O A"; only L = 0 (combinational) is accepted.
    Literal 2k refers to variable k plain, 2k+1 complemented; variable 0
    is the constant false.  AND definitions may appear in any order.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln != ""]
    if not lines or not lines[0].startswith("aag"):
        raise MalformedHeader("missing 'aag' header")
    head = lines[0].split()
    if len(head) != 6:
        raise MalformedHeader(f"header has {len(head) - 1} fields, expected 5")
    try:
        m_max, n_in, n_latch, n_out, n_and = (int(x) for x in head[1:])
    except ValueError as e:
        raise MalformedHeader(f"non-integer header field: {e}") from None
    if min(m_max, n_in, n_latch, n_out, n_and) < 0:
        raise MalformedHeader("negative header field")
    if n_latch > 0:
        raise LatchesUnsupported(f"{n_latch} latches present; only combinational accepted")
    if m_max < n_in + n_and:
        raise MalformedHeader(f"M={m_max} smaller than I+A={n_in + n_and}")

    body = lines[1:]
    need = n_in + n_out + n_and
    defs: list[list[int]] = []
    for ln in body:
        if ln[0] in "ilo" and " " in ln and not ln.split()[0].isdigit():
            break  # symbol table
        if ln == "c" or ln.startswith("c "):
            break  # comment section
        try:
            defs.append([int(tok) for tok in ln.split()])
        except ValueError:
            raise MalformedHeader(f"unparsable line {ln!r}") from None
        if len(defs) == need:
            break
    if len(defs) < need:
        raise MalformedHeader(f"expected {need} definition lines, found {len(defs)}")

    in_lits = defs[:n_in]
    out_lits = defs[n_in:n_in + n_out]
    and_defs = defs[n_in + n_out:]

    def lit_check(lit: int) -> int:
        if lit < 0 or lit > 2 * m_max + 1:
            raise DanglingReference(f"literal {lit} outside variable range 0..{m_max}")
        return lit

    var_of_input: dict[int, int] = {}
    for slot, row in enumerate(in_lits):
        if len(row) != 1:
            raise MalformedHeader(f"input line {row} must hold one literal")
        lit = lit_check(row[0])
        if lit < 2 or lit % 2:
            raise MalformedHeader(f"input literal {lit} must be an even non-constant literal")
        var = lit >> 1
        if var in var_of_input:
            raise MalformedHeader(f"variable {var} declared as input twice")
        var_of_input[var] = slot

    and_of_var: dict[int, tuple[int, int]] = {}
    for row in and_defs:
        if len(row) != 3:
            raise MalformedHeader(f"AND line {row} must hold three literals")
        lhs, r0, r1 = (lit_check(x) for x in row)
        if lhs < 2 or lhs % 2:
            raise MalformedHeader(f"AND output literal {lhs} must be even and non-constant")
        var = lhs >> 1
        if var in var_of_input or var in and_of_var:
            raise MalformedHeader(f"variable {var} defined twice")
        and_of_var[var] = (r0, r1)

    defined = set(var_of_input) | set(and_of_var) | {0}

    def ref_var(lit: int) -> int:
        var = lit >> 1
        if var not in defined:
            raise DanglingReference(f"literal {lit} references undefined variable {var}")
        return var

    used_vars: set[int] = set()
    for row in out_lits:
        if len(row) != 1:
            raise MalformedHeader(f"output line {row} must hold one literal")
        used_vars.add(ref_var(lit_check(row[0])))
    for r0, r1 in and_of_var.values():
        used_vars.add(ref_var(r0))
        used_vars.add(ref_var(r1))

    # order AND variables topologically (file order is not trusted)
    remaining = {v: sum(1 for r in refs if (r >> 1) in and_of_var)
                 for v, refs in and_of_var.items()}
    consumers: dict[int, list[int]] = {}
    for v, (r0, r1) in sorted(and_of_var.items()):
        for r in (r0, r1):
            if (r >> 1) in and_of_var:
                consumers.setdefault(r >> 1, []).append(v)
    queue = deque(sorted(v for v, k in remaining.items() if k == 0))
    and_order: list[int] = []
    while queue:
        v = queue.popleft()
        and_order.append(v)
        for w in consumers.get(v, ()):
            remaining[w] -= 1
            if remaining[w] == 0:
                queue.append(w)
    if len(and_order) != len(and_of_var):
        raise CycleDetected("AND definitions form a cycle")

    nodes: list[Node] = []
    node_of_var: dict[int, int] = {}
    if 0 in used_vars:
        node_of_var[0] = len(nodes)
        nodes.append(Node(CONST))
    input_ids = []
    for var, _slot in sorted(var_of_input.items(), key=lambda kv: kv[1]):
        node_of_var[var] = len(nodes)
        input_ids.append(len(nodes))
        nodes.append(Node(PI))
    for var in and_order:
        r0, r1 = and_of_var[var]
        fan = tuple((node_of_var[r >> 1], bool(r & 1)) for r in (r0, r1))
        node_of_var[var] = len(nodes)
        nodes.append(Node(AND, fan))

    outputs = tuple((node_of_var[row[0] >> 1], bool(row[0] & 1)) for row in out_lits)

    input_names = [f"i{k}" for k in range(n_in)]
    output_names = [f"o{k}" for k in range(n_out)]
    sym_start = 1 + need
    for ln in lines[sym_start:]:
        parts = ln.split(None, 1)
        if len(parts) != 2 or not parts[0] or parts[0][0] not in "io":
            break
        try:
            idx = int(parts[0][1:])
        except ValueError:
            break
        if parts[0][0] == "i" and 0 <= idx < n_in:
            input_names[idx] = parts[1]
        elif parts[0][0] == "o" and 0 <= idx < n_out:
            output_names[idx] = parts[1]

    c = Circuit(name, tuple(nodes), tuple(input_ids), outputs,
                tuple(input_names), tuple(output_names))
    problems = validate(c)
    if problems:
        raise MalformedHeader("; ".join(v.message for v in problems))
    return c


def write_aag(c: Circuit) -> str:
    """Serialize to AIGER ASCII with variables renumbered densely.

    Inputs take variables 1..I in declaration order; AND nodes follow in
    BFS topological order.  The symbol table carries all port names.
    """
    var: dict[int, int] = {}
    for slot, nid in enumerate(c.inputs):
        var[nid] = slot + 1
    nxt = c.num_inputs + 1
    and_ids = []
    for nid in topo_order(c, "bfs"):
        if c.nodes[nid].kind == AND:
            var[nid] = nxt
            and_ids.append(nid)
            nxt += 1

    def lit(ref: Ref) -> int:
        nid, comp = ref
        if c.nodes[nid].kind == CONST:
            return 1 if comp else 0
        return 2 * var[nid] + (1 if comp else 0)

    m_max = c.num_inputs + len(and_ids)
    out = [f"aag {m_max} {c.num_inputs} 0 {c.num_outputs} {len(and_ids)}"]
    out += [str(2 * (slot + 1)) for slot in range(c.num_inputs)]
    out += [str(lit(r)) for r in c.outputs]
    for nid in and_ids:
        a, b = c.nodes[nid].fanins
        out.append(f"{2 * var[nid]} {lit(a)} {lit(b)}")
    out += [f"i{k} {nm}" for k, nm in enumerate(c.input_names)]
    out += [f"o{k} {nm}" for k, nm in enumerate(c.output_names)]
    return "\n".join(out) + "\n"


def _canonical_nodes(c: Circuit) -> Circuit:
    """Renumber nodes in BFS order with fanin pairs sorted."""
    order = topo_order(c, "bfs")
    newid = {old: new for new, old in enumerate(order)}
    nodes = []
    for old in order:
        node = c.nodes[old]
        fan = tuple(sorted((newid[r[0]], r[1]) for r in node.fanins))
        nodes.append(Node(node.kind, fan))
    return Circuit(c.name, tuple(nodes),
                   tuple(newid[i] for i in c.inputs),
                   tuple((newid[r[0]], r[1]) for r in c.outputs),
                   c.input_names, c.output_names)


def structurally_equal(c1: Circuit, c2: Circuit) -> bool:
    """Equality up to dense topological renumbering and fanin order."""
    a, b = _canonical_nodes(c1), _canonical_nodes(c2)
    return (a.nodes == b.nodes and a.inputs == b.inputs and a.outputs == b.outputs)
