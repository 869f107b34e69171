"""Boolean-matching transform algebra: input/output permutation and
negation actions on circuits, with composition and inversion.

A transform is stored in the normal form "permute, then negate" on both
the input and the output side.  Applying a transform never adds nodes:
the input permutation reorders the PI declaration slots and negations
toggle complement flags on PI fan-out edges / PO drivers.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .aig import Circuit, Node, Ref

NEG = "neg"
PERM = "perm"
NEGPERM = "negperm"


class DimensionMismatch(Exception):
    pass


def _is_perm(p: tuple[int, ...]) -> bool:
    return sorted(p) == list(range(len(p)))


@dataclass(frozen=True)
class MatchingTransform:
    input_perm: tuple[int, ...]
    input_neg: int            # bit i negates input slot i (after permuting)
    output_perm: tuple[int, ...]
    output_neg: int

    def __post_init__(self):
        if not _is_perm(self.input_perm) or not _is_perm(self.output_perm):
            raise ValueError("perm fields must be bijections on 0..k-1")
        if not 0 <= self.input_neg < (1 << len(self.input_perm)):
            raise ValueError("input_neg out of range")
        if not 0 <= self.output_neg < (1 << len(self.output_perm)):
            raise ValueError("output_neg out of range")

    @property
    def num_inputs(self) -> int:
        return len(self.input_perm)

    @property
    def num_outputs(self) -> int:
        return len(self.output_perm)

    def is_identity(self) -> bool:
        return (self.input_neg == 0 and self.output_neg == 0
                and self.input_perm == tuple(range(self.num_inputs))
                and self.output_perm == tuple(range(self.num_outputs)))

    def to_json_dict(self) -> dict:
        return {"input_perm": list(self.input_perm), "input_neg": self.input_neg,
                "output_perm": list(self.output_perm), "output_neg": self.output_neg}

    @staticmethod
    def from_json_dict(d: dict) -> "MatchingTransform":
        return MatchingTransform(tuple(d["input_perm"]), d["input_neg"],
                                 tuple(d["output_perm"]), d["output_neg"])


def identity(n: int, m: int) -> MatchingTransform:
    return MatchingTransform(tuple(range(n)), 0, tuple(range(m)), 0)


def apply(c: Circuit, t: MatchingTransform) -> Circuit:
    """Transformed circuit: new input slot i feeds old input t.input_perm[i]
    negated by bit i of input_neg; new output i is old output
    t.output_perm[i] negated by bit i of output_neg.
    """
    if t.num_inputs != c.num_inputs or t.num_outputs != c.num_outputs:
        raise DimensionMismatch(
            f"transform is {t.num_inputs}x{t.num_outputs}, "
            f"circuit is {c.num_inputs}x{c.num_outputs}")

    new_inputs = tuple(c.inputs[t.input_perm[i]] for i in range(t.num_inputs))
    new_input_names = tuple(c.input_names[t.input_perm[i]] for i in range(t.num_inputs))
    toggle = {c.inputs[t.input_perm[i]] for i in range(t.num_inputs)
              if (t.input_neg >> i) & 1}

    def fix(r: Ref) -> Ref:
        return (r[0], not r[1]) if r[0] in toggle else r

    nodes = tuple(Node(n.kind, tuple(fix(r) for r in n.fanins)) for n in c.nodes)
    outputs = []
    names = []
    for i in range(t.num_outputs):
        d, comp = fix(c.outputs[t.output_perm[i]])
        outputs.append((d, comp ^ bool((t.output_neg >> i) & 1)))
        names.append(c.output_names[t.output_perm[i]])
    return Circuit(c.name, nodes, new_inputs, tuple(outputs),
                   new_input_names, tuple(names))


def _inv_perm(p: tuple[int, ...]) -> tuple[int, ...]:
    q = [0] * len(p)
    for i, v in enumerate(p):
        q[v] = i
    return tuple(q)


def _permute_mask(mask: int, p: tuple[int, ...]) -> int:
    out = 0
    for i, v in enumerate(p):
        out |= ((mask >> v) & 1) << i
    return out


def invert(t: MatchingTransform) -> MatchingTransform:
    """Two-sided inverse: compose(invert(t), t) == identity."""
    ip = _inv_perm(t.input_perm)
    op = _inv_perm(t.output_perm)
    return MatchingTransform(ip, _permute_mask(t.input_neg, ip),
                             op, _permute_mask(t.output_neg, op))


def compose(t2: MatchingTransform, t1: MatchingTransform) -> MatchingTransform:
    """Joint action: apply(c, compose(t2, t1)) == apply(apply(c, t1), t2)."""
    if (t1.num_inputs, t1.num_outputs) != (t2.num_inputs, t2.num_outputs):
        raise DimensionMismatch("transform dimensions differ")
    ip = tuple(t1.input_perm[t2.input_perm[i]] for i in range(t1.num_inputs))
    op = tuple(t1.output_perm[t2.output_perm[i]] for i in range(t1.num_outputs))
    ineg = _permute_mask(t1.input_neg, t2.input_perm) ^ t2.input_neg
    oneg = _permute_mask(t1.output_neg, t2.output_perm) ^ t2.output_neg
    return MatchingTransform(ip, ineg, op, oneg)


def random_transform(n: int, m: int, kind: str, seed: int) -> MatchingTransform:
    """Seeded draw from one of the dataset transform groups.

    "neg": identity perms, at least one negation bit set.
    "perm": zero masks, non-trivial permutation whenever n + m > 2.
    "negperm": both sides free, but never the identity transform.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    rng = random.Random(seed)

    def draw_perm(k: int) -> tuple[int, ...]:
        p = list(range(k))
        rng.shuffle(p)
        return tuple(p)

    if kind == NEG:
        while True:
            ineg = rng.getrandbits(n)
            oneg = rng.getrandbits(m)
            if ineg or oneg:
                return MatchingTransform(tuple(range(n)), ineg, tuple(range(m)), oneg)
    if kind == PERM:
        if n + m <= 2:
            return identity(n, m)
        while True:
            ip, op = draw_perm(n), draw_perm(m)
            if ip != tuple(range(n)) or op != tuple(range(m)):
                return MatchingTransform(ip, 0, op, 0)
    if kind == NEGPERM:
        while True:
            t = MatchingTransform(draw_perm(n), rng.getrandbits(n),
                                  draw_perm(m), rng.getrandbits(m))
            if not t.is_identity():
                return t
    raise ValueError(f"unknown transform kind {kind!r}")


def scatter_map(perm: tuple[int, ...]) -> list[int]:
    """For assignment index k over new inputs, the index over old inputs:
    bit j of k lands at bit perm[j]."""
    n = len(perm)
    out = []
    for k in range(1 << n):
        a = 0
        for j in range(n):
            a |= ((k >> j) & 1) << perm[j]
        out.append(a)
    return out


def transform_table(bits: tuple[int, ...], num_vars: int,
                    t: MatchingTransform,
                    _scatter: list[int] | None = None) -> tuple[int, ...]:
    """Truth table of apply(c, t) computed from the table of c alone."""
    n = num_vars
    if t.num_inputs != n or t.num_outputs != len(bits):
        raise DimensionMismatch("table dimensions differ from transform")
    scat = _scatter if _scatter is not None else scatter_map(t.input_perm)
    mask_prm = 0
    for j in range(n):
        mask_prm |= ((t.input_neg >> j) & 1) << t.input_perm[j]
    size = 1 << n
    full = (1 << size) - 1
    moved = []
    for src in bits:
        v = 0
        for k in range(size):
            v |= ((src >> (scat[k] ^ mask_prm)) & 1) << k
        moved.append(v)
    out = []
    for i in range(t.num_outputs):
        v = moved[t.output_perm[i]]
        if (t.output_neg >> i) & 1:
            v ^= full
        out.append(v)
    return tuple(out)
