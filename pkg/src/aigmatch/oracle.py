"""Brute-force ground truth for matching equivalence.

Exhaustively searches the full negation/permutation group on both the
input and output side.  Feasible for small interfaces only; the guard
`transform_space_size` must stay within an explicit budget.  Class
labels come from `canonical_key`, the lexicographically smallest truth
table vector reachable through the group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Iterator, Optional

from .aig import Circuit, TruthTable, simulate_exhaustive
from .transform import (DimensionMismatch, MatchingTransform, scatter_map,
                        transform_table)

DEFAULT_BUDGET = 10**7


class SearchBudgetExceeded(Exception):
    pass


def transform_space_size(n: int, m: int) -> int:
    """Size of the full matching-transform group: 2^n n! 2^m m!."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    return (1 << n) * math.factorial(n) * (1 << m) * math.factorial(m)


def enumerate_transforms(n: int, m: int) -> Iterator[MatchingTransform]:
    """All transforms in lexicographic order over
    (input_perm, input_neg, output_perm, output_neg)."""
    for ip in permutations(range(n)):
        for ineg in range(1 << n):
            for op in permutations(range(m)):
                for oneg in range(1 << m):
                    yield MatchingTransform(ip, ineg, op, oneg)


def _check_budget(n: int, m: int, budget: int) -> None:
    size = transform_space_size(n, m)
    if size > budget:
        raise SearchBudgetExceeded(
            f"transform space of size {size} exceeds budget {budget}")


def _moved_tables(bits: tuple[int, ...], n: int, scat: list[int],
                  mask_prm: int) -> list[int]:
    size = 1 << n
    out = []
    for src in bits:
        v = 0
        for k in range(size):
            v |= ((src >> (scat[k] ^ mask_prm)) & 1) << k
        out.append(v)
    return out


def matching_equivalent(c1: Circuit, c2: Circuit,
                        budget: int = DEFAULT_BUDGET) -> Optional[MatchingTransform]:
    """First transform t (in enumeration order) with
    simulate_exhaustive(apply(c2, t)) == simulate_exhaustive(c1), else None."""
    if (c1.num_inputs, c1.num_outputs) != (c2.num_inputs, c2.num_outputs):
        raise DimensionMismatch("circuits have different interface sizes")
    n, m = c1.num_inputs, c1.num_outputs
    _check_budget(n, m, budget)
    want = simulate_exhaustive(c1).bits
    have = simulate_exhaustive(c2).bits
    full = (1 << (1 << n)) - 1

    for ip in permutations(range(n)):
        scat = scatter_map(ip)
        for ineg in range(1 << n):
            mask_prm = 0
            for j in range(n):
                mask_prm |= ((ineg >> j) & 1) << ip[j]
            moved = _moved_tables(have, n, scat, mask_prm)
            # output side: each slot admits at most one negation bit
            for op in permutations(range(m)):
                oneg = 0
                for i in range(m):
                    v = moved[op[i]]
                    if v == want[i]:
                        continue
                    if v ^ full == want[i]:
                        oneg |= 1 << i
                        continue
                    break
                else:
                    return MatchingTransform(ip, ineg, op, oneg)
    return None


@dataclass(frozen=True)
class CanonicalKey:
    num_vars: int
    num_funcs: int
    key: tuple[int, ...]

    def to_hex(self) -> str:
        width = max(1, (1 << self.num_vars) // 4)
        return ":".join(format(b, "x").zfill(width) for b in self.key)


def canonical_key_of_table(table: TruthTable,
                           budget: int = DEFAULT_BUDGET) -> CanonicalKey:
    n, m = table.num_vars, table.num_funcs
    _check_budget(n, m, budget)
    full = (1 << (1 << n)) - 1
    best: tuple[int, ...] | None = None
    for ip in permutations(range(n)):
        scat = scatter_map(ip)
        for mask_prm in range(1 << n):
            moved = _moved_tables(table.bits, n, scat, mask_prm)
            # per output slot the smaller polarity wins; sorting realizes
            # the best output permutation
            cand = tuple(sorted(min(v, v ^ full) for v in moved))
            if best is None or cand < best:
                best = cand
    assert best is not None
    return CanonicalKey(n, m, best)


def canonical_key(c: Circuit, budget: int = DEFAULT_BUDGET) -> CanonicalKey:
    """Minimum serialized truth-table vector over the whole transform group.

    Two circuits are matching-equivalent iff their keys are equal.
    """
    return canonical_key_of_table(simulate_exhaustive(c), budget)


def label_dataset(circuits: list[Circuit],
                  budget: int = DEFAULT_BUDGET) -> list[int]:
    """Dense class labels in first-seen order of canonical keys."""
    labels: list[int] = []
    seen: dict[CanonicalKey, int] = {}
    for c in circuits:
        key = canonical_key(c, budget)
        if key not in seen:
            seen[key] = len(seen)
        labels.append(seen[key])
    return labels
