"""Built-in circuit designs: the two textbook full adders, parameterized
ripple-carry adders and array multipliers, and seeded random AIGs.

These let the dataset generator and the test suite run without any
external benchmark files.  Design names are resolved by `builtin`:
"fulladder1", "fulladder2", "rca<N>", "mult<N>", "rand<I>x<O>g<G>s<S>".
"""

from __future__ import annotations

import random
import re

from .aig import Circuit, CircuitBuilder, Ref


def fulladder1() -> Circuit:
    """Full adder with the A^B gate shared by SUM and C_out."""
    b = CircuitBuilder("fulladder1")
    a = b.add_input("A")
    x = b.add_input("B")
    cin = b.add_input("C_in")
    axb = b.g_xor(a, x)
    g_and = b.add_and(a, x)
    s = b.g_xor(cin, axb)
    g_sel = b.add_and(cin, axb)
    cout = b.g_or(g_and, g_sel)
    b.add_output(s, "SUM")
    b.add_output(cout, "C_out")
    return b.build()


def fulladder2() -> Circuit:
    """Full adder variant with C_out = (A and B) or (C_in and (A or B))."""
    b = CircuitBuilder("fulladder2")
    a = b.add_input("A")
    x = b.add_input("B")
    cin = b.add_input("C_in")
    axb = b.g_xor(a, x)
    g_and = b.add_and(a, x)
    g_or = b.g_or(a, x)
    s = b.g_xor(cin, axb)
    g_sel = b.add_and(cin, g_or)
    cout = b.g_or(g_and, g_sel)
    b.add_output(s, "SUM")
    b.add_output(cout, "C_out")
    return b.build()


def _fa_cell(b: CircuitBuilder, a: Ref, x: Ref, cin: Ref) -> tuple[Ref, Ref]:
    axb = b.g_xor(a, x)
    s = b.g_xor(cin, axb)
    cout = b.g_or(b.add_and(a, x), b.add_and(cin, axb))
    return s, cout


def ripple_carry_adder(bits: int) -> Circuit:
    """bits-bit adder: inputs a0..a{n-1}, b0..b{n-1}; outputs s0..s{n-1}, c_out."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    b = CircuitBuilder(f"rca{bits}")
    xs = [b.add_input(f"a{i}") for i in range(bits)]
    ys = [b.add_input(f"b{i}") for i in range(bits)]
    carry: Ref | None = None
    sums = []
    for i in range(bits):
        if carry is None:
            s = b.g_xor(xs[i], ys[i])
            carry = b.add_and(xs[i], ys[i])
        else:
            s, carry = _fa_cell(b, xs[i], ys[i], carry)
        sums.append(s)
    for i, s in enumerate(sums):
        b.add_output(s, f"s{i}")
    b.add_output(carry, "c_out")
    return b.build()


def array_multiplier(bits: int) -> Circuit:
    """bits x bits unsigned array multiplier with 2*bits product outputs."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    b = CircuitBuilder(f"mult{bits}")
    xs = [b.add_input(f"a{i}") for i in range(bits)]
    ys = [b.add_input(f"b{i}") for i in range(bits)]
    cols: list[list[Ref]] = [[] for _ in range(2 * bits)]
    for i in range(bits):
        for j in range(bits):
            cols[i + j].append(b.add_and(xs[i], ys[j]))
    prod = []
    for k in range(2 * bits):
        terms = cols[k]
        while len(terms) > 1:
            a, x = terms.pop(0), terms.pop(0)
            terms.insert(0, b.g_xor(a, x))
            if k + 1 < 2 * bits:
                cols[k + 1].append(b.add_and(a, x))
            # else: carry out of the top column is identically zero
        prod.append(terms[0] if terms else b.add_const())
    for k, p in enumerate(prod):
        b.add_output(p, f"p{k}")
    return b.build()


def random_aig(num_inputs: int, num_outputs: int, num_ands: int, seed: int) -> Circuit:
    """Seeded random AIG; every output is driven by some AND cone."""
    if num_inputs < 1 or num_outputs < 1 or num_ands < 1:
        raise ValueError("need at least one input, output, and AND node")
    rng = random.Random(seed)
    b = CircuitBuilder(f"rand{num_inputs}x{num_outputs}g{num_ands}s{seed}")
    refs: list[Ref] = [b.add_input() for _ in range(num_inputs)]
    for _ in range(num_ands):
        a = rng.choice(refs)
        x = rng.choice(refs)
        while x[0] == a[0] and len(refs) > 1:
            x = rng.choice(refs)
        a = (a[0], rng.random() < 0.5)
        x = (x[0], rng.random() < 0.5)
        refs.append(b.add_and(a, x))
    pool = refs[num_inputs:] or refs
    for _ in range(num_outputs):
        d = rng.choice(pool[-max(1, len(pool) // 2):])
        b.add_output((d[0], rng.random() < 0.5))
    return b.build()


_RAND_RE = re.compile(r"rand(\d+)x(\d+)g(\d+)s(\d+)$")


def builtin(name: str) -> Circuit:
    """Resolve a builtin design id to a freshly constructed circuit."""
    if name == "fulladder1":
        return fulladder1()
    if name == "fulladder2":
        return fulladder2()
    if name.startswith("rca") and name[3:].isdigit():
        return ripple_carry_adder(int(name[3:]))
    if name.startswith("mult") and name[4:].isdigit():
        return array_multiplier(int(name[4:]))
    m = _RAND_RE.match(name)
    if m:
        return random_aig(*(int(g) for g in m.groups()))
    raise KeyError(f"unknown builtin design {name!r}")


def default_design_names() -> list[str]:
    """The ten desk-scale designs used by the reproduction experiments."""
    return [
        "fulladder1",
        "rca2",
        "rca3",
        "rca4",
        "mult2",
        "mult3",
        "rand8x2g40s1",
        "rand8x2g40s2",
        "rand6x3g30s3",
        "rand10x2g50s4",
    ]
