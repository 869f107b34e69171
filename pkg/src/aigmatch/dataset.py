"""Labeled dataset generation: per-design logic-equivalent groups via
random optimization, then negation / permutation / negation-plus-
permutation variants of every group member, with provenance-based class
labels and a JSON manifest plus sibling .aag files on disk.

Labels equal the base-design index.  Provenance labeling is exact: the
variants stay in the base design's matching-equivalent class by
construction, which the audit checks re-verify with signatures and,
for small interfaces, canonical keys.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import oracle, transform as tf
from .aig import Circuit, depth, parse_aag, simulate_random, structurally_equal, write_aag
from .aig import AigError
from .optimizer import OptRecipe, optimize_with_recipe

SCHEMA_VERSION = 1
KINDS = ("LE", "Neg", "Perm", "NP")
_KIND_TRANSFORM = {"Neg": tf.NEG, "Perm": tf.PERM, "NP": tf.NEGPERM}
SIGNATURE_SEED = 0xA1617
SIGNATURE_WORDS = 64


class GenerationFailure(Exception):
    pass


class SchemaMismatch(Exception):
    pass


class MissingFile(Exception):
    pass


class ParseFailure(Exception):
    pass


class EmptySplit(Exception):
    pass


@dataclass
class DesignEntry:
    name: str
    source: str      # "builtin:<id>" or original file path
    file: str        # .aag path relative to the manifest


@dataclass
class RecordEntry:
    file: str
    label: int
    kind: str
    split: str                      # "train" | "eval"
    base: int                       # design index
    member: int                     # LE member index within the group
    size: int
    depth: int
    recipe: dict | None = None      # LE records
    transform: dict | None = None   # Neg/Perm/NP records


@dataclass
class DatasetManifest:
    seed: int
    params: dict
    designs: list[DesignEntry]
    records: list[RecordEntry]
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        payload = {
            "schema_version": self.schema_version,
            "seed": self.seed,
            "params": self.params,
            "designs": [vars(d) for d in self.designs],
            "records": [vars(r) for r in self.records],
        }
        return json.dumps(payload, sort_keys=True, indent=1) + "\n"

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        payload = json.loads(text)
        if payload.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatch(
                f"manifest schema {payload.get('schema_version')!r}, "
                f"expected {SCHEMA_VERSION}")
        for r in payload["records"]:
            if r["kind"] not in KINDS:
                raise SchemaMismatch(f"unknown group kind {r['kind']!r}")
            if r["split"] not in ("train", "eval"):
                raise SchemaMismatch(f"unknown split {r['split']!r}")
        return DatasetManifest(
            payload["seed"], payload["params"],
            [DesignEntry(**d) for d in payload["designs"]],
            [RecordEntry(**r) for r in payload["records"]])


@dataclass
class Dataset:
    """In-memory bundle: manifest plus the circuits it describes."""
    manifest: DatasetManifest
    design_circuits: list[Circuit]
    record_circuits: list[Circuit]


def _generate_group(payload) -> tuple[list[RecordEntry], list[Circuit]]:
    base_aag, design_index, per_group, min_len, max_len, block_seed = payload
    base = parse_aag(base_aag)
    rng = random.Random(block_seed)
    n, m = base.num_inputs, base.num_outputs
    records: list[RecordEntry] = []
    circuits: list[Circuit] = []
    for member in range(per_group):
        le_seed = rng.randrange(1 << 62)
        c_le, recipe = optimize_with_recipe(base, le_seed, min_len, max_len)
        if structurally_equal(c_le, base):
            raise GenerationFailure(
                f"design {design_index}: no structurally distinct circuit "
                f"after retries (member {member})")
        variants: list[tuple[str, Circuit, dict | None, dict | None]] = [
            ("LE", c_le, recipe.to_json_dict(), None)]
        for kind in ("Neg", "Perm", "NP"):
            t = tf.random_transform(n, m, _KIND_TRANSFORM[kind], rng.randrange(1 << 62))
            variants.append((kind, tf.apply(c_le, t), recipe.to_json_dict(),
                             t.to_json_dict()))
        for kind, circ, rec, trans in variants:
            records.append(RecordEntry(
                file="", label=design_index, kind=kind, split="train",
                base=design_index, member=member,
                size=len(circ.nodes), depth=depth(circ),
                recipe=rec, transform=trans))
            circuits.append(circ)
    return records, circuits


def generate(designs: list[Circuit], per_group: int, seed: int,
             min_len: int = 2, max_len: int = 10, jobs: int = 1,
             sources: list[str] | None = None) -> Dataset:
    """Fig-8 style flow: an LE group per design, then one Neg, Perm and
    NP variant per LE member.  Deterministic in seed for any job count."""
    if per_group < 1:
        raise ValueError("per_group must be >= 1")
    if not designs:
        raise ValueError("need at least one design")
    master = random.Random(seed)
    payloads = []
    for d, base in enumerate(designs):
        payloads.append((write_aag(base), d, per_group, min_len, max_len,
                         master.randrange(1 << 62)))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_generate_group, payloads))
    else:
        results = [_generate_group(p) for p in payloads]

    entries: list[DesignEntry] = []
    records: list[RecordEntry] = []
    circuits: list[Circuit] = []
    for d, base in enumerate(designs):
        src = sources[d] if sources else (base.name or f"design{d}")
        entries.append(DesignEntry(base.name or f"design{d}",
                                   src, f"circuits/design{d:02d}.aag"))
    for recs, circs in results:
        for r, c in zip(recs, circs):
            r.file = f"circuits/r{len(records):05d}_{r.kind}.aag"
            records.append(r)
            circuits.append(c)

    params = {"per_group": per_group, "min_len": min_len, "max_len": max_len}
    manifest = DatasetManifest(seed, params, entries, records)
    return Dataset(manifest, list(designs), circuits)


def split(ds: Dataset, train_fraction: float = 0.8, seed: int = 0,
          mode: str = "by-group-kind",
          train_kinds: tuple[str, ...] = ("LE",)) -> Dataset:
    """Assign train/eval splits, returning a new bundle.

    "by-group-kind" marks whole kinds as train; "by-circuit" stratifies
    by class at the given fraction.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    records = [RecordEntry(**vars(r)) for r in ds.manifest.records]
    if mode == "by-group-kind":
        bad = set(train_kinds) - set(KINDS)
        if bad:
            raise ValueError(f"unknown kinds {sorted(bad)}")
        for r in records:
            r.split = "train" if r.kind in train_kinds else "eval"
    elif mode == "by-circuit":
        rng = random.Random(seed)
        by_class: dict[int, list[int]] = {}
        for i, r in enumerate(records):
            by_class.setdefault(r.label, []).append(i)
        for label in sorted(by_class):
            idxs = by_class[label]
            rng.shuffle(idxs)
            take = max(1, round(train_fraction * len(idxs)))
            chosen = set(idxs[:take])
            for i in idxs:
                records[i].split = "train" if i in chosen else "eval"
    else:
        raise ValueError(f"unknown split mode {mode!r}")

    train_classes = {r.label for r in records if r.split == "train"}
    missing = {r.label for r in records} - train_classes
    if missing:
        raise EmptySplit(f"classes {sorted(missing)} have no train records")
    params = dict(ds.manifest.params)
    params["split"] = {"mode": mode, "train_fraction": train_fraction,
                       "seed": seed, "train_kinds": list(train_kinds)}
    manifest = DatasetManifest(ds.manifest.seed, params, ds.manifest.designs, records)
    return Dataset(manifest, ds.design_circuits, ds.record_circuits)


def save(ds: Dataset, out_dir: str | Path) -> Path:
    """Write manifest.json and all .aag payloads; returns the manifest path."""
    out = Path(out_dir)
    (out / "circuits").mkdir(parents=True, exist_ok=True)
    for entry, circ in zip(ds.manifest.designs, ds.design_circuits):
        (out / entry.file).write_text(write_aag(circ))
    for rec, circ in zip(ds.manifest.records, ds.record_circuits):
        (out / rec.file).write_text(write_aag(circ))
    path = out / "manifest.json"
    path.write_text(ds.manifest.to_json())
    return path


def load(manifest_path: str | Path) -> Dataset:
    """Read a manifest and parse every circuit it references."""
    path = Path(manifest_path)
    if not path.exists():
        raise MissingFile(str(path))
    manifest = DatasetManifest.from_json(path.read_text())
    root = path.parent

    def read_circuit(rel: str, what: str) -> Circuit:
        p = root / rel
        if not p.exists():
            raise MissingFile(f"{what}: {p}")
        try:
            return parse_aag(p.read_text(), name=Path(rel).stem)
        except AigError as e:
            raise ParseFailure(f"{what}: {p}: {e}") from e

    design_circuits = [read_circuit(d.file, f"design {i}")
                       for i, d in enumerate(manifest.designs)]
    record_circuits = [read_circuit(r.file, f"record {i}")
                       for i, r in enumerate(manifest.records)]
    return Dataset(manifest, design_circuits, record_circuits)


def records_as_tuples(ds: Dataset) -> list[tuple[Circuit, int, str, str]]:
    return [(c, r.label, r.kind, r.split)
            for c, r in zip(ds.record_circuits, ds.manifest.records)]


@dataclass
class AuditRow:
    index: int
    kind: str
    label_ok: bool
    functional_ok: bool
    key_mode: str          # "canonical" | "signature-only"
    key_ok: bool | None

    @property
    def ok(self) -> bool:
        return self.label_ok and self.functional_ok and self.key_ok is not False


@dataclass
class AuditReport:
    rows: list[AuditRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)

    def to_json_dict(self) -> dict:
        return {"passed": self.passed,
                "rows": [{**vars(r), "ok": r.ok} for r in self.rows]}


def audit(ds: Dataset, budget: int = oracle.DEFAULT_BUDGET) -> AuditReport:
    """Integrity checks for every record.

    Label provenance, signature equality against the base design (after
    undoing the recorded transform for Neg/Perm/NP records), and, when
    the transform space fits the oracle budget, canonical-key equality.
    """
    base_sig = [simulate_random(c, SIGNATURE_SEED, SIGNATURE_WORDS)
                for c in ds.design_circuits]
    base_key: dict[int, oracle.CanonicalKey] = {}
    feasible = [oracle.transform_space_size(c.num_inputs, c.num_outputs) <= budget
                and c.num_inputs <= 16 for c in ds.design_circuits]

    report = AuditReport()
    for i, (rec, circ) in enumerate(zip(ds.manifest.records, ds.record_circuits)):
        label_ok = rec.label == rec.base
        if rec.transform is not None:
            t = tf.MatchingTransform.from_json_dict(rec.transform)
            recovered = tf.apply(circ, tf.invert(t))
        else:
            recovered = circ
        functional_ok = (simulate_random(recovered, SIGNATURE_SEED, SIGNATURE_WORDS)
                         == base_sig[rec.base])
        if feasible[rec.base]:
            if rec.base not in base_key:
                base_key[rec.base] = oracle.canonical_key(ds.design_circuits[rec.base])
            key_ok = oracle.canonical_key(circ) == base_key[rec.base]
            mode = "canonical"
        else:
            key_ok = None
            mode = "signature-only"
        report.rows.append(AuditRow(i, rec.kind, label_ok, functional_ok, mode, key_ok))
    return report
