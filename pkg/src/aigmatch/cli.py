"""Command-line surface: gen, train, eval, audit, transform.

Every subcommand is deterministic given its effective configuration,
which is echoed into the output directory.  Config files are INI
(sections [gen], [train], ...; [DEFAULT] for shared keys) and flags
override them.  Exit codes: 0 success, 1 internal error, 2 user-input
error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import designs, gnn, oracle
from . import transform as tf
from .aig import AigError, parse_aag, simulate_exhaustive, write_aag
from .encode import BIDIGRAPH, DIGRAPH, WITH_INVERTERS, WITHOUT_INVERTERS, encode
from .optimizer import optimize_with_recipe


class EmptyEval(Exception):
    pass


USER_ERRORS = (AigError, ds.SchemaMismatch, ds.MissingFile, ds.ParseFailure,
               ds.EmptySplit, ds.GenerationFailure, tf.DimensionMismatch,
               gnn.DimensionMismatch, gnn.EmptySplit, oracle.SearchBudgetExceeded,
               EmptyEval, ValueError, KeyError, FileNotFoundError)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ds.MissingFile(f"config file {p}")
    with open(p, "rb") as f:
        return tomllib.load(f)


def _resolve(args: argparse.Namespace, config: dict, section: str,
             key: str, default):
    """Flag value if given, else config [section] or top-level, else default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    sec = config.get(section, {})
    if key in sec:
        return sec[key]
    if key in config:
        return config[key]
    return default


def _echo_config(out_dir: Path, section: str, values: dict) -> None:
    lines = [f"[{section}]"]
    for k in sorted(values):
        v = values[k]
        if isinstance(v, bool):
            lines.append(f"{k} = {'true' if v else 'false'}")
        elif isinstance(v, (int, float)):
            lines.append(f"{k} = {v}")
        elif isinstance(v, (list, tuple)):
            inner = ", ".join(json.dumps(x) for x in v)
            lines.append(f"{k} = [{inner}]")
        else:
            lines.append(f"{k} = {json.dumps(str(v))}")
    (out_dir / f"config_{section}.toml").write_text("\n".join(lines) + "\n")


def _resolve_designs(spec: str) -> tuple[list, list[str]]:
    circuits, sources = [], []
    names = designs.default_design_names() if spec == "default" else spec.split(",")
    for raw in names:
        raw = raw.strip()
        if not raw:
            continue
        if raw.startswith("builtin:"):
            circuits.append(designs.builtin(raw.split(":", 1)[1]))
            sources.append(raw)
        elif raw in designs.default_design_names() or _is_builtin(raw):
            circuits.append(designs.builtin(raw))
            sources.append(f"builtin:{raw}")
        else:
            p = Path(raw)
            if not p.exists():
                raise ds.MissingFile(f"design file {raw}")
            circuits.append(parse_aag(p.read_text(), name=p.stem))
            sources.append(str(p))
    if not circuits:
        raise ValueError("no designs given")
    return circuits, sources


def _is_builtin(name: str) -> bool:
    try:
        designs.builtin(name)
        return True
    except KeyError:
        return False


def cmd_gen(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    out = Path(_resolve(args, config, "gen", "out", "dataset"))
    seed = int(_resolve(args, config, "gen", "seed", 0))
    per_group = int(_resolve(args, config, "gen", "per_group", 30))
    min_len = int(_resolve(args, config, "gen", "min_len", 2))
    max_len = int(_resolve(args, config, "gen", "max_len", 10))
    jobs = int(_resolve(args, config, "gen", "jobs", 1))
    split_mode = _resolve(args, config, "gen", "split_mode", "by-group-kind")
    train_kinds = _parse_kinds(_resolve(args, config, "gen", "train_kinds", "LE"))
    train_fraction = float(_resolve(args, config, "gen", "train_fraction", 0.8))
    design_spec = _resolve(args, config, "gen", "designs", "default")

    circuits, sources = _resolve_designs(design_spec)
    bundle = ds.generate(circuits, per_group, seed, min_len, max_len,
                         jobs=jobs, sources=sources)
    bundle = ds.split(bundle, train_fraction, seed, split_mode, train_kinds)
    out.mkdir(parents=True, exist_ok=True)
    path = ds.save(bundle, out)
    _echo_config(out, "gen", {
        "designs": design_spec, "per_group": per_group, "seed": seed,
        "min_len": min_len, "max_len": max_len, "jobs": jobs,
        "split_mode": split_mode, "train_kinds": list(train_kinds),
        "train_fraction": train_fraction, "out": str(out)})
    _write_scatter(out, bundle)

    classes = len(bundle.manifest.designs)
    print(f"wrote {path} ({len(bundle.manifest.records)} records, {classes} classes)")
    counts: dict[str, int] = {}
    for r in bundle.manifest.records:
        counts[r.kind] = counts.get(r.kind, 0) + 1
    print("kind    records")
    for kind in ds.KINDS:
        print(f"{kind:<7} {counts.get(kind, 0)}")
    return 0


def _write_scatter(out: Path, bundle: ds.Dataset) -> None:
    with open(out / "sizes_depths.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["record_index", "label", "kind", "size", "depth"])
        for i, r in enumerate(bundle.manifest.records):
            w.writerow([i, r.label, r.kind, r.size, r.depth])


def _parse_kinds(value) -> tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        kinds = tuple(value)
    else:
        kinds = tuple(k.strip() for k in str(value).split(",") if k.strip())
    bad = set(kinds) - set(ds.KINDS)
    if bad:
        raise ValueError(f"unknown group kinds {sorted(bad)}; valid: {ds.KINDS}")
    return kinds


def _encode_dataset(bundle: ds.Dataset, direction: str, inverter_mode: str):
    encoded = []
    for circ, rec in zip(bundle.record_circuits, bundle.manifest.records):
        encoded.append((encode(circ, direction, inverter_mode, label=rec.label), rec))
    return encoded


def _eval_pools(encoded) -> dict[str, list]:
    """Per-kind accuracy pools: the kind's eval records, or every record
    of the kind when none are held out."""
    pools: dict[str, list] = {}
    for kind in ds.KINDS:
        held = [(g, r.label) for g, r in encoded if r.kind == kind and r.split == "eval"]
        if not held:
            held = [(g, r.label) for g, r in encoded if r.kind == kind]
        if held:
            pools[kind] = held
    return pools


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    manifest = _resolve(args, config, "train", "manifest", None)
    if manifest is None:
        raise ValueError("--manifest is required")
    out = Path(_resolve(args, config, "train", "out", "run"))
    seed = int(_resolve(args, config, "train", "seed", 0))
    direction = _resolve(args, config, "train", "direction", BIDIGRAPH)
    inverters = _resolve(args, config, "train", "inverters", WITHOUT_INVERTERS)
    epochs = int(_resolve(args, config, "train", "epochs", 100))
    hidden = int(_resolve(args, config, "train", "hidden", 64))
    lr = float(_resolve(args, config, "train", "lr", 1e-3))
    weight_decay = float(_resolve(args, config, "train", "weight_decay", 1e-5))
    batch_size = int(_resolve(args, config, "train", "batch_size", 16))
    pool_ratio = float(_resolve(args, config, "train", "pool_ratio", 0.5))
    no_pooling = bool(_resolve(args, config, "train", "no_pooling", False))
    train_kinds = _resolve(args, config, "train", "train_kinds", None)

    bundle = ds.load(manifest)
    if train_kinds is not None:
        bundle = ds.split(bundle, mode="by-group-kind",
                          train_kinds=_parse_kinds(train_kinds))
    encoded = _encode_dataset(bundle, direction, inverters)
    train_records = [(g, r.label) for g, r in encoded if r.split == "train"]
    num_classes = max(r.label for r in bundle.manifest.records) + 1
    missing = set(range(num_classes)) - {r.label for _, r in encoded
                                         if r.split == "train"}
    if not train_records or missing:
        raise gnn.EmptySplit(f"classes without train records: {sorted(missing)}")

    cfg = gnn.ModelConfig(hidden=hidden, num_classes=num_classes,
                          pool_ratio=pool_ratio, use_pooling=not no_pooling,
                          lr=lr, weight_decay=weight_decay,
                          batch_size=batch_size, epochs=epochs)
    model, history = gnn.train_on_graphs(train_records, _eval_pools(encoded),
                                         cfg, seed)
    model.meta = {"direction": direction, "inverter_mode": inverters,
                  "seed": seed, "manifest": str(manifest),
                  "train_kinds": list(_parse_kinds(train_kinds))
                  if train_kinds is not None else None}

    out.mkdir(parents=True, exist_ok=True)
    gnn.save_checkpoint(model, str(out / "checkpoint.json"))
    (out / "history.csv").write_text(history.to_csv())
    _echo_config(out, "train", {
        "manifest": str(manifest), "direction": direction, "inverters": inverters,
        "epochs": epochs, "hidden": hidden, "lr": lr,
        "weight_decay": weight_decay, "batch_size": batch_size,
        "pool_ratio": pool_ratio, "no_pooling": no_pooling, "seed": seed,
        "train_kinds": train_kinds if train_kinds is None else str(train_kinds),
        "out": str(out)})
    final = history.rows[-1]
    accs = " ".join(f"{k}={final['acc'].get(k, float('nan')):.3f}"
                    for k in ds.KINDS if k in final["acc"])
    print(f"trained {epochs} epochs: loss={final['loss']:.4f} "
          f"train_acc={final['train_acc']:.3f} {accs}")
    print(f"wrote {out / 'checkpoint.json'} and {out / 'history.csv'}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    manifest = _resolve(args, config, "eval", "manifest", None)
    checkpoints = _resolve(args, config, "eval", "checkpoints", None)
    if manifest is None or checkpoints is None:
        raise ValueError("--manifest and --checkpoints are required")
    out = Path(_resolve(args, config, "eval", "out", "eval"))
    if isinstance(checkpoints, str):
        checkpoints = [c.strip() for c in checkpoints.split(",") if c.strip()]

    bundle = ds.load(manifest)
    if not any(r.split == "eval" for r in bundle.manifest.records):
        raise EmptyEval("manifest has no eval records")

    models = []
    for path in checkpoints:
        if not Path(path).exists():
            raise ds.MissingFile(f"checkpoint {path}")
        models.append(gnn.load_checkpoint(path))

    first = models[0]
    direction = first.meta.get("direction", BIDIGRAPH)
    inverters = first.meta.get("inverter_mode", WITHOUT_INVERTERS)
    encoded = _encode_dataset(bundle, direction, inverters)
    pools = _eval_pools(encoded)

    per_kind: dict[str, list[float]] = {k: [] for k in pools}
    for model in models:
        if model.config.feat_dim != encoded[0][0].features.shape[1]:
            raise gnn.DimensionMismatch("checkpoint feature dim differs from encoding")
        for kind, recs in pools.items():
            per_kind[kind].append(gnn.accuracy(model, recs))

    metrics = {"checkpoints": [str(c) for c in checkpoints],
               "direction": direction, "inverter_mode": inverters, "acc": {}}
    for kind, vals in per_kind.items():
        arr = np.array(vals)
        metrics["acc"][kind] = {"mean": float(arr.mean()),
                                "std": float(arr.std()),
                                "per_seed": [float(v) for v in vals]}

    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(json.dumps(metrics, sort_keys=True, indent=1) + "\n")
    all_records = [(g, r.label) for g, r in encoded]
    result = gnn.evaluate(first, all_records)
    with open(out / "embeddings.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["record_index", "label"]
                   + [f"e{i}" for i in range(first.config.hidden)])
        for i, (_, label) in enumerate(all_records):
            w.writerow([i, label] + [f"{v:.8g}" for v in result.embeddings[i]])
    _echo_config(out, "eval", {"manifest": str(manifest),
                               "checkpoints": [str(c) for c in checkpoints],
                               "out": str(out)})
    for kind in ds.KINDS:
        if kind in metrics["acc"]:
            m = metrics["acc"][kind]
            print(f"acc.{kind}: {m['mean']:.4f} (+-{m['std']:.4f})")
    print(f"wrote {out / 'metrics.json'} and {out / 'embeddings.csv'}")
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    manifest = _resolve(args, config, "audit", "manifest", None)
    if manifest is None:
        raise ValueError("--manifest is required")
    out = Path(_resolve(args, config, "audit", "out", "audit"))
    budget = int(_resolve(args, config, "audit", "budget", oracle.DEFAULT_BUDGET))

    bundle = ds.load(manifest)
    report = ds.audit(bundle, budget)
    out.mkdir(parents=True, exist_ok=True)
    (out / "audit.json").write_text(
        json.dumps(report.to_json_dict(), sort_keys=True, indent=1) + "\n")
    modes = {r.key_mode for r in report.rows}
    bad = [r.index for r in report.rows if not r.ok]
    print(f"audited {len(report.rows)} records; modes={sorted(modes)}; "
          f"failures={bad if bad else 'none'}")
    print(f"wrote {out / 'audit.json'}")
    return 0 if report.passed else 1


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in str(text).split(",") if x.strip() != "")


def _parse_port_list(text, names: tuple[str, ...]) -> int:
    """Comma list of port names or indices into a negation mask."""
    mask = 0
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if item.isdigit():
            idx = int(item)
        elif item in names:
            idx = names.index(item)
        else:
            raise ValueError(f"unknown port {item!r}; known: {names}")
        if not 0 <= idx < len(names):
            raise ValueError(f"port index {idx} out of range")
        mask |= 1 << idx
    return mask


def cmd_transform(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    in_path = _resolve(args, config, "transform", "input", None)
    if in_path is None:
        raise ValueError("--input is required")
    p = Path(in_path)
    if not p.exists():
        raise ds.MissingFile(f"input {p}")
    c = parse_aag(p.read_text(), name=p.stem)
    seed = int(_resolve(args, config, "transform", "seed", 0))
    out_file = _resolve(args, config, "transform", "out_file", None)

    if _resolve(args, config, "transform", "optimize", False):
        min_len = int(_resolve(args, config, "transform", "min_len", 2))
        max_len = int(_resolve(args, config, "transform", "max_len", 10))
        result, recipe = optimize_with_recipe(c, seed, min_len, max_len)
        print(f"recipe: {json.dumps(recipe.to_json_dict())}")
    else:
        tj = _resolve(args, config, "transform", "transform_json", None)
        if tj is not None:
            with open(tj) as f:
                t = tf.MatchingTransform.from_json_dict(json.load(f))
        else:
            perm_in = _resolve(args, config, "transform", "perm_inputs", None)
            perm_out = _resolve(args, config, "transform", "perm_outputs", None)
            neg_in = _resolve(args, config, "transform", "neg_inputs", None)
            neg_out = _resolve(args, config, "transform", "neg_outputs", None)
            ip = _parse_int_list(perm_in) if perm_in else tuple(range(c.num_inputs))
            op = _parse_int_list(perm_out) if perm_out else tuple(range(c.num_outputs))
            im = _parse_port_list(neg_in, c.input_names) if neg_in else 0
            om = _parse_port_list(neg_out, c.output_names) if neg_out else 0
            t = tf.MatchingTransform(ip, im, op, om)
        if _resolve(args, config, "transform", "invert", False):
            t = tf.invert(t)
        result = tf.apply(c, t)
        print(f"transform: {json.dumps(t.to_json_dict())}")

    if out_file:
        Path(out_file).write_text(write_aag(result))
        print(f"wrote {out_file}")
    else:
        sys.stdout.write(write_aag(result))
    if result.num_inputs <= 16:
        table = simulate_exhaustive(result)
        for name, h in zip(result.output_names, table.to_hex()):
            print(f"table {name}: 0x{h}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aigmatch",
        description="Matching-equivalent circuit classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML config file; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--jobs", type=int)

    g = sub.add_parser("gen", help="generate a labeled dataset")
    common(g)
    g.add_argument("--designs", help="comma list of builtin:<id> or .aag paths, "
                                     "or 'default' for the builtin ten")
    g.add_argument("--per-group", type=int, dest="per_group")
    g.add_argument("--min-len", type=int, dest="min_len")
    g.add_argument("--max-len", type=int, dest="max_len")
    g.add_argument("--split-mode", dest="split_mode",
                   choices=["by-group-kind", "by-circuit"])
    g.add_argument("--train-kinds", dest="train_kinds")
    g.add_argument("--train-fraction", type=float, dest="train_fraction")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train the classifier on a manifest")
    common(t)
    t.add_argument("--manifest")
    t.add_argument("--direction", choices=[DIGRAPH, BIDIGRAPH])
    t.add_argument("--inverters", choices=[WITH_INVERTERS, WITHOUT_INVERTERS])
    t.add_argument("--train-kinds", dest="train_kinds")
    t.add_argument("--epochs", type=int)
    t.add_argument("--hidden", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--weight-decay", type=float, dest="weight_decay")
    t.add_argument("--batch-size", type=int, dest="batch_size")
    t.add_argument("--pool-ratio", type=float, dest="pool_ratio")
    t.add_argument("--no-pooling", action="store_const", const=True,
                   dest="no_pooling")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate checkpoints on a manifest")
    common(e)
    e.add_argument("--manifest")
    e.add_argument("--checkpoints", help="comma list of checkpoint files")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("audit", help="integrity-check a dataset manifest")
    common(a)
    a.add_argument("--manifest")
    a.add_argument("--budget", type=int)
    a.set_defaults(func=cmd_audit)

    x = sub.add_parser("transform", help="apply matching transforms or optimize")
    common(x)
    x.add_argument("--input")
    x.add_argument("--out-file", dest="out_file")
    x.add_argument("--neg-inputs", dest="neg_inputs")
    x.add_argument("--neg-outputs", dest="neg_outputs")
    x.add_argument("--perm-inputs", dest="perm_inputs")
    x.add_argument("--perm-outputs", dest="perm_outputs")
    x.add_argument("--transform-json", dest="transform_json")
    x.add_argument("--invert", action="store_const", const=True)
    x.add_argument("--optimize", action="store_const", const=True)
    x.add_argument("--min-len", type=int, dest="min_len")
    x.add_argument("--max-len", type=int, dest="max_len")
    x.set_defaults(func=cmd_transform)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except USER_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # internal failure
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
