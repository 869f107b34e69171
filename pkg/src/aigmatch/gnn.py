"""From-scratch graph classifier: two convolutional layers over the
normalized adjacency, Top-K pooling, mean readout, and an MLP head with
softmax cross-entropy, trained with Adam.

Dense float64 tensors throughout; graphs at this scale need no sparse
kernels and the dense path keeps runs bit-reproducible given a seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .encode import EncodedGraph

PARAM_NAMES = ("w1", "b1", "w2", "b2", "score", "wm1", "bm1", "wm2", "bm2")


class DimensionMismatch(Exception):
    pass


class EmptySplit(Exception):
    pass


@dataclass(frozen=True)
class ModelConfig:
    feat_dim: int = 10
    hidden: int = 64
    num_classes: int = 2
    pool_ratio: float = 0.5
    use_pooling: bool = True
    lr: float = 1e-3
    weight_decay: float = 1e-5
    batch_size: int = 16
    epochs: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8


@dataclass
class Model:
    config: ModelConfig
    params: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)  # provenance: encoding, seed, ...

    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in PARAM_NAMES])


def init_model(config: ModelConfig, seed: int) -> Model:
    rng = np.random.default_rng(seed)
    f, h, k = config.feat_dim, config.hidden, config.num_classes

    def glorot(n_in, n_out):
        bound = math.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-bound, bound, size=(n_in, n_out))

    params = {
        "w1": glorot(f, h), "b1": np.zeros(h),
        "w2": glorot(h, h), "b2": np.zeros(h),
        "score": rng.uniform(-1, 1, size=h),
        "wm1": glorot(h, h), "bm1": np.zeros(h),
        "wm2": glorot(h, k), "bm2": np.zeros(k),
    }
    return Model(config, params)


def _pool_count(ratio: float, n: int) -> int:
    return min(n, max(1, math.ceil(ratio * n)))


def gcn_forward(g: EncodedGraph, model: Model, want_cache: bool = False):
    """Forward pass for one graph.

    Returns (node embeddings after layer 2, pooled (indices, scores),
    logits); with want_cache also the intermediates needed by backward.
    """
    p, cfg = model.params, model.config
    x = g.features
    if x.shape[1] != cfg.feat_dim:
        raise DimensionMismatch(
            f"graph features have dim {x.shape[1]}, model expects {cfg.feat_dim}")
    adj = g.norm_adj

    mx = adj @ x
    a1 = mx @ p["w1"] + p["b1"]
    h1 = np.maximum(a1, 0.0)
    mh1 = adj @ h1
    a2 = mh1 @ p["w2"] + p["b2"]
    h2 = np.maximum(a2, 0.0)

    if cfg.use_pooling:
        norm = np.linalg.norm(p["score"])
        sn = p["score"] / norm if norm > 0 else p["score"]
        proj = h2 @ sn
        sig = 1.0 / (1.0 + np.exp(-proj))
        k = _pool_count(cfg.pool_ratio, g.num_nodes)
        order = np.argsort(-sig, kind="stable")
        idx = np.sort(order[:k])
        gated = h2[idx] * sig[idx, None]
        readout = gated.mean(axis=0)
    else:
        idx = np.arange(g.num_nodes)
        sig = np.ones(g.num_nodes)
        readout = h2.mean(axis=0)

    pre1 = readout @ p["wm1"] + p["bm1"]
    z1 = np.maximum(pre1, 0.0)
    logits = z1 @ p["wm2"] + p["bm2"]

    if not want_cache:
        return h2, (idx, sig), logits
    cache = {"x": x, "adj": adj, "mx": mx, "a1": a1, "h1": h1, "mh1": mh1,
             "a2": a2, "h2": h2, "idx": idx, "sig": sig,
             "readout": readout, "pre1": pre1, "z1": z1, "logits": logits}
    return h2, (idx, sig), logits, cache


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def _zero_grads(model: Model) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in model.params.items()}


def _backward_graph(model: Model, cache: dict, dlogits: np.ndarray,
                    grads: dict[str, np.ndarray]) -> None:
    p, cfg = model.params, model.config
    z1, readout = cache["z1"], cache["readout"]
    grads["wm2"] += np.outer(z1, dlogits)
    grads["bm2"] += dlogits
    dz1 = p["wm2"] @ dlogits
    dpre1 = dz1 * (cache["pre1"] > 0)
    grads["wm1"] += np.outer(readout, dpre1)
    grads["bm1"] += dpre1
    dread = p["wm1"] @ dpre1

    h2 = cache["h2"]
    n = h2.shape[0]
    dh2 = np.zeros_like(h2)
    if cfg.use_pooling:
        idx, sig = cache["idx"], cache["sig"]
        k = len(idx)
        drow = dread / k
        hk = h2[idx]
        sk = sig[idx]
        dsig_k = hk @ drow
        dh2[idx] += np.outer(sk, drow)
        dproj_k = dsig_k * sk * (1.0 - sk)
        norm = np.linalg.norm(p["score"])
        sn = p["score"] / norm if norm > 0 else p["score"]
        dh2[idx] += np.outer(dproj_k, sn)
        dsn = hk.T @ dproj_k
        if norm > 0:
            grads["score"] += (dsn - sn * (sn @ dsn)) / norm
        else:
            grads["score"] += dsn
    else:
        dh2 += dread / n

    da2 = dh2 * (cache["a2"] > 0)
    grads["w2"] += cache["mh1"].T @ da2
    grads["b2"] += da2.sum(axis=0)
    dh1 = cache["adj"].T @ (da2 @ p["w2"].T)
    da1 = dh1 * (cache["a1"] > 0)
    grads["w1"] += cache["mx"].T @ da1
    grads["b1"] += da1.sum(axis=0)


def loss_and_grad(batch: list[tuple[EncodedGraph, int]],
                  model: Model) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross entropy over the batch plus L2 weight decay, with
    analytic gradients for every parameter."""
    if not batch:
        raise ValueError("empty batch")
    cfg = model.config
    grads = _zero_grads(model)
    loss = 0.0
    for g, label in batch:
        if not 0 <= label < cfg.num_classes:
            raise DimensionMismatch(f"label {label} outside 0..{cfg.num_classes - 1}")
        *_rest, cache = gcn_forward(g, model, want_cache=True)
        q = softmax(cache["logits"])
        loss += -math.log(max(q[label], 1e-300))
        dlogits = q.copy()
        dlogits[label] -= 1.0
        _backward_graph(model, cache, dlogits / len(batch), grads)
    loss /= len(batch)
    for name, theta in model.params.items():
        loss += 0.5 * cfg.weight_decay * float((theta * theta).sum())
        grads[name] += cfg.weight_decay * theta
    return loss, grads


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(model: Model, grads: dict[str, np.ndarray], state: AdamState) -> None:
    cfg = model.config
    if not state.m:
        state.m = {k: np.zeros_like(v) for k, v in model.params.items()}
        state.v = {k: np.zeros_like(v) for k, v in model.params.items()}
    state.step += 1
    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    for k, g in grads.items():
        state.m[k] = b1 * state.m[k] + (1 - b1) * g
        state.v[k] = b2 * state.v[k] + (1 - b2) * g * g
        mhat = state.m[k] / corr1
        vhat = state.v[k] / corr2
        model.params[k] -= cfg.lr * mhat / (np.sqrt(vhat) + eps)


@dataclass
class TrainHistory:
    config: dict
    seed: int
    rows: list[dict] = field(default_factory=list)

    KIND_COLS = ("LE", "Neg", "Perm", "NP")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "train_acc"]
                   + [f"acc_{k}" for k in self.KIND_COLS])
        for r in self.rows:
            w.writerow([r["epoch"], f"{r['loss']:.10f}", f"{r['train_acc']:.6f}"]
                       + [f"{r['acc'].get(k, float('nan')):.6f}" for k in self.KIND_COLS])
        return buf.getvalue()


def predict(g: EncodedGraph, model: Model) -> int:
    _, _, logits = gcn_forward(g, model)
    return int(np.argmax(logits))


def accuracy(model: Model, records: list[tuple[EncodedGraph, int]]) -> float:
    if not records:
        return float("nan")
    hits = sum(1 for g, label in records if predict(g, model) == label)
    return hits / len(records)


def train_on_graphs(train_records: list[tuple[EncodedGraph, int]],
                    eval_by_kind: dict[str, list[tuple[EncodedGraph, int]]],
                    config: ModelConfig, seed: int) -> tuple[Model, TrainHistory]:
    """Adam training loop; bit-reproducible given the seed."""
    if not train_records:
        raise EmptySplit("no training records")
    labels = {lb for _, lb in train_records}
    if max(labels) >= config.num_classes:
        raise DimensionMismatch("label outside configured class count")

    model = init_model(config, seed)
    state = AdamState()
    shuffle_rng = np.random.default_rng(seed + 0x9E37)
    history = TrainHistory(asdict(config), seed)

    n = len(train_records)
    for epoch in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = [train_records[i] for i in perm[start:start + config.batch_size]]
            loss, grads = loss_and_grad(batch, model)
            adam_step(model, grads, state)
            total += loss * len(batch)
        accs = {kind: accuracy(model, recs) for kind, recs in eval_by_kind.items()}
        history.rows.append({
            "epoch": epoch,
            "loss": total / n,
            "train_acc": accuracy(model, train_records),
            "acc": accs,
        })
    return model, history


@dataclass
class EvalResult:
    accuracy: float
    per_class: dict[int, float]
    embeddings: np.ndarray     # (num_records, hidden) readout vectors
    predictions: list[int]


def evaluate(model: Model, records: list[tuple[EncodedGraph, int]]) -> EvalResult:
    """Accuracy, per-class accuracy, and per-record readout embeddings."""
    if not records:
        raise ValueError("no records to evaluate")
    preds = []
    embs = np.zeros((len(records), model.config.hidden))
    hits_by_class: dict[int, int] = {}
    count_by_class: dict[int, int] = {}
    for i, (g, label) in enumerate(records):
        *_rest, cache = gcn_forward(g, model, want_cache=True)
        embs[i] = cache["readout"]
        pred = int(np.argmax(cache["logits"]))
        preds.append(pred)
        count_by_class[label] = count_by_class.get(label, 0) + 1
        hits_by_class[label] = hits_by_class.get(label, 0) + (pred == label)
    per_class = {lb: hits_by_class[lb] / count_by_class[lb] for lb in count_by_class}
    acc = sum(hits_by_class.values()) / len(records)
    return EvalResult(acc, per_class, embs, preds)


def save_checkpoint(model: Model, path: str) -> None:
    payload = {
        "schema_version": 1,
        "config": asdict(model.config),
        "meta": model.meta,
        "params": {k: v.tolist() for k, v in model.params.items()},
    }
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True)


def load_checkpoint(path: str) -> Model:
    with open(path) as f:
        payload = json.load(f)
    if payload.get("schema_version") != 1:
        raise ValueError(f"unsupported checkpoint schema {payload.get('schema_version')}")
    config = ModelConfig(**payload["config"])
    params = {k: np.array(v, dtype=float) for k, v in payload["params"].items()}
    return Model(config, params, payload.get("meta", {}))
