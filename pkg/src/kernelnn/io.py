"""File formats: corpora, vocabularies, graph files, and model bundles.

Text formats are line-oriented and diff-able; parse errors always carry the
file name and 1-based line number.  Bundles are canonical JSON (sorted keys,
no whitespace) with tensors as base64 little-endian float64, so a
save/load/save round trip is byte-identical.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .graph_kernel import FeatureGraph
from .graph_nn import GraphModelConfig, WLParams
from .seq_nn import SeqLayerParams, SeqModelConfig
from .tensor import Activation, Tensor
from .train import GraphRegModel, SeqLMModel

BUNDLE_VERSION = 1
UNK_ID = 0


# ---------------------------------------------------------------------------
# corpora
# ---------------------------------------------------------------------------


def load_vocab(path) -> tuple[dict[str, int], list[str]]:
    """One token per line; the line number is the id and line 0 names the UNK."""
    path = Path(path)
    tokens: list[str] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(path.read_text().splitlines()):
        tok = raw.strip()
        if not tok:
            raise DataError(f"{path}:{lineno + 1}: empty vocabulary entry")
        if tok in seen:
            raise DataError(f"{path}:{lineno + 1}: duplicate token {tok!r}")
        seen[tok] = len(tokens)
        tokens.append(tok)
    if not tokens:
        raise DataError(f"{path}:1: vocabulary file is empty")
    return seen, tokens


def save_vocab(tokens, path) -> None:
    Path(path).write_text("\n".join(tokens) + "\n")


def load_corpus(path, vocab: dict[str, int]) -> list[list[int]]:
    """Whitespace-tokenized sentences, one per line; unknown tokens map to id 0."""
    path = Path(path)
    out: list[list[int]] = []
    for raw in path.read_text().splitlines():
        toks = raw.split()
        if toks:
            out.append([vocab.get(t, UNK_ID) for t in toks])
    if not out:
        raise DataError(f"{path}:1: corpus file holds no tokens")
    return out


def flatten_corpus(sentences: list[list[int]]) -> list[int]:
    return [t for sent in sentences for t in sent]


# ---------------------------------------------------------------------------
# graph files
# ---------------------------------------------------------------------------
#
# One graph per line:
#
#   <node count> | f1,f2 ; f1,f2 ; ... | 0-1 1-2 ... | <target>
#
# Feature vectors are comma-separated decimals, one ';'-separated group per
# node; edges are dash-separated index pairs; the trailing target field is
# optional.  Blank lines and lines starting with '#' are skipped.


def parse_graph_line(line: str, where: str) -> tuple[FeatureGraph, float | None]:
    parts = [p.strip() for p in line.split("|")]
    if len(parts) not in (3, 4):
        raise DataError(f"{where}: expected 3 or 4 '|' fields, got {len(parts)}")
    try:
        count = int(parts[0])
    except ValueError:
        raise DataError(f"{where}: bad node count {parts[0]!r}") from None
    groups = [g for g in (s.strip() for s in parts[1].split(";")) if g]
    if len(groups) != count:
        raise DataError(f"{where}: {len(groups)} feature groups for {count} nodes")
    try:
        feats = [np.array([float(v) for v in g.split(",")]) for g in groups]
    except ValueError:
        raise DataError(f"{where}: malformed feature vector") from None
    if len({f.shape[0] for f in feats}) > 1:
        raise DataError(f"{where}: feature dimensions differ within the graph")
    edges = []
    for token in parts[2].split():
        pair = token.split("-")
        if len(pair) != 2:
            raise DataError(f"{where}: malformed edge {token!r}")
        try:
            u, v = int(pair[0]), int(pair[1])
        except ValueError:
            raise DataError(f"{where}: malformed edge {token!r}") from None
        if not (0 <= u < count and 0 <= v < count):
            raise DataError(f"{where}: edge {token!r} out of range for {count} nodes")
        edges.append((u, v))
    target = None
    if len(parts) == 4 and parts[3]:
        try:
            target = float(parts[3])
        except ValueError:
            raise DataError(f"{where}: malformed target {parts[3]!r}") from None
    return FeatureGraph.undirected(feats, edges), target


def load_graphs(path) -> list[tuple[FeatureGraph, float | None]]:
    path = Path(path)
    out = []
    dim = None
    for lineno, raw in enumerate(path.read_text().splitlines()):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        g, target = parse_graph_line(line, f"{path}:{lineno + 1}")
        if dim is None:
            dim = g.dim
        elif g.dim != dim:
            raise DataError(f"{path}:{lineno + 1}: feature dim {g.dim} differs from {dim}")
        out.append((g, target))
    if not out:
        raise DataError(f"{path}:1: no graphs found")
    return out


def format_graph_line(g: FeatureGraph, target: float | None = None) -> str:
    feats = " ; ".join(",".join(repr(float(x)) for x in f) for f in g.features)
    edges = []
    for v in range(g.num_nodes):
        for u in g.neighbors[v]:
            if u < v:
                edges.append(f"{u}-{v}")
    line = f"{g.num_nodes} | {feats} | {' '.join(edges)}"
    if target is not None:
        line += f" | {float(target)!r}"
    return line


def save_graphs(items, path) -> None:
    lines = [format_graph_line(g, t) for g, t in items]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# model bundles
# ---------------------------------------------------------------------------


@dataclass
class ModelBundle:
    kind: str
    config: dict
    params: dict[str, np.ndarray]
    seed: int
    version: int = BUNDLE_VERSION


def _encode_array(arr: np.ndarray) -> dict:
    data = np.ascontiguousarray(arr, dtype="<f8")
    return {
        "shape": list(arr.shape),
        "dtype": "float64",
        "byte_order": "little",
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def _decode_array(obj: dict, where: str) -> np.ndarray:
    if obj.get("dtype") != "float64" or obj.get("byte_order") != "little":
        raise DataError(f"{where}: unsupported tensor encoding {obj.get('dtype')}")
    raw = base64.b64decode(obj["data"])
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return arr.reshape(obj["shape"])


def save_bundle(bundle: ModelBundle, path) -> None:
    doc = {
        "format_version": bundle.version,
        "kind": bundle.kind,
        "config": bundle.config,
        "seed": bundle.seed,
        "params": {name: _encode_array(arr) for name, arr in sorted(bundle.params.items())},
    }
    Path(path).write_bytes(
        (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("ascii")
    )


def load_bundle(path) -> ModelBundle:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: bundle is not valid JSON") from None
    version = doc.get("format_version")
    if version != BUNDLE_VERSION:
        raise DataError(f"{path}: unsupported bundle version {version!r}")
    params = {
        name: _decode_array(obj, f"{path}: param {name!r}")
        for name, obj in doc.get("params", {}).items()
    }
    return ModelBundle(
        kind=doc["kind"], config=doc["config"], params=params, seed=int(doc["seed"]),
        version=version,
    )


# ---------------------------------------------------------------------------
# model <-> bundle
# ---------------------------------------------------------------------------


def _seq_config_dict(cfg: SeqModelConfig, vocab_size: int) -> dict:
    return {
        "n": cfg.n, "hidden": cfg.hidden, "layers": cfg.layers, "variant": cfg.variant,
        "decay": cfg.decay, "lam": cfg.lam, "activation": cfg.activation.value,
        "output": cfg.output, "highway": cfg.highway, "dropout": cfg.dropout,
        "vocab_size": vocab_size,
    }


def seq_config_from_dict(doc: dict) -> tuple[SeqModelConfig, int]:
    cfg = SeqModelConfig(
        n=doc["n"], hidden=doc["hidden"], layers=doc.get("layers", 1),
        variant=doc.get("variant", "mult-unnorm"), decay=doc.get("decay", "constant"),
        lam=doc.get("lam", 0.5), activation=Activation(doc.get("activation", "tanh")),
        output=doc.get("output", "last-state"), highway=doc.get("highway", False),
        dropout=doc.get("dropout", 0.0),
    )
    return cfg, int(doc["vocab_size"])


def bundle_from_lm(model: SeqLMModel, seed: int) -> ModelBundle:
    params = {name: np.array(t.data) for name, t in model.parameters().items()}
    return ModelBundle(
        kind="seq-lm", config=_seq_config_dict(model.cfg, model.vocab_size),
        params=params, seed=seed,
    )


def lm_from_bundle(bundle: ModelBundle) -> SeqLMModel:
    if bundle.kind != "seq-lm":
        raise DataError(f"bundle kind {bundle.kind!r} is not a language model")
    cfg, vocab_size = seq_config_from_dict(bundle.config)
    params = bundle.params
    layers = []
    for l in range(cfg.layers):
        prefix = f"layer{l}."
        ws = []
        j = 1
        while f"{prefix}W{j}" in params:
            ws.append(Tensor(params[f"{prefix}W{j}"]))
            j += 1
        fields = {}
        for name in ("gate_u", "gate_b", "decay_logit", "comb", "hw_u", "hw_b"):
            if prefix + name in params:
                fields[name] = Tensor(params[prefix + name])
        layers.append(SeqLayerParams(W=ws, **fields))
    return SeqLMModel(
        cfg=cfg, vocab_size=vocab_size, embed=Tensor(params["embed"]),
        layers=layers, out_w=Tensor(params["out_w"]), out_b=Tensor(params["out_b"]),
    )


def _graph_config_dict(cfg: GraphModelConfig, in_dim: int) -> dict:
    return {
        "n": cfg.n, "hidden": cfg.hidden, "lam": cfg.lam, "composition": cfg.composition,
        "activation": cfg.activation.value, "layers": cfg.layers, "gated": cfg.gated,
        "in_dim": in_dim,
    }


def graph_config_from_dict(doc: dict) -> tuple[GraphModelConfig, int]:
    cfg = GraphModelConfig(
        n=doc["n"], hidden=doc["hidden"], lam=doc.get("lam", 0.5),
        composition=doc.get("composition", "multiplicative"),
        activation=Activation(doc.get("activation", "identity")),
        layers=doc.get("layers", 1), gated=doc.get("gated", False),
    )
    return cfg, int(doc["in_dim"])


def bundle_from_graph(model: GraphRegModel, in_dim: int, seed: int) -> ModelBundle:
    params = {name: np.array(t.data) for name, t in model.parameters().items()}
    return ModelBundle(
        kind="graph-reg", config=_graph_config_dict(model.cfg, in_dim),
        params=params, seed=seed,
    )


def graph_from_bundle(bundle: ModelBundle) -> GraphRegModel:
    if bundle.kind != "graph-reg":
        raise DataError(f"bundle kind {bundle.kind!r} is not a graph regressor")
    cfg, _ = graph_config_from_dict(bundle.config)
    params = bundle.params
    layer_W = []
    for l in range(cfg.layers):
        ws = []
        j = 1
        while f"wl.l{l + 1}.W{j}" in params:
            ws.append(Tensor(params[f"wl.l{l + 1}.W{j}"]))
            j += 1
        layer_W.append(ws)
    wl = WLParams(
        layer_W=layer_W, u1=Tensor(params["wl.u1"]), u2=Tensor(params["wl.u2"]),
        v=Tensor(params["wl.v"]),
    )
    return GraphRegModel(
        cfg=cfg, wl=wl, head_w=Tensor(params["head_w"]), head_b=Tensor(params["head_b"]),
    )
