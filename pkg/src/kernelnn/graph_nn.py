"""Graph modules whose node states aggregate walk scores.

State j at node v scores j-node walks ending at v against reference walks
built from the weight rows.  Variants: plain decay, generalized composition
with nonlinear neighbor aggregation, stacked layers with per-layer readouts,
relabeling iterations with shared transforms, and per-edge sigmoid gates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, ShapeError
from .graph_kernel import ADDITIVE, MULTIPLICATIVE, FeatureGraph
from .tensor import Activation, Tensor, accumulate, add, concat, matvec, mul, scale, sigmoid


@dataclass
class GraphModelConfig:
    n: int
    hidden: int
    lam: float = 0.5
    composition: str = MULTIPLICATIVE
    activation: Activation = Activation.IDENTITY
    layers: int = 1
    gated: bool = False

    def __post_init__(self) -> None:
        if self.n < 1 or self.hidden < 1 or self.layers < 1:
            raise ConfigError(f"n, hidden and layers must be positive, got {self}")
        if self.lam < 0.0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.composition not in (MULTIPLICATIVE, ADDITIVE):
            raise ConfigError(f"unknown composition {self.composition!r}")


@dataclass
class GraphLayerParams:
    W: list[Tensor]
    readout: Tensor | None = None
    gate_u: Tensor | None = None
    gate_b: Tensor | None = None

    def named(self, prefix: str) -> dict[str, Tensor]:
        out = {f"{prefix}.W{j + 1}": w for j, w in enumerate(self.W)}
        for name in ("readout", "gate_u", "gate_b"):
            t = getattr(self, name)
            if t is not None:
                out[f"{prefix}.{name}"] = t
        return out

    def with_named(self, updates: dict[str, Tensor], prefix: str) -> "GraphLayerParams":
        new = GraphLayerParams(
            W=list(self.W), readout=self.readout, gate_u=self.gate_u, gate_b=self.gate_b
        )
        head = prefix + "."
        for name, t in updates.items():
            if not name.startswith(head):
                continue
            key = name[len(head):]
            if key.startswith("W") and key[1:].isdigit():
                new.W[int(key[1:]) - 1] = t
            else:
                setattr(new, key, t)
        return new


@dataclass
class WLParams:
    """Per-layer walk weights plus relabeling transforms shared by all layers."""

    layer_W: list[list[Tensor]]
    u1: Tensor
    u2: Tensor
    v: Tensor

    def named(self, prefix: str = "wl") -> dict[str, Tensor]:
        out = {}
        for l, ws in enumerate(self.layer_W):
            for j, w in enumerate(ws):
                out[f"{prefix}.l{l + 1}.W{j + 1}"] = w
        out[f"{prefix}.u1"] = self.u1
        out[f"{prefix}.u2"] = self.u2
        out[f"{prefix}.v"] = self.v
        return out

    def with_named(self, updates: dict[str, Tensor], prefix: str = "wl") -> "WLParams":
        new = WLParams(layer_W=[list(ws) for ws in self.layer_W], u1=self.u1, u2=self.u2, v=self.v)
        head = prefix + "."
        for name, t in updates.items():
            if not name.startswith(head):
                continue
            key = name[len(head):]
            if key.startswith("l") and "." in key:
                layer_part, w_part = key.split(".", 1)
                new.layer_W[int(layer_part[1:]) - 1][int(w_part[1:]) - 1] = t
            else:
                setattr(new, key, t)
        return new


@dataclass
class GraphStateTrace:
    """States per layer: c[l][j][v], relabeled/readout node vectors, readouts."""

    c: list[list[list[Tensor]]] = field(default_factory=list)
    h_node: list[list[Tensor]] = field(default_factory=list)
    h_layer: list[Tensor] = field(default_factory=list)
    h_graph: Tensor | None = None

    def state(self, j: int, v: int, layer: int = 0) -> Tensor:
        """Cell state c_j at node v (j is 1-based, matching the math)."""
        return self.c[layer][j - 1][v]

    def state_sum(self, j: int, layer: int = 0) -> np.ndarray:
        vecs = [t.data for t in self.c[layer][j - 1]]
        return np.sum(vecs, axis=0)


def init_graph_layer(
    cfg: GraphModelConfig,
    in_dim: int,
    rng: np.random.Generator,
    with_readout: bool = False,
) -> GraphLayerParams:
    m = cfg.hidden
    a = 1.0 / math.sqrt(in_dim)
    p = GraphLayerParams(W=[Tensor(rng.uniform(-a, a, size=(m, in_dim))) for _ in range(cfg.n)])
    if with_readout:
        ra = 1.0 / math.sqrt(m)
        p.readout = Tensor(rng.uniform(-ra, ra, size=(m, m)))
    if cfg.gated:
        ga = 1.0 / math.sqrt(2 * in_dim)
        p.gate_u = Tensor(rng.uniform(-ga, ga, size=(m, 2 * in_dim)))
        p.gate_b = Tensor(np.zeros(m))
    return p


def init_wl_params(cfg: GraphModelConfig, in_dim: int, rng: np.random.Generator) -> WLParams:
    a = 1.0 / math.sqrt(in_dim)
    layer_W = [
        [Tensor(rng.uniform(-a, a, size=(cfg.hidden, in_dim))) for _ in range(cfg.n)]
        for _ in range(cfg.layers)
    ]
    u1 = Tensor(rng.uniform(-a, a, size=(in_dim, in_dim)))
    u2 = Tensor(rng.uniform(-a, a, size=(in_dim, in_dim)))
    v = Tensor(rng.uniform(-a, a, size=(in_dim, in_dim)))
    return WLParams(layer_W=layer_W, u1=u1, u2=u2, v=v)


def _check_weights(ws: Sequence[Tensor], m: int, in_dim: int) -> None:
    for j, w in enumerate(ws):
        if w.shape != (m, in_dim):
            raise ShapeError(f"W{j + 1} has shape {w.shape}, expected {(m, in_dim)}")


def _walk_states(
    g: FeatureGraph, feats: list[Tensor], ws: Sequence[Tensor], lam: float, m: int
) -> list[list[Tensor]]:
    """The plain decayed walk recursion over given node vectors."""
    zeros = Tensor(np.zeros(m))
    proj = [[matvec(w, feats[v]) for v in range(g.num_nodes)] for w in ws]
    states: list[list[Tensor]] = [proj[0]]
    for j in range(1, len(ws)):
        row: list[Tensor] = []
        for v in range(g.num_nodes):
            nbr = [states[j - 1][u] for u in g.neighbors[v]]
            if not nbr:
                row.append(zeros)
            else:
                row.append(mul(scale(accumulate(nbr), lam), proj[j][v]))
        states.append(row)
    return states


def rw_forward(g: FeatureGraph, p: GraphLayerParams, cfg: GraphModelConfig) -> GraphStateTrace:
    """Single-layer walk module: h_G = act(sum of final node states)."""
    feats = [Tensor(f) for f in g.features]
    _check_weights(p.W, cfg.hidden, g.dim)
    states = _walk_states(g, feats, p.W, cfg.lam, cfg.hidden)
    pre = accumulate(states[-1])
    trace = GraphStateTrace(c=[states], h_node=[feats], h_layer=[pre])
    trace.h_graph = cfg.activation(pre)
    return trace


def generalized_forward(
    g: FeatureGraph, p: GraphLayerParams, cfg: GraphModelConfig
) -> GraphStateTrace:
    """Composition-switch module: project the node, then join aggregated neighbors.

    Multiplicative composition with identity activation coincides with
    :func:`rw_forward`; the additive branch keeps the projected feature alive
    on edgeless nodes.
    """
    feats = [Tensor(f) for f in g.features]
    _check_weights(p.W, cfg.hidden, g.dim)
    states = _generalized_states(g, feats, p.W, cfg)
    pre = accumulate(states[-1])
    trace = GraphStateTrace(c=[states], h_node=[feats], h_layer=[pre])
    trace.h_graph = cfg.activation(pre)
    return trace


def _generalized_states(
    g: FeatureGraph, feats: list[Tensor], ws: Sequence[Tensor], cfg: GraphModelConfig
) -> list[list[Tensor]]:
    m = cfg.hidden
    zeros = Tensor(np.zeros(m))
    proj = [[matvec(w, feats[v]) for v in range(g.num_nodes)] for w in ws]
    states: list[list[Tensor]] = [proj[0]]
    for j in range(1, len(ws)):
        row: list[Tensor] = []
        for v in range(g.num_nodes):
            nbr = [cfg.activation(states[j - 1][u]) for u in g.neighbors[v]]
            agg = scale(accumulate(nbr), cfg.lam) if nbr else zeros
            if cfg.composition == MULTIPLICATIVE:
                row.append(mul(proj[j][v], agg))
            else:
                row.append(add(proj[j][v], agg))
        states.append(row)
    return states


def deep_forward(
    g: FeatureGraph, params: Sequence[GraphLayerParams], cfg: GraphModelConfig
) -> GraphStateTrace:
    """Stack of generalized layers with per-layer readout of the final width state."""
    if len(params) != cfg.layers:
        raise ConfigError(f"got {len(params)} layer params for {cfg.layers} layers")
    trace = GraphStateTrace()
    node_vecs = [Tensor(f) for f in g.features]
    for p in params:
        if p.readout is None:
            raise ConfigError("deep layers need a readout matrix")
        _check_weights(p.W, cfg.hidden, node_vecs[0].shape[0])
        states = _generalized_states(g, node_vecs, p.W, cfg)
        node_vecs = [cfg.activation(matvec(p.readout, states[-1][v])) for v in range(g.num_nodes)]
        trace.c.append(states)
        trace.h_node.append(node_vecs)
        trace.h_layer.append(accumulate(node_vecs))
    trace.h_graph = trace.h_layer[-1]
    return trace


def wl_forward(g: FeatureGraph, p: WLParams, cfg: GraphModelConfig) -> GraphStateTrace:
    """Relabeling iterations with walk readouts, summed across layers.

    Per-layer readouts are pre-activation sums of the final walk states; the
    relabeling transforms u1, u2, v are the same tensors at every layer.
    """
    if len(p.layer_W) != cfg.layers:
        raise ConfigError(f"got {len(p.layer_W)} weight lists for {cfg.layers} layers")
    trace = GraphStateTrace()
    node_vecs = [Tensor(f) for f in g.features]
    act = cfg.activation
    for ws in p.layer_W:
        _check_weights(ws, cfg.hidden, node_vecs[0].shape[0])
        states = _walk_states(g, node_vecs, ws, cfg.lam, cfg.hidden)
        trace.c.append(states)
        trace.h_layer.append(accumulate(states[-1]))
        inner = [act(matvec(p.v, node_vecs[u])) for u in range(g.num_nodes)]
        relabeled: list[Tensor] = []
        for v_idx in range(g.num_nodes):
            own = matvec(p.u1, node_vecs[v_idx])
            nbr = [inner[u] for u in g.neighbors[v_idx]]
            if nbr:
                own = add(own, matvec(p.u2, accumulate(nbr)))
            relabeled.append(act(own))
        trace.h_node.append(relabeled)
        node_vecs = relabeled
    trace.h_graph = accumulate(trace.h_layer)
    return trace


def gated_rw_forward(g: FeatureGraph, p: GraphLayerParams, cfg: GraphModelConfig) -> GraphStateTrace:
    """Walk module with a learned per-edge decay instead of the constant."""
    if p.gate_u is None or p.gate_b is None:
        raise ConfigError("gated walk module needs gate_u and gate_b parameters")
    feats = [Tensor(f) for f in g.features]
    m = cfg.hidden
    _check_weights(p.W, m, g.dim)
    zeros = Tensor(np.zeros(m))
    gates: dict[tuple[int, int], Tensor] = {}
    for v in range(g.num_nodes):
        for u in g.neighbors[v]:
            if (u, v) not in gates:
                gates[(u, v)] = sigmoid(add(matvec(p.gate_u, concat(feats[u], feats[v])), p.gate_b))
    proj = [[matvec(w, feats[v]) for v in range(g.num_nodes)] for w in p.W]
    states: list[list[Tensor]] = [proj[0]]
    for j in range(1, len(p.W)):
        row: list[Tensor] = []
        for v in range(g.num_nodes):
            terms = [
                mul(mul(gates[(u, v)], states[j - 1][u]), proj[j][v]) for u in g.neighbors[v]
            ]
            row.append(accumulate(terms) if terms else zeros)
        states.append(row)
    pre = accumulate(states[-1])
    trace = GraphStateTrace(c=[states], h_node=[feats], h_layer=[pre])
    trace.h_graph = cfg.activation(pre)
    return trace
