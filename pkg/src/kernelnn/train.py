"""Optimizers, losses, and toy-scale training loops.

Training is functional: a step maps a name->tensor parameter dict plus
gradients to a fresh parameter dict, so models stay immutable and runs are
bit-reproducible under a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, ContractError, DataError, EvaluationError
from .graph_kernel import FeatureGraph
from .graph_nn import GraphModelConfig, WLParams, init_wl_params, wl_forward
from .seq_nn import SeqLayerParams, SeqModelConfig, StackState, forward_stack, init_seq_stack
from .tensor import (
    Tape,
    Tensor,
    accumulate,
    add,
    column,
    dot,
    logsumexp,
    matvec,
    mul,
    pick,
    scale,
    sub,
)


@dataclass
class OptimizerState:
    kind: str = "sgd"
    lr: float = 1.0
    lr_decay: float = 1.0
    clip: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {self.kind!r}")
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")

    def end_epoch(self) -> None:
        self.lr *= self.lr_decay


@dataclass
class TrainConfig:
    epochs: int = 1
    batch: int = 1
    unroll: int = 16
    dropout: float = 0.0
    seed: int = 0
    max_steps: int | None = None

    def __post_init__(self) -> None:
        if self.unroll < 1:
            raise ConfigError(f"unroll must be >= 1, got {self.unroll}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")


def _check_finite(name: str, g: np.ndarray) -> None:
    if not np.all(np.isfinite(g)):
        raise EvaluationError(f"non-finite gradient for parameter {name!r}")


def clip_gradients(grads: dict[str, np.ndarray], threshold: float) -> dict[str, np.ndarray]:
    """Global-norm clipping: rescale so the joint norm is at most the threshold."""
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total <= threshold or total == 0.0:
        return grads
    factor = threshold / total
    return {name: g * factor for name, g in grads.items()}


def _prepare(params, grads, state) -> dict[str, np.ndarray]:
    out = {}
    for name in params:
        g = np.asarray(grads.get(name, np.zeros(params[name].shape)), dtype=np.float64)
        _check_finite(name, g)
        out[name] = g
    if state.clip is not None:
        out = clip_gradients(out, state.clip)
    return out


def step_sgd(
    params: dict[str, Tensor], grads: dict[str, np.ndarray], state: OptimizerState
) -> dict[str, Tensor]:
    gs = _prepare(params, grads, state)
    return {name: Tensor(params[name].data - state.lr * gs[name]) for name in params}


def step_adam(
    params: dict[str, Tensor], grads: dict[str, np.ndarray], state: OptimizerState
) -> dict[str, Tensor]:
    gs = _prepare(params, grads, state)
    state.step += 1
    t = state.step
    out = {}
    for name in params:
        g = gs[name]
        m = state.m.get(name, np.zeros_like(g))
        v = state.v.get(name, np.zeros_like(g))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        out[name] = Tensor(params[name].data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


def step(params, grads, state: OptimizerState):
    return step_sgd(params, grads, state) if state.kind == "sgd" else step_adam(params, grads, state)


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def lm_loss(hs: Sequence[Tensor], targets: Sequence[int], out_w: Tensor, out_b: Tensor) -> Tensor:
    """Mean token-level cross-entropy of softmax(out_w h + out_b) against targets."""
    if len(hs) != len(targets):
        raise ContractError(f"{len(hs)} states vs {len(targets)} targets")
    vocab = out_w.shape[0]
    terms = []
    for h, y in zip(hs, targets):
        if not 0 <= y < vocab:
            raise DataError(f"target id {y} outside vocabulary of size {vocab}")
        logits = add(matvec(out_w, h), out_b)
        terms.append(sub(logsumexp(logits), pick(logits, y)))
    return scale(accumulate(terms), 1.0 / len(terms))


def perplexity(loss: float) -> float:
    return math.exp(loss)


def regression_loss(h_g: Tensor, target: float, head_w: Tensor, head_b: Tensor) -> Tensor:
    """Squared error of the linear readout against a scalar target."""
    pred = add(dot(head_w, h_g), head_b)
    diff = sub(pred, float(target))
    return mul(diff, diff)


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


@dataclass
class SeqLMModel:
    """Recurrent language model: embedding columns -> stack -> softmax."""

    cfg: SeqModelConfig
    vocab_size: int
    embed: Tensor
    layers: list[SeqLayerParams]
    out_w: Tensor
    out_b: Tensor

    def parameters(self) -> dict[str, Tensor]:
        out = {"embed": self.embed, "out_w": self.out_w, "out_b": self.out_b}
        for l, p in enumerate(self.layers):
            out.update(p.named(f"layer{l}"))
        return out

    def with_parameters(self, updates: dict[str, Tensor]) -> "SeqLMModel":
        layers = [p.with_named(updates, f"layer{l}") for l, p in enumerate(self.layers)]
        return SeqLMModel(
            cfg=self.cfg,
            vocab_size=self.vocab_size,
            embed=updates.get("embed", self.embed),
            layers=layers,
            out_w=updates.get("out_w", self.out_w),
            out_b=updates.get("out_b", self.out_b),
        )


def init_lm_model(cfg: SeqModelConfig, vocab_size: int, rng: np.random.Generator) -> SeqLMModel:
    d = cfg.hidden
    a = 1.0 / math.sqrt(vocab_size)
    embed = Tensor(rng.uniform(-a, a, size=(d, vocab_size)))
    layers = init_seq_stack(cfg, d, rng)
    oa = 1.0 / math.sqrt(cfg.hidden)
    out_w = Tensor(rng.uniform(-oa, oa, size=(vocab_size, cfg.hidden)))
    out_b = Tensor(np.zeros(vocab_size))
    return SeqLMModel(cfg=cfg, vocab_size=vocab_size, embed=embed, layers=layers,
                      out_w=out_w, out_b=out_b)


def lm_forward(
    model: SeqLMModel,
    ids: Sequence[int],
    state: StackState | None = None,
    rng: np.random.Generator | None = None,
    training: bool = False,
):
    xs = [column(model.embed, i) for i in ids]
    trace = forward_stack(xs, model.layers, model.cfg, state=state, rng=rng, training=training)
    return trace


@dataclass
class GraphRegModel:
    """Relabeling-iteration graph model with a scalar linear head."""

    cfg: GraphModelConfig
    wl: WLParams
    head_w: Tensor
    head_b: Tensor

    def parameters(self) -> dict[str, Tensor]:
        out = self.wl.named("wl")
        out["head_w"] = self.head_w
        out["head_b"] = self.head_b
        return out

    def with_parameters(self, updates: dict[str, Tensor]) -> "GraphRegModel":
        return GraphRegModel(
            cfg=self.cfg,
            wl=self.wl.with_named(updates, "wl"),
            head_w=updates.get("head_w", self.head_w),
            head_b=updates.get("head_b", self.head_b),
        )


def init_graph_model(cfg: GraphModelConfig, in_dim: int, rng: np.random.Generator) -> GraphRegModel:
    wl = init_wl_params(cfg, in_dim, rng)
    a = 1.0 / math.sqrt(cfg.hidden)
    head_w = Tensor(rng.uniform(-a, a, size=cfg.hidden))
    head_b = Tensor(0.0)
    return GraphRegModel(cfg=cfg, wl=wl, head_w=head_w, head_b=head_b)


def graph_predict(model: GraphRegModel, g: FeatureGraph) -> Tensor:
    trace = wl_forward(g, model.wl, model.cfg)
    return add(dot(model.head_w, trace.h_graph), model.head_b)


# ---------------------------------------------------------------------------
# training loops
# ---------------------------------------------------------------------------


@dataclass
class MetricRecord:
    epoch: int
    split: str
    loss: float
    metric: float
    metric_name: str

    def line(self) -> str:
        return (
            f"epoch={self.epoch} split={self.split} loss={self.loss:.6f} "
            f"{self.metric_name}={self.metric:.6f}"
        )


def _grads_by_name(tape: Tape, loss: Tensor, params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    grads = tape.backward(loss)
    return {name: np.array(grads[t].data) if t in grads else np.zeros(t.shape)
            for name, t in params.items()}


def eval_lm(model: SeqLMModel, ids: Sequence[int], unroll: int = 64) -> tuple[float, float]:
    """Mean cross-entropy and perplexity over a token stream, dropout off."""
    if len(ids) < 2:
        raise DataError("evaluation needs at least two tokens")
    total, count = 0.0, 0
    state = None
    for t0 in range(0, len(ids) - 1, unroll):
        window = ids[t0 : t0 + unroll + 1]
        trace = lm_forward(model, window[:-1], state=state)
        loss = lm_loss(trace.h[-1], window[1:], model.out_w, model.out_b)
        total += loss.item() * (len(window) - 1)
        count += len(window) - 1
        state = trace.carry(model.cfg.layers)
    mean = total / count
    return mean, perplexity(mean)


def train_lm(
    model: SeqLMModel,
    train_ids: Sequence[int],
    tc: TrainConfig,
    opt: OptimizerState,
    valid_ids: Sequence[int] | None = None,
) -> tuple[SeqLMModel, list[MetricRecord]]:
    """Truncated-backprop training over a token stream.

    Cell and output states carry across windows as constants, so gradients
    stop at window boundaries.
    """
    if len(train_ids) < 2:
        raise DataError("training needs at least two tokens")
    rng = np.random.default_rng(tc.seed)
    records: list[MetricRecord] = []
    steps = 0
    for epoch in range(1, tc.epochs + 1):
        state = None
        total, count = 0.0, 0
        for t0 in range(0, len(train_ids) - 1, tc.unroll):
            window = train_ids[t0 : t0 + tc.unroll + 1]
            if len(window) < 2:
                break
            params = model.parameters()
            with Tape() as tape:
                trace = lm_forward(model, window[:-1], state=state, rng=rng, training=True)
                loss = lm_loss(trace.h[-1], window[1:], model.out_w, model.out_b)
            state = trace.carry(model.cfg.layers)
            grads = _grads_by_name(tape, loss, params)
            model = model.with_parameters(step(params, grads, opt))
            total += loss.item() * (len(window) - 1)
            count += len(window) - 1
            steps += 1
            if tc.max_steps is not None and steps >= tc.max_steps:
                break
        mean = total / max(count, 1)
        records.append(MetricRecord(epoch, "train", mean, perplexity(mean), "ppl"))
        if valid_ids is not None:
            vloss, vppl = eval_lm(model, valid_ids)
            records.append(MetricRecord(epoch, "valid", vloss, vppl, "ppl"))
        opt.end_epoch()
        if tc.max_steps is not None and steps >= tc.max_steps:
            break
    return model, records


def eval_graph_reg(
    model: GraphRegModel, graphs: Sequence[FeatureGraph], targets: Sequence[float]
) -> float:
    """Root mean squared error of the scalar head over a graph set."""
    if len(graphs) != len(targets) or not graphs:
        raise DataError(f"{len(graphs)} graphs vs {len(targets)} targets")
    se = 0.0
    for g, y in zip(graphs, targets):
        pred = graph_predict(model, g).item()
        se += (pred - float(y)) ** 2
    return math.sqrt(se / len(graphs))


def train_graph_reg(
    model: GraphRegModel,
    graphs: Sequence[FeatureGraph],
    targets: Sequence[float],
    tc: TrainConfig,
    opt: OptimizerState,
    valid: tuple[Sequence[FeatureGraph], Sequence[float]] | None = None,
) -> tuple[GraphRegModel, list[MetricRecord]]:
    """Mini-batch regression training; batches are re-shuffled each epoch."""
    if len(graphs) != len(targets) or not graphs:
        raise DataError(f"{len(graphs)} graphs vs {len(targets)} targets")
    rng = np.random.default_rng(tc.seed)
    records: list[MetricRecord] = []
    steps = 0
    for epoch in range(1, tc.epochs + 1):
        order = rng.permutation(len(graphs))
        total = 0.0
        for b0 in range(0, len(order), tc.batch):
            batch = order[b0 : b0 + tc.batch]
            params = model.parameters()
            with Tape() as tape:
                terms = [
                    regression_loss(
                        wl_forward(graphs[i], model.wl, model.cfg).h_graph,
                        targets[i],
                        model.head_w,
                        model.head_b,
                    )
                    for i in batch
                ]
                loss = scale(accumulate(terms), 1.0 / len(batch))
            grads = _grads_by_name(tape, loss, params)
            model = model.with_parameters(step(params, grads, opt))
            total += loss.item() * len(batch)
            steps += 1
            if tc.max_steps is not None and steps >= tc.max_steps:
                break
        rmse = eval_graph_reg(model, graphs, targets)
        records.append(MetricRecord(epoch, "train", total / len(order), rmse, "rmse"))
        if valid is not None:
            records.append(
                MetricRecord(epoch, "valid", float("nan"), eval_graph_reg(model, *valid), "rmse")
            )
        opt.end_epoch()
        if tc.max_steps is not None and steps >= tc.max_steps:
            break
    return model, records
