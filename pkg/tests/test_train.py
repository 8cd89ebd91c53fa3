import math

import numpy as np
import pytest

from kernelnn.errors import ConfigError, DataError, EvaluationError
from kernelnn.graph_kernel import FeatureGraph
from kernelnn.graph_nn import GraphModelConfig
from kernelnn.seq_nn import SeqModelConfig
from kernelnn.tensor import Activation, Tensor
from kernelnn.train import (
    MetricRecord,
    OptimizerState,
    TrainConfig,
    clip_gradients,
    eval_graph_reg,
    eval_lm,
    init_graph_model,
    init_lm_model,
    lm_loss,
    perplexity,
    regression_loss,
    step,
    step_adam,
    step_sgd,
    train_graph_reg,
    train_lm,
)


def test_sgd_zero_gradient_keeps_params():
    p = {"w": Tensor([1.0, -2.0])}
    out = step_sgd(p, {"w": np.zeros(2)}, OptimizerState(lr=0.5))
    assert np.array_equal(out["w"].data, p["w"].data)


def test_sgd_unit_lr_gradient_equal_param_zeroes():
    p = {"w": Tensor([1.0, -2.0])}
    out = step_sgd(p, {"w": p["w"].data.copy()}, OptimizerState(lr=1.0))
    assert np.allclose(out["w"].data, 0.0)


def test_sgd_quadratic_bowl_contracts_geometrically():
    p = {"w": Tensor([3.0, -4.0])}
    state = OptimizerState(lr=0.1)
    for _ in range(100):
        p = step_sgd(p, {"w": 2.0 * p["w"].data}, state)
    want = np.linalg.norm([3.0, 4.0]) * 0.8**100
    assert np.linalg.norm(p["w"].data) == pytest.approx(want, rel=1e-10)


def test_sgd_lr_decay_applies_per_epoch():
    state = OptimizerState(lr=1.0, lr_decay=0.5)
    state.end_epoch()
    state.end_epoch()
    assert state.lr == pytest.approx(0.25)


def test_adam_zero_gradient_keeps_params():
    p = {"w": Tensor([1.0, 2.0])}
    out = step_adam(p, {"w": np.zeros(2)}, OptimizerState(kind="adam", lr=0.1))
    assert np.array_equal(out["w"].data, p["w"].data)


def test_adam_first_step_size_is_scale_free():
    for magnitude in (1e-3, 1.0, 1e3):
        p = {"w": Tensor([0.0])}
        out = step_adam(p, {"w": np.array([magnitude])}, OptimizerState(kind="adam", lr=0.01))
        assert out["w"].data[0] == pytest.approx(-0.01, rel=1e-4)


def test_adam_convex_quadratic_decreases_after_warmup():
    rng = np.random.default_rng(0)
    h = rng.normal(size=(4, 4))
    h = h @ h.T + 0.5 * np.eye(4)
    p = {"w": Tensor(rng.normal(size=4))}
    state = OptimizerState(kind="adam", lr=0.01)
    losses = []
    for _ in range(500):
        w = p["w"].data
        losses.append(0.5 * float(w @ h @ w))
        p = step_adam(p, {"w": h @ w}, state)
    assert losses[-1] < 1e-4 * losses[0]
    tail = losses[100:]
    assert all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))


def test_clipping_bounds_global_norm():
    grads = {"a": np.full(4, 10.0), "b": np.full(2, -3.0)}
    clipped = clip_gradients(grads, 1.5)
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in clipped.values()))
    assert norm <= 1.5 + 1e-12
    small = {"a": np.array([0.1])}
    assert clip_gradients(small, 1.5)["a"] is small["a"]


def test_non_finite_gradient_names_parameter():
    p = {"bad_param": Tensor([1.0])}
    with pytest.raises(EvaluationError) as err:
        step_sgd(p, {"bad_param": np.array([float("nan")])}, OptimizerState())
    assert "bad_param" in str(err.value)


def test_unknown_optimizer_rejected():
    with pytest.raises(ConfigError):
        OptimizerState(kind="adagrad")


def test_lm_loss_uniform_logits_is_log_vocab():
    hs = [Tensor(np.zeros(3))]
    out_w = Tensor(np.zeros((5, 3)))
    out_b = Tensor(np.zeros(5))
    loss = lm_loss(hs, [2], out_w, out_b)
    assert loss.item() == pytest.approx(math.log(5))


def test_lm_loss_confident_correct_logits_vanishes():
    hs = [Tensor(np.array([1.0]))]
    out_w = Tensor(np.array([[50.0], [-50.0]]))
    out_b = Tensor(np.zeros(2))
    loss = lm_loss(hs, [0], out_w, out_b)
    assert loss.item() < 1e-20


def test_lm_loss_target_out_of_vocab():
    hs = [Tensor(np.zeros(2))]
    with pytest.raises(DataError):
        lm_loss(hs, [7], Tensor(np.zeros((3, 2))), Tensor(np.zeros(3)))


def test_regression_loss_zero_at_exact_prediction():
    h = Tensor([1.0, 2.0])
    w = Tensor([0.5, 0.25])
    b = Tensor(0.0)
    assert regression_loss(h, 1.0, w, b).item() == 0.0


def test_mean_predictor_rmse_is_std():
    rng = np.random.default_rng(1)
    targets = rng.normal(size=50)
    mean = float(targets.mean())
    rmse = math.sqrt(float(np.mean((targets - mean) ** 2)))
    assert rmse == pytest.approx(float(targets.std()))


def make_repeating_corpus(tokens, repeats):
    return tokens * repeats


def test_lm_memorizes_two_token_corpus_quickly():
    ids = make_repeating_corpus([1, 2], 120)
    cfg = SeqModelConfig(n=1, hidden=8, lam=0.5, variant="mult-norm",
                         activation=Activation.TANH)
    model = init_lm_model(cfg, vocab_size=3, rng=np.random.default_rng(0))
    tc = TrainConfig(epochs=50, unroll=16, seed=0, max_steps=200)
    opt = OptimizerState(kind="adam", lr=0.05)
    model, records = train_lm(model, ids, tc, opt)
    loss, ppl = eval_lm(model, ids)
    assert ppl < 1.5


def test_lm_training_is_deterministic():
    ids = make_repeating_corpus([1, 2, 1, 0], 40)
    cfg = SeqModelConfig(n=1, hidden=4, lam=0.5, dropout=0.2)
    def run():
        model = init_lm_model(cfg, vocab_size=3, rng=np.random.default_rng(3))
        tc = TrainConfig(epochs=2, unroll=8, dropout=0.2, seed=5)
        opt = OptimizerState(kind="adam", lr=0.01)
        _, records = train_lm(model, ids, tc, opt, valid_ids=ids[:40])
        return [(r.epoch, r.split, r.loss, r.metric) for r in records]

    assert run() == run()


def synthetic_graph_task(rng, count=50, dim=3):
    w_star = rng.normal(size=dim)
    graphs, targets = [], []
    for _ in range(count):
        size = int(rng.integers(3, 7))
        feats = [rng.normal(size=dim) for _ in range(size)]
        edges = set()
        for v in range(1, size):
            edges.add((int(rng.integers(0, v)), v))
        graphs.append(FeatureGraph.undirected(feats, sorted(edges)))
        targets.append(float(w_star @ np.sum(feats, axis=0)))
    return graphs, targets


def test_graph_regression_beats_ten_percent_of_std():
    rng = np.random.default_rng(7)
    graphs, targets = synthetic_graph_task(rng)
    cfg = GraphModelConfig(n=1, hidden=8, lam=0.5, layers=2, activation=Activation.TANH)
    model = init_graph_model(cfg, in_dim=3, rng=np.random.default_rng(8))
    tc = TrainConfig(epochs=200, batch=10, seed=9, max_steps=500)
    opt = OptimizerState(kind="adam", lr=0.02, lr_decay=0.995)
    model, records = train_graph_reg(model, graphs, targets, tc, opt)
    rmse = eval_graph_reg(model, graphs, targets)
    assert rmse < 0.1 * float(np.std(targets))


def test_graph_training_deterministic_and_metric_lines():
    rng = np.random.default_rng(11)
    graphs, targets = synthetic_graph_task(rng, count=12)
    cfg = GraphModelConfig(n=1, hidden=4, lam=0.5, layers=1)

    def run():
        model = init_graph_model(cfg, in_dim=3, rng=np.random.default_rng(1))
        tc = TrainConfig(epochs=3, batch=4, seed=2)
        opt = OptimizerState(kind="sgd", lr=0.05, clip=1.0)
        _, records = train_graph_reg(model, graphs, targets, tc, opt)
        return records

    a, b = run(), run()
    assert [(r.loss, r.metric) for r in a] == [(r.loss, r.metric) for r in b]
    line = a[0].line()
    assert line.startswith("epoch=1 split=train loss=") and "rmse=" in line


def test_eval_lm_is_deterministic():
    ids = make_repeating_corpus([1, 2, 0], 30)
    cfg = SeqModelConfig(n=1, hidden=4, lam=0.5, dropout=0.5)
    model = init_lm_model(cfg, vocab_size=3, rng=np.random.default_rng(0))
    assert eval_lm(model, ids) == eval_lm(model, ids)
