"""Verification sweeps: the state-equals-kernel equalities as executable checks.

Each suite draws randomized instances per seed, compares the recurrent
modules against the exhaustive kernel oracles (or finite differences), and
reports one result line per check.  The CLI exposes these as ``verify``;
the acceptance tests call them directly.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph_kernel import (
    ADDITIVE,
    FeatureGraph,
    GraphKernelConfig,
    WLRelabelParams,
    deep_graph_kernel,
    deep_local_kernel,
    gated_walk_state_sum,
    random_walk_kernel,
    reference_walk,
    wl_kernel,
    wl_relabel,
)
from .graph_nn import (
    GraphModelConfig,
    deep_forward,
    gated_rw_forward,
    init_graph_layer,
    init_wl_params,
    rw_forward,
    wl_forward,
)
from .seq_kernel import (
    FeatureSequence,
    SeqKernelConfig,
    deep_sequence_kernel,
    gram_matrix,
    reference_sequence,
    string_kernel,
    unrolled_state,
)
from .seq_nn import (
    SeqModelConfig,
    forward_layer,
    forward_stack,
    init_seq_layer,
    init_seq_stack,
    logit,
)
from .tensor import Activation, Tape, Tensor, dot, finite_diff_grad, rel_error
from .train import (
    OptimizerState,
    TrainConfig,
    eval_graph_reg,
    eval_lm,
    init_graph_model,
    init_lm_model,
    train_graph_reg,
    train_lm,
)

THREADS_ENV = "KERNELNN_THREADS"


@dataclass
class CheckResult:
    suite: str
    seed: int
    error: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "pass" if self.passed else "fail"
        tail = f" {self.detail}" if self.detail else ""
        return f"suite={self.suite} seed={self.seed} max_rel_err={self.error:.3e} status={status}{tail}"


@dataclass
class SuiteReport:
    name: str
    results: list[CheckResult]
    passed: bool


def _random_sequence(rng, length, dim) -> FeatureSequence:
    return FeatureSequence([rng.normal(size=dim) for _ in range(length)], dim=dim)


def _random_graph(rng, num_nodes, dim) -> FeatureGraph:
    feats = [rng.normal(size=dim) for _ in range(num_nodes)]
    edges = set()
    for v in range(1, num_nodes):
        edges.add((int(rng.integers(0, v)), v))
    for u in range(num_nodes):
        for v in range(u + 1, num_nodes):
            if rng.random() < 0.4:
                edges.add((u, v))
    return FeatureGraph.undirected(feats, sorted(edges))


def gram_range_residual(gram: np.ndarray, values: np.ndarray) -> float:
    """Relative distance from values to the column space of the kernel matrix."""
    sol, *_ = np.linalg.lstsq(gram, values, rcond=None)
    resid = gram @ sol - values
    denom = np.linalg.norm(values)
    return float(np.linalg.norm(resid) / denom) if denom > 0 else 0.0


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def check_seq_state_kernel(seed: int, tol: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (1, 2, 3):
        d = int(rng.integers(2, 5))
        m = int(rng.integers(2, 5))
        length = int(rng.integers(n, 7))
        lam = float(rng.uniform(0.05, 0.95))
        cfg = SeqModelConfig(n=n, hidden=m, lam=lam, activation=Activation.IDENTITY)
        p = init_seq_layer(cfg, d, rng)
        x = _random_sequence(rng, length, d)
        trace = forward_layer(x, p, cfg)
        ws = [w.data for w in p.W]
        kcfg = SeqKernelConfig(n=n, lam=lam)
        for t in range(1, length + 1):
            for i in range(m):
                got = trace.state(n, t).data[i]
                want = string_kernel(x.prefix(t), reference_sequence(ws, i), kcfg)
                worst = max(worst, abs(got - want) / max(1.0, abs(got), abs(want)))
    return [CheckResult("seq-state-kernel", seed, worst, worst <= tol)]


def check_graph_state_kernel(seed: int, tol: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (1, 2, 3):
        d = int(rng.integers(2, 4))
        m = int(rng.integers(2, 5))
        lam = float(rng.uniform(0.1, 0.9))
        g = _random_graph(rng, int(rng.integers(2, 7)), d)
        cfg = GraphModelConfig(n=n, hidden=m, lam=lam)
        p = init_graph_layer(cfg, d, rng)
        trace = rw_forward(g, p, cfg)
        total = trace.state_sum(n)
        kcfg = GraphKernelConfig(n=n, lam=lam)
        ws = [w.data for w in p.W]
        for k in range(m):
            want = random_walk_kernel(g, reference_walk(ws, k), kcfg)
            worst = max(worst, abs(total[k] - want) / max(1.0, abs(total[k]), abs(want)))
    return [CheckResult("graph-state-kernel", seed, worst, worst <= tol)]


def check_cnn_degeneration(seed: int, tol: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    n, d, m, length = 3, 3, 4, 6
    cfg = SeqModelConfig(n=n, hidden=m, lam=0.0, variant="add-norm", activation=Activation.TANH)
    p = init_seq_layer(cfg, d, rng)
    x = _random_sequence(rng, length, d)
    trace = forward_layer(x, p, cfg)
    worst = 0.0
    for t in range(1, length + 1):
        pre = np.zeros(m)
        for j in range(1, n + 1):
            tok = t - n + j
            if tok >= 1:
                pre += p.W[j - 1].data @ x.tokens[tok - 1]
        worst = max(worst, float(np.max(np.abs(trace.h[0][t - 1].data - np.tanh(pre)))))
    return [CheckResult("cnn-degeneration", seed, worst, worst <= tol)]


def check_gated_degeneration(seed: int, tol: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    lam = float(rng.uniform(0.2, 0.8))
    worst = 0.0
    # sequence modules: every variant, both gate inputs
    d, m, length = 3, 3, 5
    x = _random_sequence(rng, length, d)
    for variant in ("mult-unnorm", "mult-norm", "add-norm"):
        for decay in ("gated-input", "gated-input-state"):
            gated_cfg = SeqModelConfig(
                n=2, hidden=m, lam=lam, variant=variant, decay=decay,
                activation=Activation.TANH,
            )
            const_cfg = SeqModelConfig(
                n=2, hidden=m, lam=lam, variant=variant, activation=Activation.TANH
            )
            p = init_seq_layer(gated_cfg, d, rng)
            gate_in = d if decay == "gated-input" else d + m
            p.gate_u = Tensor(np.zeros((m, gate_in)))
            p.gate_b = Tensor(np.full(m, logit(lam)))
            tg = forward_layer(x, p, gated_cfg)
            tc = forward_layer(x, p, const_cfg)
            for j in (1, 2):
                for t in range(1, length + 1):
                    worst = max(
                        worst, float(np.max(np.abs(tg.state(j, t).data - tc.state(j, t).data)))
                    )
    # graph module
    g = _random_graph(rng, 5, d)
    gated_gcfg = GraphModelConfig(n=3, hidden=m, lam=lam, gated=True)
    plain_gcfg = GraphModelConfig(n=3, hidden=m, lam=lam)
    gp = init_graph_layer(gated_gcfg, d, rng)
    gp.gate_u = Tensor(np.zeros((m, 2 * d)))
    gp.gate_b = Tensor(np.full(m, logit(lam)))
    tg = gated_rw_forward(g, gp, gated_gcfg)
    tc = rw_forward(g, gp, plain_gcfg)
    for j in (1, 2, 3):
        for v in range(g.num_nodes):
            worst = max(worst, float(np.max(np.abs(tg.state(j, v).data - tc.state(j, v).data))))
    return [CheckResult("gated-degeneration", seed, worst, worst <= tol)]


def check_variants(seed: int, tol: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for variant in ("mult-unnorm", "mult-norm", "add-norm"):
        n, d, m, length = 3, 2, 3, 5
        lam = float(rng.uniform(0.1, 0.9))
        cfg = SeqModelConfig(n=n, hidden=m, lam=lam, variant=variant, activation=Activation.IDENTITY)
        p = init_seq_layer(cfg, d, rng)
        x = _random_sequence(rng, length, d)
        trace = forward_layer(x, p, cfg)
        ws = [w.data for w in p.W]
        worst = 0.0
        for t in range(1, length + 1):
            want = unrolled_state(x, ws, lam, variant, t=t)
            worst = max(worst, rel_error(trace.state(n, t).data, want))
        out.append(CheckResult("variants", seed, worst, worst <= tol, detail=variant))
    return out


def check_deep_rkhs(seed: int, tol: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    # sequence stack, depth 2
    d, m, lam = 2, 3, 0.5
    scfg = SeqModelConfig(n=2, hidden=m, layers=2, lam=lam, activation=Activation.IDENTITY)
    sparams = init_seq_stack(scfg, d, rng)
    seqs = [_random_sequence(rng, 4, d) for _ in range(5)]
    kcfg = SeqKernelConfig(n=2, lam=lam)
    gram = np.array([[deep_sequence_kernel(a, b, 2, kcfg) for b in seqs] for a in seqs])
    worst = 0.0
    for i in range(m):
        values = np.array(
            [forward_stack(s, sparams, scfg).c[1][1][len(s)].data[i] for s in seqs]
        )
        worst = max(worst, gram_range_residual(gram, values))
    out.append(CheckResult("deep-rkhs", seed, worst, worst <= tol, detail="sequence"))
    # graph stack, depth 2, additive composition
    gcfg = GraphModelConfig(n=2, hidden=m, lam=lam, composition=ADDITIVE,
                            activation=Activation.IDENTITY, layers=2)
    gparams = [init_graph_layer(gcfg, d if l == 0 else m, rng, with_readout=True) for l in range(2)]
    graphs = [_random_graph(rng, int(rng.integers(3, 6)), d) for _ in range(6)]
    kgcfg = GraphKernelConfig(n=2, lam=lam, composition=ADDITIVE, depth=2)
    points = [(gi, v) for gi, g in enumerate(graphs) for v in range(g.num_nodes)]
    gram_g = np.array(
        [
            [deep_local_kernel(v, vp, graphs[gi], graphs[gj], kgcfg) for gj, vp in points]
            for gi, v in points
        ]
    )
    traces = [deep_forward(g, gparams, gcfg) for g in graphs]
    worst_g = 0.0
    for i in range(m):
        values = np.array([traces[gi].h_node[-1][v].data[i] for gi, v in points])
        worst_g = max(worst_g, gram_range_residual(gram_g, values))
    out.append(CheckResult("deep-rkhs", seed, worst_g, worst_g <= tol, detail="graph"))
    return out


def check_wl_chain(seed: int, tol: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    d, m, lam, layers, n = 2, 3, 0.5, 2, 2
    g = _random_graph(rng, int(rng.integers(3, 6)), d)
    cfg = GraphModelConfig(n=n, hidden=m, lam=lam, layers=layers, activation=Activation.IDENTITY)
    wl = init_wl_params(cfg, d, rng)
    trace = wl_forward(g, wl, cfg)
    relabel = WLRelabelParams(u1=wl.u1.data, u2=wl.u2.data, v=wl.v.data,
                              activation=Activation.IDENTITY)
    kcfg = GraphKernelConfig(n=n, lam=lam)
    expected = np.zeros(m)
    relabeled = g
    for l in range(layers):
        ws = [w.data for w in wl.layer_W[l]]
        for k in range(m):
            expected[k] += random_walk_kernel(relabeled, reference_walk(ws, k), kcfg)
        relabeled = wl_relabel(relabeled, relabel)
    err = rel_error(trace.h_graph.data, expected)
    return [CheckResult("wl-chain", seed, err, err <= tol)]


def _seq_grad_error(cfg: SeqModelConfig, rng) -> tuple[float, int]:
    d, length = 2, 3
    p = init_seq_layer(cfg, d, rng)
    x = _random_sequence(rng, length, d)
    probes = [rng.normal(size=cfg.hidden) for _ in range(length)]

    def run(params):
        trace = forward_layer(x, params, cfg)
        loss = None
        for r, h in zip(probes, trace.h[0]):
            term = dot(Tensor(r), h)
            loss = term if loss is None else loss + term
        return loss

    with Tape() as tape:
        loss = run(p)
    grads = tape.backward(loss)
    worst, coords = 0.0, 0
    for name, tensor in p.named("L").items():
        fd = finite_diff_grad(lambda t: run(p.with_named({name: t}, "L")).item(), tensor)
        got = grads.get(tensor, Tensor(np.zeros(tensor.shape)))
        worst = max(worst, rel_error(got, fd))
        coords += tensor.size
    return worst, coords


def _graph_grad_error(kind: str, cfg: GraphModelConfig, rng) -> tuple[float, int]:
    d = 2
    g = _random_graph(rng, 4, d)
    probe = rng.normal(size=cfg.hidden)
    if kind == "wl":
        params = init_wl_params(cfg, d, rng)

        def run(ps):
            return dot(Tensor(probe), wl_forward(g, ps, cfg).h_graph)

        named = params.named()
        swap = lambda name, t: params.with_named({name: t})
    elif kind == "deep":
        layer_list = [
            init_graph_layer(cfg, d if l == 0 else cfg.hidden, rng, with_readout=True)
            for l in range(cfg.layers)
        ]

        def run(ps):
            return dot(Tensor(probe), deep_forward(g, ps, cfg).h_graph)

        named = {}
        for l, p in enumerate(layer_list):
            named.update(p.named(f"D{l}"))

        def swap(name, t):
            out = list(layer_list)
            l = int(name[1 : name.index(".")])
            out[l] = layer_list[l].with_named({name: t}, f"D{l}")
            return out

        params = layer_list
    else:
        params = init_graph_layer(cfg, d, rng)
        fwd = gated_rw_forward if kind == "gated" else rw_forward

        def run(ps):
            return dot(Tensor(probe), fwd(g, ps, cfg).h_graph)

        named = params.named("G")
        swap = lambda name, t: params.with_named({name: t}, "G")

    with Tape() as tape:
        loss = run(params)
    grads = tape.backward(loss)
    worst, coords = 0.0, 0
    for name, tensor in named.items():
        fd = finite_diff_grad(lambda t: run(swap(name, t)).item(), tensor)
        got = grads.get(tensor, Tensor(np.zeros(tensor.shape)))
        worst = max(worst, rel_error(got, fd))
        coords += tensor.size
    return worst, coords


def check_gradcheck(seed: int, tol: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    total_coords = 0
    for variant in ("mult-unnorm", "mult-norm", "add-norm"):
        for decay in ("constant", "learned", "gated-input", "gated-input-state"):
            cfg = SeqModelConfig(n=2, hidden=3, lam=0.5, variant=variant, decay=decay,
                                 activation=Activation.TANH, output="combination")
            err, coords = _seq_grad_error(cfg, rng)
            total_coords += coords
            out.append(
                CheckResult("gradcheck", seed, err, err <= tol, detail=f"seq:{variant}:{decay}")
            )
    for kind, cfg in (
        ("rw", GraphModelConfig(n=2, hidden=3, lam=0.5, activation=Activation.TANH)),
        ("gated", GraphModelConfig(n=2, hidden=3, lam=0.5, gated=True, activation=Activation.TANH)),
        ("deep", GraphModelConfig(n=2, hidden=3, lam=0.5, composition=ADDITIVE,
                                  activation=Activation.TANH, layers=2)),
        ("wl", GraphModelConfig(n=2, hidden=3, lam=0.5, layers=2, activation=Activation.TANH)),
    ):
        err, coords = _graph_grad_error(kind, cfg, rng)
        total_coords += coords
        out.append(CheckResult("gradcheck", seed, err, err <= tol, detail=f"graph:{kind}"))
    out.append(
        CheckResult("gradcheck", seed, 0.0, total_coords >= 200,
                    detail=f"coords:{total_coords}")
    )
    return out


def check_psd(seed: int, tol: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    def psd_error(gram: np.ndarray) -> float:
        eig = np.linalg.eigvalsh(gram)
        top = max(float(eig.max()), 1e-30)
        return max(0.0, -float(eig.min()) / top)

    seqs = [_random_sequence(rng, int(rng.integers(2, 7)), 3) for _ in range(8)]
    for n in (1, 2, 3):
        for composition in ("multiplicative", "additive"):
            for normalization in ("unnormalized", "normalized"):
                cfg = SeqKernelConfig(n=n, lam=0.5, composition=composition,
                                      normalization=normalization)
                err = psd_error(gram_matrix(seqs, lambda a, b: string_kernel(a, b, cfg)))
                out.append(CheckResult("psd", seed, err, err <= tol,
                                       detail=f"string:{n}:{composition[:4]}:{normalization[:6]}"))
    graphs = [_random_graph(rng, int(rng.integers(3, 6)), 2) for _ in range(8)]
    walk_cfg = GraphKernelConfig(n=2, lam=0.5)
    err = psd_error(gram_matrix(graphs, lambda a, b: random_walk_kernel(a, b, walk_cfg)))
    out.append(CheckResult("psd", seed, err, err <= tol, detail="walk"))
    deep_cfg = GraphKernelConfig(n=2, lam=0.5, composition=ADDITIVE, depth=2)
    err = psd_error(gram_matrix(graphs[:6], lambda a, b: deep_graph_kernel(a, b, deep_cfg)))
    out.append(CheckResult("psd", seed, err, err <= tol, detail="deep"))
    relabel = WLRelabelParams(
        u1=rng.normal(size=(2, 2)), u2=rng.normal(size=(2, 2)), v=rng.normal(size=(2, 2)),
        activation=Activation.TANH,
    )
    err = psd_error(
        gram_matrix(graphs, lambda a, b: wl_kernel(a, b, walk_cfg, 2, relabel))
    )
    out.append(CheckResult("psd", seed, err, err <= tol, detail="wl"))
    seq_deep_cfg = SeqKernelConfig(n=2, lam=0.5)
    err = psd_error(
        gram_matrix(seqs[:6], lambda a, b: deep_sequence_kernel(a, b, 2, seq_deep_cfg))
    )
    out.append(CheckResult("psd", seed, err, err <= tol, detail="deep-seq"))
    return out


def check_smoke_train(seed: int, tol: float) -> list[CheckResult]:
    del tol
    out = []
    ids = [1, 2] * 120
    cfg = SeqModelConfig(n=1, hidden=8, lam=0.5, variant="mult-norm", activation=Activation.TANH)
    model = init_lm_model(cfg, vocab_size=3, rng=np.random.default_rng(seed))
    model, _ = train_lm(
        model, ids, TrainConfig(epochs=50, unroll=16, seed=seed, max_steps=200),
        OptimizerState(kind="adam", lr=0.05),
    )
    _, ppl = eval_lm(model, ids)
    out.append(CheckResult("smoke-train", seed, ppl, ppl < 1.5, detail="lm-ppl"))

    rng = np.random.default_rng(seed + 1)
    w_star = rng.normal(size=3)
    graphs, targets = [], []
    for _ in range(50):
        size = int(rng.integers(3, 7))
        feats = [rng.normal(size=3) for _ in range(size)]
        edges = {(int(rng.integers(0, v)), v) for v in range(1, size)}
        graphs.append(FeatureGraph.undirected(feats, sorted(edges)))
        targets.append(float(w_star @ np.sum(feats, axis=0)))
    gcfg = GraphModelConfig(n=1, hidden=8, lam=0.5, layers=2, activation=Activation.TANH)
    gmodel = init_graph_model(gcfg, in_dim=3, rng=np.random.default_rng(seed + 2))
    gmodel, _ = train_graph_reg(
        gmodel, graphs, targets,
        TrainConfig(epochs=200, batch=10, seed=seed, max_steps=500),
        OptimizerState(kind="adam", lr=0.02, lr_decay=0.995),
    )
    ratio = eval_graph_reg(gmodel, graphs, targets) / float(np.std(targets))
    out.append(CheckResult("smoke-train", seed, ratio, ratio < 0.1, detail="graph-rmse-ratio"))
    return out


ORDERING_SENTENCES = (
    "the cat sat on the mat . "
    "the dog ran in the fog . "
    "a cat can nap on a mat . "
    "a dog can dig in the bog . "
)


def _ordering_corpus() -> tuple[list[int], list[int], int]:
    text = ORDERING_SENTENCES * 24
    chars = sorted(set(text))
    vocab_size = len(chars) + 1
    ids = [chars.index(c) + 1 for c in text]
    cut = int(len(ids) * 0.75)
    return ids[:cut], ids[cut:], vocab_size


def _ordering_loss(mode: str, seed: int) -> float:
    train_ids, valid_ids, vocab_size = _ordering_corpus()
    lam = 0.0 if mode == "lambda0" else 0.8
    decay = {
        "lambda0": "constant",
        "constant": "constant",
        "learned": "learned",
        "gated": "gated-input-state",
    }[mode]
    cfg = SeqModelConfig(n=1, hidden=12, lam=lam, variant="mult-norm", decay=decay,
                         activation=Activation.TANH)
    model = init_lm_model(cfg, vocab_size, rng=np.random.default_rng(seed))
    model, _ = train_lm(
        model, train_ids, TrainConfig(epochs=20, unroll=24, seed=seed, max_steps=260),
        OptimizerState(kind="adam", lr=0.01),
    )
    loss, _ = eval_lm(model, valid_ids)
    return loss


def check_decay_ordering(seed: int, tol: float) -> list[CheckResult]:
    del tol
    losses = {mode: _ordering_loss(mode, seed) for mode in
              ("lambda0", "constant", "learned", "gated")}
    eps = 1e-9
    ok = (
        losses["lambda0"] > losses["constant"]
        and losses["constant"] >= losses["learned"] - eps
        and losses["learned"] >= losses["gated"] - eps
    )
    margin = losses["lambda0"] - losses["gated"]
    detail = " ".join(f"{k}={v:.4f}" for k, v in losses.items())
    return [CheckResult("decay-ordering", seed, margin, ok, detail=detail)]


# ---------------------------------------------------------------------------
# registry and runner
# ---------------------------------------------------------------------------

SUITES = {
    "seq-state-kernel": (check_seq_state_kernel, 20, 1e-10),
    "graph-state-kernel": (check_graph_state_kernel, 20, 1e-10),
    "cnn-degeneration": (check_cnn_degeneration, 5, 1e-12),
    "gated-degeneration": (check_gated_degeneration, 5, 1e-12),
    "variants": (check_variants, 10, 1e-10),
    "deep-rkhs": (check_deep_rkhs, 3, 1e-6),
    "wl-chain": (check_wl_chain, 5, 1e-8),
    "gradcheck": (check_gradcheck, 1, 1e-5),
    "psd": (check_psd, 2, 1e-8),
    "smoke-train": (check_smoke_train, 1, float("nan")),
    "decay-ordering": (check_decay_ordering, 3, float("nan")),
}


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_suite(name: str, seeds: int | None = None, tol: float | None = None) -> SuiteReport:
    if name not in SUITES:
        raise ConfigError(f"unknown verify suite {name!r}; choose from {sorted(SUITES)}")
    fn, default_seeds, default_tol = SUITES[name]
    count = default_seeds if seeds is None else seeds
    bound = default_tol if tol is None else tol
    seed_list = list(range(count))
    workers = min(_thread_count(), len(seed_list))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda s: fn(s, bound), seed_list))
    else:
        chunks = [fn(s, bound) for s in seed_list]
    results = [r for chunk in chunks for r in chunk]
    if name == "decay-ordering":
        passing = sum(1 for r in results if r.passed)
        passed = passing * 3 >= 2 * len(results)
    else:
        passed = all(r.passed for r in results)
    return SuiteReport(name=name, results=results, passed=passed)


def run_all(seeds: int | None = None, tol: float | None = None) -> list[SuiteReport]:
    return [run_suite(name, seeds=seeds, tol=tol) for name in SUITES]
