"""Command-line surface: kernel values, verification sweeps, training, eval.

Exit codes: 0 success, 1 verification failure, 2 input/config error,
3 enumeration guard refusal, 4 non-finite numerics.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as kio
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    EvaluationError,
    GuardError,
    KernelNNError,
    ShapeError,
    UnsupportedActivationError,
)
from .graph_kernel import (
    GraphKernelConfig,
    WLRelabelParams,
    deep_graph_kernel,
    gated_random_walk_kernel,
    random_walk_kernel,
    wl_kernel,
)
from .seq_kernel import FeatureSequence, SeqKernelConfig, deep_sequence_kernel, string_kernel
from .tensor import Activation
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
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_GUARD = 3
EXIT_NUMERIC = 4

SEQ_VARIANTS = {
    "mult-unnorm": ("multiplicative", "unnormalized"),
    "mult-norm": ("multiplicative", "normalized"),
    "add-unnorm": ("additive", "unnormalized"),
    "add-norm": ("additive", "normalized"),
}
GRAPH_VARIANTS = ("walk", "wl", "deep")


def format_value(v: float) -> str:
    """12 significant digits past the leading one; exact zero prints as 0."""
    if v == 0.0:
        return "0"
    out = f"{v:#.13g}"
    return out[:-1] if out.endswith(".") else out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernelnn")
    sub = parser.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="print kernel values for consecutive input pairs")
    k.add_argument("--task", choices=("seq", "graph"), required=True)
    k.add_argument("--file", required=True)
    k.add_argument("--vocab", help="vocabulary file (seq task; tokens become one-hot vectors)")
    k.add_argument("--n", type=int, default=2)
    k.add_argument("--lambda", dest="lam", type=float, default=0.5)
    k.add_argument("--variant", default=None,
                   help="seq: mult-unnorm|mult-norm|add-unnorm|add-norm; graph: walk|wl|deep")
    k.add_argument("--depth", type=int, default=None,
                   help="stacking depth (seq) or relabel/stack depth (graph)")
    k.add_argument("--gated", action="store_true",
                   help="graph task: gate-weighted walk kernel, parameters drawn from --seed")
    k.add_argument("--seed", type=int, default=0)

    v = sub.add_parser("verify", help="run equivalence/validity sweeps")
    v.add_argument("--suite", default="all", help=f"one of {sorted(SUITES)} or all")
    v.add_argument("--seeds", type=int, default=None)
    v.add_argument("--tol", type=float, default=None)

    g = sub.add_parser("gradcheck", help="alias for verify --suite gradcheck")
    g.add_argument("--seeds", type=int, default=None)
    g.add_argument("--tol", type=float, default=None)

    t = sub.add_parser("train", help="train a toy model and write a bundle")
    t.add_argument("--task", choices=("lm", "graph-reg"), required=True)
    t.add_argument("--config", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--vocab", help="vocabulary file (lm task)")
    t.add_argument("--valid", help="held-out data file")
    t.add_argument("--out", required=True)
    t.add_argument("--metrics", help="metrics file (default: <out>.metrics)")
    t.add_argument("--seed", type=int, default=None, help="override the config seed")

    e = sub.add_parser("eval", help="evaluate a bundle on a data file")
    e.add_argument("--bundle", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--vocab", help="vocabulary file (lm bundles)")
    e.add_argument("--metrics", help="metrics file (optional)")
    return parser


# ---------------------------------------------------------------------------
# kernel command
# ---------------------------------------------------------------------------


def _seq_pairs(args) -> list[tuple[FeatureSequence, FeatureSequence]]:
    if not args.vocab:
        raise DataError("seq kernels need --vocab to map tokens to one-hot vectors")
    vocab, tokens = kio.load_vocab(args.vocab)
    sents = kio.load_corpus(args.file, vocab)
    if len(sents) % 2 != 0:
        raise DataError(f"{args.file}: need an even number of lines, got {len(sents)}")
    dim = len(tokens)

    def onehot(ids):
        return FeatureSequence([np.eye(dim)[i] for i in ids], dim=dim)

    return [(onehot(sents[i]), onehot(sents[i + 1])) for i in range(0, len(sents), 2)]


def cmd_kernel(args) -> int:
    if args.task == "seq":
        variant = args.variant or "mult-unnorm"
        if variant not in SEQ_VARIANTS:
            raise ConfigError(f"unknown sequence variant {variant!r}")
        composition, normalization = SEQ_VARIANTS[variant]
        cfg = SeqKernelConfig(n=args.n, lam=args.lam, composition=composition,
                              normalization=normalization)
        depth = args.depth or 1
        for x, y in _seq_pairs(args):
            if depth > 1:
                value = deep_sequence_kernel(x, y, depth, cfg)
            else:
                value = string_kernel(x, y, cfg)
            print(format_value(value))
        return EXIT_OK
    variant = args.variant or "walk"
    if variant not in GRAPH_VARIANTS:
        raise ConfigError(f"unknown graph variant {variant!r}")
    graphs = [g for g, _ in kio.load_graphs(args.file)]
    if len(graphs) % 2 != 0:
        raise DataError(f"{args.file}: need an even number of graphs, got {len(graphs)}")
    d = graphs[0].dim
    rng = np.random.default_rng(args.seed)
    for i in range(0, len(graphs), 2):
        g1, g2 = graphs[i], graphs[i + 1]
        if args.gated:
            u = rng.normal(size=(1, 2 * d))
            b = rng.normal(size=1)
            value = float(gated_random_walk_kernel(g1, g2, u, b, args.n)[0])
        elif variant == "walk":
            value = random_walk_kernel(g1, g2, GraphKernelConfig(n=args.n, lam=args.lam))
        elif variant == "wl":
            relabel = WLRelabelParams(
                u1=rng.normal(size=(d, d)), u2=rng.normal(size=(d, d)),
                v=rng.normal(size=(d, d)), activation=Activation.TANH,
            )
            value = wl_kernel(g1, g2, GraphKernelConfig(n=args.n, lam=args.lam),
                              args.depth or 1, relabel)
        else:
            cfg = GraphKernelConfig(n=args.n, lam=args.lam, composition="additive",
                                    depth=args.depth or 2)
            value = deep_graph_kernel(g1, g2, cfg)
        print(format_value(value))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify command
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    all_passed = True
    for name in names:
        report = run_suite(name, seeds=args.seeds, tol=args.tol)
        for result in report.results:
            print(result.line())
        print(f"suite={report.name} overall={'pass' if report.passed else 'fail'}")
        all_passed = all_passed and report.passed
    return EXIT_OK if all_passed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# train / eval commands
# ---------------------------------------------------------------------------


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON") from None


def _train_parts(doc: dict, seed_override) -> tuple[TrainConfig, OptimizerState]:
    tdoc = dict(doc.get("train", {}))
    if seed_override is not None:
        tdoc["seed"] = seed_override
    try:
        tc = TrainConfig(**tdoc)
        opt = OptimizerState(**doc.get("optimizer", {}))
    except TypeError as exc:
        raise ConfigError(f"bad train/optimizer config: {exc}") from None
    return tc, opt


def _emit_metrics(records, metrics_path) -> None:
    lines = [r.line() for r in records]
    for line in lines:
        print(line)
    if metrics_path:
        Path(metrics_path).write_text("\n".join(lines) + ("\n" if lines else ""))


def cmd_train(args) -> int:
    doc = _load_json(args.config)
    tc, opt = _train_parts(doc, args.seed)
    metrics_path = args.metrics or (args.out + ".metrics")
    if args.task == "lm":
        if not args.vocab:
            raise DataError("lm training needs --vocab")
        vocab, tokens = kio.load_vocab(args.vocab)
        ids = kio.flatten_corpus(kio.load_corpus(args.data, vocab))
        valid_ids = None
        if args.valid:
            valid_ids = kio.flatten_corpus(kio.load_corpus(args.valid, vocab))
        model_doc = dict(doc.get("model", {}))
        model_doc["vocab_size"] = len(tokens)
        cfg, vocab_size = kio.seq_config_from_dict(model_doc)
        model = init_lm_model(cfg, vocab_size, rng=np.random.default_rng(tc.seed))
        model, records = train_lm(model, ids, tc, opt, valid_ids=valid_ids)
        kio.save_bundle(kio.bundle_from_lm(model, tc.seed), args.out)
    else:
        items = kio.load_graphs(args.data)
        targets = [t for _, t in items]
        if any(t is None for t in targets):
            raise DataError(f"{args.data}: graph regression needs a target on every record")
        graphs = [g for g, _ in items]
        model_doc = dict(doc.get("model", {}))
        model_doc["in_dim"] = graphs[0].dim
        cfg, in_dim = kio.graph_config_from_dict(model_doc)
        model = init_graph_model(cfg, in_dim, rng=np.random.default_rng(tc.seed))
        valid = None
        if args.valid:
            vitems = kio.load_graphs(args.valid)
            valid = ([g for g, _ in vitems], [t for _, t in vitems])
        model, records = train_graph_reg(model, graphs, targets, tc, opt, valid=valid)
        kio.save_bundle(kio.bundle_from_graph(model, in_dim, tc.seed), args.out)
    _emit_metrics(records, metrics_path)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .train import MetricRecord

    bundle = kio.load_bundle(args.bundle)
    if bundle.kind == "seq-lm":
        if not args.vocab:
            raise DataError("evaluating a language model needs --vocab")
        vocab, _ = kio.load_vocab(args.vocab)
        ids = kio.flatten_corpus(kio.load_corpus(args.data, vocab))
        model = kio.lm_from_bundle(bundle)
        loss, ppl = eval_lm(model, ids)
        records = [MetricRecord(0, "eval", loss, ppl, "ppl")]
    elif bundle.kind == "graph-reg":
        items = kio.load_graphs(args.data)
        targets = [t for _, t in items]
        if any(t is None for t in targets):
            raise DataError(f"{args.data}: evaluation needs a target on every record")
        model = kio.graph_from_bundle(bundle)
        rmse = eval_graph_reg(model, [g for g, _ in items], targets)
        records = [MetricRecord(0, "eval", float("nan"), rmse, "rmse")]
    else:
        raise DataError(f"unknown bundle kind {bundle.kind!r}")
    _emit_metrics(records, args.metrics)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "kernel":
            return cmd_kernel(args)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "gradcheck":
            args.suite = "gradcheck"
            return cmd_verify(args)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "eval":
            return cmd_eval(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ConfigError, ContractError, ShapeError, UnsupportedActivationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KernelNNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
