"""Command-line surface binding the pipeline together.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 compile or
measurement error, 4 internal invariant violation. Failure diagnostics go
to standard error as one machine-readable line: ``error<TAB>class<TAB>msg``.

Configuration precedence: command-line flag > config file (flat key=value
lines, # comments) > built-in default.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import clexer, embed, encode, harness, loopir, metrics, mutate, rank
from .neural import (CheckpointError, Hyperparams, Model, ModelConfig,
                     ShapeMismatch, load_model, save_model, train_model)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_MEASURE = 3
EXIT_INTERNAL = 4

_INPUT_ERRORS = (clexer.LexError, clexer.RegionError, loopir.ParseError,
                 mutate.DescriptorError, mutate.IllegalTransformation,
                 encode.MissingResource, encode.UnknownTransformation,
                 embed.EmbeddingFormatError, FileNotFoundError, ValueError)
_MEASURE_ERRORS = (harness.CompileError, harness.RunError,
                   harness.ChecksumMismatch)
_INTERNAL_ERRORS = (encode.MalformedVector, encode.EncodingOverflow,
                    CheckpointError, ShapeMismatch, AssertionError)


@dataclass
class Config:
    method: str = "basic"
    n: int = 1000
    m: int = 40
    c: int = 70
    tvec_mode: str = "compact"
    threshold: float = 1.0
    top_k: int = 3
    compile_template: str = harness.DEFAULT_COMPILE_TEMPLATE
    reps: int = 5
    seed: int = 0
    tile_sizes: tuple[int, ...] = mutate.DEFAULT_TILE_SIZES
    max_len: int = 250
    epochs: int = 300
    batch_size: int = 256

    def validate(self) -> None:
        if self.method not in encode.METHODS:
            raise ValueError(f"unknown encoding method {self.method!r}")
        if self.tvec_mode not in ("compact", "onehot"):
            raise ValueError(f"unknown tvec mode {self.tvec_mode!r}")
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        if self.top_k < 1 or self.reps < 1 or self.max_len < 1:
            raise ValueError("top_k, reps, and max_len must be positive")
        if not self.tile_sizes or any(s < 2 for s in self.tile_sizes):
            raise ValueError("tile sizes must all be >= 2")


_CONFIG_PARSERS = {
    "method": str, "n": int, "m": int, "c": int, "tvec_mode": str,
    "threshold": float, "top_k": int, "compile_template": str, "reps": int,
    "seed": int,
    "tile_sizes": lambda raw: tuple(int(x) for x in raw.replace(",", " ").split()),
    "max_len": int, "epochs": int, "batch_size": int,
}


def load_config(path) -> dict:
    """Flat key=value file; unknown keys rejected."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _CONFIG_PARSERS[key](raw.strip())
    return out


def resolve_config(args: argparse.Namespace) -> Config:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    for f in fields(Config):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    cfg = Config(**values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Shared pipeline plumbing

def _read_loop(path: str, cfg: Config) -> tuple[str, clexer.TokenSeq, loopir.LoopNest]:
    """File text, admitted token sequence, and parsed nest for one loop
    file. Accepts either a marker-delimited program or a bare loop nest."""
    text = Path(path).read_text()
    try:
        region = clexer.extract_loop_region(text)
    except clexer.RegionError:
        region = text
    seq = clexer.admit(clexer.tokenize(region, Path(path).stem), cfg.max_len)
    if isinstance(seq, clexer.Rejection):
        raise ValueError(f"{path}: token sequence too long ({seq.length})")
    return text, seq, loopir.parse_nest(seq)


@dataclass
class Pipeline:
    """Corpus, dataset, split-hygienic frequency maps, and per-loop
    encodings, assembled once and shared by train/predict/eval."""
    cfg: Config
    loops: dict[str, harness.CorpusLoop]
    dataset: harness.Dataset
    freq: encode.FreqMaps
    emb: embed.EmbeddingTable | None
    encoded: dict[str, encode.EncodedLoop]
    tvec_vocab: list[mutate.TransformationSeq]

    def tvec(self, seq: mutate.TransformationSeq) -> np.ndarray:
        if self.cfg.tvec_mode == "onehot":
            return encode.encode_transformation_onehot(seq, self.tvec_vocab)
        return encode.encode_transformation(seq, self.cfg.tile_sizes)

    def arrays(self, side: str):
        samples = self.dataset.side(side)
        samples = [s for s in samples if s.loop_id in self.encoded]
        if not samples:
            shape = next(iter(self.encoded.values())).matrix.shape if self.encoded else (0, 0)
            return (np.zeros((0,) + shape), np.zeros((0, len(self.tvec(
                mutate.TransformationSeq(()))))), np.zeros(0), [])
        x = np.stack([self.encoded[s.loop_id].matrix for s in samples])
        t = np.stack([self.tvec(s.transformation) for s in samples])
        y = np.array([s.speedup for s in samples])
        return x, t, y, samples


def build_pipeline(corpus_dir: str, dataset_path: str, cfg: Config,
                   emb_path: str | None = None) -> Pipeline:
    dataset = harness.load_dataset(dataset_path)
    loops = {l.loop_id: l for l in harness.load_corpus(
        corpus_dir, cfg.max_len, cfg.tile_sizes)}
    val_ids = frozenset(lid for lid, side in dataset.split.items()
                        if side == "validation")
    train_seqs = []
    for lid, loop in sorted(loops.items()):
        if lid in dataset.split and lid not in val_ids:
            train_seqs.append(clexer.tokenize(loop.region, lid))
    freq = encode.build_freq_maps(train_seqs, forbidden_ids=val_ids)
    emb = None
    if cfg.method == "fasttext":
        if emb_path is None:
            raise encode.MissingResource(
                "fasttext encoding requires --embeddings")
        emb = embed.EmbeddingTable.load(emb_path)
    params = {"n": cfg.n, "m": cfg.m, "c": cfg.c}
    encoded = {}
    for lid, loop in sorted(loops.items()):
        if lid not in dataset.split:
            continue
        seq = clexer.tokenize(loop.region, lid)
        if cfg.method == "type_based":
            params = dict(params, decl_types=encode.scan_declared_types(
                list(seq)))
        encoded[lid] = encode.encode_tokens(seq, cfg.method, params, freq,
                                            emb, cfg.max_len, cfg.seed)
    vocab = sorted({s.transformation.descriptor(): s.transformation
                    for s in dataset.samples}.values(),
                   key=lambda s: s.descriptor())
    return Pipeline(cfg, loops, dataset, freq, emb, encoded, vocab)


def _ranked_lists(pipe: Pipeline, model: Model, side: str = "validation"
                  ) -> tuple[dict[str, rank.RankedList], list[metrics.PredRecord]]:
    """Rank every loop of a split over the transformations present in the
    dataset; also return flat prediction records."""
    lists = {}
    records = []
    for lid in pipe.dataset.loop_ids():
        if pipe.dataset.split.get(lid) != side or lid not in pipe.encoded:
            continue
        samples = pipe.dataset.for_loop(lid)
        seqs = [s.transformation for s in samples]
        ranked = rank.rank_loop(model, pipe.encoded[lid], seqs,
                                pipe.cfg.threshold, pipe.cfg.tile_sizes, lid,
                                tvec_fn=pipe.tvec)
        lists[lid] = ranked
        pred = {e.seq.descriptor(): e.prediction for e in ranked.entries}
        records.extend(
            metrics.PredRecord(lid, s.transformation,
                               pred[s.transformation.descriptor()], s.speedup)
            for s in samples)
    return lists, records


def _records(pipe: Pipeline, model: Model, side: str) -> list[metrics.PredRecord]:
    x, t, y, samples = pipe.arrays(side)
    if not samples:
        return []
    preds = model.forward(x, t)
    return [metrics.PredRecord(s.loop_id, s.transformation, float(p), s.speedup)
            for s, p in zip(samples, preds)]


# ---------------------------------------------------------------------------
# Subcommands

def cmd_tokenize(args, cfg: Config) -> int:
    _, seq, _ = _read_loop(args.loop, cfg)
    for tok in seq:
        print(f"{tok.kind.value}\t{tok.text}")
    return EXIT_OK


def cmd_mutate(args, cfg: Config) -> int:
    _, _, nest = _read_loop(args.loop, cfg)
    if args.descriptor:
        text = mutate.apply(nest, mutate.parse_descriptor(args.descriptor))
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
        return EXIT_OK
    seqs = mutate.enumerate_sequences(nest, cfg.tile_sizes)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for i, seq in enumerate(seqs):
            (out / f"variant_{i:04d}.c").write_text(
                f"/* {seq.descriptor()} */\n" + mutate.apply(nest, seq) + "\n")
        print(f"wrote {len(seqs)} variants to {out}/")
    else:
        for seq in seqs:
            print(seq.descriptor())
    return EXIT_OK


def cmd_encode(args, cfg: Config) -> int:
    _, seq, _ = _read_loop(args.loop, cfg)
    if args.descriptor:
        tseq = mutate.parse_descriptor(args.descriptor)
        if cfg.tvec_mode == "onehot":
            _, _, nest = _read_loop(args.loop, cfg)
            vocab = mutate.enumerate_sequences(nest, cfg.tile_sizes)
            vec = encode.encode_transformation_onehot(tseq, vocab)
        else:
            vec = encode.encode_transformation(tseq, cfg.tile_sizes)
        print(" ".join(f"{v:g}" for v in vec))
        return EXIT_OK
    emb = embed.EmbeddingTable.load(args.embeddings) if args.embeddings else None
    if cfg.method == "fasttext":
        freq = None
    else:
        corpus = [seq]
        if args.corpus:
            corpus = [clexer.tokenize(l.region, l.loop_id)
                      for l in harness.load_corpus(args.corpus, cfg.max_len,
                                                   cfg.tile_sizes)]
        freq = encode.build_freq_maps(corpus)
    params = {"n": cfg.n, "m": cfg.m, "c": cfg.c}
    if cfg.method == "type_based":
        params["decl_types"] = encode.scan_declared_types(list(seq))
    enc = encode.encode_tokens(seq, cfg.method, params, freq, emb,
                               cfg.max_len, cfg.seed)
    print(f"# method={enc.method} channels={enc.channels} rows={enc.matrix.shape[0]}")
    np.savetxt(sys.stdout, enc.matrix, fmt="%g")
    return EXIT_OK


def cmd_embed(args, cfg: Config) -> int:
    loops = harness.load_corpus(args.corpus, cfg.max_len, cfg.tile_sizes)
    if not loops:
        raise ValueError(f"no parseable loops in {args.corpus}")
    seqs = [clexer.tokenize(l.region, l.loop_id) for l in loops]
    table = embed.train_embeddings(seqs, dim=args.dim, epochs=args.epochs,
                                   seed=cfg.seed)
    table.save(args.out)
    print(f"trained {len(table.vocab)} word vectors (dim {table.dim}) -> {args.out}")
    return EXIT_OK


def cmd_build_dataset(args, cfg: Config) -> int:
    dataset = harness.build_dataset(
        args.corpus, cfg.compile_template, cfg.reps, cfg.seed,
        cfg.max_len, cfg.tile_sizes,
        progress=lambda lid, n: print(f"{lid}: {n} variants", file=sys.stderr))
    harness.save_dataset(dataset, args.out)
    for lid, stage, reason in dataset.skips:
        print(f"skip\t{lid}\t{stage}\t{reason}", file=sys.stderr)
    n_train = sum(1 for s in dataset.split.values() if s == "train")
    print(f"{dataset.n} samples over {len(dataset.split)} loops "
          f"({n_train} train) -> {args.out}")
    return EXIT_OK


def cmd_train(args, cfg: Config) -> int:
    pipe = build_pipeline(args.corpus, args.dataset, cfg, args.embeddings)
    x, t, y, _ = pipe.arrays("train")
    vx, vt, vy, vs = pipe.arrays("validation")
    if x.shape[0] == 0:
        raise ValueError("training split is empty")
    mcfg = ModelConfig(in_channels=x.shape[2], max_len=cfg.max_len,
                       tvec_len=t.shape[1], seed=cfg.seed)
    hyper = Hyperparams(epochs=args.epochs if args.epochs is not None else cfg.epochs,
                        batch_size=cfg.batch_size, seed=cfg.seed)
    result = train_model(
        mcfg, hyper, x, t, y,
        vx if vs else None, vt if vs else None, vy if vs else None,
        log=lambda e, loss, acc: print(
            f"epoch {e}\tloss {loss:.6f}" +
            (f"\tval_acc {acc:.4f}" if acc is not None else ""),
            file=sys.stderr))
    save_model(args.out, result.model)
    print(f"best epoch {result.best_epoch} "
          f"val accuracy {100 * result.best_val_accuracy:.2f}% -> {args.out}")
    return EXIT_OK


def cmd_predict(args, cfg: Config) -> int:
    model = load_model(args.model)
    pipe = build_pipeline(args.corpus, args.dataset, cfg, args.embeddings)
    lid = Path(args.loop).stem
    if lid not in pipe.encoded:
        raise ValueError(f"loop {lid!r} is not in the dataset split")
    tseq = mutate.parse_descriptor(args.descriptor)
    p = model.forward(pipe.encoded[lid].matrix[None], pipe.tvec(tseq)[None])[0]
    print(f"{lid}\t{args.descriptor}\t{float(p):.6g}")
    return EXIT_OK


def cmd_rank(args, cfg: Config) -> int:
    model = load_model(args.model)
    pipe = build_pipeline(args.corpus, args.dataset, cfg, args.embeddings)
    lid = Path(args.loop).stem
    if lid not in pipe.encoded:
        raise ValueError(f"loop {lid!r} is not in the dataset split")
    seqs = pipe.loops[lid].sequences if lid in pipe.loops else [
        s.transformation for s in pipe.dataset.for_loop(lid)]
    ranked = rank.rank_loop(model, pipe.encoded[lid], seqs, cfg.threshold,
                            cfg.tile_sizes, lid, tvec_fn=pipe.tvec)
    ranked.entries = ranked.entries[:cfg.top_k]
    for line in rank.report_lines(ranked):
        print(line)
    return EXIT_OK


def cmd_bench(args, cfg: Config) -> int:
    model = load_model(args.model)
    pipe = build_pipeline(args.corpus, args.dataset, cfg, args.embeddings)
    lid = Path(args.loop).stem
    if lid not in pipe.encoded or lid not in pipe.loops:
        raise ValueError(f"loop {lid!r} is not in the corpus and dataset")
    loop = pipe.loops[lid]
    ranked = rank.rank_loop(model, pipe.encoded[lid], loop.sequences,
                            cfg.threshold, cfg.tile_sizes, lid,
                            tvec_fn=pipe.tvec)
    import tempfile
    with tempfile.TemporaryDirectory(prefix="looptune-bench-") as tmp:
        workdir = Path(tmp)
        base = harness.measure(loop.file_text, workdir, lid,
                               cfg.compile_template, cfg.reps)

        def run(seq: mutate.TransformationSeq) -> float:
            variant = harness.replace_region(loop.file_text,
                                             mutate.apply(loop.nest, seq))
            res = harness.measure(variant, workdir, f"{lid}_v",
                                  cfg.compile_template, cfg.reps)
            if res.output != base.output:
                raise harness.ChecksumMismatch(seq.descriptor())
            return base.seconds / res.seconds

        static_pick = rank.select_static(ranked, cfg.threshold)
        if static_pick is rank.KEEP_ORIGINAL:
            print(f"static\t{rank.KEEP_ORIGINAL}\t1")
        else:
            print(f"static\t{static_pick.descriptor()}\t{run(static_pick):.4g}")
        pick, speedup = rank.select_dynamic(ranked, cfg.top_k, cfg.threshold, run)
        desc = pick if isinstance(pick, str) else pick.descriptor()
        print(f"dynamic\t{desc}\t{speedup:.4g}")
    return EXIT_OK


def _print_report(report: metrics.MetricsReport) -> None:
    print(f"total_accuracy\t{report.total_accuracy:.2f}")
    print(f"speedup_precision\t{report.speedup_precision:.2f}")
    print(f"speedup_recall\t{report.speedup_recall:.2f}")
    print(f"speedup_f1\t{report.speedup_f1:.2f}")
    print(f"slowdown_precision\t{report.slowdown_precision:.2f}")
    print(f"slowdown_recall\t{report.slowdown_recall:.2f}")
    print(f"slowdown_f1\t{report.slowdown_f1:.2f}")
    for k in sorted(report.topk):
        acc, rec, prec = report.topk[k]
        print(f"top{k}\tacc {acc:.2f}\trecall {rec:.2f}\tprecision {prec:.2f}"
              f"\tdynamic_geomean {report.geomean_dynamic[k]:.4f}")
    print(f"static_geomean\t{report.geomean_static:.4f}")
    if report.empty_flags:
        print(f"empty_sets\t{','.join(sorted(report.empty_flags))}")


def cmd_eval(args, cfg: Config) -> int:
    model = load_model(args.model)
    pipe = build_pipeline(args.corpus, args.dataset, cfg, args.embeddings)
    lists, records = _ranked_lists(pipe, model, "validation")
    ks = tuple(sorted({1, 3, 5, cfg.top_k}))
    report = metrics.full_report(lists, records, cfg.threshold, ks)
    _print_report(report)
    train_records = _records(pipe, model, "train")
    print("per_sequence\tshape\ttrain_acc\tval_acc\trecall\tprecision\tloops\tcoverage")
    for row in metrics.per_sequence_metrics(train_records, records):
        shape, tr, va, rec, prec, n, cov = row
        print(f"per_sequence\t{shape}\t{tr:.2f}\t{va:.2f}\t{rec:.2f}"
              f"\t{prec:.2f}\t{n}\t{cov:.2f}")
    return EXIT_OK


def cmd_sweep(args, cfg: Config) -> int:
    model = load_model(args.model)
    pipe = build_pipeline(args.corpus, args.dataset, cfg, args.embeddings)
    _, records = _ranked_lists(pipe, model, "validation")
    t_values = sorted(float(v) for v in args.t_values.split(","))
    print("t\tspeedup_precision\tspeedup_recall")
    for t, prec, recall in metrics.threshold_sweep(records, t_values):
        print(f"{t:g}\t{prec:.2f}\t{recall:.2f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error\tusage\t{message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--method", choices=encode.METHODS)
    p.add_argument("--n", type=int, help="fixed-encoding vocabulary size")
    p.add_argument("--m", type=int, help="renaming-encoding slot count")
    p.add_argument("--c", type=int, help="complex-encoding coverage percent")
    p.add_argument("--tvec-mode", dest="tvec_mode", choices=("compact", "onehot"))
    p.add_argument("--threshold", type=float, help="speedup threshold t")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--compile-template", dest="compile_template",
                   help="compiler command with {src} and {out} placeholders")
    p.add_argument("--reps", type=int, help="timed repetitions after warm-up")
    p.add_argument("--seed", type=int)
    p.add_argument("--tile-sizes", dest="tile_sizes",
                   type=lambda s: tuple(int(x) for x in s.split(",")))
    p.add_argument("--max-len", dest="max_len", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="looptune",
                     description="Loop transformation ranking toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        _add_config_flags(p)
        return p

    p = add("tokenize", cmd_tokenize, "print the token stream of a loop file")
    p.add_argument("--loop", required=True)

    p = add("mutate", cmd_mutate, "apply or enumerate transformations")
    p.add_argument("--loop", required=True)
    p.add_argument("--descriptor")
    p.add_argument("--out")

    p = add("encode", cmd_encode, "dump an encoded loop matrix or tvec")
    p.add_argument("--loop", required=True)
    p.add_argument("--descriptor")
    p.add_argument("--corpus")
    p.add_argument("--embeddings")

    p = add("embed", cmd_embed, "train the subword embedding table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--epochs", type=int, default=100)

    p = add("build-dataset", cmd_build_dataset, "compile, time, and record samples")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "train the speedup regressor")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--epochs", type=int)

    for name, func, extra in (
            ("predict", cmd_predict, ("--descriptor",)),
            ("rank", cmd_rank, ()),
            ("bench", cmd_bench, ())):
        p = add(name, func, f"{name} using a trained model")
        p.add_argument("--loop", required=True)
        p.add_argument("--model", required=True)
        p.add_argument("--corpus", required=True)
        p.add_argument("--dataset", required=True)
        p.add_argument("--embeddings")
        for flag in extra:
            p.add_argument(flag, required=True)

    p = add("eval", cmd_eval, "full metrics report on the validation split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings")

    p = add("sweep", cmd_sweep, "threshold sweep table")
    p.add_argument("--dataset", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--t-values", dest="t_values", default="1.0,1.1,1.2,1.3,1.4,1.5")

    return parser


def _fail(code: int, cls: str, exc: BaseException) -> int:
    msg = str(exc).replace("\n", " ")[:400]
    print(f"error\t{cls}\t{msg}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except _MEASURE_ERRORS as exc:
        return _fail(EXIT_MEASURE, type(exc).__name__, exc)
    except _INTERNAL_ERRORS as exc:
        return _fail(EXIT_INTERNAL, type(exc).__name__, exc)
    except _INPUT_ERRORS as exc:
        return _fail(EXIT_INPUT, type(exc).__name__, exc)


if __name__ == "__main__":
    sys.exit(main())
