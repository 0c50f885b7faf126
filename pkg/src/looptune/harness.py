"""Dataset building: compile and time loop variants with an external C
compiler, verify checksum equivalence, split by loop, and run the
exhaustive-search baseline.

Corpus format: one UTF-8 .c file per loop. The loop region is delimited by
the exact marker lines ``#pragma looplearner begin`` / ``#pragma looplearner
end``; everything outside is harness scaffolding (initialization, repeat
driver, checksum print). Timed executions are strictly serialized; only
compilation and the checksum-equivalence screen may run concurrently.
"""

from __future__ import annotations

import concurrent.futures
import logging
import statistics
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clexer import Rejection, admit, extract_loop_region, tokenize
from . import loopir, mutate
from .mutate import TransformationSeq

log = logging.getLogger(__name__)

DEFAULT_COMPILE_TEMPLATE = "cc -O3 {src} -o {out} -lm"


class CompileError(Exception):
    def __init__(self, diagnostics: str):
        super().__init__(diagnostics)
        self.diagnostics = diagnostics


class RunError(Exception):
    pass


class ChecksumMismatch(Exception):
    pass


@dataclass(frozen=True)
class Sample:
    loop_id: str
    transformation: TransformationSeq
    speedup: float


@dataclass
class Dataset:
    samples: list[Sample] = field(default_factory=list)
    split: dict[str, str] = field(default_factory=dict)   # loop_id -> train|validation
    skips: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.samples)

    def loop_ids(self) -> list[str]:
        seen = []
        for s in self.samples:
            if s.loop_id not in seen:
                seen.append(s.loop_id)
        return seen

    def side(self, side: str) -> list[Sample]:
        return [s for s in self.samples if self.split.get(s.loop_id) == side]

    def for_loop(self, loop_id: str) -> list[Sample]:
        return [s for s in self.samples if s.loop_id == loop_id]


def split_by_loop(loop_ids: list[str], seed: int, train_fraction: float = 0.8
                  ) -> dict[str, str]:
    """All samples of one loop land on one side; train side holds
    round(train_fraction * L) loops."""
    rng = np.random.default_rng(seed)
    order = list(loop_ids)
    rng.shuffle(order)
    n_train = round(train_fraction * len(order))
    return {lid: ("train" if i < n_train else "validation")
            for i, lid in enumerate(order)}


# ---------------------------------------------------------------------------
# Compile / run / time

@dataclass
class MeasureResult:
    seconds: float
    output: str                  # program stdout, used as the checksum text


def replace_region(file_text: str, new_region: str) -> str:
    from .clexer import REGION_BEGIN, REGION_END
    lines = file_text.splitlines()
    begin = next(i for i, l in enumerate(lines) if l.strip() == REGION_BEGIN)
    end = next(i for i, l in enumerate(lines) if l.strip() == REGION_END)
    return "\n".join(lines[:begin + 1] + [new_region] + lines[end:]) + "\n"


def compile_program(source: str, workdir: Path, stem: str,
                    compile_template: str = DEFAULT_COMPILE_TEMPLATE) -> Path:
    src = workdir / f"{stem}.c"
    out = workdir / f"{stem}.bin"
    src.write_text(source)
    cmd = compile_template.format(src=str(src), out=str(out)).split()
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CompileError(proc.stderr or proc.stdout)
    return out


def run_program(binary: Path, timeout: float = 60.0) -> tuple[float, str]:
    start = time.perf_counter()
    try:
        proc = subprocess.run([str(binary)], capture_output=True, text=True,
                              timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise RunError(f"timeout after {timeout}s") from exc
    elapsed = time.perf_counter() - start
    if proc.returncode != 0:
        raise RunError(f"exit status {proc.returncode}: {proc.stderr[:400]}")
    return elapsed, proc.stdout


def measure(variant_source: str, workdir: Path, stem: str,
            compile_template: str = DEFAULT_COMPILE_TEMPLATE,
            reps: int = 5, timeout: float = 60.0) -> MeasureResult:
    """Compile and time a standalone program: reps+1 runs, first discarded
    as warm-up, median of the rest. Output must be identical across runs."""
    binary = compile_program(variant_source, workdir, stem, compile_template)
    times = []
    outputs = set()
    for i in range(reps + 1):
        elapsed, out = run_program(binary, timeout)
        outputs.add(out)
        if i > 0:
            times.append(elapsed)
    if len(outputs) != 1:
        raise RunError("nondeterministic program output across runs")
    return MeasureResult(statistics.median(times), outputs.pop())


# ---------------------------------------------------------------------------
# Corpus traversal

@dataclass
class CorpusLoop:
    loop_id: str
    path: Path
    file_text: str
    region: str
    nest: loopir.LoopNest
    sequences: list[TransformationSeq]


def load_corpus(corpus_dir, max_len: int = 250,
                tile_sizes=mutate.DEFAULT_TILE_SIZES,
                skips: list | None = None) -> list[CorpusLoop]:
    """Parse and enumerate every marker-delimited .c file; per-loop failures
    are recorded and skipped, never fatal."""
    loops = []
    for path in sorted(Path(corpus_dir).glob("*.c")):
        loop_id = path.stem
        try:
            file_text = path.read_text()
            region = extract_loop_region(file_text)
            seq = admit(tokenize(region, loop_id), max_len)
            if isinstance(seq, Rejection):
                raise ValueError(f"token sequence too long ({seq.length})")
            nest = loopir.parse_nest(seq)
            sequences = mutate.enumerate_sequences(nest, tuple(tile_sizes))
        except Exception as exc:  # noqa: BLE001 - skip policy
            if skips is not None:
                skips.append((loop_id, "parse", str(exc)))
            log.warning("skipping %s: %s", loop_id, exc)
            continue
        loops.append(CorpusLoop(loop_id, path, file_text, region, nest, sequences))
    return loops


def build_dataset(corpus_dir, compile_template: str = DEFAULT_COMPILE_TEMPLATE,
                  reps: int = 5, seed: int = 0, max_len: int = 250,
                  tile_sizes=mutate.DEFAULT_TILE_SIZES,
                  noise_bound: float = 0.5,
                  progress=None) -> Dataset:
    """Measure every legal (loop, transformation) pair. Timed runs are
    serialized. Variants whose checksum differs from the original are
    recorded as skips (surfacing transformation bugs), not samples."""
    dataset = Dataset()
    loops = load_corpus(corpus_dir, max_len, tile_sizes, skips=dataset.skips)
    with tempfile.TemporaryDirectory(prefix="looptune-") as tmp:
        workdir = Path(tmp)
        for loop in loops:
            try:
                base = measure(loop.file_text, workdir, loop.loop_id,
                               compile_template, reps)
            except (CompileError, RunError) as exc:
                dataset.skips.append((loop.loop_id, "measure-original", str(exc)))
                continue
            # Measurement symmetry sanity: retiming the original should give
            # speedup ~1 within the configured noise bound.
            recheck = measure(loop.file_text, workdir, loop.loop_id,
                              compile_template, reps)
            sym = base.seconds / recheck.seconds
            if abs(1.0 - sym) > noise_bound:
                dataset.skips.append((loop.loop_id, "noise",
                                      f"self-speedup {sym:.3f} outside bound"))
                continue
            for seq in loop.sequences:
                desc = seq.descriptor()
                try:
                    variant = replace_region(loop.file_text,
                                             mutate.apply(loop.nest, seq))
                    res = measure(variant, workdir, f"{loop.loop_id}_v",
                                  compile_template, reps)
                except (CompileError, RunError, mutate.IllegalTransformation) as exc:
                    dataset.skips.append((loop.loop_id, f"measure:{desc}", str(exc)))
                    continue
                if res.output != base.output:
                    dataset.skips.append((loop.loop_id, f"checksum:{desc}",
                                          "output mismatch"))
                    continue
                dataset.samples.append(Sample(loop.loop_id, seq,
                                              base.seconds / res.seconds))
            if progress is not None:
                progress(loop.loop_id, len(loop.sequences))
    dataset.split = split_by_loop(dataset.loop_ids(), seed)
    return dataset


def verify_corpus(corpus_dir, compile_template: str = "cc -O0 {src} -o {out} -lm",
                  max_len: int = 250, tile_sizes=mutate.DEFAULT_TILE_SIZES,
                  jobs: int = 4) -> tuple[int, list[tuple[str, str, str]]]:
    """Checksum-equivalence screen over every enumerated pair, compiled and
    run concurrently (no timing involved). Returns (pairs_checked,
    failures)."""
    failures: list[tuple[str, str, str]] = []
    loops = load_corpus(corpus_dir, max_len, tile_sizes, skips=failures)

    def check(loop: CorpusLoop, seq: TransformationSeq, workdir: Path, tag: int):
        variant = replace_region(loop.file_text, mutate.apply(loop.nest, seq))
        binary = compile_program(variant, workdir, f"{loop.loop_id}_{tag}",
                                 compile_template)
        _, out = run_program(binary)
        return out

    checked = 0
    with tempfile.TemporaryDirectory(prefix="looptune-verify-") as tmp:
        workdir = Path(tmp)
        originals = {}
        for loop in loops:
            binary = compile_program(loop.file_text, workdir, loop.loop_id,
                                     compile_template)
            _, originals[loop.loop_id] = run_program(binary)
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {}
            for loop in loops:
                for tag, seq in enumerate(loop.sequences):
                    fut = pool.submit(check, loop, seq, workdir, tag)
                    futures[fut] = (loop, seq)
            for fut in concurrent.futures.as_completed(futures):
                loop, seq = futures[fut]
                checked += 1
                try:
                    out = fut.result()
                except Exception as exc:  # noqa: BLE001
                    failures.append((loop.loop_id, seq.descriptor(), str(exc)))
                    continue
                if out != originals[loop.loop_id]:
                    failures.append((loop.loop_id, seq.descriptor(),
                                     "checksum mismatch"))
    return checked, failures


# ---------------------------------------------------------------------------
# Exhaustive search baseline

def exhaustive_search(loop_id: str, dataset: Dataset):
    """Best measured transformation of a loop; keep-original when nothing
    beats 1.0."""
    from .rank import KEEP_ORIGINAL
    best = None
    for s in dataset.for_loop(loop_id):
        if best is None or s.speedup > best.speedup:
            best = s
    if best is None or best.speedup <= 1.0:
        return KEEP_ORIGINAL, 1.0
    return best.transformation, best.speedup


# ---------------------------------------------------------------------------
# Dataset file format

def save_dataset(dataset: Dataset, path) -> None:
    """Line-delimited records: loop_id<TAB>descriptor<TAB>speedup. Split
    assignments and skip records ride along as structured comments."""
    with open(path, "w") as fh:
        fh.write("# looptune dataset\n")
        for lid, side in sorted(dataset.split.items()):
            fh.write(f"# split\t{lid}\t{side}\n")
        for lid, stage, reason in dataset.skips:
            reason = reason.replace("\n", " ")[:200]
            fh.write(f"# skip\t{lid}\t{stage}\t{reason}\n")
        for s in dataset.samples:
            fh.write(f"{s.loop_id}\t{s.transformation.descriptor()}\t{s.speedup!r}\n")


# Evaluation metrics live in looptune.metrics; re-exported here because
# dataset building and evaluation are used together.
from .metrics import (MetricsReport, PredRecord, full_report,      # noqa: E402
                      overall_metrics, per_sequence_metrics,
                      speedup_geomeans, threshold_sweep, topk_metrics)

__all__ = [
    "CompileError", "RunError", "ChecksumMismatch", "Sample", "Dataset",
    "MeasureResult", "split_by_loop", "replace_region", "compile_program",
    "run_program", "measure", "CorpusLoop", "load_corpus", "build_dataset",
    "verify_corpus", "exhaustive_search", "save_dataset", "load_dataset",
    "MetricsReport", "PredRecord", "overall_metrics", "topk_metrics",
    "speedup_geomeans", "threshold_sweep", "per_sequence_metrics",
    "full_report",
]


def load_dataset(path) -> Dataset:
    dataset = Dataset()
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split("\t")
                if parts[0] == "split" and len(parts) == 3:
                    dataset.split[parts[1]] = parts[2]
                elif parts[0] == "skip" and len(parts) >= 4:
                    dataset.skips.append((parts[1], parts[2], parts[3]))
                continue
            lid, desc, speed = line.split("\t")
            dataset.samples.append(
                Sample(lid, mutate.parse_descriptor(desc), float(speed)))
    return dataset
