"""Interpreting model predictions: threshold classes, the accuracy
predicate, per-loop ranking, and static/dynamic selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .encode import EncodedLoop, encode_transformation
from .mutate import TransformationSeq

log = logging.getLogger(__name__)

ADVANTAGEOUS = "advantageous"
DISADVANTAGEOUS = "disadvantageous"
NEUTRAL = "neutral"

KEEP_ORIGINAL = "keep-original"


def classify(p: float, t: float) -> str:
    """Threshold classification. For t > 1 the neutral band is
    [2 - t, t]; the degenerate t = 1.0 collapses neutral to p = 1."""
    if not np.isfinite(p):
        raise ValueError("prediction must be finite")
    if t < 1:
        raise ValueError("threshold must be >= 1")
    if p > t:
        return ADVANTAGEOUS
    if p < 2 - t:
        return DISADVANTAGEOUS
    return NEUTRAL


def is_accurate(p: float, a: float) -> bool:
    return (p > 1 and a > 1) or (p <= 1 and a <= 1)


@dataclass(frozen=True)
class RankedEntry:
    seq: TransformationSeq
    prediction: float
    label: str


@dataclass
class RankedList:
    loop_id: str
    entries: list[RankedEntry]

    def top(self, k: int) -> list[RankedEntry]:
        return self.entries[:k]

    def top_advantageous(self, k: int) -> list[RankedEntry]:
        """The advantageous entries among the top-k predictions."""
        return [e for e in self.entries[:k] if e.label == ADVANTAGEOUS]


def rank_loop(model, encoded_loop: EncodedLoop,
              transformations: list[TransformationSeq], t: float = 1.0,
              tile_sizes=None, loop_id: str = "<loop>",
              tvec_fn=None) -> RankedList:
    """Score all transformations of one loop in a single feature-extractor
    pass; sort by prediction descending, ties by descriptor ascending.

    tvec_fn overrides the default compact transformation encoding."""
    from .mutate import DEFAULT_TILE_SIZES
    tile_sizes = tuple(tile_sizes) if tile_sizes else DEFAULT_TILE_SIZES
    if tvec_fn is None:
        def tvec_fn(s):
            return encode_transformation(s, tile_sizes)
    if not transformations:
        return RankedList(loop_id, [])
    tvecs = np.stack([tvec_fn(s) for s in transformations])
    preds = model.predict_many(encoded_loop.matrix, tvecs)
    entries = [RankedEntry(seq, float(p), classify(float(p), t))
               for seq, p in zip(transformations, preds)]
    entries.sort(key=lambda e: (-e.prediction, e.seq.descriptor()))
    return RankedList(loop_id, entries)


def select_static(ranked: RankedList, t: float = 1.0):
    """Top entry if it is advantageous, else keep the original loop."""
    if ranked.entries:
        top = ranked.entries[0]
        if classify(top.prediction, t) == ADVANTAGEOUS:
            return top.seq
    return KEEP_ORIGINAL


def select_dynamic(ranked: RankedList, k: int, t: float, measure):
    """Measure the top-k advantageous entries via the callback and keep the
    best actual speedup; fall back to the original (speedup 1.0) when none
    beats it. Failed measurements are skipped and logged."""
    best_seq = KEEP_ORIGINAL
    best_speedup = 1.0
    for entry in ranked.top_advantageous(k):
        try:
            speedup = measure(entry.seq)
        except Exception as exc:  # noqa: BLE001 - measurement is external
            log.warning("measurement failed for %s on %s: %s",
                        entry.seq.descriptor(), ranked.loop_id, exc)
            continue
        if speedup > best_speedup:
            best_speedup = speedup
            best_seq = entry.seq
    return best_seq, best_speedup


def report_lines(ranked: RankedList) -> list[str]:
    """Line-oriented ranked-list report: loop_id, rank, descriptor, p, class."""
    return [
        f"{ranked.loop_id}\t{i + 1}\t{e.seq.descriptor()}\t{e.prediction:.6g}\t{e.label}"
        for i, e in enumerate(ranked.entries)
    ]
