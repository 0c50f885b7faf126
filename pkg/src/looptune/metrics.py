"""Evaluation metrics over (prediction, measured speedup) pairs: overall
set-based precision/recall, per-loop top-k predicates, static/dynamic
geometric-mean speedups, threshold sweeps, and a per-sequence-shape
breakdown.

Conventions: a prediction record ties one validation sample to its model
score. All percentages are in [0, 100]. Precision or recall over an empty
set is reported as 0 and the corresponding flag is added to
MetricsReport.empty_flags, never NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mutate import TransformationSeq
from .rank import ADVANTAGEOUS, RankedList, is_accurate


@dataclass(frozen=True)
class PredRecord:
    loop_id: str
    transformation: TransformationSeq
    predicted: float
    actual: float


@dataclass
class MetricsReport:
    total_accuracy: float = 0.0
    speedup_recall: float = 0.0
    speedup_precision: float = 0.0
    speedup_f1: float = 0.0
    slowdown_recall: float = 0.0
    slowdown_precision: float = 0.0
    slowdown_f1: float = 0.0
    topk: dict[int, tuple[float, float, float]] = field(default_factory=dict)
    geomean_static: float = 1.0
    geomean_dynamic: dict[int, float] = field(default_factory=dict)
    empty_flags: set[str] = field(default_factory=set)


def _pct(numer: int, denom: int, flag: str, flags: set[str]) -> float:
    if denom == 0:
        flags.add(flag)
        return 0.0
    return 100.0 * numer / denom


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of percentages; 0 when both are 0."""
    if precision == 0.0 and recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def overall_metrics(records: list[PredRecord], t: float = 1.0) -> MetricsReport:
    """Sample-level metrics. Positives split by the sign of the value
    relative to 1: P+ = {p > 1}, P- = {p < 1}, T+ = {a > 1}, T- = {a < 1}."""
    report = MetricsReport()
    flags = report.empty_flags
    n = len(records)
    accurate = sum(is_accurate(r.predicted, r.actual) for r in records)
    report.total_accuracy = _pct(accurate, n, "samples", flags)
    p_pos = [r for r in records if r.predicted > 1]
    p_neg = [r for r in records if r.predicted < 1]
    t_pos = sum(r.actual > 1 for r in records)
    t_neg = sum(r.actual < 1 for r in records)
    hit_pos = sum(r.actual > 1 for r in p_pos)
    hit_neg = sum(r.actual < 1 for r in p_neg)
    report.speedup_precision = _pct(hit_pos, len(p_pos), "P+", flags)
    report.speedup_recall = _pct(hit_pos, t_pos, "T+", flags)
    report.speedup_f1 = f1_score(report.speedup_precision, report.speedup_recall)
    report.slowdown_precision = _pct(hit_neg, len(p_neg), "P-", flags)
    report.slowdown_recall = _pct(hit_neg, t_neg, "T-", flags)
    report.slowdown_f1 = f1_score(report.slowdown_precision, report.slowdown_recall)
    return report


def actuals_map(records: list[PredRecord]) -> dict[tuple[str, str], float]:
    return {(r.loop_id, r.transformation.descriptor()): r.actual for r in records}


def _actual(actuals: dict, loop_id: str, seq: TransformationSeq) -> float:
    return actuals[(loop_id, seq.descriptor())]


def speedup_loops(records: list[PredRecord]) -> set[str]:
    """L+: loops with at least one transformation that actually speeds up."""
    return {r.loop_id for r in records if r.actual > 1}


def predicted_speedup_loops(ranked_lists: dict[str, RankedList]) -> set[str]:
    """L_sp: loops whose single top prediction is advantageous."""
    return {lid for lid, rl in ranked_lists.items() if rl.top_advantageous(1)}


def topk_metrics(ranked_lists: dict[str, RankedList],
                 records: list[PredRecord], k: int
                 ) -> tuple[float, float, float]:
    """Per-loop (total accuracy %, speedup recall %, speedup precision %).

    Accuracy is over all ranked loops L: some top-k prediction accurate.
    Recall is over L+, precision over L_sp; both count loops where some
    advantageous entry among the top-k actually speeds up.
    """
    actuals = actuals_map(records)
    flags: set[str] = set()
    loops = list(ranked_lists)
    acc_hits = 0
    for lid in loops:
        acc_hits += any(
            is_accurate(e.prediction, _actual(actuals, lid, e.seq))
            for e in ranked_lists[lid].top(k))
    l_plus = speedup_loops(records) & set(loops)
    l_sp = predicted_speedup_loops(ranked_lists)

    def hits(lid: str) -> bool:
        return any(_actual(actuals, lid, e.seq) > 1
                   for e in ranked_lists[lid].top_advantageous(k))

    recall_hits = sum(hits(lid) for lid in l_plus)
    prec_hits = sum(hits(lid) for lid in l_sp)
    return (_pct(acc_hits, len(loops), "L", flags),
            _pct(recall_hits, len(l_plus), "L+", flags),
            _pct(prec_hits, len(l_sp), "L_sp", flags))


def _geomean(values: list[float]) -> float:
    return float(np.exp(np.mean(np.log(values))))


def speedup_geomeans(ranked_lists: dict[str, RankedList],
                     records: list[PredRecord], k: int
                     ) -> tuple[float, float, set[str]]:
    """(static, dynamic, empty_flags) over L_sp.

    Static is the measured speedup of each loop's top advantageous pick
    (only meaningful for k = 1 but computable regardless). Dynamic is the
    best measured speedup among the top-k advantageous picks, substituting
    1.0 when none of them actually speeds up. An empty L_sp yields 1.0 for
    both with the "L_sp" flag set.
    """
    actuals = actuals_map(records)
    l_sp = sorted(predicted_speedup_loops(ranked_lists))
    if not l_sp:
        return 1.0, 1.0, {"L_sp"}
    static_vals = []
    dynamic_vals = []
    for lid in l_sp:
        rl = ranked_lists[lid]
        static_vals.append(_actual(actuals, lid, rl.top_advantageous(1)[0].seq))
        measured = [_actual(actuals, lid, e.seq) for e in rl.top_advantageous(k)]
        best = max((m for m in measured if m > 1), default=1.0)
        dynamic_vals.append(best)
    return _geomean(static_vals), _geomean(dynamic_vals), set()


def threshold_sweep(records: list[PredRecord], t_values: list[float]
                    ) -> list[tuple[float, float, float]]:
    """Rows of (t, speedup precision %, speedup recall %) where only
    advantageous predictions (p > t) count as positives."""
    t_pos = sum(r.actual > 1 for r in records)
    rows = []
    for t in t_values:
        flags: set[str] = set()
        pos = [r for r in records if r.predicted > t]
        hit = sum(r.actual > 1 for r in pos)
        rows.append((t, _pct(hit, len(pos), "P+", flags),
                     _pct(hit, t_pos, "T+", flags)))
    return rows


def sequence_shape(seq: TransformationSeq) -> str:
    """Ordered step kinds with parameters erased, e.g.
    "interchange;unrolling"."""
    return ";".join(step.kind for step in seq.steps)


def per_sequence_metrics(train_records: list[PredRecord],
                         val_records: list[PredRecord]
                         ) -> list[tuple[str, float, float, float, float, int, float]]:
    """Rows of (shape, train acc %, val acc %, speedup recall %, speedup
    precision %, validation loop count, coverage %), sorted by shape.
    Coverage is the group's validation loop count over all validation
    loops."""
    shapes = sorted({sequence_shape(r.transformation)
                     for r in train_records + val_records})
    all_val_loops = {r.loop_id for r in val_records}
    rows = []
    for shape in shapes:
        train = [r for r in train_records if sequence_shape(r.transformation) == shape]
        val = [r for r in val_records if sequence_shape(r.transformation) == shape]
        train_rep = overall_metrics(train)
        val_rep = overall_metrics(val)
        loops = {r.loop_id for r in val}
        coverage = 100.0 * len(loops) / len(all_val_loops) if all_val_loops else 0.0
        rows.append((shape, train_rep.total_accuracy, val_rep.total_accuracy,
                     val_rep.speedup_recall, val_rep.speedup_precision,
                     len(loops), coverage))
    return rows


def full_report(ranked_lists: dict[str, RankedList],
                records: list[PredRecord], t: float = 1.0,
                ks: tuple[int, ...] = (1, 3, 5)) -> MetricsReport:
    """Overall metrics plus the per-k table and geomeans in one report."""
    report = overall_metrics(records, t)
    for k in ks:
        report.topk[k] = topk_metrics(ranked_lists, records, k)
        static, dynamic, flags = speedup_geomeans(ranked_lists, records, k)
        report.geomean_dynamic[k] = dynamic
        report.empty_flags |= flags
        if k == min(ks):
            report.geomean_static = static
    return report
