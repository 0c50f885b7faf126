"""Prediction interpretation: classification bands, ranking order, and
static/dynamic selection."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from looptune.encode import EncodedLoop
from looptune.mutate import parse_descriptor
from looptune.rank import (ADVANTAGEOUS, DISADVANTAGEOUS, KEEP_ORIGINAL,
                           NEUTRAL, RankedEntry, RankedList, classify,
                           is_accurate, rank_loop, report_lines,
                           select_dynamic, select_static)


class TestClassify:
    def test_degenerate_threshold(self):
        assert classify(1.01, 1.0) == ADVANTAGEOUS
        assert classify(0.99, 1.0) == DISADVANTAGEOUS
        assert classify(1.0, 1.0) == NEUTRAL

    def test_neutral_band(self):
        # t = 1.2: neutral band is [0.8, 1.2]
        assert classify(1.3, 1.2) == ADVANTAGEOUS
        assert classify(1.2, 1.2) == NEUTRAL
        assert classify(0.8, 1.2) == NEUTRAL
        assert classify(0.79, 1.2) == DISADVANTAGEOUS

    def test_guards(self):
        with pytest.raises(ValueError):
            classify(float("nan"), 1.0)
        with pytest.raises(ValueError):
            classify(1.0, 0.9)

    @given(st.floats(0.01, 5.0), st.floats(1.0, 2.0))
    def test_exactly_one_class(self, p, t):
        assert classify(p, t) in (ADVANTAGEOUS, DISADVANTAGEOUS, NEUTRAL)

    @given(st.floats(0.01, 5.0), st.floats(1.0, 1.9), st.floats(0.0, 0.5))
    def test_monotone_in_threshold(self, p, t, dt):
        """Raising the threshold can only move a prediction toward neutral,
        never across from one decisive class to the other."""
        first, second = classify(p, t), classify(p, t + dt)
        assert (first, second) in {
            (ADVANTAGEOUS, ADVANTAGEOUS), (ADVANTAGEOUS, NEUTRAL),
            (DISADVANTAGEOUS, DISADVANTAGEOUS), (DISADVANTAGEOUS, NEUTRAL),
            (NEUTRAL, NEUTRAL)}


class TestIsAccurate:
    def test_cases(self):
        assert is_accurate(1.2, 1.1)
        assert is_accurate(0.8, 0.7)
        assert is_accurate(1.0, 0.9)     # both on the <= 1 side
        assert not is_accurate(1.2, 0.9)
        assert not is_accurate(0.8, 1.2)


class FakeModel:
    """Deterministic stand-in: prediction = preset value per tvec row."""

    def __init__(self, values):
        self.values = list(values)
        self.feature_extractor_calls = 0

    def predict_many(self, matrix, tvecs):
        self.feature_extractor_calls += 1
        return np.array(self.values[:tvecs.shape[0]])


def encoded_stub():
    return EncodedLoop(2, np.zeros((4, 2)), "basic", {})


SEQS = [parse_descriptor(d) for d in
        ("unrolling(factor=2)", "unrolling(factor=4)",
         "unrolling(factor=8)", "distribution")]


class TestRankLoop:
    def test_sorted_descending(self):
        model = FakeModel([1.1, 1.4, 0.9, 1.2])
        ranked = rank_loop(model, encoded_stub(), SEQS, loop_id="l")
        assert [e.prediction for e in ranked.entries] == [1.4, 1.2, 1.1, 0.9]
        assert ranked.entries[0].seq == SEQS[1]

    def test_tie_break_by_descriptor(self):
        model = FakeModel([1.5, 1.5, 1.5, 1.5])
        ranked = rank_loop(model, encoded_stub(), SEQS)
        descs = [e.seq.descriptor() for e in ranked.entries]
        assert descs == sorted(descs)

    def test_single_extractor_call(self):
        model = FakeModel([1.0] * 4)
        rank_loop(model, encoded_stub(), SEQS)
        assert model.feature_extractor_calls == 1

    def test_labels_respect_threshold(self):
        model = FakeModel([1.5, 1.1, 0.5, 1.0])
        ranked = rank_loop(model, encoded_stub(), SEQS, t=1.2)
        by_pred = {e.prediction: e.label for e in ranked.entries}
        assert by_pred[1.5] == ADVANTAGEOUS
        assert by_pred[1.1] == NEUTRAL
        assert by_pred[0.5] == DISADVANTAGEOUS

    def test_empty_transformations(self):
        ranked = rank_loop(FakeModel([]), encoded_stub(), [])
        assert ranked.entries == []

    def test_top_advantageous(self):
        model = FakeModel([1.4, 1.2, 0.9, 0.8])
        ranked = rank_loop(model, encoded_stub(), SEQS, t=1.3)
        assert [e.prediction for e in ranked.top_advantageous(2)] == [1.4]
        assert [e.prediction for e in ranked.top(2)] == [1.4, 1.2]

    def test_custom_tvec_fn(self):
        calls = []

        def tvec_fn(seq):
            calls.append(seq)
            return np.zeros(3)

        rank_loop(FakeModel([1.0] * 4), encoded_stub(), SEQS, tvec_fn=tvec_fn)
        assert calls == SEQS

    def test_report_lines(self):
        model = FakeModel([1.25, 0.5, 1.0, 1.0])
        ranked = rank_loop(model, encoded_stub(), SEQS, loop_id="loopX")
        lines = report_lines(ranked)
        assert len(lines) == 4
        assert lines[0].startswith("loopX\t1\t")
        assert lines[0].endswith("\t1.25\tadvantageous")


def ranked_from(preds, t=1.0):
    entries = [RankedEntry(seq, p, classify(p, t))
               for seq, p in zip(SEQS, preds)]
    entries.sort(key=lambda e: (-e.prediction, e.seq.descriptor()))
    return RankedList("l", entries)


class TestSelection:
    def test_static_picks_top_advantageous(self):
        ranked = ranked_from([1.3, 1.1, 0.9, 0.8])
        assert select_static(ranked) == SEQS[0]

    def test_static_keeps_original(self):
        assert select_static(ranked_from([0.9, 0.8, 0.7, 0.6])) == KEEP_ORIGINAL
        assert select_static(RankedList("l", [])) == KEEP_ORIGINAL

    def test_static_threshold_can_reject_top(self):
        ranked = ranked_from([1.1, 0.9, 0.8, 0.7], t=1.2)
        assert select_static(ranked, t=1.2) == KEEP_ORIGINAL

    def test_dynamic_keeps_best_measured(self):
        ranked = ranked_from([1.5, 1.4, 1.3, 0.9])
        actual = {SEQS[0]: 0.9, SEQS[1]: 1.6, SEQS[2]: 1.2}
        seq, speedup = select_dynamic(ranked, k=3, t=1.0,
                                      measure=lambda s: actual[s])
        assert seq == SEQS[1] and speedup == 1.6

    def test_dynamic_fallback_to_original(self):
        ranked = ranked_from([1.5, 1.4, 0.9, 0.8])
        seq, speedup = select_dynamic(ranked, k=2, t=1.0,
                                      measure=lambda s: 0.7)
        assert seq == KEEP_ORIGINAL and speedup == 1.0

    def test_dynamic_respects_k(self):
        ranked = ranked_from([1.5, 1.4, 1.3, 1.2])
        measured = []

        def measure(s):
            measured.append(s)
            return 1.01

        select_dynamic(ranked, k=2, t=1.0, measure=measure)
        assert len(measured) == 2

    def test_dynamic_skips_failed_measurements(self):
        ranked = ranked_from([1.5, 1.4, 1.3, 0.9])

        def measure(s):
            if s == ranked.entries[0].seq:
                raise RuntimeError("compile failed")
            return 1.3

        seq, speedup = select_dynamic(ranked, k=3, t=1.0, measure=measure)
        assert speedup == 1.3 and seq != ranked.entries[0].seq

    @given(st.lists(st.floats(0.5, 2.0), min_size=4, max_size=4),
           st.floats(1.0, 1.5))
    def test_dynamic_never_worse_than_fallback(self, preds, t):
        ranked = ranked_from(preds, t=t)
        _, speedup = select_dynamic(ranked, k=4, t=t,
                                    measure=lambda s: preds[0] - 0.6)
        assert speedup >= 1.0
