"""Measurement harness: splits, timing policy, corpus traversal, dataset
persistence, and the exhaustive-search baseline."""

from pathlib import Path

import pytest

from conftest import requires_compiler
from looptune import harness
from looptune.harness import (CompileError, Dataset, MeasureResult, RunError,
                              Sample, build_dataset, compile_program,
                              exhaustive_search, load_corpus, load_dataset,
                              measure, replace_region, run_program,
                              save_dataset, split_by_loop, verify_corpus)
from looptune.mutate import parse_descriptor
from looptune.rank import KEEP_ORIGINAL


class TestSplit:
    IDS = [f"loop{i:02d}" for i in range(10)]

    def test_deterministic(self):
        assert split_by_loop(self.IDS, seed=3) == split_by_loop(self.IDS, seed=3)

    def test_seed_changes_assignment(self):
        tables = {tuple(sorted(split_by_loop(self.IDS, seed=s).items()))
                  for s in range(8)}
        assert len(tables) > 1

    def test_fraction_rounding(self):
        table = split_by_loop(self.IDS, seed=0)
        assert sum(v == "train" for v in table.values()) == 8
        assert sum(v == "validation" for v in table.values()) == 2
        table7 = split_by_loop(self.IDS[:7], seed=0, train_fraction=0.8)
        assert sum(v == "train" for v in table7.values()) == round(0.8 * 7)

    def test_every_loop_on_exactly_one_side(self):
        table = split_by_loop(self.IDS, seed=1)
        assert set(table) == set(self.IDS)
        assert set(table.values()) <= {"train", "validation"}


class TestDataset:
    def build(self):
        ds = Dataset()
        ds.samples = [Sample("a", parse_descriptor("unrolling(factor=2)"), 1.2),
                      Sample("a", parse_descriptor("distribution"), 0.9),
                      Sample("b", parse_descriptor("unrolling(factor=4)"), 1.5)]
        ds.split = {"a": "train", "b": "validation"}
        return ds

    def test_accessors(self):
        ds = self.build()
        assert ds.n == 3
        assert ds.loop_ids() == ["a", "b"]
        assert [s.loop_id for s in ds.side("train")] == ["a", "a"]
        assert [s.speedup for s in ds.for_loop("b")] == [1.5]

    def test_save_load_round_trip(self, tmp_path):
        ds = self.build()
        ds.samples.append(Sample("c", parse_descriptor("distribution"),
                                 1.0000000000000002))
        ds.split["c"] = "train"
        ds.skips = [("broken", "parse", "unsupported statement"),
                    ("slow", "measure:distribution", "timeout after 60s")]
        path = tmp_path / "data.tsv"
        save_dataset(ds, path)
        back = load_dataset(path)
        assert back.samples == ds.samples       # exact, including the floats
        assert back.split == ds.split
        assert back.skips == ds.skips

    def test_skip_reasons_are_single_line(self, tmp_path):
        ds = Dataset(skips=[("x", "parse", "line one\nline two")])
        path = tmp_path / "data.tsv"
        save_dataset(ds, path)
        assert load_dataset(path).skips == [("x", "parse", "line one line two")]


class TestReplaceRegion:
    TEXT = ("int main() {\n"
            "#pragma looplearner begin\n"
            "old body\n"
            "#pragma looplearner end\n"
            "return 0; }\n")

    def test_swaps_only_region(self):
        out = replace_region(self.TEXT, "new body")
        assert "new body" in out and "old body" not in out
        assert out.startswith("int main() {\n#pragma")
        assert out.endswith("end\nreturn 0; }\n")

    def test_round_trip_with_extract(self):
        from looptune.clexer import extract_loop_region
        out = replace_region(self.TEXT, "x = 1;")
        assert extract_loop_region(out) == "x = 1;"


class TestMeasurePolicy:
    def patch(self, monkeypatch, times, outputs=None):
        outputs = outputs or ["ok"] * len(times)
        it = iter(zip(times, outputs))
        monkeypatch.setattr(harness, "compile_program",
                            lambda *a, **k: Path("/nonexistent.bin"))
        monkeypatch.setattr(harness, "run_program",
                            lambda binary, timeout=60.0: next(it))

    def test_warmup_discarded_median_kept(self, monkeypatch):
        # first run (9s warm-up) discarded; median of the rest is 5
        self.patch(monkeypatch, [9.0, 5.0, 5.0, 5.0, 5.0, 5.0])
        res = measure("src", Path("/tmp"), "x", reps=5)
        assert res.seconds == 5.0

    def test_median_robust_to_outlier(self, monkeypatch):
        self.patch(monkeypatch, [2.0, 1.0, 9.0, 1.2, 1.1, 1.3])
        res = measure("src", Path("/tmp"), "x", reps=5)
        assert res.seconds == 1.2

    def test_run_count_is_reps_plus_one(self, monkeypatch):
        calls = []
        monkeypatch.setattr(harness, "compile_program",
                            lambda *a, **k: Path("/nonexistent.bin"))

        def fake_run(binary, timeout=60.0):
            calls.append(1)
            return 1.0, "ok"

        monkeypatch.setattr(harness, "run_program", fake_run)
        measure("src", Path("/tmp"), "x", reps=3)
        assert len(calls) == 4

    def test_nondeterministic_output_rejected(self, monkeypatch):
        self.patch(monkeypatch, [1.0, 1.0, 1.0], ["a", "a", "b"])
        with pytest.raises(RunError):
            measure("src", Path("/tmp"), "x", reps=2)

    def test_noise_screen_skips_unstable_loop(self, tmp_path, monkeypatch):
        # Base and recheck timings differ 3x: the loop is dropped with a
        # structured "noise" skip instead of producing garbage samples.
        (tmp_path / "jittery.c").write_text(MINI_MAIN)
        times = iter([1.0, 3.0])
        monkeypatch.setattr(
            harness, "measure",
            lambda *a, **k: MeasureResult(next(times), "checksum 1\n"))
        ds = build_dataset(tmp_path, reps=1, seed=0)
        assert ds.samples == []
        assert [(s[0], s[1]) for s in ds.skips] == [("jittery", "noise")]


class TestLoadCorpus:
    def test_skip_policy(self, tmp_path):
        good = ("int main() {\n#pragma looplearner begin\n"
                "for (i = 0; i < 4; i++) { B[i] = A[i]; }\n"
                "#pragma looplearner end\nreturn 0; }\n")
        bad = good.replace("for", "while")
        (tmp_path / "good.c").write_text(good)
        (tmp_path / "bad.c").write_text(bad)
        skips = []
        loops = load_corpus(tmp_path, skips=skips)
        assert [l.loop_id for l in loops] == ["good"]
        assert loops[0].sequences  # depth-1: the three unroll factors
        assert len(skips) == 1 and skips[0][0] == "bad" and skips[0][1] == "parse"

    def test_bundled_corpus_all_parse(self):
        skips = []
        loops = load_corpus(Path(__file__).resolve().parent.parent / "corpus",
                            skips=skips)
        assert skips == []
        assert len(loops) == 34
        assert all(loop.sequences for loop in loops)


class TestExhaustiveSearch:
    def test_picks_best(self):
        ds = Dataset(samples=[
            Sample("a", parse_descriptor("unrolling(factor=2)"), 1.2),
            Sample("a", parse_descriptor("unrolling(factor=4)"), 1.7),
            Sample("a", parse_descriptor("distribution"), 0.4)])
        seq, speedup = exhaustive_search("a", ds)
        assert seq.descriptor() == "unrolling(factor=4)" and speedup == 1.7

    def test_keep_original(self):
        ds = Dataset(samples=[
            Sample("a", parse_descriptor("unrolling(factor=2)"), 0.9)])
        assert exhaustive_search("a", ds) == (KEEP_ORIGINAL, 1.0)
        assert exhaustive_search("missing", ds) == (KEEP_ORIGINAL, 1.0)


MINI_MAIN = """#include <stdio.h>
int main(void) {
    unsigned long long h = 0, A[64], B[64];
    long i;
    for (i = 0; i < 64; i++) A[i] = (unsigned long long)(i * 7 + 3);
#pragma looplearner begin
for (i = 0; i < 64; i++) {
    B[i] = A[i];
}
#pragma looplearner end
    for (i = 0; i < 64; i++) h = h * 31 + B[i];
    printf("checksum %llu\\n", h);
    return 0;
}
"""


@requires_compiler
class TestCompileRunReal:
    def test_compile_and_run(self, tmp_path):
        binary = compile_program(MINI_MAIN, tmp_path, "mini")
        elapsed, out = run_program(binary)
        assert out.startswith("checksum ") and elapsed > 0

    def test_compile_error_diagnostics(self, tmp_path):
        with pytest.raises(CompileError):
            compile_program("int main(void) { return syntax error }",
                            tmp_path, "broken")

    def test_run_error_on_nonzero_exit(self, tmp_path):
        binary = compile_program("int main(void) { return 3; }", tmp_path, "rc")
        with pytest.raises(RunError):
            run_program(binary)

    def test_build_dataset_one_loop(self, tmp_path):
        import shutil
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        shutil.copy(Path(__file__).resolve().parent.parent
                    / "corpus" / "copy_1d.c", corpus)
        # The kernel runs in about a millisecond here, so the self-speedup
        # noise screen is relaxed: this test checks mechanics, not timing.
        ds = build_dataset(corpus, reps=3, seed=0, noise_bound=20.0)
        assert ds.loop_ids() == ["copy_1d"], ds.skips
        # depth-1 loop: exactly the three unroll factors
        assert sorted(s.transformation.descriptor() for s in ds.samples) == \
            ["unrolling(factor=2)", "unrolling(factor=4)", "unrolling(factor=8)"]
        assert all(s.speedup > 0 for s in ds.samples)
        assert ds.split == {"copy_1d": "train"}

    def test_verify_corpus_accepts_and_detects(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "mini.c").write_text(MINI_MAIN)
        checked, failures = verify_corpus(corpus, jobs=2)
        assert checked == 3 and failures == []
