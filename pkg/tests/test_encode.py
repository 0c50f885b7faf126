"""Token encodings, frequency maps, and the 56-element transformation vector."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from looptune.clexer import TokenSeq, tokenize
from looptune.encode import (C_TYPE_NAMES, DIST_OFF, IC_OFF, JAM_OFF, METHODS,
                             SUBVECTOR_SPANS, TILE_OFF, TVEC_LEN, UNROLL_OFF,
                             EncodingOverflow, MalformedVector,
                             MissingResource, UnknownTransformation,
                             build_freq_maps, decode_transformation,
                             encode_tokens, encode_transformation,
                             encode_transformation_onehot, loop_seed,
                             scan_declared_types, top_identifiers)
from looptune.mutate import (DEFAULT_TILE_SIZES, JAM_FACTORS, JAM_LEVELS,
                             TILE_LEVELS, UNROLL_FACTORS, TransformationSeq,
                             TransformationStep, parse_descriptor)


def lex(src, loop_id="L"):
    return tokenize(src, loop_id)


@pytest.fixture(scope="module")
def freq():
    corpus = [
        lex("for (i = 0; i < 64; i++) { B[i] = A[i] + 2; }", "l0"),
        lex("for (i = 0; i < 64; i++) { C[i] = A[i] * 3; }", "l1"),
    ]
    return build_freq_maps(corpus)


class TestFreqMaps:
    def test_counts(self, freq):
        assert freq.f_ids["i"] == 10
        assert freq.f_ids["A"] == 2
        assert freq.f_tokens["for"] == 2
        assert "for" in freq.f_std_tokens and "A" not in freq.f_std_tokens
        assert "2" not in freq.f_std_tokens  # literals are excluded

    def test_icov_derived_example(self):
        # 9 occurrences of `a` and 1 of `b`: one identifier covers 90%,
        # both are needed for 100%.
        seq = TokenSeq("L", list(lex("a a a a a a a a a b")))
        maps = build_freq_maps([seq])
        assert maps.i_cov[90] == 1
        assert maps.i_cov[100] == 2
        assert maps.i_cov[1] == 1

    def test_top_identifiers(self):
        maps = build_freq_maps([lex("a a a a a a a a a b")])
        assert top_identifiers(maps, 90) == ["a"]
        assert top_identifiers(maps, 100) == ["a", "b"]

    def test_split_hygiene_guard(self):
        with pytest.raises(AssertionError):
            build_freq_maps([lex("a b c", "val0")],
                            forbidden_ids=frozenset({"val0"}))


SRC = "for (i = 0; i < 64; i++) { B[i] = A[i] + 200; }"


class TestTokenEncodings:
    def test_all_methods_cover_spec_list(self):
        assert METHODS == ("fixed", "basic", "type_based", "renaming",
                           "complex", "fasttext")

    def test_fixed_layout(self, freq):
        enc = encode_tokens(lex(SRC), "fixed", {"n": 10}, freq=freq)
        assert enc.channels == 11
        assert enc.matrix.shape == (250, 11)
        # exactly one hot entry per token row, zeros in the padding rows
        n_toks = len(lex(SRC))
        assert np.all(enc.matrix[:n_toks].sum(axis=1) == 1.0)
        assert np.all(enc.matrix[n_toks:] == 0.0)

    def test_fixed_rare_tokens_share_misc_slot(self, freq):
        enc = encode_tokens(lex(SRC), "fixed", {"n": 2}, freq=freq)
        assert enc.matrix[:, 2].sum() > 0

    def test_basic_id_and_magnitude(self, freq):
        enc = encode_tokens(lex(SRC), "basic", freq=freq)
        toks = lex(SRC)
        v = len(freq.f_std_tokens)
        rows_ids = [r for r, t in enumerate(toks) if t.kind.value == "identifier"]
        for r in rows_ids:
            assert enc.matrix[r, v] == 1.0
        lit_rows = [r for r, t in enumerate(toks) if t.text == "200"]
        assert enc.matrix[lit_rows[0], enc.channels - 1] == \
            pytest.approx(math.log2(201))

    def test_type_based_buckets(self, freq):
        src = "for (int i = 0; i < 4; i++) { B[i] = A[i]; }"
        decl = scan_declared_types(list(lex(src)))
        enc = encode_tokens(lex(src), "type_based",
                            {"decl_types": decl}, freq=freq)
        toks = list(lex(src))
        v = len(freq.f_std_tokens)
        i_row = next(r for r, t in enumerate(toks) if t.text == "i")
        a_row = next(r for r, t in enumerate(toks) if t.text == "A")
        assert enc.matrix[i_row, v + C_TYPE_NAMES.index("int")] == 1.0
        assert enc.matrix[a_row, v + len(C_TYPE_NAMES)] == 1.0  # undeclared

    def test_renaming_slots_deterministic_and_distinct(self, freq):
        enc1 = encode_tokens(lex(SRC, "lid"), "renaming", {"m": 40},
                             freq=freq, seed=7)
        enc2 = encode_tokens(lex(SRC, "lid"), "renaming", {"m": 40},
                             freq=freq, seed=7)
        assert np.array_equal(enc1.matrix, enc2.matrix)
        enc3 = encode_tokens(lex(SRC, "lid"), "renaming", {"m": 40},
                             freq=freq, seed=8)
        assert not np.array_equal(enc1.matrix, enc3.matrix)
        # three distinct identifiers get three distinct slots when m is large
        v = len(freq.f_std_tokens)
        slots = set()
        toks = list(lex(SRC))
        for r, t in enumerate(toks):
            if t.kind.value == "identifier":
                slots.add(int(np.flatnonzero(enc1.matrix[r, v:v + 40])[0]))
        assert len(slots) == len({t.text for t in toks
                                  if t.kind.value == "identifier"})

    def test_renaming_varies_across_loops(self, freq):
        a = encode_tokens(lex(SRC, "loopA"), "renaming", {"m": 40},
                          freq=freq, seed=0)
        b = encode_tokens(lex(SRC, "loopB"), "renaming", {"m": 40},
                          freq=freq, seed=0)
        assert not np.array_equal(a.matrix, b.matrix)

    def test_complex_literal_buckets(self, freq):
        enc = encode_tokens(lex(SRC), "complex", {"c": 100}, freq=freq)
        toks = list(lex(SRC))
        row = next(r for r, t in enumerate(toks) if t.text == "200")
        bucket = int(math.floor(math.log2(201)))  # 7
        assert enc.matrix[row, enc.channels - 64 + bucket] == 1.0

    def test_fasttext_requires_embedding(self, freq):
        with pytest.raises(MissingResource):
            encode_tokens(lex(SRC), "fasttext", freq=freq)

    def test_fasttext_uses_lookup(self):
        class StubEmb:
            dim = 4

            def lookup(self, text):
                return np.full(4, float(len(text)))

        enc = encode_tokens(lex("ab + c"), "fasttext", emb=StubEmb())
        assert enc.matrix[0, 0] == 2.0 and enc.matrix[2, 0] == 1.0

    def test_freq_required_for_statistical_methods(self):
        for method in ("fixed", "basic", "type_based", "renaming", "complex"):
            with pytest.raises(MissingResource):
                encode_tokens(lex(SRC), method)

    def test_unknown_method(self, freq):
        with pytest.raises(ValueError):
            encode_tokens(lex(SRC), "bert", freq=freq)

    def test_overlong_sequence_rejected(self, freq):
        with pytest.raises(ValueError):
            encode_tokens(lex(SRC), "basic", freq=freq, max_len=5)

    def test_loop_seed_stable(self):
        assert loop_seed("x", 3) == loop_seed("x", 3)
        assert loop_seed("x", 3) != loop_seed("y", 3)
        assert loop_seed("x", 3) != loop_seed("x", 4)


def all_single_steps():
    steps = [TransformationStep("unrolling", factor=f) for f in UNROLL_FACTORS]
    steps += [TransformationStep("unroll_and_jam", level=lv, factor=f)
              for lv in JAM_LEVELS for f in JAM_FACTORS]
    steps += [TransformationStep("tiling", level=lv, tile_size=sz)
              for lv in TILE_LEVELS for sz in DEFAULT_TILE_SIZES]
    steps += [TransformationStep("interchange", perm=p) for p in range(1, 30)]
    steps += [TransformationStep("distribution")]
    return steps


class TestTransformationVector:
    def test_layout_constants(self):
        assert TVEC_LEN == 56
        assert (UNROLL_OFF, JAM_OFF, TILE_OFF, IC_OFF, DIST_OFF) == \
            (0, 4, 11, 24, 54)
        spans = sorted(SUBVECTOR_SPANS.values())
        assert sum(size for _, size in spans) == TVEC_LEN
        for (o1, s1), (o2, _) in zip(spans, spans[1:]):
            assert o1 + s1 == o2  # contiguous, no overlap

    def test_single_unrolling(self):
        vec = encode_transformation(parse_descriptor("unrolling(factor=4)"))
        assert vec.shape == (56,)
        assert vec[UNROLL_OFF] == 1.0 and vec[UNROLL_OFF + 2] == 1.0
        assert vec.sum() == 2.0

    def test_composed_sequence(self):
        vec = encode_transformation(parse_descriptor(
            "interchange(perm=2);tiling(level=1,size=16);distribution;"
            "unrolling(factor=2)"))
        assert vec[IC_OFF] == 1.0 and vec[IC_OFF + 2] == 1.0
        assert vec[TILE_OFF] == 1.0 and vec[TILE_OFF + 2] == 1.0
        assert vec[DIST_OFF] == 1.0 and vec[DIST_OFF + 1] == 1.0
        assert vec[UNROLL_OFF] == 1.0 and vec[UNROLL_OFF + 1] == 1.0
        assert vec.sum() == 8.0

    def test_overflow_params(self):
        for bad in ("unrolling(factor=3)", "unroll_and_jam(level=4,factor=2)",
                    "tiling(level=5,size=8)", "tiling(level=1,size=7)"):
            with pytest.raises((EncodingOverflow, Exception)):
                encode_transformation(parse_descriptor(bad))

    def test_exhaustive_round_trip(self):
        # Every legal composition in canonical order decodes back exactly.
        singles = all_single_steps()
        by_kind = {}
        for s in singles:
            by_kind.setdefault(s.kind, []).append(s)
        count = 0
        for r in range(1, 5):
            for kinds in itertools.combinations(
                    ("interchange", "unroll_and_jam", "tiling",
                     "distribution", "unrolling"), r):
                if {"unroll_and_jam", "tiling"} <= set(kinds):
                    continue
                for combo in itertools.product(*(by_kind[k] for k in kinds)):
                    seq = TransformationSeq(tuple(combo))
                    vec = encode_transformation(seq)
                    assert decode_transformation(vec) == seq
                    count += 1
        assert count > 1000

    def test_custom_tile_sizes(self):
        sizes = (4, 64, 128)
        seq = parse_descriptor("tiling(level=3,size=128)")
        vec = encode_transformation(seq, tile_sizes=sizes)
        assert decode_transformation(vec, tile_sizes=sizes) == seq
        with pytest.raises(EncodingOverflow):
            encode_transformation(seq)  # 128 not in the default sizes

    @pytest.mark.parametrize("mutant", [
        lambda v: v[:55],                                  # wrong shape
        lambda v: _set(v, UNROLL_OFF, 0.5),                # non-binary entry
        lambda v: _set(v, UNROLL_OFF + 1, 1.0),            # param w/o presence
        lambda v: _set(_set(_set(v, UNROLL_OFF, 1.0),
                            UNROLL_OFF + 1, 1.0),
                       UNROLL_OFF + 3, 1.0),               # two param slots
        lambda v: _set(v, UNROLL_OFF, 1.0),                # presence w/o param
        lambda v: _set(_set(v, JAM_OFF, 1.0), TILE_OFF, 1.0),
        lambda v: _set(v, DIST_OFF, 1.0),                  # missing applied bit
    ])
    def test_malformed_vectors(self, mutant):
        with pytest.raises(MalformedVector):
            decode_transformation(mutant(np.zeros(TVEC_LEN)))

    def test_onehot(self):
        vocab = [parse_descriptor("unrolling(factor=2)"),
                 parse_descriptor("distribution"),
                 parse_descriptor("interchange(perm=2)")]
        vec = encode_transformation_onehot(vocab[1], vocab)
        assert list(vec) == [0.0, 1.0, 0.0]
        with pytest.raises(UnknownTransformation):
            encode_transformation_onehot(
                parse_descriptor("unrolling(factor=8)"), vocab)


def _set(vec, idx, val):
    vec[idx] = val
    return vec


_STEP_STRATEGY = st.one_of(
    st.sampled_from(UNROLL_FACTORS).map(
        lambda f: TransformationStep("unrolling", factor=f)),
    st.tuples(st.sampled_from(JAM_LEVELS), st.sampled_from(JAM_FACTORS)).map(
        lambda t: TransformationStep("unroll_and_jam", level=t[0], factor=t[1])),
    st.tuples(st.sampled_from(TILE_LEVELS),
              st.sampled_from(DEFAULT_TILE_SIZES)).map(
        lambda t: TransformationStep("tiling", level=t[0], tile_size=t[1])),
    st.integers(1, 29).map(lambda p: TransformationStep("interchange", perm=p)),
    st.just(TransformationStep("distribution")),
)


@given(st.lists(_STEP_STRATEGY, unique_by=lambda s: s.kind,
                min_size=1, max_size=4))
def test_round_trip_property(steps):
    from looptune.mutate import KIND_ORDER
    ordered = tuple(sorted(steps, key=lambda s: KIND_ORDER.index(s.kind)))
    if {"unroll_and_jam", "tiling"} <= {s.kind for s in ordered}:
        return
    seq = TransformationSeq(ordered)
    assert decode_transformation(encode_transformation(seq)) == seq
