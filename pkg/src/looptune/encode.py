"""Numeric encodings: token-sequence matrices and transformation vectors.

Token sequences become fixed-shape ``max_len x channels`` float matrices under
one of six methods (fixed, basic, type_based, renaming, complex, fasttext);
rows past the real token count are all-zero padding. Transformation sequences
become a 56-element binary feature vector with one subvector per
transformation kind, or a plain one-hot over a sequence vocabulary.
"""

from __future__ import annotations

import math
import zlib
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .clexer import Token, TokenKind, TokenSeq, int_literal_value
from .mutate import (DEFAULT_TILE_SIZES, JAM_FACTORS, JAM_LEVELS, TILE_LEVELS,
                     UNROLL_FACTORS, TransformationSeq, TransformationStep)


class MissingResource(Exception):
    pass


class EncodingOverflow(Exception):
    pass


class MalformedVector(Exception):
    pass


class UnknownTransformation(Exception):
    pass


# ---------------------------------------------------------------------------
# Corpus frequency statistics

@dataclass
class FreqMaps:
    f_tokens: Counter = field(default_factory=Counter)
    f_ids: Counter = field(default_factory=Counter)
    f_std_tokens: Counter = field(default_factory=Counter)
    i_cov: dict[int, int] = field(default_factory=dict)


_LITERAL_KINDS = {TokenKind.INT_LITERAL, TokenKind.FLOAT_LITERAL,
                  TokenKind.CHAR_LITERAL, TokenKind.STRING_LITERAL}


def build_freq_maps(corpus: list[TokenSeq],
                    forbidden_ids: frozenset[str] = frozenset()) -> FreqMaps:
    """Token/identifier frequency maps over the training corpus.

    forbidden_ids guards split hygiene: passing a loop whose id is in the
    validation split is a programming error.
    """
    maps = FreqMaps()
    for seq in corpus:
        assert seq.loop_id not in forbidden_ids, \
            f"loop {seq.loop_id!r} belongs to the validation split"
        for tok in seq:
            maps.f_tokens[tok.text] += 1
            if tok.kind is TokenKind.IDENTIFIER:
                maps.f_ids[tok.text] += 1
            elif tok.kind not in _LITERAL_KINDS:
                maps.f_std_tokens[tok.text] += 1
    total_ids = sum(maps.f_ids.values())
    if total_ids:
        counts = sorted(maps.f_ids.values(), reverse=True)
        running = 0
        k = 0
        cover = []
        for c in counts:
            running += c
            k += 1
            cover.append((k, running))
        for p in range(1, 101):
            need = math.ceil(total_ids * p / 100)
            for k, running in cover:
                if running >= need:
                    maps.i_cov[p] = k
                    break
    return maps


def top_identifiers(maps: FreqMaps, cover_percent: int) -> list[str]:
    """Minimal identifier set covering >= cover_percent of id occurrences,
    by descending frequency (ties by name for determinism)."""
    k = maps.i_cov.get(cover_percent, 0)
    ranked = sorted(maps.f_ids.items(), key=lambda kv: (-kv[1], kv[0]))
    return [name for name, _ in ranked[:k]]


# ---------------------------------------------------------------------------
# Token-sequence encoding

METHODS = ("fixed", "basic", "type_based", "renaming", "complex", "fasttext")

C_TYPE_NAMES = ("int", "double", "long", "float", "struct", "char", "short")


@dataclass
class EncodedLoop:
    channels: int
    matrix: np.ndarray            # (max_len, channels) float64
    method: str
    params: dict


def _log_magnitude(text: str) -> float:
    return math.log2(int_literal_value(text) + 1)


def _std_vocab(freq: FreqMaps) -> list[str]:
    return sorted(freq.f_std_tokens)


def scan_declared_types(tokens: list[Token]) -> dict[str, str]:
    """Best-effort map identifier -> declared type from declaration-looking
    patterns (``double x``, ``static long a[...]``, ``for (int i``)."""
    out: dict[str, str] = {}
    for i, tok in enumerate(tokens):
        if tok.kind is TokenKind.KEYWORD and tok.text in C_TYPE_NAMES:
            j = i + 1
            while j < len(tokens) and tokens[j].kind is TokenKind.KEYWORD:
                j += 1
            while j < len(tokens) and tokens[j].kind is TokenKind.IDENTIFIER:
                name = tokens[j].text
                out.setdefault(name, tok.text)
                j += 1
                # Skip one array/initializer clause, then continue on commas.
                depth = 0
                while j < len(tokens):
                    t = tokens[j].text
                    if t in ("[", "("):
                        depth += 1
                    elif t in ("]", ")"):
                        depth -= 1
                    elif depth == 0 and t in (",", ";", "=", ")"):
                        break
                    j += 1
                if j < len(tokens) and tokens[j].text == ",":
                    j += 1
                else:
                    break
    return out


def loop_seed(loop_id: str, seed: int) -> int:
    """Stable per-loop RNG seed; reproducible across runs and processes."""
    return (zlib.crc32(loop_id.encode()) ^ (seed * 0x9E3779B1)) & 0x7FFFFFFF


def encode_tokens(seq: TokenSeq, method: str, params: dict | None = None,
                  freq: FreqMaps | None = None, emb=None,
                  max_len: int = 250, seed: int = 0) -> EncodedLoop:
    """Encode an admitted token sequence as a max_len x channels matrix."""
    params = dict(params or {})
    if method not in METHODS:
        raise ValueError(f"unknown encoding method {method!r}")
    if len(seq) > max_len:
        raise ValueError(f"sequence length {len(seq)} exceeds max_len {max_len}")
    if method == "fasttext":
        if emb is None:
            raise MissingResource("fasttext encoding requires an embedding table")
        matrix = np.zeros((max_len, emb.dim))
        for row, tok in enumerate(seq):
            matrix[row] = emb.lookup(tok.text)
        return EncodedLoop(emb.dim, matrix, method, params)
    if freq is None:
        raise MissingResource(f"{method} encoding requires frequency maps")

    if method == "fixed":
        n = int(params.get("n", 1000))
        params["n"] = n
        ranked = sorted(freq.f_tokens.items(), key=lambda kv: (-kv[1], kv[0]))
        slots = {text: i for i, (text, _) in enumerate(ranked[:n])}
        channels = n + 1
        matrix = np.zeros((max_len, channels))
        for row, tok in enumerate(seq):
            matrix[row, slots.get(tok.text, n)] = 1.0
        return EncodedLoop(channels, matrix, method, params)

    vocab = _std_vocab(freq)
    std_slot = {text: i for i, text in enumerate(vocab)}
    v = len(vocab)

    if method in ("basic", "type_based", "renaming"):
        if method == "basic":
            extra = ["id"]
        elif method == "type_based":
            extra = list(C_TYPE_NAMES) + ["id"]
        else:
            m = int(params.get("m", 40))
            params["m"] = m
            extra = [f"slot{i}" for i in range(m)]
        # layout: std vocab | extra id slots | unknown | int magnitude
        unknown = v + len(extra)
        magnitude = unknown + 1
        channels = magnitude + 1
        matrix = np.zeros((max_len, channels))
        id_slot = _identifier_slots(seq, method, params, seed)
        decl_types = params.get("decl_types") or {}
        for row, tok in enumerate(seq):
            if tok.kind is TokenKind.IDENTIFIER:
                if method == "basic":
                    matrix[row, v] = 1.0
                elif method == "type_based":
                    ty = decl_types.get(tok.text)
                    if ty in C_TYPE_NAMES:
                        matrix[row, v + C_TYPE_NAMES.index(ty)] = 1.0
                    else:
                        matrix[row, v + len(C_TYPE_NAMES)] = 1.0
                else:
                    matrix[row, v + id_slot[tok.text]] = 1.0
            elif tok.kind is TokenKind.INT_LITERAL:
                matrix[row, magnitude] = _log_magnitude(tok.text)
            elif tok.kind in _LITERAL_KINDS:
                matrix[row, unknown] = 1.0
            elif tok.text in std_slot:
                matrix[row, std_slot[tok.text]] = 1.0
            else:
                matrix[row, unknown] = 1.0
        return EncodedLoop(channels, matrix, method, params)

    # complex
    c = int(params.get("c", 70))
    params["c"] = c
    kept = top_identifiers(freq, c)
    kept_slot = {name: i for i, name in enumerate(kept)}
    k = len(kept)
    # layout: std vocab | kept identifiers | id | unknown | 64 literal buckets
    id_ch = v + k
    unknown = id_ch + 1
    lit_base = unknown + 1
    channels = lit_base + 64
    matrix = np.zeros((max_len, channels))
    for row, tok in enumerate(seq):
        if tok.kind is TokenKind.IDENTIFIER:
            if tok.text in kept_slot:
                matrix[row, v + kept_slot[tok.text]] = 1.0
            else:
                matrix[row, id_ch] = 1.0
        elif tok.kind is TokenKind.INT_LITERAL:
            bucket = min(63, int(math.floor(_log_magnitude(tok.text))))
            matrix[row, lit_base + bucket] = 1.0
        elif tok.kind in _LITERAL_KINDS:
            matrix[row, unknown] = 1.0
        elif tok.text in std_slot:
            matrix[row, std_slot[tok.text]] = 1.0
        else:
            matrix[row, unknown] = 1.0
    return EncodedLoop(channels, matrix, method, params)


def _identifier_slots(seq: TokenSeq, method: str, params: dict, seed: int) -> dict[str, int]:
    if method != "renaming":
        return {}
    m = params["m"]
    names = []
    seen = set()
    for tok in seq:
        if tok.kind is TokenKind.IDENTIFIER and tok.text not in seen:
            seen.add(tok.text)
            names.append(tok.text)
    rng = np.random.default_rng(loop_seed(seq.loop_id, seed))
    if len(names) <= m:
        slots = rng.permutation(m)[:len(names)]
    else:
        slots = rng.integers(0, m, size=len(names))
    return {name: int(s) for name, s in zip(names, slots)}


# ---------------------------------------------------------------------------
# Transformation encoding (compact 56-element vector)

TVEC_LEN = 56
UNROLL_OFF = 0
JAM_OFF = 4
TILE_OFF = 11
IC_OFF = 24
DIST_OFF = 54
MAX_PERM_SLOTS = 29

SUBVECTOR_SPANS = {
    "unrolling": (UNROLL_OFF, 4),
    "unroll_and_jam": (JAM_OFF, 7),
    "tiling": (TILE_OFF, 13),
    "interchange": (IC_OFF, 30),
    "distribution": (DIST_OFF, 2),
}


def encode_transformation(seq: TransformationSeq,
                          tile_sizes: tuple[int, ...] = DEFAULT_TILE_SIZES
                          ) -> np.ndarray:
    """Compact similarity-preserving encoding; presence bit plus one
    parameter slot per applied transformation."""
    if len(tile_sizes) != 3:
        raise ValueError("compact encoding expects exactly 3 tile sizes")
    vec = np.zeros(TVEC_LEN)
    for step in seq.steps:
        if step.kind == "unrolling":
            if step.factor not in UNROLL_FACTORS:
                raise EncodingOverflow(str(step))
            vec[UNROLL_OFF] = 1.0
            vec[UNROLL_OFF + 1 + UNROLL_FACTORS.index(step.factor)] = 1.0
        elif step.kind == "unroll_and_jam":
            if step.level not in JAM_LEVELS or step.factor not in JAM_FACTORS:
                raise EncodingOverflow(str(step))
            vec[JAM_OFF] = 1.0
            idx = (step.level - 1) * len(JAM_FACTORS) + JAM_FACTORS.index(step.factor)
            vec[JAM_OFF + 1 + idx] = 1.0
        elif step.kind == "tiling":
            if step.level not in TILE_LEVELS or step.tile_size not in tile_sizes:
                raise EncodingOverflow(str(step))
            vec[TILE_OFF] = 1.0
            idx = (step.level - 1) * 3 + tile_sizes.index(step.tile_size)
            vec[TILE_OFF + 1 + idx] = 1.0
        elif step.kind == "interchange":
            if not 1 <= step.perm <= MAX_PERM_SLOTS:
                raise EncodingOverflow(str(step))
            vec[IC_OFF] = 1.0
            vec[IC_OFF + step.perm] = 1.0
        elif step.kind == "distribution":
            vec[DIST_OFF] = 1.0
            vec[DIST_OFF + 1] = 1.0
    return vec


def decode_transformation(vec: np.ndarray,
                          tile_sizes: tuple[int, ...] = DEFAULT_TILE_SIZES
                          ) -> TransformationSeq:
    """Inverse of encode_transformation on its image."""
    vec = np.asarray(vec)
    if vec.shape != (TVEC_LEN,):
        raise MalformedVector(f"expected shape ({TVEC_LEN},), got {vec.shape}")
    if not np.all((vec == 0.0) | (vec == 1.0)):
        raise MalformedVector("entries must be 0 or 1")
    if vec[JAM_OFF] and vec[TILE_OFF]:
        raise MalformedVector("tiling and unroll_and_jam presence bits both set")
    steps = []
    for kind in ("interchange", "unroll_and_jam", "tiling", "distribution", "unrolling"):
        off, size = SUBVECTOR_SPANS[kind]
        sub = vec[off:off + size]
        present = bool(sub[0])
        param_idx = np.flatnonzero(sub[1:])
        if not present:
            if param_idx.size:
                raise MalformedVector(f"{kind}: parameter slot set without presence bit")
            continue
        if kind == "distribution":
            if sub[1] != 1.0:
                raise MalformedVector("distribution: applied flag missing")
            steps.append(TransformationStep("distribution"))
            continue
        if param_idx.size != 1:
            raise MalformedVector(f"{kind}: expected exactly one parameter slot")
        idx = int(param_idx[0])
        if kind == "unrolling":
            steps.append(TransformationStep("unrolling", factor=UNROLL_FACTORS[idx]))
        elif kind == "unroll_and_jam":
            steps.append(TransformationStep(
                "unroll_and_jam", level=idx // len(JAM_FACTORS) + 1,
                factor=JAM_FACTORS[idx % len(JAM_FACTORS)]))
        elif kind == "tiling":
            steps.append(TransformationStep(
                "tiling", level=idx // 3 + 1, tile_size=tile_sizes[idx % 3]))
        else:
            steps.append(TransformationStep("interchange", perm=idx + 1))
    return TransformationSeq(tuple(steps))


def encode_transformation_onehot(seq: TransformationSeq,
                                 vocab: list[TransformationSeq]) -> np.ndarray:
    descriptors = [s.descriptor() for s in vocab]
    try:
        idx = descriptors.index(seq.descriptor())
    except ValueError:
        raise UnknownTransformation(seq.descriptor()) from None
    vec = np.zeros(len(vocab))
    vec[idx] = 1.0
    return vec
