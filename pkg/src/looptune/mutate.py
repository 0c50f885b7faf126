"""Enumeration and application of semantics-preserving loop transformations.

Sequences are restricted to sub-sequences of the two canonical orders

    interchange -> unroll_and_jam -> distribution -> unrolling
    interchange -> tiling         -> distribution -> unrolling

and every step must pass the conservative legality check against the nest
state at its application point. The descriptor string grammar
``kind(param=value,...)`` joined by ``;`` is the canonical file/wire
representation of a sequence.
"""

from __future__ import annotations

import copy
import itertools
import math
import re
from dataclasses import dataclass

from .clexer import Token, TokenKind, tokenize
from . import loopir
from .loopir import LoopHeader, LoopNest, Statement, legality, permutation_by_number

UNROLL_FACTORS = (2, 4, 8)
JAM_FACTORS = (2, 4)
JAM_LEVELS = (1, 2, 3)
TILE_LEVELS = (1, 2, 3, 4)
DEFAULT_TILE_SIZES = (8, 16, 32)
MAX_PERM = 29

KIND_ORDER = ("interchange", "unroll_and_jam", "tiling", "distribution", "unrolling")


class IllegalTransformation(Exception):
    def __init__(self, step):
        super().__init__(f"illegal transformation step: {step}")
        self.step = step


class DescriptorError(ValueError):
    pass


@dataclass(frozen=True)
class TransformationStep:
    kind: str
    factor: int | None = None
    level: int | None = None
    tile_size: int | None = None
    perm: int | None = None

    def __post_init__(self):
        required = {
            "unrolling": ("factor",),
            "unroll_and_jam": ("level", "factor"),
            "tiling": ("level", "tile_size"),
            "interchange": ("perm",),
            "distribution": (),
        }
        if self.kind not in required:
            raise ValueError(f"unknown transformation kind {self.kind!r}")
        for name in ("factor", "level", "tile_size", "perm"):
            value = getattr(self, name)
            if name in required[self.kind]:
                if value is None:
                    raise ValueError(f"{self.kind} requires parameter {name}")
            elif value is not None:
                raise ValueError(f"{self.kind} does not take parameter {name}")

    def descriptor(self) -> str:
        if self.kind == "unrolling":
            return f"unrolling(factor={self.factor})"
        if self.kind == "unroll_and_jam":
            return f"unroll_and_jam(level={self.level},factor={self.factor})"
        if self.kind == "tiling":
            return f"tiling(level={self.level},size={self.tile_size})"
        if self.kind == "interchange":
            return f"interchange(perm={self.perm})"
        return "distribution"

    def __str__(self):
        return self.descriptor()


@dataclass(frozen=True)
class TransformationSeq:
    steps: tuple[TransformationStep, ...]

    def __post_init__(self):
        kinds = [s.kind for s in self.steps]
        if len(set(kinds)) != len(kinds):
            raise ValueError("a transformation kind may appear at most once")
        if "unroll_and_jam" in kinds and "tiling" in kinds:
            raise ValueError("unroll_and_jam and tiling never co-occur")
        order = [KIND_ORDER.index(k) for k in kinds]
        if order != sorted(order):
            raise ValueError("steps must follow the canonical order")

    def descriptor(self) -> str:
        return ";".join(s.descriptor() for s in self.steps)

    def shape(self) -> tuple[str, ...]:
        """Ordered step kinds with parameters erased."""
        return tuple(s.kind for s in self.steps)

    def __str__(self):
        return self.descriptor()

    def __len__(self):
        return len(self.steps)


_STEP_RE = re.compile(r"^(\w+)(?:\(([^()]*)\))?$")


def parse_descriptor(text: str) -> TransformationSeq:
    """Inverse of TransformationSeq.descriptor (byte-exact round trip)."""
    steps = []
    for part in text.split(";"):
        part = part.strip()
        m = _STEP_RE.match(part)
        if not m:
            raise DescriptorError(f"malformed step descriptor {part!r}")
        kind, params_txt = m.group(1), m.group(2)
        params = {}
        if params_txt:
            for item in params_txt.split(","):
                if "=" not in item:
                    raise DescriptorError(f"malformed parameter {item!r}")
                key, val = item.split("=", 1)
                try:
                    params[key.strip()] = int(val)
                except ValueError:
                    raise DescriptorError(
                        f"non-integer parameter {item!r}") from None
        try:
            if kind == "tiling":
                params["tile_size"] = params.pop("size")
            steps.append(TransformationStep(kind, **params))
        except (TypeError, KeyError, ValueError) as exc:
            raise DescriptorError(str(exc)) from exc
    try:
        return TransformationSeq(tuple(steps))
    except ValueError as exc:
        raise DescriptorError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Token substitution for body duplication

_SAFE_PREV = {"(", "[", "{", "+", ",", ";", "<<", ">>", "<", ">", "<=", ">=",
              "==", "!=", "^", "|", "&&", "||", "?", ":"} | loopir.ASSIGN_OPS
_SAFE_NEXT = {")", "]", "}", ";", ",", "+", "-", "<<", ">>", "<", ">", "<=",
              ">=", "==", "!=", "&", "^", "|", "&&", "||", "?", ":"}
_BINARY_CONTEXT_KINDS = {TokenKind.IDENTIFIER, TokenKind.INT_LITERAL,
                         TokenKind.FLOAT_LITERAL}


def _prev_safe(toks: list[Token], i: int) -> bool:
    if i == 0:
        return True
    prev = toks[i - 1]
    if prev.text in _SAFE_PREV:
        return True
    if prev.text == "&":
        # Binary & (bitwise) is lower precedence than +; unary & (address-of)
        # binds tighter and needs parentheses.
        if i >= 2:
            before = toks[i - 2]
            return before.kind in _BINARY_CONTEXT_KINDS or before.text in (")", "]")
        return False
    return False


def _next_safe(toks: list[Token], i: int) -> bool:
    if i + 1 >= len(toks):
        return True
    return toks[i + 1].text in _SAFE_NEXT


def substitute_induction(toks: list[Token], var: str, offset: int) -> list[Token]:
    """Replace each use of induction variable ``var`` with ``var + offset``,
    parenthesizing only where a tighter-binding neighbor operator would
    otherwise change the parse."""
    if offset == 0:
        return list(toks)
    out: list[Token] = []
    plus = Token(TokenKind.OPERATOR, "+")
    off_tok = Token(TokenKind.INT_LITERAL, str(offset))
    for i, t in enumerate(toks):
        if t.kind is TokenKind.IDENTIFIER and t.text == var:
            if _prev_safe(toks, i) and _next_safe(toks, i):
                out.extend([t, plus, off_tok])
            else:
                out.extend([Token(TokenKind.PUNCTUATION, "("), t, plus, off_tok,
                            Token(TokenKind.PUNCTUATION, ")")])
        else:
            out.append(t)
    return out


def _reanalyze_statement(toks: list[Token]) -> Statement:
    parser = loopir._Parser(toks)
    stmt = parser.parse_statement()
    if parser.pos != len(toks):
        raise loopir.ParseError(parser.pos, "trailing tokens in statement")
    return stmt


def _shifted_body(body: list[Statement], var: str, offset: int) -> list[Statement]:
    if offset == 0:
        return [copy.deepcopy(s) for s in body]
    return [_reanalyze_statement(substitute_induction(s.tokens, var, offset))
            for s in body]


def _int_tokens(value: int) -> list[Token]:
    return [Token(TokenKind.INT_LITERAL, str(value))]


# ---------------------------------------------------------------------------
# Individual transformations (pure functions over the IR)


def unroll(nest: LoopNest, factor: int) -> list[LoopNest]:
    """Unroll the innermost loop. Returns the main loop plus an epilogue
    loop when the trip count is not provably divisible by the factor."""
    step = TransformationStep("unrolling", factor=factor)
    if not legality(nest, step):
        raise IllegalTransformation(step)
    h = nest.loops[-1]
    trip = h.trip_count()
    bodies = []
    for k in range(factor):
        bodies.extend(_shifted_body(nest.body, h.var, k * h.step))
    if trip is not None and trip > 0 and trip % factor == 0:
        lo, hi = h.const_bounds()
        main = LoopHeader(h.var, h.lower_tokens, _int_tokens(hi), "le",
                          h.step * factor, h.declare)
        return [LoopNest(nest.loops[:-1] + [main], bodies)]
    # Guarded main loop plus remainder loop picking up leftover iterations.
    main = LoopHeader(h.var, h.lower_tokens, list(h.upper_tokens), h.comparison,
                      h.step * factor, h.declare, cond_offset=(factor - 1) * h.step)
    epilogue = LoopHeader(h.var, None, list(h.upper_tokens), h.comparison,
                          h.step, None)
    main_nest = LoopNest(nest.loops[:-1] + [main], bodies)
    epi_nest = LoopNest([epilogue], [copy.deepcopy(s) for s in nest.body])
    if nest.depth == 1:
        return [main_nest, epi_nest]
    # Epilogue must sit inside the enclosing loops, directly after the main
    # innermost loop: represent it as a loop statement in the parent body.
    inner_main = LoopNest([main], bodies)
    merged_body = [_nest_statement(inner_main), _nest_statement(epi_nest)]
    return [LoopNest(nest.loops[:-1], merged_body)]


def _nest_statement(sub: LoopNest) -> Statement:
    reads, writes = loopir._subnest_refs(sub)
    return Statement("loop", [], reads, writes, sub)


def unroll_and_jam(nest: LoopNest, level: int, factor: int) -> LoopNest:
    step = TransformationStep("unroll_and_jam", level=level, factor=factor)
    if not legality(nest, step):
        raise IllegalTransformation(step)
    h = nest.loops[level - 1]
    new_h = LoopHeader(h.var, h.lower_tokens, list(h.upper_tokens),
                       h.comparison, h.step * factor, h.declare)
    body = []
    for k in range(factor):
        body.extend(_shifted_body(nest.body, h.var, k * h.step))
    loops = list(nest.loops)
    loops[level - 1] = new_h
    return LoopNest(loops, body)


def tile(nest: LoopNest, level: int, size: int) -> LoopNest:
    step = TransformationStep("tiling", level=level, tile_size=size)
    if not legality(nest, step):
        raise IllegalTransformation(step)
    h = nest.loops[level - 1]
    tvar = _fresh_name(nest, h.var + "t")
    tile_h = LoopHeader(tvar, h.lower_tokens, list(h.upper_tokens),
                        h.comparison, size, "int")
    upper_txt = loopir.render_tokens(h.upper_tokens)
    if h.comparison == "lt":
        edge = f"{tvar} + {size}"
    else:
        edge = f"{tvar} + {size - 1}"
    guard = f"(({edge}) < ({upper_txt}) ? ({edge}) : ({upper_txt}))"
    point_h = LoopHeader(h.var, [Token(TokenKind.IDENTIFIER, tvar)],
                         list(tokenize(guard).tokens), h.comparison, 1, h.declare)
    loops = nest.loops[:level - 1] + [tile_h, point_h] + nest.loops[level:]
    return LoopNest(loops, nest.body)


def _fresh_name(nest: LoopNest, base: str) -> str:
    used = set(nest.induction_vars())
    for s in nest.body:
        used.update(t.text for t in s.tokens if t.kind is TokenKind.IDENTIFIER)
    for h in nest.loops:
        for toks in (h.lower_tokens or [], h.upper_tokens):
            used.update(t.text for t in toks if t.kind is TokenKind.IDENTIFIER)
    name = base
    while name in used:
        name += "t"
    return name


def interchange(nest: LoopNest, perm: int) -> LoopNest:
    step = TransformationStep("interchange", perm=perm)
    if not legality(nest, step):
        raise IllegalTransformation(step)
    order = permutation_by_number(nest.depth, perm)
    return LoopNest([nest.loops[p] for p in order], nest.body)


def distribute(nest: LoopNest) -> list[LoopNest]:
    step = TransformationStep("distribution")
    if not legality(nest, step):
        raise IllegalTransformation(step)
    groups = loopir.distribution_groups(nest)
    return [LoopNest(copy.deepcopy(nest.loops), [nest.body[i] for i in idxs])
            for idxs in groups]


# ---------------------------------------------------------------------------
# Sequence application and enumeration


def apply_step(program: list[LoopNest], step: TransformationStep) -> list[LoopNest]:
    """Apply one step to every nest of the current program state."""
    out: list[LoopNest] = []
    for nest in program:
        if not legality(nest, step):
            raise IllegalTransformation(step)
        if step.kind == "unrolling":
            out.extend(unroll(nest, step.factor))
        elif step.kind == "unroll_and_jam":
            out.append(unroll_and_jam(nest, step.level, step.factor))
        elif step.kind == "tiling":
            out.append(tile(nest, step.level, step.tile_size))
        elif step.kind == "interchange":
            out.append(interchange(nest, step.perm))
        elif step.kind == "distribution":
            out.extend(distribute(nest))
        else:
            raise ValueError(step.kind)
    return out


def apply_seq_ir(nest: LoopNest, seq: TransformationSeq) -> list[LoopNest]:
    program = [nest]
    for step in seq.steps:
        program = apply_step(program, step)
    return program


def apply(nest: LoopNest, seq: TransformationSeq) -> str:
    """Apply a sequence left to right and return the transformed C source."""
    return loopir.unparse_program(apply_seq_ir(nest, seq))


def _sequence_legal(nest: LoopNest, steps: tuple[TransformationStep, ...]) -> bool:
    program = [nest]
    for step in steps:
        try:
            program = apply_step(program, step)
        except (IllegalTransformation, loopir.ParseError):
            return False
    return True


def enumerate_sequences(nest: LoopNest,
                        tile_sizes: tuple[int, ...] = DEFAULT_TILE_SIZES
                        ) -> list[TransformationSeq]:
    """Every non-empty grammar-valid sequence whose every step is legal at
    its application point, ordered lexicographically by descriptor."""
    depth = nest.depth
    ic_opts: list[TransformationStep | None] = [None]
    if 2 <= depth <= loopir.MAX_INTERCHANGE_DEPTH:
        n_perms = min(math.factorial(depth), MAX_PERM)
        ic_opts += [TransformationStep("interchange", perm=p)
                    for p in range(2, n_perms + 1)]
    mid_opts: list[TransformationStep | None] = [None]
    mid_opts += [TransformationStep("unroll_and_jam", level=lv, factor=f)
                 for lv in JAM_LEVELS if lv < depth for f in JAM_FACTORS]
    mid_opts += [TransformationStep("tiling", level=lv, tile_size=sz)
                 for lv in TILE_LEVELS if lv <= depth for sz in tile_sizes]
    dist_opts = [None, TransformationStep("distribution")]
    un_opts: list[TransformationStep | None] = [None]
    un_opts += [TransformationStep("unrolling", factor=f) for f in UNROLL_FACTORS]

    found = []
    for parts in itertools.product(ic_opts, mid_opts, dist_opts, un_opts):
        steps = tuple(p for p in parts if p is not None)
        if not steps:
            continue
        if _sequence_legal(nest, steps):
            found.append(TransformationSeq(steps))
    found.sort(key=lambda s: s.descriptor())
    return found
