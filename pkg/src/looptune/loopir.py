"""Structured IR for counted C loop nests plus conservative legality analysis.

The supported subset: counted ``for`` loops with integer induction variables,
affine bounds, positive constant steps, and bodies made of assignments,
conditionals, compounds, and nested counted loops. Anything else is a
ParseError. Legality decisions are conservative: a transformation is reported
legal only when a distance-vector analysis over affine array subscripts can
prove it semantics-preserving; unanalyzable subscripts or scalar carried
state make the answer False.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .clexer import Token, TokenKind, TokenSeq, int_literal_value, tokenize


class ParseError(Exception):
    def __init__(self, offset: int, reason: str):
        super().__init__(f"token {offset}: {reason}")
        self.offset = offset
        self.reason = reason


# Sentinel for dependences the analysis cannot resolve.
UNKNOWN = "unknown"
# Sentinel entry for a distance unconstrained by the subscripts (any value).
STAR = "*"

TYPE_KEYWORDS = {"int", "long", "short", "char", "float", "double", "unsigned",
                 "signed", "const", "register"}

ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}


@dataclass(frozen=True)
class Affine:
    """Linear integer expression: sum(coeffs[name] * name) + const."""

    coeffs: tuple[tuple[str, int], ...]
    const: int

    @staticmethod
    def constant(c: int) -> "Affine":
        return Affine((), c)

    @staticmethod
    def var(name: str) -> "Affine":
        return Affine(((name, 1),), 0)

    def coeff_map(self) -> dict[str, int]:
        return dict(self.coeffs)

    def add(self, other: "Affine") -> "Affine":
        m = self.coeff_map()
        for name, c in other.coeffs:
            m[name] = m.get(name, 0) + c
        return Affine(_norm(m), self.const + other.const)

    def neg(self) -> "Affine":
        return Affine(tuple((n, -c) for n, c in self.coeffs), -self.const)

    def scale(self, k: int) -> "Affine":
        return Affine(tuple((n, c * k) for n, c in self.coeffs), self.const * k)

    def as_const(self) -> int | None:
        return self.const if not self.coeffs else None

    def names(self) -> set[str]:
        return {n for n, _ in self.coeffs}


def _norm(m: dict[str, int]) -> tuple[tuple[str, int], ...]:
    return tuple(sorted((n, c) for n, c in m.items() if c != 0))


def parse_affine(tokens: list[Token]) -> Affine | None:
    """Parse a token slice as an affine expression; None if not affine."""
    try:
        expr, pos = _affine_sum(tokens, 0)
    except _NotAffine:
        return None
    if pos != len(tokens):
        return None
    return expr


class _NotAffine(Exception):
    pass


def _affine_sum(toks: list[Token], pos: int) -> tuple[Affine, int]:
    sign = 1
    if pos < len(toks) and toks[pos].text in ("+", "-"):
        sign = -1 if toks[pos].text == "-" else 1
        pos += 1
    acc, pos = _affine_term(toks, pos)
    if sign < 0:
        acc = acc.neg()
    while pos < len(toks) and toks[pos].text in ("+", "-"):
        neg = toks[pos].text == "-"
        term, pos = _affine_term(toks, pos + 1)
        acc = acc.add(term.neg() if neg else term)
    return acc, pos


def _affine_term(toks: list[Token], pos: int) -> tuple[Affine, int]:
    left, pos = _affine_primary(toks, pos)
    while pos < len(toks) and toks[pos].text == "*":
        right, pos = _affine_primary(toks, pos + 1)
        lc, rc = left.as_const(), right.as_const()
        if lc is not None:
            left = right.scale(lc)
        elif rc is not None:
            left = left.scale(rc)
        else:
            raise _NotAffine()
    return left, pos


def _affine_primary(toks: list[Token], pos: int) -> tuple[Affine, int]:
    if pos >= len(toks):
        raise _NotAffine()
    t = toks[pos]
    if t.kind is TokenKind.INT_LITERAL:
        return Affine.constant(int_literal_value(t.text)), pos + 1
    if t.kind is TokenKind.IDENTIFIER:
        if pos + 1 < len(toks) and toks[pos + 1].text in ("[", "("):
            raise _NotAffine()
        return Affine.var(t.text), pos + 1
    if t.text == "(":
        inner, end = _affine_sum(toks, pos + 1)
        if end >= len(toks) or toks[end].text != ")":
            raise _NotAffine()
        return inner, end + 1
    if t.text == "-":
        inner, end = _affine_primary(toks, pos + 1)
        return inner.neg(), end
    raise _NotAffine()


@dataclass(frozen=True)
class Ref:
    """A scalar or array access. subs is None for scalars; individual
    subscripts are None when they are not affine (unanalyzable)."""

    name: str
    subs: tuple[Affine | None, ...] | None
    is_write: bool

    @property
    def is_scalar(self) -> bool:
        return self.subs is None


@dataclass
class LoopHeader:
    var: str
    lower_tokens: list[Token] | None   # None: epilogue loop reusing var value
    upper_tokens: list[Token]
    comparison: str                    # "lt" | "le"
    step: int
    declare: str | None = None         # e.g. "int" when the header declares var
    cond_offset: int = 0               # condition tests (var + cond_offset)

    @property
    def lower(self) -> Affine | None:
        if self.lower_tokens is None:
            return None
        return parse_affine(self.lower_tokens)

    @property
    def upper(self) -> Affine | None:
        return parse_affine(self.upper_tokens)

    def const_bounds(self) -> tuple[int, int] | None:
        """(lower, inclusive_upper) when both bounds are integer constants."""
        lo = self.lower
        up = self.upper
        if lo is None or up is None:
            return None
        lo_c, up_c = lo.as_const(), up.as_const()
        if lo_c is None or up_c is None:
            return None
        hi = up_c - 1 if self.comparison == "lt" else up_c
        return lo_c, hi - self.cond_offset

    def trip_count(self) -> int | None:
        cb = self.const_bounds()
        if cb is None:
            return None
        lo, hi = cb
        if hi < lo:
            return 0
        return (hi - lo) // self.step + 1


@dataclass
class Statement:
    kind: str                           # assignment | compound | conditional | loop
    tokens: list[Token]
    reads: list[Ref]
    writes: list[Ref]
    subnest: "LoopNest | None" = None


@dataclass
class LoopNest:
    loops: list[LoopHeader]
    body: list[Statement]

    @property
    def depth(self) -> int:
        return len(self.loops)

    @property
    def perfectly_nested(self) -> bool:
        return all(s.kind != "loop" for s in self.body)

    def induction_vars(self) -> list[str]:
        return [h.var for h in self.loops]

    def all_refs(self) -> list[Ref]:
        out = []
        for s in self.body:
            out.extend(s.reads)
            out.extend(s.writes)
        return out


def parse_nest(seq: TokenSeq) -> LoopNest:
    """Parse an admitted token sequence into a loop-nest IR."""
    toks = list(seq.tokens)
    parser = _Parser(toks)
    nest = parser.parse_nest()
    if parser.pos != len(toks):
        raise ParseError(parser.pos, "trailing tokens after loop nest")
    vars_ = nest.induction_vars()
    if len(set(vars_)) != len(vars_):
        raise ParseError(0, "duplicate induction variable in nest")
    for ref in nest.all_refs():
        if ref.is_write and ref.is_scalar and ref.name in vars_:
            raise ParseError(0, f"body writes induction variable {ref.name!r}")
    return nest


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self, off=0) -> Token | None:
        i = self.pos + off
        return self.toks[i] if i < len(self.toks) else None

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t is None or t.text != text:
            raise ParseError(self.pos, f"expected {text!r}, got {t.text if t else 'EOF'!r}")
        self.pos += 1
        return t

    def parse_nest(self) -> LoopNest:
        header = self.parse_header()
        body = self.parse_loop_body()
        # A body that is exactly one nested loop extends the perfect chain.
        if len(body) == 1 and body[0].kind == "loop" and body[0].subnest is not None:
            sub = body[0].subnest
            return LoopNest([header] + sub.loops, sub.body)
        return LoopNest([header], body)

    def parse_header(self) -> LoopHeader:
        self.expect("for")
        self.expect("(")
        declare = None
        t = self.peek()
        if t is not None and t.kind is TokenKind.KEYWORD and t.text in TYPE_KEYWORDS:
            decl_parts = []
            while (tt := self.peek()) is not None and tt.kind is TokenKind.KEYWORD \
                    and tt.text in TYPE_KEYWORDS:
                decl_parts.append(tt.text)
                self.pos += 1
            declare = " ".join(decl_parts)
        t = self.peek()
        if t is None or t.kind is not TokenKind.IDENTIFIER:
            raise ParseError(self.pos, "expected induction variable in init")
        var = t.text
        self.pos += 1
        self.expect("=")
        lower = self.collect_until({";"})
        self.expect(";")
        t = self.peek()
        if t is None or t.kind is not TokenKind.IDENTIFIER or t.text != var:
            raise ParseError(self.pos, "condition must test the induction variable")
        self.pos += 1
        cmp_tok = self.peek()
        if cmp_tok is None or cmp_tok.text not in ("<", "<="):
            raise ParseError(self.pos, "only < / <= loop conditions supported")
        comparison = "lt" if cmp_tok.text == "<" else "le"
        self.pos += 1
        upper = self.collect_until({";"})
        self.expect(";")
        step = self.parse_increment(var)
        self.expect(")")
        if parse_affine(lower) is None:
            raise ParseError(self.pos, "non-affine lower bound")
        if parse_affine(upper) is None:
            raise ParseError(self.pos, "non-affine upper bound")
        return LoopHeader(var, lower, upper, comparison, step, declare)

    def parse_increment(self, var: str) -> int:
        t = self.peek()
        if t is None:
            raise ParseError(self.pos, "missing increment")
        if t.text == "++":
            self.pos += 1
            nxt = self.peek()
            if nxt is None or nxt.text != var:
                raise ParseError(self.pos, "increment must target induction variable")
            self.pos += 1
            return 1
        if t.text == var:
            self.pos += 1
            op = self.peek()
            if op is None:
                raise ParseError(self.pos, "missing increment operator")
            if op.text == "++":
                self.pos += 1
                return 1
            if op.text == "+=":
                self.pos += 1
                lit = self.peek()
                if lit is None or lit.kind is not TokenKind.INT_LITERAL:
                    raise ParseError(self.pos, "step must be an integer constant")
                self.pos += 1
                step = int_literal_value(lit.text)
                if step < 1:
                    raise ParseError(self.pos, "step must be positive")
                return step
            if op.text == "=":
                # i = i + c
                self.pos += 1
                a = self.peek()
                b = self.peek(1)
                c = self.peek(2)
                if a is not None and a.text == var and b is not None and b.text == "+" \
                        and c is not None and c.kind is TokenKind.INT_LITERAL:
                    self.pos += 3
                    return int_literal_value(c.text)
                raise ParseError(self.pos, "unsupported increment form")
        raise ParseError(self.pos, "unsupported increment form")

    def collect_until(self, stops: set[str]) -> list[Token]:
        out = []
        depth = 0
        while True:
            t = self.peek()
            if t is None:
                raise ParseError(self.pos, "unexpected end of tokens")
            if depth == 0 and t.text in stops:
                return out
            if t.text in ("(", "["):
                depth += 1
            elif t.text in (")", "]"):
                if depth == 0 and t.text in stops:
                    return out
                depth -= 1
                if depth < 0:
                    raise ParseError(self.pos, "unbalanced brackets")
            out.append(t)
            self.pos += 1

    def parse_loop_body(self) -> list[Statement]:
        t = self.peek()
        if t is None:
            raise ParseError(self.pos, "missing loop body")
        if t.text == "{":
            self.pos += 1
            stmts = self.parse_body_until("}")
            self.expect("}")
            return stmts
        return [self.parse_statement()]

    def parse_body_until(self, stop: str) -> list[Statement]:
        stmts = []
        while True:
            t = self.peek()
            if t is None:
                raise ParseError(self.pos, "unterminated body")
            if t.text == stop:
                return stmts
            stmts.append(self.parse_statement())

    def parse_statement(self) -> Statement:
        t = self.peek()
        if t is None:
            raise ParseError(self.pos, "expected statement")
        if t.text in ("goto", "while", "do", "switch", "return", "break", "continue"):
            raise ParseError(self.pos, f"unsupported construct {t.text!r}")
        if t.text == "for":
            start = self.pos
            subparser = _Parser(self.toks)
            subparser.pos = self.pos
            subnest = subparser.parse_nest()
            self.pos = subparser.pos
            toks = self.toks[start:self.pos]
            reads, writes = _subnest_refs(subnest)
            return Statement("loop", toks, reads, writes, subnest)
        if t.text == "if":
            return self.parse_conditional()
        if t.text == "{":
            start = self.pos
            self.pos += 1
            stmts = self.parse_body_until("}")
            self.expect("}")
            toks = self.toks[start:self.pos]
            reads = [r for s in stmts for r in s.reads]
            writes = [w for s in stmts for w in s.writes]
            return Statement("compound", toks, reads, writes)
        return self.parse_simple_statement()

    def parse_conditional(self) -> Statement:
        start = self.pos
        self.expect("if")
        self.expect("(")
        cond = self.collect_until({")"})
        self.expect(")")
        then = self.parse_statement()
        else_stmt = None
        t = self.peek()
        if t is not None and t.text == "else":
            self.pos += 1
            else_stmt = self.parse_statement()
        toks = self.toks[start:self.pos]
        reads = extract_reads(cond) + then.reads + (else_stmt.reads if else_stmt else [])
        writes = then.writes + (else_stmt.writes if else_stmt else [])
        return Statement("conditional", toks, reads, writes)

    def parse_simple_statement(self) -> Statement:
        start = self.pos
        toks = self.collect_until({";"})
        self.expect(";")
        full = self.toks[start:self.pos]
        reads, writes = analyze_simple_statement(toks, self_pos=start)
        return Statement("assignment", full, reads, writes)


def analyze_simple_statement(toks: list[Token], self_pos: int = 0) -> tuple[list[Ref], list[Ref]]:
    """Reads/writes of an expression statement (without trailing ';')."""
    if not toks:
        raise ParseError(self_pos, "empty statement")
    # Strip leading declaration specifiers: keywords or "Ident ident" pattern.
    i = 0
    while i < len(toks) and toks[i].kind is TokenKind.KEYWORD and toks[i].text in TYPE_KEYWORDS:
        i += 1
    if i == 0 and len(toks) >= 2 and toks[0].kind is TokenKind.IDENTIFIER \
            and toks[1].kind is TokenKind.IDENTIFIER:
        i = 1  # typedef-style declaration: "I32 cf = ..."
    toks = toks[i:]
    if not toks:
        raise ParseError(self_pos, "declaration without declarator")
    # ++x; / --x;
    if toks[0].text in ("++", "--"):
        lhs, end = _parse_lvalue(toks, 1, self_pos)
        if end != len(toks):
            raise ParseError(self_pos, "unsupported statement form")
        return [replace(lhs, is_write=False)], [lhs]
    lhs, end = _parse_lvalue(toks, 0, self_pos)
    if end < len(toks) and toks[end].text in ("++", "--") and end + 1 == len(toks):
        return [replace(lhs, is_write=False)], [lhs]
    if end >= len(toks) or toks[end].text not in ASSIGN_OPS:
        raise ParseError(self_pos, "expected assignment statement")
    op = toks[end].text
    rhs = toks[end + 1:]
    reads = extract_reads(rhs)
    # Subscript expressions of the lvalue are reads too.
    if lhs.subs is not None:
        reads.extend(extract_reads(_lvalue_sub_tokens(toks, 0, end)))
    if op != "=":
        reads.append(replace(lhs, is_write=False))
    return reads, [lhs]


def _parse_lvalue(toks: list[Token], pos: int, err_pos: int) -> tuple[Ref, int]:
    if pos >= len(toks) or toks[pos].kind is not TokenKind.IDENTIFIER:
        raise ParseError(err_pos, "expected lvalue")
    name = toks[pos].text
    pos += 1
    subs: list[Affine | None] = []
    while pos < len(toks) and toks[pos].text == "[":
        depth = 1
        j = pos + 1
        while j < len(toks) and depth > 0:
            if toks[j].text == "[":
                depth += 1
            elif toks[j].text == "]":
                depth -= 1
            j += 1
        if depth != 0:
            raise ParseError(err_pos, "unbalanced subscript")
        subs.append(parse_affine(toks[pos + 1:j - 1]))
        pos = j
    if pos < len(toks) and toks[pos].text == "(":
        raise ParseError(err_pos, f"function call {name!r} unsupported")
    return Ref(name, tuple(subs) if subs else None, True), pos


def _lvalue_sub_tokens(toks: list[Token], start: int, end: int) -> list[Token]:
    out = []
    depth = 0
    for t in toks[start:end]:
        if t.text == "[":
            depth += 1
            continue
        if t.text == "]":
            depth -= 1
            continue
        if depth > 0:
            out.append(t)
    return out


def extract_reads(toks: list[Token]) -> list[Ref]:
    """All scalar/array reads occurring in an expression token slice."""
    reads: list[Ref] = []
    i = 0
    while i < len(toks):
        t = toks[i]
        if t.kind is TokenKind.IDENTIFIER:
            if i + 1 < len(toks) and toks[i + 1].text == "(":
                raise ParseError(i, f"function call {t.text!r} unsupported")
            if i + 1 < len(toks) and toks[i + 1].text == "[":
                name = t.text
                subs: list[Affine | None] = []
                j = i + 1
                while j < len(toks) and toks[j].text == "[":
                    depth = 1
                    k = j + 1
                    while k < len(toks) and depth > 0:
                        if toks[k].text == "[":
                            depth += 1
                        elif toks[k].text == "]":
                            depth -= 1
                        k += 1
                    if depth != 0:
                        raise ParseError(i, "unbalanced subscript")
                    inner = toks[j + 1:k - 1]
                    subs.append(parse_affine(inner))
                    reads.extend(extract_reads(inner))
                    j = k
                reads.append(Ref(name, tuple(subs), False))
                i = j
                continue
            reads.append(Ref(t.text, None, False))
        i += 1
    return reads


def _subnest_refs(sub: LoopNest) -> tuple[list[Ref], list[Ref]]:
    """Refs of a nested-loop statement, demoted to unanalyzable subscripts."""
    reads, writes = [], []
    for ref in sub.all_refs():
        demoted = Ref(ref.name, (None,) if not ref.is_scalar else None, ref.is_write)
        (writes if ref.is_write else reads).append(demoted)
    for h in sub.loops:
        for name in (h.upper.names() if h.upper else set()) | \
                    (h.lower.names() if h.lower else set()):
            reads.append(Ref(name, None, False))
    return reads, writes


# ---------------------------------------------------------------------------
# Unparsing

_NO_SPACE_BEFORE = {";", ",", ")", "]", "++", "--"}
_NO_SPACE_AFTER = {"(", "["}


def render_tokens(toks: list[Token]) -> str:
    parts = []
    for idx, t in enumerate(toks):
        if idx > 0 and t.text not in _NO_SPACE_BEFORE \
                and toks[idx - 1].text not in _NO_SPACE_AFTER \
                and t.text != "[":
            parts.append(" ")
        parts.append(t.text)
    return "".join(parts)


def render_header(h: LoopHeader) -> str:
    cmp_txt = "<" if h.comparison == "lt" else "<="
    decl = f"{h.declare} " if h.declare else ""
    if h.lower_tokens is None:
        init = ""
    else:
        init = f"{decl}{h.var} = {render_tokens(h.lower_tokens)}"
    if h.step == 1:
        inc = f"{h.var}++"
    else:
        inc = f"{h.var} += {h.step}"
    lhs = h.var if h.cond_offset == 0 else f"{h.var} + {h.cond_offset}"
    return f"for ({init}; {lhs} {cmp_txt} {render_tokens(h.upper_tokens)}; {inc})"


def unparse(nest: LoopNest, indent: int = 0) -> str:
    lines = []
    pad = "    "
    for lvl, h in enumerate(nest.loops):
        lines.append(pad * (indent + lvl) + render_header(h) + " {")
    body_indent = indent + nest.depth
    for s in nest.body:
        if s.kind == "loop" and s.subnest is not None:
            lines.append(unparse(s.subnest, body_indent))
        else:
            lines.append(pad * body_indent + render_tokens(s.tokens))
    for lvl in range(nest.depth - 1, -1, -1):
        lines.append(pad * (indent + lvl) + "}")
    return "\n".join(lines)


def unparse_program(nests: list[LoopNest]) -> str:
    return "\n".join(unparse(n) for n in nests)


# ---------------------------------------------------------------------------
# Dependence analysis

def dependence_vectors(nest: LoopNest) -> list:
    """Distance vectors (tuples over nest loops, outermost first) for every
    write/read and write/write pair on a common name. Entries may be the
    UNKNOWN sentinel when the analysis cannot resolve a pair; callers must
    treat UNKNOWN conservatively."""
    ind_vars = nest.induction_vars()
    refs = [r for s in nest.body for r in (*s.reads, *s.writes)]
    writes = [r for r in refs if r.is_write]
    vectors = []
    for w in writes:
        for r in refs:
            if r.name != w.name or r is w:
                continue
            vec = _pair_distance(w, r, ind_vars)
            if vec is None:
                continue  # provably no dependence
            vectors.append(vec)
        # A write paired with itself across iterations: distance 0, no-op.
    return vectors


def _pair_distance(w: Ref, r: Ref, ind_vars: list[str]):
    if w.is_scalar or r.is_scalar:
        return UNKNOWN
    if w.subs is None or r.subs is None or len(w.subs) != len(r.subs):
        return UNKNOWN
    dist: dict[str, int] = {}
    ind_set = set(ind_vars)
    for sw, sr in zip(w.subs, r.subs):
        if sw is None or sr is None:
            return UNKNOWN
        mw, mr = sw.coeff_map(), sr.coeff_map()
        # Symbolic (non-induction) terms must match exactly.
        for name in set(mw) | set(mr):
            if name not in ind_set and mw.get(name, 0) != mr.get(name, 0):
                return UNKNOWN
        vars_w = {n for n in mw if n in ind_set}
        vars_r = {n for n in mr if n in ind_set}
        if vars_w != vars_r or any(mw[n] != mr[n] for n in vars_w):
            return UNKNOWN
        diff = sr.const - sw.const
        if not vars_w:
            if diff != 0:
                return None  # distinct constant locations: no dependence
            continue
        if len(vars_w) > 1:
            return UNKNOWN  # coupled subscript, underdetermined
        (var,) = vars_w
        coeff = mw[var]
        if diff % coeff != 0:
            return None
        d = diff // coeff
        if var in dist and dist[var] != d:
            return None  # inconsistent equations: no dependence
        dist[var] = d
    # Induction vars absent from every matching subscript leave the distance
    # unconstrained in that dimension: record STAR, never 0.
    vec = tuple(dist[v] if v in dist else STAR for v in ind_vars)
    # Normalize to a lexicographically non-negative direction when the sign
    # of the leading constrained entry is determined.
    for entry in vec:
        if entry is STAR or entry > 0:
            break
        if entry < 0:
            vec = tuple(e if e is STAR else -e for e in vec)
            break
    return vec


def _lex_nonneg(vec: tuple) -> bool:
    """False for any STAR entry reached before a positive one: the
    unconstrained dimension admits a negative completion."""
    for e in vec:
        if e is STAR:
            return False
        if e > 0:
            return True
        if e < 0:
            return False
    return True


def distribution_groups(nest: LoopNest) -> list[list[int]]:
    """Maximal groups of body-statement indices with no cross-group
    dependences, preserving original statement order within groups."""
    n = len(nest.body)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for i in range(n):
        for j in range(i + 1, n):
            if _statements_dependent(nest.body[i], nest.body[j]):
                union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups, key=lambda r: groups[r][0])]


def _statements_dependent(a: Statement, b: Statement) -> bool:
    def names(refs, write_only=False):
        return {r.name for r in refs if r.is_write or not write_only}

    a_writes = {r.name for r in a.writes}
    b_writes = {r.name for r in b.writes}
    a_all = {r.name for r in a.reads} | a_writes
    b_all = {r.name for r in b.reads} | b_writes
    return bool((a_writes & b_all) | (b_writes & a_all))


# ---------------------------------------------------------------------------
# Legality

MAX_INTERCHANGE_DEPTH = 4


def _rectangular(nest: LoopNest) -> bool:
    """True when no loop bound references another loop's induction var."""
    ind = set(nest.induction_vars())
    for h in nest.loops:
        for a in (h.lower, h.upper):
            if a is None or a.names() & ind:
                return False
    return True


def permutation_by_number(depth: int, perm: int) -> tuple[int, ...]:
    """perm-th permutation of loop levels (1..depth) in lexicographic order,
    numbered from 1 = identity. Returns a 0-based level tuple."""
    perms = list(itertools.permutations(range(depth)))
    if not 1 <= perm <= len(perms):
        raise ValueError(f"permutation number {perm} out of range for depth {depth}")
    return perms[perm - 1]


def legality(nest: LoopNest, step) -> bool:
    """Conservative legality of a single transformation step against the
    current nest state. True answers are sound for the supported subset;
    False may be over-conservative."""
    kind = step.kind
    if kind == "unrolling":
        # Pure body replication in original iteration order (with epilogue
        # when needed): always semantics-preserving for counted loops. The
        # epilogue reuses the induction variable after the main loop, which
        # needs the variable to outlive the loop header.
        if nest.depth < 1:
            return False
        h = nest.loops[-1]
        trip = h.trip_count()
        divisible = trip is not None and trip > 0 and trip % step.factor == 0
        return divisible or h.declare is None
    if kind == "tiling":
        if nest.depth < 2:
            return False
        if not 1 <= step.level <= min(nest.depth, 4):
            return False
        return nest.loops[step.level - 1].step == 1
    if kind == "interchange":
        if not nest.perfectly_nested or nest.depth < 2 \
                or nest.depth > MAX_INTERCHANGE_DEPTH or not _rectangular(nest):
            return False
        try:
            perm = permutation_by_number(nest.depth, step.perm)
        except ValueError:
            return False
        if perm == tuple(range(nest.depth)):
            return False  # identity is a no-op, never offered
        vecs = dependence_vectors(nest)
        if any(v is UNKNOWN for v in vecs):
            return False
        return all(_lex_nonneg(tuple(v[p] for p in perm)) for v in vecs)
    if kind == "unroll_and_jam":
        if not nest.perfectly_nested or not _rectangular(nest):
            return False
        if not 1 <= step.level <= nest.depth - 1:
            return False
        header = nest.loops[step.level - 1]
        tc = header.trip_count()
        if tc is None or tc == 0 or tc % step.factor != 0:
            return False
        vecs = dependence_vectors(nest)
        if any(v is UNKNOWN for v in vecs):
            return False
        # No dependence carried by the jammed loop.
        return all(v[step.level - 1] == 0 for v in vecs)
    if kind == "distribution":
        if not nest.perfectly_nested or len(nest.body) < 2:
            return False
        return len(distribution_groups(nest)) >= 2
    raise ValueError(f"unknown transformation kind {kind!r}")


def parse_source(source: str, loop_id: str = "<memory>") -> LoopNest:
    """Convenience: lex and parse a loop-region source string."""
    return parse_nest(tokenize(source, loop_id))
