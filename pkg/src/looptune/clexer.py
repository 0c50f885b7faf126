"""Hand-written C lexer producing (kind, text) token pairs.

The lexer covers the lexical subset needed for standalone loop kernels:
identifiers, keywords, integer/float/char/string literals, operators, and
punctuation. Comments and whitespace are skipped. Preprocessor directives
are not lexed; callers are expected to pass only the marked loop region
(see :func:`extract_loop_region`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class TokenKind(str, Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    INT_LITERAL = "int-literal"
    FLOAT_LITERAL = "float-literal"
    CHAR_LITERAL = "char-literal"
    STRING_LITERAL = "string-literal"
    OPERATOR = "operator"
    PUNCTUATION = "punctuation"


class LexError(Exception):
    """Raised when the input contains no valid C lexeme at ``offset``."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("token text must be non-empty")

    def __repr__(self):
        return f"({self.kind.value},{self.text!r})"


@dataclass
class TokenSeq:
    loop_id: str
    tokens: list[Token] = field(default_factory=list)

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def pretty(self) -> str:
        """Single-space-joined token spelling; re-lexing it reproduces self."""
        return " ".join(t.text for t in self.tokens)


@dataclass(frozen=True)
class Rejection:
    """Outcome of :func:`admit` for an over-long sequence."""

    loop_id: str
    length: int
    max_len: int


C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Imaginary""".split()
)

# Longest match first.
OPERATORS = [
    "<<=", ">>=", "...",
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=",
    "+", "-", "*", "/", "%", "<", ">", "=", "&", "|", "^", "!", "~", "?", ":",
    ".",
]

PUNCTUATION = ["(", ")", "{", "}", "[", "]", ";", ","]

_WS_RE = re.compile(r"\s+")
_LINE_COMMENT_RE = re.compile(r"//[^\n]*")
_BLOCK_COMMENT_RE = re.compile(r"/\*.*?\*/", re.DOTALL)
_IDENT_RE = re.compile(r"[A-Za-z_]\w*")
_FLOAT_RE = re.compile(
    r"(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?[fFlL]?|\d+[eE][+-]?\d+[fFlL]?"
)
_INT_RE = re.compile(r"(?:0[xX][0-9a-fA-F]+|\d+)(?:[uU][lL]{0,2}|[lL]{1,2}[uU]?)?")
_CHAR_RE = re.compile(r"'(?:\\.|[^\\'])+'")
_STRING_RE = re.compile(r'"(?:\\.|[^\\"])*"')

INT_SUFFIX_RE = re.compile(r"(?:[uU][lL]{0,2}|[lL]{1,2}[uU]?)$")


def int_literal_value(text: str) -> int:
    """Numeric value of an int-literal spelling (handles hex/octal/suffixes)."""
    body = INT_SUFFIX_RE.sub("", text)
    if body.startswith(("0x", "0X")):
        return int(body, 16)
    if len(body) > 1 and body.startswith("0"):
        return int(body, 8)
    return int(body, 10)


def tokenize(source: str, loop_id: str = "<memory>") -> TokenSeq:
    """Lex C source into a TokenSeq, discarding comments and whitespace."""
    tokens: list[Token] = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _WS_RE.match(source, pos)
        if m:
            pos = m.end()
            continue
        if source.startswith("//", pos):
            pos = _LINE_COMMENT_RE.match(source, pos).end()
            continue
        if source.startswith("/*", pos):
            m = _BLOCK_COMMENT_RE.match(source, pos)
            if not m:
                raise LexError(pos, "unterminated block comment")
            pos = m.end()
            continue
        m = _IDENT_RE.match(source, pos)
        if m:
            text = m.group()
            kind = TokenKind.KEYWORD if text in C_KEYWORDS else TokenKind.IDENTIFIER
            tokens.append(Token(kind, text))
            pos = m.end()
            continue
        m = _FLOAT_RE.match(source, pos)
        if m:
            tokens.append(Token(TokenKind.FLOAT_LITERAL, m.group()))
            pos = m.end()
            continue
        m = _INT_RE.match(source, pos)
        if m:
            tokens.append(Token(TokenKind.INT_LITERAL, m.group()))
            pos = m.end()
            continue
        m = _CHAR_RE.match(source, pos)
        if m:
            tokens.append(Token(TokenKind.CHAR_LITERAL, m.group()))
            pos = m.end()
            continue
        m = _STRING_RE.match(source, pos)
        if m:
            tokens.append(Token(TokenKind.STRING_LITERAL, m.group()))
            pos = m.end()
            continue
        for op in OPERATORS:
            if source.startswith(op, pos):
                tokens.append(Token(TokenKind.OPERATOR, op))
                pos += len(op)
                break
        else:
            if source[pos] in PUNCTUATION:
                tokens.append(Token(TokenKind.PUNCTUATION, source[pos]))
                pos += 1
            else:
                raise LexError(pos, f"not a valid C lexeme: {source[pos]!r}")
    return TokenSeq(loop_id, tokens)


def admit(seq: TokenSeq, max_len: int = 250) -> TokenSeq | Rejection:
    """Apply the sequence-length admission policy.

    Sequences of length <= max_len pass through unchanged; longer ones are
    rejected (a normal outcome, not an error). Padding happens later, at
    encoding time.
    """
    if len(seq) > max_len:
        return Rejection(seq.loop_id, len(seq), max_len)
    return seq


REGION_BEGIN = "#pragma looplearner begin"
REGION_END = "#pragma looplearner end"


class RegionError(Exception):
    pass


def extract_loop_region(file_text: str) -> str:
    """Return the loop region delimited by the corpus pragma markers."""
    lines = file_text.splitlines()
    begin = end = None
    for idx, line in enumerate(lines):
        if line.strip() == REGION_BEGIN:
            if begin is not None:
                raise RegionError("duplicate begin marker")
            begin = idx
        elif line.strip() == REGION_END:
            if end is not None:
                raise RegionError("duplicate end marker")
            end = idx
    if begin is None or end is None or end < begin:
        raise RegionError("missing or misordered loop region markers")
    return "\n".join(lines[begin + 1 : end])
