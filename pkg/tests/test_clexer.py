"""Lexer unit tests plus hypothesis round-trip properties."""

import pytest
from hypothesis import given, strategies as st

from looptune.clexer import (LexError, Rejection, RegionError, Token,
                             TokenKind, admit, extract_loop_region,
                             int_literal_value, tokenize)


def kinds(src):
    return [t.kind for t in tokenize(src)]


def texts(src):
    return [t.text for t in tokenize(src)]


def test_basic_statement_tokens():
    toks = tokenize("a[i] = b + 2;")
    assert [(t.kind.value, t.text) for t in toks] == [
        ("identifier", "a"), ("punctuation", "["), ("identifier", "i"),
        ("punctuation", "]"), ("operator", "="), ("identifier", "b"),
        ("operator", "+"), ("int-literal", "2"), ("punctuation", ";")]


def test_keywords_vs_identifiers():
    toks = tokenize("for (int i = 0; i < n; i++)")
    assert toks[0] == Token(TokenKind.KEYWORD, "for")
    assert toks[2] == Token(TokenKind.KEYWORD, "int")
    assert toks[3] == Token(TokenKind.IDENTIFIER, "i")
    # `fortune` is not split at the keyword prefix
    assert tokenize("fortune")[0].kind is TokenKind.IDENTIFIER


def test_longest_match_operators():
    assert texts("a <<= b >> c <= d < e") == \
        ["a", "<<=", "b", ">>", "c", "<=", "d", "<", "e"]
    assert texts("x+++y") == ["x", "++", "+", "y"]


def test_literals():
    assert kinds("42 0x1F 07 10UL") == [TokenKind.INT_LITERAL] * 4
    assert kinds("1.5 .5 2. 1e3 2.5e-2f") == [TokenKind.FLOAT_LITERAL] * 5
    assert kinds("'a' '\\n'") == [TokenKind.CHAR_LITERAL] * 2
    assert kinds('"hi" "a\\"b"') == [TokenKind.STRING_LITERAL] * 2


def test_int_literal_value():
    assert int_literal_value("42") == 42
    assert int_literal_value("0x1F") == 31
    assert int_literal_value("010") == 8
    assert int_literal_value("7UL") == 7
    assert int_literal_value("0") == 0


def test_comments_and_whitespace_skipped():
    src = "a /* multi\nline */ + // trailing\n b"
    assert texts(src) == ["a", "+", "b"]


def test_unterminated_block_comment():
    with pytest.raises(LexError) as exc:
        tokenize("a /* never closed")
    assert exc.value.offset == 2


def test_invalid_character_reports_offset():
    with pytest.raises(LexError) as exc:
        tokenize("ab @")
    assert exc.value.offset == 3


def test_admit_policy():
    seq = tokenize("a + b")
    assert admit(seq, max_len=5) is seq
    rej = admit(seq, max_len=2)
    assert isinstance(rej, Rejection)
    assert rej.length == 3 and rej.max_len == 2


def test_extract_loop_region():
    text = ("int main() {\n#pragma looplearner begin\nfor (;;) x;\n"
            "#pragma looplearner end\n}\n")
    assert extract_loop_region(text) == "for (;;) x;"
    with pytest.raises(RegionError):
        extract_loop_region("no markers")
    with pytest.raises(RegionError):
        extract_loop_region("#pragma looplearner end\n#pragma looplearner begin\n")


def test_pretty_round_trip():
    src = "for (i = 0; i < 64; i++) { B[i] = A[i] * 3; }"
    seq = tokenize(src)
    again = tokenize(seq.pretty())
    assert list(seq) == list(again)


_IDENT = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,6}", fullmatch=True)
_INT = st.integers(0, 10 ** 9).map(str)
_OP = st.sampled_from(["+", "-", "*", "/", "%", "<<", ">>", "<=", "==", "&&"])
_PUNCT = st.sampled_from(["(", ")", "[", "]", "{", "}", ";", ","])


@given(st.lists(st.one_of(_IDENT, _INT, _OP, _PUNCT), min_size=1, max_size=40))
def test_lex_unlex_fixpoint(parts):
    """Lexing a space-joined token soup and re-lexing its pretty() form is
    a fixpoint: same kinds and texts."""
    src = " ".join(parts)
    seq = tokenize(src)
    again = tokenize(seq.pretty())
    assert [(t.kind, t.text) for t in seq] == [(t.kind, t.text) for t in again]


@given(st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126),
               max_size=60))
def test_lexer_total_over_printable_ascii(src):
    """The lexer either returns tokens of known kinds or raises LexError
    with a valid offset; it never crashes differently."""
    try:
        seq = tokenize(src)
    except LexError as exc:
        assert 0 <= exc.offset <= len(src)
    else:
        assert all(isinstance(t.kind, TokenKind) and t.text for t in seq)
