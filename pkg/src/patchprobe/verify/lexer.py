"""Character-driven finite state machine lexer for C and decompiler pseudocode.

Every character of a line is fed to ``_Lexer.feed`` which transitions between
a small set of states.  The lexer is total: characters it does not know become
single-character punctuation tokens.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field


class TokenKind(str, enum.Enum):
    IDENTIFIER = "identifier"
    INTEGER = "integer-literal"
    FLOAT = "float-literal"
    STRING = "string-literal"
    CHAR = "char-literal"
    OPERATOR = "operator"
    PUNCTUATION = "punctuation"
    KEYWORD = "keyword"
    COMMENT = "comment"


KEYWORDS = frozenset("""
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool bool
""".split())

TYPE_KEYWORDS = frozenset("""
    char const double enum float int long short signed struct union unsigned
    void volatile static extern register auto inline restrict _Bool bool
""".split())

OPERATORS = frozenset("""
    <<= >>= ... -> ++ -- << >> <= >= == != && || += -= *= /= %= &= |= ^= :: ##
    + - * / % = < > ! ~ & | ^ ? : .
""".split())
_OP_PREFIXES = frozenset(op[:i] for op in OPERATORS for i in range(1, len(op) + 1))

PUNCTUATION = frozenset("()[]{};,#")

_INT_RE = re.compile(
    r"^(?P<body>0[xX][0-9a-fA-F]+|0[bB][01]+|[0-9]+)"
    r"(?P<suffix>(?:[uU]?i(?:8|16|32|64|128))|[uUlL]*)$"
)


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    column: int = field(default=0, compare=False)

    @property
    def value(self) -> int | None:
        """Canonical numeric value of an integer or char literal."""
        if self.kind is TokenKind.INTEGER:
            return integer_value(self.lexeme)
        if self.kind is TokenKind.CHAR:
            return char_value(self.lexeme)
        return None

    def __repr__(self):
        return f"Token({self.kind.value}, {self.lexeme!r})"


def integer_value(lexeme: str) -> int | None:
    m = _INT_RE.match(lexeme)
    if not m:
        return None
    body = m.group("body")
    if body[:2] in ("0x", "0X"):
        return int(body[2:], 16)
    if body[:2] in ("0b", "0B"):
        return int(body[2:], 2)
    if len(body) > 1 and body[0] == "0" and all(c in "01234567" for c in body):
        return int(body, 8)
    return int(body, 10)


_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "a": 7, "b": 8, "f": 12, "v": 11,
            "\\": 92, "'": 39, '"': 34, "?": 63}


def char_value(lexeme: str) -> int | None:
    body = lexeme[lexeme.find("'") + 1:-1]
    if not body:
        return None
    if body[0] != "\\":
        return ord(body[0])
    if len(body) >= 2 and body[1] in "xX":
        try:
            return int(body[2:], 16)
        except ValueError:
            return None
    if body[1:].isdigit():
        return int(body[1:], 8)
    return _ESCAPES.get(body[1:2])


# FSM states
_START, _IDENT, _NUMBER, _STRING, _STRING_ESC, _CHAR, _CHAR_ESC, _OPER, \
    _SLASH, _LINE_COMMENT, _BLOCK_COMMENT, _BLOCK_STAR = range(12)


class _Lexer:
    def __init__(self, in_block_comment=False):
        self.tokens: list[Token] = []
        self.buf = ""
        self.start = 0
        self.state = _BLOCK_COMMENT if in_block_comment else _START
        if in_block_comment:
            self.buf = ""

    def emit(self, kind, col=None):
        lexeme = self.buf
        if kind is TokenKind.IDENTIFIER and lexeme in KEYWORDS:
            kind = TokenKind.KEYWORD
        if kind is TokenKind.INTEGER and _looks_float(lexeme):
            kind = TokenKind.FLOAT
        self.tokens.append(Token(kind, lexeme, self.start if col is None else col))
        self.buf = ""
        self.state = _START

    def begin(self, state, ch, col):
        self.state = state
        self.buf = ch
        self.start = col

    def feed(self, ch: str, col: int, nxt: str):
        st = self.state
        if st == _IDENT:
            if ch.isalnum() or ch == "_":
                self.buf += ch
                return
            if ch in "'\"" and self.buf in ("L", "u", "U", "u8"):
                # encoding prefix of a string or char literal
                self.state = _STRING if ch == '"' else _CHAR
                self.buf += ch
                return
            self.emit(TokenKind.IDENTIFIER)
        elif st == _NUMBER:
            if ch.isalnum() or ch in "_.":
                self.buf += ch
                return
            if ch in "+-" and self.buf[-1] in "eEpP" and not self.buf.startswith(("0x", "0X")) or \
                    ch in "+-" and self.buf[-1] in "pP":
                self.buf += ch
                return
            self.emit(TokenKind.INTEGER)
        elif st == _STRING:
            self.buf += ch
            if ch == "\\":
                self.state = _STRING_ESC
            elif ch == '"':
                self.emit(TokenKind.STRING)
            return
        elif st == _STRING_ESC:
            self.buf += ch
            self.state = _STRING
            return
        elif st == _CHAR:
            self.buf += ch
            if ch == "\\":
                self.state = _CHAR_ESC
            elif ch == "'":
                self.emit(TokenKind.CHAR)
            return
        elif st == _CHAR_ESC:
            self.buf += ch
            self.state = _CHAR
            return
        elif st == _SLASH:
            if ch == "/":
                self.buf += ch
                self.state = _LINE_COMMENT
                return
            if ch == "*":
                self.buf += ch
                self.state = _BLOCK_COMMENT
                return
            self.state = _OPER
            # fall through into operator handling below with "/" buffered
            return self.feed(ch, col, nxt)
        elif st == _LINE_COMMENT:
            self.buf += ch
            return
        elif st == _BLOCK_COMMENT:
            self.buf += ch
            if ch == "*":
                self.state = _BLOCK_STAR
            return
        elif st == _BLOCK_STAR:
            self.buf += ch
            if ch == "/":
                self.emit(TokenKind.COMMENT)
            elif ch != "*":
                self.state = _BLOCK_COMMENT
            return
        elif st == _OPER:
            if self.buf + ch in _OP_PREFIXES:
                self.buf += ch
                return
            self._flush_operator()
        # START state
        self._start(ch, col, nxt)

    def _flush_operator(self):
        # longest operator prefix wins; leftovers (e.g. "..") are re-split
        buf, start = self.buf, self.start
        while buf:
            for n in range(len(buf), 0, -1):
                if buf[:n] in OPERATORS:
                    self.tokens.append(Token(TokenKind.OPERATOR, buf[:n], start))
                    buf, start = buf[n:], start + n
                    break
            else:
                self.tokens.append(Token(TokenKind.PUNCTUATION, buf[0], start))
                buf, start = buf[1:], start + 1
        self.buf = ""
        self.state = _START

    def _start(self, ch, col, nxt):
        if ch.isspace():
            return
        if ch.isalpha() or ch == "_":
            self.begin(_IDENT, ch, col)
        elif ch.isdigit() or (ch == "." and nxt.isdigit()):
            self.begin(_NUMBER, ch, col)
        elif ch == '"':
            self.begin(_STRING, ch, col)
        elif ch == "'":
            self.begin(_CHAR, ch, col)
        elif ch == "/":
            self.begin(_SLASH, ch, col)
        elif ch in _OP_PREFIXES:
            self.begin(_OPER, ch, col)
        elif ch in PUNCTUATION:
            self.tokens.append(Token(TokenKind.PUNCTUATION, ch, col))
        else:
            self.tokens.append(Token(TokenKind.PUNCTUATION, ch, col))

    def finish(self) -> bool:
        """Flush pending state at end of line; returns True inside a block comment."""
        st = self.state
        if st == _IDENT:
            self.emit(TokenKind.IDENTIFIER)
        elif st == _NUMBER:
            self.emit(TokenKind.INTEGER)
        elif st in (_STRING, _STRING_ESC):
            self.emit(TokenKind.STRING)
        elif st in (_CHAR, _CHAR_ESC):
            self.emit(TokenKind.CHAR)
        elif st in (_OPER, _SLASH):
            self._flush_operator()
        elif st == _LINE_COMMENT:
            self.emit(TokenKind.COMMENT)
        elif st in (_BLOCK_COMMENT, _BLOCK_STAR):
            if self.buf:
                self.tokens.append(Token(TokenKind.COMMENT, self.buf, self.start))
            self.buf = ""
            return True
        return False


def _looks_float(lexeme: str) -> bool:
    if _INT_RE.match(lexeme):
        return False
    if lexeme[:2] in ("0x", "0X"):
        return "." in lexeme or "p" in lexeme or "P" in lexeme
    return True


def lex_line_state(text: str, in_block_comment: bool = False) -> tuple[list[Token], bool]:
    """Lex one line, threading block-comment state across lines."""
    lx = _Lexer(in_block_comment)
    n = len(text)
    for i, ch in enumerate(text):
        lx.feed(ch, i, text[i + 1] if i + 1 < n else "")
    still_open = lx.finish()
    return lx.tokens, still_open


def lex_line(text: str) -> list[Token]:
    return lex_line_state(text)[0]


def lex_lines(lines) -> list[list[Token]]:
    out = []
    in_comment = False
    for line in lines:
        toks, in_comment = lex_line_state(line, in_comment)
        out.append(toks)
    return out


def render(tokens) -> str:
    return " ".join(t.lexeme for t in tokens)


def code_tokens(tokens):
    return [t for t in tokens if t.kind is not TokenKind.COMMENT]


def count_tokens(lines) -> int:
    """Token count used for prompt budgeting; comments count too."""
    return sum(len(t) for t in lex_lines(lines))
