"""Tokenizer for the scripting language.

`//` line comments normally vanish, but macro bodies are terminated by one,
so the scanner can keep them as tokens (kind "comment") for the parser; the
public `tokenize` strips them by default.  A numeric literal immediately
followed by `i` is an imaginary literal.  Maximal munch on numbers makes
`1./2` the real 0.5 while `u./v` stays an elementwise division.
"""

from dataclasses import dataclass, field

from ..errors import FemError


class LexError(FemError):
    def __init__(self, message, line, col):
        super().__init__(f"lex error at {line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str          # kw id int real imag str op punct comment eof
    text: str
    value: object = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def __repr__(self):
        return f"{self.kind}:{self.text}"


KEYWORDS = {
    "int", "real", "complex", "string", "bool", "mesh", "fespace", "matrix",
    "varf", "problem", "solve", "border", "func", "macro",
    "if", "else", "for", "while", "break", "continue", "return",
    "load", "ofstream", "ifstream",
}

# longest first
OPERATORS = [
    "<<", ">>", "<=", ">=", "==", "!=", "+=", "-=", "*=", "/=", "++", "--",
    "&&", "||", ".*", "./",
    "'", "^", "+", "-", "*", "/", "<", ">", "=", "&", "|", "!", ":", "%",
]
PUNCT = "()[]{},;."

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", '"': '"', "0": "\0"}


def _is_id_start(c):
    return c.isalpha() or c == "_"


def _is_id(c):
    return c.isalnum() or c == "_"


class _Scanner:
    def __init__(self, src):
        self.src = src
        self.pos = 0
        self.line = 1
        self.col = 1

    def peek(self, k=0):
        p = self.pos + k
        return self.src[p] if p < len(self.src) else ""

    def advance(self):
        c = self.src[self.pos]
        self.pos += 1
        if c == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return c

    def error(self, msg):
        raise LexError(msg, self.line, self.col)


def tokenize(source, keep_comments=False):
    """Token list for the source text; comments stripped unless kept."""
    s = _Scanner(source)
    out = []
    while True:
        while s.peek() and s.peek() in " \t\r\n":
            s.advance()
        if not s.peek():
            break
        line, col = s.line, s.col
        c = s.peek()

        if c == "/" and s.peek(1) == "/":
            s.advance()
            s.advance()
            text = []
            while s.peek() and s.peek() != "\n":
                text.append(s.advance())
            if keep_comments:
                out.append(Token("comment", "".join(text), line=line, col=col))
            continue
        if c == "/" and s.peek(1) == "*":
            s.advance()
            s.advance()
            while True:
                if not s.peek():
                    raise LexError("unterminated block comment", line, col)
                if s.peek() == "*" and s.peek(1) == "/":
                    s.advance()
                    s.advance()
                    break
                s.advance()
            continue

        if c == '"':
            s.advance()
            buf = []
            while True:
                if not s.peek():
                    raise LexError("unterminated string", line, col)
                ch = s.advance()
                if ch == '"':
                    break
                if ch == "\\":
                    esc = s.advance() if s.peek() else ""
                    buf.append(_ESCAPES.get(esc, esc))
                else:
                    buf.append(ch)
            text = "".join(buf)
            out.append(Token("str", text, value=text, line=line, col=col))
            continue

        if c.isdigit() or (c == "." and s.peek(1).isdigit()):
            out.append(_number(s, line, col))
            continue

        if _is_id_start(c):
            buf = []
            while s.peek() and _is_id(s.peek()):
                buf.append(s.advance())
            name = "".join(buf)
            kind = "kw" if name in KEYWORDS else "id"
            out.append(Token(kind, name, line=line, col=col))
            continue

        matched = None
        for op in OPERATORS:
            if source.startswith(op, s.pos):
                matched = op
                break
        if matched:
            for _ in matched:
                s.advance()
            out.append(Token("op", matched, line=line, col=col))
            continue
        if c in PUNCT:
            s.advance()
            out.append(Token("punct", c, line=line, col=col))
            continue
        s.error(f"unexpected character {c!r}")
    out.append(Token("eof", "", line=s.line, col=s.col))
    return out


def _number(s, line, col):
    buf = []
    is_real = False
    while s.peek().isdigit():
        buf.append(s.advance())
    if s.peek() == ".":
        # a dot after digits always joins the number: 1./2 is real division
        is_real = True
        buf.append(s.advance())
        while s.peek().isdigit():
            buf.append(s.advance())
    if s.peek() in ("e", "E") and (s.peek(1).isdigit()
                                   or (s.peek(1) in "+-" and s.peek(2).isdigit())):
        is_real = True
        buf.append(s.advance())
        if s.peek() in "+-":
            buf.append(s.advance())
        while s.peek().isdigit():
            buf.append(s.advance())
    text = "".join(buf)
    if s.peek() == "i" and not _is_id(s.peek(1)):
        s.advance()
        return Token("imag", text, value=float(text), line=line, col=col)
    if is_real:
        return Token("real", text, value=float(text), line=line, col=col)
    return Token("int", text, value=int(text), line=line, col=col)
