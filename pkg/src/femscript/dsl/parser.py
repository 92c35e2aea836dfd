"""Recursive-descent parser.

Macros are textual: the token stream expands them on the fly (substituting
argument token lists for parameter names), so everything downstream of a
`macro` definition parses as if the user had written the substituted text.
Statements end with `;`, tolerated as missing directly before a `}`.
"""

from collections import deque

from ..errors import FemError
from . import astnodes as A
from .lexer import Token, tokenize


class ParseError(FemError):
    def __init__(self, message, tok=None):
        if tok is not None:
            message = f"parse error at {tok.line}:{tok.col}: {message}"
        super().__init__(message)
        self.token = tok


TYPE_BASES = {"int", "real", "complex", "string", "bool", "mesh", "matrix",
              "ofstream", "ifstream"}

ASSIGN_OPS = {"=", "+=", "-=", "*=", "/="}


class TokenStream:
    def __init__(self, tokens, macros):
        self.buf = deque(tokens)
        self.macros = macros
        self.expand = True

    def _front(self, skip_comments=True):
        while True:
            if not self.buf:
                raise ParseError("unexpected end of input")
            tok = self.buf[0]
            if skip_comments and tok.kind == "comment":
                self.buf.popleft()
                continue
            if self.expand and tok.kind == "id" and tok.text in self.macros:
                self._expand()
                continue
            return tok

    def peek(self, skip_comments=True):
        return self._front(skip_comments)

    def peek2(self):
        """Raw second lookahead (comments skipped, no expansion)."""
        self._front()
        for tok in list(self.buf)[1:]:
            if tok.kind != "comment":
                return tok
        return Token("eof", "")

    def next(self, skip_comments=True):
        tok = self._front(skip_comments)
        self.buf.popleft()
        return tok

    def push(self, tokens):
        self.buf.extendleft(reversed(list(tokens)))

    def _expand(self):
        name_tok = self.buf.popleft()
        macro = self.macros[name_tok.text]
        args = []
        if macro.params:
            tok = self._raw_next()
            if not (tok.kind == "punct" and tok.text == "("):
                raise ParseError(f"macro {macro.name} expects arguments", tok)
            depth = 1
            current = []
            while True:
                tok = self._raw_next()
                if tok.kind == "eof":
                    raise ParseError("unterminated macro argument list", tok)
                if tok.kind == "punct" and tok.text in "([{":
                    depth += 1
                elif tok.kind == "punct" and tok.text in ")]}":
                    depth -= 1
                    if depth == 0:
                        args.append(current)
                        break
                if tok.kind == "punct" and tok.text == "," and depth == 1:
                    args.append(current)
                    current = []
                    continue
                current.append(tok)
            if len(args) != len(macro.params):
                raise ParseError(
                    f"macro {macro.name} takes {len(macro.params)} arguments, "
                    f"got {len(args)}", name_tok)
        elif macro.params is not None:
            # defined with empty parentheses; tolerate an empty call
            nxt = self.buf[0] if self.buf else None
            if nxt is not None and nxt.kind == "punct" and nxt.text == "(":
                self._raw_next()
                closing = self._raw_next()
                if not (closing.kind == "punct" and closing.text == ")"):
                    raise ParseError("macro call takes no arguments", closing)
        self.push(expand_macro(macro, args))

    def _raw_next(self):
        while self.buf and self.buf[0].kind == "comment":
            self.buf.popleft()
        if not self.buf:
            raise ParseError("unexpected end of input")
        return self.buf.popleft()


def expand_macro(macro, args):
    """Pure textual substitution of parameter tokens by argument tokens."""
    if macro.params and len(args) != len(macro.params):
        raise ParseError(f"macro {macro.name} takes {len(macro.params)} arguments")
    table = dict(zip(macro.params or (), args))
    out = []
    for tok in macro.body:
        if tok.kind == "id" and tok.text in table:
            out.extend(table[tok.text])
        else:
            out.append(tok)
    return out


class Parser:
    def __init__(self, source):
        self.macros = {}
        self.ts = TokenStream(tokenize(source, keep_comments=True), self.macros)
        self.fespaces = set()

    # -- helpers -----------------------------------------------------------

    def peek(self):
        return self.ts.peek()

    def next(self):
        return self.ts.next()

    def expect(self, kind, text=None):
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text!r}", tok)
        return tok

    def expect_op(self, text):
        return self.expect("op", text)

    def expect_punct(self, text):
        return self.expect("punct", text)

    def at(self, kind, text=None):
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind, text=None):
        if self.at(kind, text):
            return self.next()
        return None

    def expect_ident(self):
        tok = self.next()
        if tok.kind != "id":
            raise ParseError(f"expected identifier, found {tok.text!r}", tok)
        return tok

    def end_statement(self):
        if self.accept("punct", ";"):
            return
        tok = self.peek()
        if tok.kind == "eof" or (tok.kind == "punct" and tok.text == "}"):
            return
        raise ParseError(f"expected ';', found {tok.text!r}", tok)

    # -- entry ----------------------------------------------------------------

    def parse_program(self):
        body = []
        while not self.at("eof"):
            stmt = self.statement()
            if isinstance(stmt, list):
                body.extend(stmt)
            elif stmt is not None:
                body.append(stmt)
        return A.Program(tuple(body))

    # -- statements -------------------------------------------------------------

    def statement(self):
        tok = self.peek()
        if tok.kind == "punct" and tok.text == ";":
            self.next()
            return None
        if tok.kind == "punct" and tok.text == "{":
            return self.block()
        if tok.kind == "kw":
            kw = tok.text
            if kw in TYPE_BASES:
                return self.declaration()
            if kw == "fespace":
                return self.fespace_decl()
            if kw == "macro":
                return self.macro_def()
            if kw == "border":
                return self.border_def()
            if kw == "func":
                return self.func_def()
            if kw == "varf":
                return self.varf_def()
            if kw in ("solve", "problem"):
                return self.problem_def()
            if kw == "if":
                return self.if_stmt()
            if kw == "for":
                return self.for_stmt()
            if kw == "while":
                return self.while_stmt()
            if kw == "break":
                line = self.next().line
                self.end_statement()
                return A.Break(line=line)
            if kw == "continue":
                line = self.next().line
                self.end_statement()
                return A.Continue(line=line)
            if kw == "return":
                line = self.next().line
                value = None
                if not self.at("punct", ";"):
                    value = self.expression()
                self.end_statement()
                return A.Return(value, line=line)
            if kw == "load":
                line = self.next().line
                mod = self.expect("str")
                self.end_statement()
                return A.LoadStmt(mod.value, line=line)
            raise ParseError(f"unexpected keyword {kw!r}", tok)
        if tok.kind == "id" and tok.text in self.fespaces:
            nxt = self.ts.peek2()
            if nxt.kind == "id" or (nxt.kind == "op" and nxt.text == "<"):
                return self.fe_decl()
        expr = self.expression()
        line = getattr(expr, "line", 0)
        self.end_statement()
        return A.ExprStmt(expr, line=line)

    def block(self):
        line = self.expect_punct("{").line
        body = []
        while not self.at("punct", "}"):
            if self.at("eof"):
                raise ParseError("unterminated block", self.peek())
            stmt = self.statement()
            if isinstance(stmt, list):
                body.extend(stmt)
            elif stmt is not None:
                body.append(stmt)
        self.next()
        return A.Block(tuple(body), line=line)

    def _type_suffix(self, base):
        dims = 0
        subtype = None
        if base in ("int", "real", "complex") and self.at("punct", "["):
            self.next()
            self.expect("kw", "int")
            if self.accept("punct", ","):
                self.expect("kw", "int")
                dims = 2
            else:
                dims = 1
            self.expect_punct("]")
        if self.at("op", "<"):
            self.next()
            sub = self.next()
            subtype = sub.text
            self.expect_op(">")
        return dims, subtype

    def declaration(self):
        tok = self.next()
        base = tok.text
        dims, subtype = self._type_suffix(base)
        decls = [self.declarator()]
        while self.accept("punct", ","):
            decls.append(self.declarator())
        self.end_statement()
        return A.Decl(base, dims, subtype, tuple(decls), line=tok.line)

    def declarator(self):
        name = self.expect_ident().text
        sizes = ()
        init = None
        if self.at("punct", "("):
            self.next()
            args = []
            if not self.at("punct", ")"):
                args.append(self.expression())
                while self.accept("punct", ","):
                    args.append(self.expression())
            self.expect_punct(")")
            sizes = tuple(args)
        elif self.accept("op", "="):
            init = self.expression()
        return A.Declarator(name, sizes, init)

    def fespace_decl(self):
        line = self.next().line
        name = self.expect_ident().text
        self.expect_punct("(")
        mesh = self.expression()
        self.expect_punct(",")
        elem = self.expression()
        named = []
        while self.accept("punct", ","):
            named.append(self.argument())
        self.expect_punct(")")
        self.end_statement()
        self.fespaces.add(name)
        return A.FespaceDecl(name, mesh, elem, tuple(named), line=line)

    def fe_decl(self):
        tok = self.next()
        space = tok.text
        subtype = None
        if self.at("op", "<"):
            self.next()
            subtype = self.next().text
            self.expect_op(">")
        decls = [self.declarator()]
        while self.accept("punct", ","):
            decls.append(self.declarator())
        self.end_statement()
        return A.FeDecl(space, subtype, tuple(decls), line=tok.line)

    def macro_def(self):
        line = self.next().line
        self.ts.expand = False
        try:
            name = self.expect_ident().text
            params = None
            # a leading parenthesized group is a parameter list only when it
            # holds nothing but comma-separated identifiers; anything else
            # (e.g. `macro Pi2 (2*pi)//`) already belongs to the body
            if self.at("punct", "(") and self._looks_like_params():
                self.next()
                ps = []
                if not self.at("punct", ")"):
                    ps.append(self.expect_ident().text)
                    while self.accept("punct", ","):
                        ps.append(self.expect_ident().text)
                self.expect_punct(")")
                params = tuple(ps)
            body = []
            while True:
                tok = self.ts.next(skip_comments=False)
                if tok.kind == "comment":
                    break
                if tok.kind == "eof":
                    raise ParseError("macro body must end with //", tok)
                body.append(tok)
        finally:
            self.ts.expand = True
        node = A.MacroDef(name, params, tuple(body), line=line)
        self.macros[name] = node
        return node

    def _looks_like_params(self):
        state = "open"
        for tok in self.ts.buf:
            if tok.kind == "comment":
                return False
            if state == "open":
                state = "want_id"           # the '(' itself
            elif state == "want_id":
                if tok.kind == "punct" and tok.text == ")":
                    return True             # empty parameter list
                if tok.kind != "id":
                    return False
                state = "sep"
            elif state == "sep":
                if tok.kind == "punct" and tok.text == ")":
                    return True
                if tok.kind == "punct" and tok.text == ",":
                    state = "want_id"
                else:
                    return False
        return False

    def border_def(self):
        line = self.next().line
        name = self.expect_ident().text
        self.expect_punct("(")
        param = self.expect_ident().text
        self.expect_op("=")
        t0 = self.expression()
        self.expect_punct(",")
        t1 = self.expression()
        self.expect_punct(")")
        block = self.block()
        self.accept("punct", ";")
        return A.BorderDef(name, param, t0, t1, block.body, line=line)

    def func_def(self):
        line = self.next().line
        tok = self.peek()
        if tok.kind == "kw" and tok.text in TYPE_BASES:
            ret = self.next().text
            name = self.expect_ident().text
            self.expect_punct("(")
            params = []
            if not self.at("punct", ")"):
                params.append(self._func_param())
                while self.accept("punct", ","):
                    params.append(self._func_param())
            self.expect_punct(")")
            body = self.block()
            self.accept("punct", ";")
            return A.FuncDef(name, ret, tuple(params), body, line=line)
        defs = []
        while True:
            name = self.expect_ident().text
            self.expect_op("=")
            body = self.expression()
            defs.append(A.FuncDef(name, None, None, body, line=line))
            if not self.accept("punct", ","):
                break
        self.end_statement()
        return defs[0] if len(defs) == 1 else defs

    def _func_param(self):
        base = self.next()
        if base.kind != "kw" or base.text not in TYPE_BASES:
            raise ParseError(f"expected parameter type, found {base.text!r}", base)
        dims, _ = self._type_suffix(base.text)
        name = self.expect_ident().text
        return (base.text, dims, name)

    def _form_header(self):
        name = self.expect_ident().text
        self.expect_punct("(")
        unknown = self.expect_ident().text
        self.expect_punct(",")
        test = self.expect_ident().text
        named = []
        while self.accept("punct", ","):
            named.append(self.argument())
        self.expect_punct(")")
        self.expect_op("=")
        body = self.expression()
        self.end_statement()
        return name, unknown, test, tuple(named), body

    def varf_def(self):
        line = self.next().line
        name, unknown, test, named, body = self._form_header()
        return A.VarfDef(name, unknown, test, named, body, line=line)

    def problem_def(self):
        tok = self.next()
        name, unknown, test, named, body = self._form_header()
        return A.ProblemDef(tok.text, name, unknown, test, named, body, line=tok.line)

    def body_statement(self):
        stmt = self.statement()
        if isinstance(stmt, list):
            return A.Block(tuple(stmt))
        return stmt

    def if_stmt(self):
        line = self.next().line
        self.expect_punct("(")
        cond = self.expression()
        self.expect_punct(")")
        then = self.body_statement()
        orelse = None
        if self.at("kw", "else"):
            self.next()
            orelse = self.body_statement()
        return A.If(cond, then, orelse, line=line)

    def for_stmt(self):
        line = self.next().line
        self.expect_punct("(")
        if self.at("punct", ";"):
            raise ParseError("for-loop clauses are required", self.peek())
        tok = self.peek()
        if tok.kind == "kw" and tok.text in TYPE_BASES:
            init = self.declaration_no_semi()
        elif tok.kind == "id" and tok.text in self.fespaces and self.ts.peek2().kind == "id":
            raise ParseError("declare FE functions outside for-loop heads", tok)
        else:
            init = A.ExprStmt(self.expression(), line=tok.line)
        self.expect_punct(";")
        if self.at("punct", ";"):
            raise ParseError("for-loop condition is required", self.peek())
        cond = self.expression()
        self.expect_punct(";")
        if self.at("punct", ")"):
            raise ParseError("for-loop change clause is required", self.peek())
        change = self.expression()
        self.expect_punct(")")
        body = self.body_statement()
        return A.For(init, cond, change, body, line=line)

    def declaration_no_semi(self):
        tok = self.next()
        base = tok.text
        dims, subtype = self._type_suffix(base)
        decls = [self.declarator()]
        while self.accept("punct", ","):
            decls.append(self.declarator())
        return A.Decl(base, dims, subtype, tuple(decls), line=tok.line)

    def while_stmt(self):
        line = self.next().line
        self.expect_punct("(")
        cond = self.expression()
        self.expect_punct(")")
        body = self.body_statement()
        return A.While(cond, body, line=line)

    # -- expressions -----------------------------------------------------------

    def argument(self):
        tok = self.peek()
        if tok.kind == "id":
            nxt = self.ts.peek2()
            if nxt.kind == "op" and nxt.text == "=":
                self.next()
                self.next()
                return A.Arg(self.expression(), name=tok.text)
        return A.Arg(self.expression())

    def expression(self):
        return self.assignment()

    def assignment(self):
        left = self.range_expr()
        tok = self.peek()
        if tok.kind == "op" and tok.text in ASSIGN_OPS:
            self.next()
            value = self.assignment()
            return A.Assign(tok.text, left, value, line=tok.line)
        return left

    def range_expr(self):
        start = self.or_expr()
        if self.at("op", ":"):
            line = self.next().line
            second = self.or_expr()
            if self.at("op", ":"):
                self.next()
                stop = self.or_expr()
                return A.Range(start, second, stop, line=line)
            return A.Range(start, None, second, line=line)
        return start

    def _binary_left(self, ops, sub):
        left = sub()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in ops:
                self.next()
                left = A.Binary(tok.text, left, sub(), line=tok.line)
            else:
                return left

    def or_expr(self):
        return self._binary_left({"|", "||"}, self.and_expr)

    def and_expr(self):
        return self._binary_left({"&", "&&"}, self.eq_expr)

    def eq_expr(self):
        return self._binary_left({"==", "!="}, self.rel_expr)

    def rel_expr(self):
        return self._binary_left({"<", ">", "<=", ">="}, self.shift_expr)

    def shift_expr(self):
        return self._binary_left({"<<", ">>"}, self.add_expr)

    def add_expr(self):
        return self._binary_left({"+", "-"}, self.mul_expr)

    def mul_expr(self):
        return self._binary_left({"*", "/", ".*", "./", "%"}, self.unary)

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("-", "+", "!"):
            self.next()
            return A.Unary(tok.text, self.unary(), line=tok.line)
        if tok.kind == "op" and tok.text in ("++", "--"):
            self.next()
            return A.IncDec(tok.text, self.unary(), prefix=True, line=tok.line)
        return self.power()

    def power(self):
        base = self.postfix()
        if self.at("op", "^"):
            line = self.next().line
            return A.Binary("^", base, self.unary(), line=line)
        return base

    def postfix(self):
        node = self.primary()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text == "(":
                self.next()
                args = []
                if not self.at("punct", ")"):
                    args.append(self.argument())
                    while self.accept("punct", ","):
                        args.append(self.argument())
                self.expect_punct(")")
                node = A.Call(node, tuple(args), line=tok.line)
            elif tok.kind == "punct" and tok.text == "[":
                self.next()
                args = []
                if not self.at("punct", "]"):
                    args.append(self.expression())
                    while self.accept("punct", ","):
                        args.append(self.expression())
                self.expect_punct("]")
                node = A.Index(node, tuple(args), line=tok.line)
            elif tok.kind == "punct" and tok.text == ".":
                self.next()
                name = self.expect_ident().text
                node = A.Member(node, name, line=tok.line)
            elif tok.kind == "op" and tok.text == "'":
                self.next()
                node = A.Transpose(node, line=tok.line)
            elif tok.kind == "op" and tok.text in ("++", "--"):
                self.next()
                node = A.IncDec(tok.text, node, prefix=False, line=tok.line)
            else:
                return node

    def primary(self):
        if self.peek().kind == "kw" and self.peek().text in ("real", "int", "complex") \
                and self.ts.peek2().text == "(":
            tok = self.next()  # conversion / part extraction call
            return A.Ident(tok.text, line=tok.line)
        tok = self.next()
        if tok.kind == "int" or tok.kind == "real":
            return A.Num(tok.value, line=tok.line)
        if tok.kind == "imag":
            return A.Imag(tok.value, line=tok.line)
        if tok.kind == "str":
            return A.Str(tok.value, line=tok.line)
        if tok.kind == "id":
            return A.Ident(tok.text, line=tok.line)
        if tok.kind == "punct" and tok.text == "(":
            expr = self.expression()
            self.expect_punct(")")
            return expr
        if tok.kind == "punct" and tok.text == "[":
            items = []
            if not self.at("punct", "]"):
                items.append(self.expression())
                while self.accept("punct", ","):
                    items.append(self.expression())
            self.expect_punct("]")
            return A.ListExpr(tuple(items), line=tok.line)
        raise ParseError(f"unexpected token {tok.text!r}", tok)


def parse(source) -> A.Program:
    """Parse source text (or a token list) into a Program."""
    if isinstance(source, str):
        return Parser(source).parse_program()
    p = Parser("")
    p.ts = TokenStream(list(source) + [Token("eof", "")], p.macros)
    return p.parse_program()
