"""Syntax tree of the scripting language plus a canonical printer.

Nodes compare structurally (positions excluded), and `to_source` emits text
that re-parses to an equal tree: expressions come out fully parenthesized,
macro bodies are re-emitted token by token.
"""

from dataclasses import dataclass, field
from typing import Optional

from .._fmt import fmt_real


def _pos_field():
    return field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Node:
    pass


# -- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Num(Node):
    value: object
    line: int = _pos_field()


@dataclass(frozen=True)
class Imag(Node):
    value: float
    line: int = _pos_field()


@dataclass(frozen=True)
class Str(Node):
    value: str
    line: int = _pos_field()


@dataclass(frozen=True)
class Ident(Node):
    name: str
    line: int = _pos_field()


@dataclass(frozen=True)
class Unary(Node):
    op: str
    operand: Node
    line: int = _pos_field()


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: Node
    right: Node
    line: int = _pos_field()


@dataclass(frozen=True)
class Assign(Node):
    op: str            # = += -= *= /=
    target: Node
    value: Node
    line: int = _pos_field()


@dataclass(frozen=True)
class IncDec(Node):
    op: str            # ++ --
    target: Node
    prefix: bool = False
    line: int = _pos_field()


@dataclass(frozen=True)
class Arg(Node):
    value: Node
    name: Optional[str] = None


@dataclass(frozen=True)
class Call(Node):
    callee: Node
    args: tuple
    line: int = _pos_field()


@dataclass(frozen=True)
class Index(Node):
    base: Node
    args: tuple        # () means the bare [] accessor
    line: int = _pos_field()


@dataclass(frozen=True)
class Member(Node):
    base: Node
    name: str
    line: int = _pos_field()


@dataclass(frozen=True)
class Transpose(Node):
    base: Node
    line: int = _pos_field()


@dataclass(frozen=True)
class ListExpr(Node):
    items: tuple
    line: int = _pos_field()


@dataclass(frozen=True)
class Range(Node):
    start: Node
    step: Optional[Node]
    stop: Node
    line: int = _pos_field()


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class Program(Node):
    body: tuple


@dataclass(frozen=True)
class Declarator(Node):
    name: str
    sizes: tuple = ()            # constructor arguments, e.g. V(n) or f("path")
    init: Optional[Node] = None


@dataclass(frozen=True)
class Decl(Node):
    base: str                    # int real complex string bool mesh matrix ofstream ifstream
    dims: int                    # 0 scalar, 1 array [int], 2 matrix [int,int]
    subtype: Optional[str]       # e.g. complex for matrix<complex>
    decls: tuple
    line: int = _pos_field()


@dataclass(frozen=True)
class FespaceDecl(Node):
    name: str
    mesh: Node
    elem: Node
    named: tuple = ()
    line: int = _pos_field()


@dataclass(frozen=True)
class FeDecl(Node):
    space: str
    subtype: Optional[str]
    decls: tuple
    line: int = _pos_field()


@dataclass(frozen=True)
class MacroDef(Node):
    name: str
    params: Optional[tuple]      # None when defined without parentheses
    body: tuple                  # raw tokens
    line: int = _pos_field()


@dataclass(frozen=True)
class BorderDef(Node):
    name: str
    param: str
    t0: Node
    t1: Node
    body: tuple                  # statements assigning x, y, label
    line: int = _pos_field()


@dataclass(frozen=True)
class FuncDef(Node):
    name: str
    ret_type: Optional[str]      # None for analytic `func f = expr;`
    params: Optional[tuple]      # ((base, dims, name), ...)
    body: Node                   # Block for formal functions, expression otherwise
    line: int = _pos_field()


@dataclass(frozen=True)
class VarfDef(Node):
    name: str
    unknown: str
    test: str
    named: tuple
    body: Node
    line: int = _pos_field()


@dataclass(frozen=True)
class ProblemDef(Node):
    kind: str                    # "problem" | "solve"
    name: str
    unknown: str
    test: str
    named: tuple
    body: Node
    line: int = _pos_field()


@dataclass(frozen=True)
class If(Node):
    cond: Node
    then: Node
    orelse: Optional[Node]
    line: int = _pos_field()


@dataclass(frozen=True)
class For(Node):
    init: Node
    cond: Node
    change: Node
    body: Node
    line: int = _pos_field()


@dataclass(frozen=True)
class While(Node):
    cond: Node
    body: Node
    line: int = _pos_field()


@dataclass(frozen=True)
class Break(Node):
    line: int = _pos_field()


@dataclass(frozen=True)
class Continue(Node):
    line: int = _pos_field()


@dataclass(frozen=True)
class Return(Node):
    value: Optional[Node]
    line: int = _pos_field()


@dataclass(frozen=True)
class Block(Node):
    body: tuple
    line: int = _pos_field()


@dataclass(frozen=True)
class ExprStmt(Node):
    expr: Node
    line: int = _pos_field()


@dataclass(frozen=True)
class LoadStmt(Node):
    module: str
    line: int = _pos_field()


# -- printer ------------------------------------------------------------------

def _tok_text(tok):
    if tok.kind == "str":
        body = tok.text.replace("\\", "\\\\").replace('"', '\\"') \
                       .replace("\n", "\\n").replace("\t", "\\t")
        return f'"{body}"'
    if tok.kind == "imag":
        return tok.text + "i"
    return tok.text


def _num_text(v):
    if isinstance(v, int):
        return str(v)
    return fmt_real(v)


def to_source(node, indent=0) -> str:
    pad = "  " * indent
    t = type(node).__name__
    if t == "Program":
        return "".join(to_source(s, indent) for s in node.body)
    if t == "Num":
        return _num_text(node.value)
    if t == "Imag":
        return fmt_real(node.value) + "i"
    if t == "Str":
        body = node.value.replace("\\", "\\\\").replace('"', '\\"') \
                         .replace("\n", "\\n").replace("\t", "\\t")
        return f'"{body}"'
    if t == "Ident":
        return node.name
    if t == "Unary":
        return f"({node.op}{to_source(node.operand)})"
    if t == "Binary":
        return f"({to_source(node.left)}{node.op}{to_source(node.right)})"
    if t == "Assign":
        return f"{to_source(node.target)}{node.op}{to_source(node.value)}"
    if t == "IncDec":
        if node.prefix:
            return f"{node.op}{to_source(node.target)}"
        return f"{to_source(node.target)}{node.op}"
    if t == "Arg":
        if node.name:
            return f"{node.name}={to_source(node.value)}"
        return to_source(node.value)
    if t == "Call":
        args = ",".join(to_source(a) for a in node.args)
        return f"{to_source(node.callee)}({args})"
    if t == "Index":
        args = ",".join(to_source(a) for a in node.args)
        return f"{to_source(node.base)}[{args}]"
    if t == "Member":
        return f"{to_source(node.base)}.{node.name}"
    if t == "Transpose":
        return f"{to_source(node.base)}'"
    if t == "ListExpr":
        return "[" + ",".join(to_source(x) for x in node.items) + "]"
    if t == "Range":
        if node.step is None:
            return f"({to_source(node.start)}:{to_source(node.stop)})"
        return f"({to_source(node.start)}:{to_source(node.step)}:{to_source(node.stop)})"
    if t == "Declarator":
        out = node.name
        if node.sizes:
            out += "(" + ",".join(to_source(s) for s in node.sizes) + ")"
        if node.init is not None:
            out += "=" + to_source(node.init)
        return out
    if t == "Decl":
        base = node.base
        if node.dims == 1:
            base += "[int]"
        elif node.dims == 2:
            base += "[int,int]"
        if node.subtype:
            base += f"<{node.subtype}>"
        return pad + base + " " + ",".join(to_source(d) for d in node.decls) + ";\n"
    if t == "FespaceDecl":
        extra = "".join("," + to_source(a) for a in node.named)
        return pad + (f"fespace {node.name}({to_source(node.mesh)},"
                      f"{to_source(node.elem)}{extra});\n")
    if t == "FeDecl":
        sub = f"<{node.subtype}>" if node.subtype else ""
        return pad + node.space + sub + " " + ",".join(to_source(d) for d in node.decls) + ";\n"
    if t == "MacroDef":
        params = "" if node.params is None else "(" + ",".join(node.params) + ")"
        body = " ".join(_tok_text(tok) for tok in node.body)
        return pad + f"macro {node.name}{params} {body}//\n"
    if t == "BorderDef":
        body = "".join(to_source(s, indent + 1) for s in node.body)
        return pad + (f"border {node.name}({node.param}={to_source(node.t0)},"
                      f"{to_source(node.t1)}){{\n{body}{pad}}};\n")
    if t == "FuncDef":
        if node.ret_type is None and node.params is None:
            return pad + f"func {node.name}={to_source(node.body)};\n"
        ps = ",".join(f"{b}{'[int]' if d == 1 else ''} {n}" for b, d, n in node.params)
        body = to_source(node.body, indent)
        return pad + f"func {node.ret_type} {node.name}({ps}){body.lstrip()}"
    if t in ("VarfDef", "ProblemDef"):
        kw = "varf" if t == "VarfDef" else node.kind
        extra = "".join("," + to_source(a) for a in node.named)
        return pad + (f"{kw} {node.name}({node.unknown},{node.test}{extra})="
                      f"{to_source(node.body)};\n")
    if t == "If":
        out = pad + f"if ({to_source(node.cond)})\n" + to_source(node.then, indent + 1)
        if node.orelse is not None:
            out += pad + "else\n" + to_source(node.orelse, indent + 1)
        return out
    if t == "For":
        init = to_source(node.init, 0).strip().rstrip(";")
        return pad + (f"for ({init};{to_source(node.cond)};{to_source(node.change)})\n"
                      + to_source(node.body, indent + 1))
    if t == "While":
        return pad + f"while ({to_source(node.cond)})\n" + to_source(node.body, indent + 1)
    if t == "Break":
        return pad + "break;\n"
    if t == "Continue":
        return pad + "continue;\n"
    if t == "Return":
        if node.value is None:
            return pad + "return;\n"
        return pad + f"return {to_source(node.value)};\n"
    if t == "Block":
        inner = "".join(to_source(s, indent + 1) for s in node.body)
        return pad + "{\n" + inner + pad + "}\n"
    if t == "ExprStmt":
        return pad + to_source(node.expr) + ";\n"
    if t == "LoadStmt":
        return pad + f'load "{node.module}";\n'
    raise TypeError(f"cannot print {t}")
