from pathlib import Path

import pytest

from femscript.dsl import ParseError, Parser, parse, to_source, tokenize
from femscript.dsl import astnodes as A
from femscript.dsl.parser import expand_macro

CORPUS = sorted(Path(__file__).parent.glob("corpus/*.edp"))

SOLVE_LISTING = """
mesh Th=square(10,10);
fespace Vh(Th,P1);
Vh uh,vh,f;
macro Grad(u)[dx(u),dy(u)]//
int i=0;
solve poisson(uh,vh,init=i,solver=LU) =
    int2d(Th)( Grad(uh)'*Grad(vh) )
    -int2d(Th)(f*vh)
    +on(1,2,3,4,uh=0);
"""


def _collect_terms(expr):
    """Flatten the +- tree of a form body into (sign, call) leaves."""
    out = []

    def walk(node, sign):
        if isinstance(node, A.Binary) and node.op in "+-":
            walk(node.left, sign)
            walk(node.right, sign if node.op == "+" else -sign)
        else:
            out.append((sign, node))
    walk(expr, +1)
    return out


def test_solve_listing_shape():
    prog = parse(SOLVE_LISTING)
    solves = [s for s in prog.body if isinstance(s, A.ProblemDef)]
    assert len(solves) == 1
    p = solves[0]
    assert p.kind == "solve" and p.unknown == "uh" and p.test == "vh"
    assert [a.name for a in p.named] == ["init", "solver"]
    terms = _collect_terms(p.body)
    assert len(terms) == 3
    # two integral terms (one positive bilinear, one negated linear), one on-clause
    def callee_name(call):
        node = call
        while isinstance(node, A.Call):
            node = node.callee
        return node.name
    names = [callee_name(c) for _, c in terms]
    assert names == ["int2d", "int2d", "on"]
    assert [s for s, _ in terms] == [1, -1, 1]


def test_macro_definition_capture():
    p = Parser("macro Grad(u)[dx(u),dy(u)]// comment\n")
    prog = p.parse_program()
    m = prog.body[0]
    assert isinstance(m, A.MacroDef)
    assert m.name == "Grad" and m.params == ("u",)
    assert "".join(t.text for t in m.body) == "[dx(u),dy(u)]"


def test_macro_expansion_textual():
    p = Parser("macro Grad(u)[dx(u),dy(u)]//\n")
    p.parse_program()
    macro = p.macros["Grad"]
    args = [tokenize("w")[:-1]]
    out = expand_macro(macro, args)
    assert [t.text for t in out] == [t.text for t in tokenize("[dx(w),dy(w)]")[:-1]]


def test_macro_expansion_equals_tokenized_substitution():
    """Expansion is purely textual: token-level substitution agrees with
    tokenizing the substituted source text."""
    p = Parser("macro F(t,u,v)[t*dx(u),t*dy(v)]//\n")
    p.parse_program()
    macro = p.macros["F"]
    args_src = ["2.5", "aa", "bb+1"]
    args = [tokenize(s)[:-1] for s in args_src]
    expanded = expand_macro(macro, args)
    direct = tokenize("[2.5*dx(aa),2.5*dy(bb+1)]")[:-1]
    assert [(t.kind, t.text) for t in expanded] == [(t.kind, t.text) for t in direct]


def test_macro_postfix_indexing_parses():
    src = "macro F(t,u,v)[t*dx(u),t*dy(v)]//\nreal z=1;\nint q=0;\n"
    prog = parse(src + "")
    assert isinstance(prog.body[0], A.MacroDef)


def test_zero_parameter_macro():
    src = "macro Pi2 (2*pi)//\nreal z=Pi2;\n"
    prog = parse(src)
    decl = prog.body[1]
    # the body was substituted verbatim at the use site
    assert to_source(decl.decls[0].init) == "(2*pi)"


def test_macro_arity_mismatch():
    with pytest.raises(ParseError):
        parse("macro G(u)[dx(u)]//\nreal a=G(1,2);\n")


def test_for_requires_clauses():
    with pytest.raises(ParseError):
        parse("for(;;) { int a=1; }")
    with pytest.raises(ParseError):
        parse("for(int i=0;;i++) { }")


def test_missing_semicolon_reported():
    with pytest.raises(ParseError) as err:
        parse("int a=1\nint b=2;")
    assert "expected" in str(err.value)


def test_named_argument_parsing():
    prog = parse("int n=square(2,2,flags=1);")  # parse shape only
    call = prog.body[0].decls[0].init
    assert isinstance(call, A.Call)
    assert call.args[2].name == "flags"


def test_range_expression():
    prog = parse("real[int] U=1:2:10;")
    rng = prog.body[0].decls[0].init
    assert isinstance(rng, A.Range) and rng.step is not None


def test_power_binds_tighter_than_unary_minus():
    prog = parse("real a=-1^2;")
    expr = prog.body[0].decls[0].init
    assert isinstance(expr, A.Unary) and expr.op == "-"
    assert isinstance(expr.operand, A.Binary) and expr.operand.op == "^"


def test_matrix_inverse_exponent():
    prog = parse("int q=0; q = A^-1*b;")
    assign = prog.body[1].expr
    power = assign.value.left
    assert isinstance(power, A.Binary) and power.op == "^"
    assert isinstance(power.right, A.Unary) and power.right.op == "-"


@pytest.mark.parametrize("path", CORPUS, ids=[p.stem for p in CORPUS])
def test_corpus_parses(path):
    prog = parse(path.read_text())
    assert len(prog.body) > 0


@pytest.mark.parametrize("path", CORPUS, ids=[p.stem for p in CORPUS])
def test_print_parse_stability(path):
    prog = parse(path.read_text())
    printed = to_source(prog)
    assert parse(printed) == prog


def test_fe_declaration_needs_known_space():
    # `Vh uh;` with no fespace named Vh parses as an expression and fails later
    with pytest.raises(ParseError):
        parse("Vh uh;")
