import pytest

from femscript.dsl import LexError, tokenize


def kinds_and_texts(src, **kw):
    return [(t.kind, t.text) for t in tokenize(src, **kw)[:-1]]  # drop eof


def test_declaration_tokens():
    assert kinds_and_texts("int a=1;") == [
        ("kw", "int"), ("id", "a"), ("op", "="), ("int", "1"), ("punct", ";")]


def test_imaginary_literal():
    toks = tokenize("1.+3i")
    assert [(t.kind, t.text) for t in toks[:-1]] == [
        ("real", "1."), ("op", "+"), ("imag", "3")]
    assert toks[2].value == 3.0


def test_block_comment_stripped():
    assert kinds_and_texts("/* x */ y") == [("id", "y")]


def test_line_comment_stripped_by_default():
    assert kinds_and_texts("a // rest\nb") == [("id", "a"), ("id", "b")]


def test_line_comment_kept_on_request():
    toks = tokenize("a // rest\nb", keep_comments=True)
    assert [t.kind for t in toks[:-1]] == ["id", "comment", "id"]


def test_unterminated_string():
    with pytest.raises(LexError) as err:
        tokenize('x = "abc')
    assert err.value.line == 1


def test_unterminated_block_comment():
    with pytest.raises(LexError):
        tokenize("a /* no end")


def test_number_dot_maximal_munch():
    # after a digit the dot joins the number: 1./2 is real division
    assert kinds_and_texts("1./2") == [("real", "1."), ("op", "/"), ("int", "2")]
    assert kinds_and_texts("1.*x") == [("real", "1."), ("op", "*"), ("id", "x")]
    # between identifiers it is the elementwise operator
    assert kinds_and_texts("u./v") == [("id", "u"), ("op", "./"), ("id", "v")]
    assert kinds_and_texts("u.*v") == [("id", "u"), ("op", ".*"), ("id", "v")]


def test_member_dot():
    assert kinds_and_texts("Th.nt") == [("id", "Th"), ("punct", "."), ("id", "nt")]


def test_scientific_literals():
    toks = tokenize("0.2e1 8.48012e-05 .5 1e3")
    assert [t.value for t in toks[:-1]] == [2.0, 8.48012e-05, 0.5, 1000.0]


def test_multichar_operators():
    ops = [t.text for t in tokenize("<< >> <= >= == != += -= *= /= ++ -- .* ./")[:-1]]
    assert ops == ["<<", ">>", "<=", ">=", "==", "!=", "+=", "-=",
                   "*=", "/=", "++", "--", ".*", "./"]


def test_string_escapes():
    toks = tokenize(r'"a\nb\t\"q\""')
    assert toks[0].value == 'a\nb\t"q"'


def test_positions_recorded():
    toks = tokenize("a\n  b")
    assert (toks[0].line, toks[0].col) == (1, 1)
    assert (toks[1].line, toks[1].col) == (2, 3)
