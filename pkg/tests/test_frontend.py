"""Lexer, parser, type checker, and source printer."""

import pytest
from hypothesis import given, settings, strategies as st

import corpus
from minicpa.errors import (
    MiniCSyntaxError, TypeCheckError, UndeclaredVariable, UnsupportedFeature,
)
from minicpa.frontend import parse_expression, parse_program, syntax, typecheck
from minicpa.frontend.syntax import Binary, Cast, expr_source, program_source


def roundtrip(source: str):
    first = parse_program(source, "<t>")
    printed = program_source(first)
    second = parse_program(printed, "<t>")
    assert first.functions == second.functions
    assert program_source(second) == printed
    return first


def check(source: str, entry: str = "main"):
    program = parse_program(source, "<t>")
    typecheck(program, entry)
    return program


# -- lexing and literals -----------------------------------------------------

def test_hex_and_suffixes():
    assert parse_expression("0x10").value == 16
    lit = parse_expression("0xFFU")
    assert lit.value == 255 and lit.unsigned_suffix
    assert parse_expression("12L").value == 12
    assert not parse_expression("12L").unsigned_suffix


def test_comments_and_whitespace():
    prog = check("int main() { // line\n  /* block\n comment */ return 0; }")
    assert prog.function("main") is not None


@pytest.mark.parametrize("source,feature", [
    ("#include <stdio.h>\nint main() { return 0; }", "preprocessor"),
    ("int main() { int a[3]; return 0; }", "array"),
    ("int main() { char c; return 0; }", "char"),
    ("int main() { float f; return 0; }", "float"),
    ("int main() { int x = 'a'; return 0; }", "character"),
    ('int main() { int *p; return 0; }', "pointer"),
    ("int *f() { return 0; }", "pointer"),
    ("int main() { for (;;) {} }", "for"),
    ("int main() { int x = 0; do { x = 1; } while (x); }", "do"),
    ("int main() { while (1) { break; } }", "break"),
    ("int main() { while (1) { continue; } }", "continue"),
    ("int main() { switch (1) {} }", "switch"),
    ("struct s { int x; };", "struct"),
    ("int main() { int x = 1 ? 2 : 3; return x; }", "?:"),
    ("int main() { int x = 1.5; return 0; }", "float"),
    ("int main() { int x; int y = (x = 2); return y; }", "assignment"),
])
def test_unsupported_features(source, feature):
    with pytest.raises(UnsupportedFeature) as exc:
        check(source)
    assert feature.lower() in str(exc.value).lower()


def test_plain_syntax_errors():
    with pytest.raises(MiniCSyntaxError):
        parse_program("int main() { return 0 }", "<t>")
    with pytest.raises(MiniCSyntaxError):
        parse_program("int main() { if return; }", "<t>")


# -- parsing and printing ----------------------------------------------------

@pytest.mark.parametrize("text,printed", [
    ("a + b * c == d", "a + b * c == d"),
    ("(a + b) * c", "(a + b) * c"),
    ("a << 2 | b & 3", "a << 2 | b & 3"),
    ("-a % 5", "-a % 5"),
    ("!(a < b) && c != 0", "!(a < b) && c != 0"),
    ("x / (y % 2)", "x / (y % 2)"),
    ("~x ^ y", "~x ^ y"),
])
def test_expression_precedence_roundtrip(text, printed):
    assert expr_source(parse_expression(text)) == printed


def test_desugaring():
    program = roundtrip("""\
int main() {
  int a = 1, b = 2;
  a += b * 2;
  b++;
  --a;
  unsigned int u = 7;
  u <<= 1;
  return a;
}
""")
    printed = program_source(program)
    assert "a = a + b * 2;" in printed
    assert "b = b + 1;" in printed
    assert "a = a - 1;" in printed
    assert "u = u << 1;" in printed
    assert "int a = 1;" in printed and "int b = 2;" in printed


def test_labels_and_gotos_roundtrip():
    program = roundtrip("""\
int main() {
  int x = 0;
  goto skip;
  x = 1;
skip:
  ;
  if (x != 0) {
    goto skip;
  }
  return x;
}
""")
    printed = program_source(program)
    assert "skip:" in printed and "goto skip;" in printed


def test_increment_inside_expression_rejected():
    with pytest.raises(UnsupportedFeature):
        check("int main() { int x = 0; int y = x++ + 1; return y; }")


# -- type checking -----------------------------------------------------------

def test_coercion_inserts_casts():
    program = check("""\
extern unsigned int __VERIFIER_nondet_uint();
int main() {
  unsigned int u = __VERIFIER_nondet_uint();
  int s = 3;
  unsigned int r = u + s;
  if (s < u) { return 1; }
  return 0;
}
""")
    main = program.function("main")
    add = main.body[2].init
    assert isinstance(add, Binary) and add.ctype == syntax.UINT
    assert isinstance(add.right, Cast) and add.right.target == syntax.UINT
    cmp_ = main.body[3].cond
    assert cmp_.cmp_type == syntax.UINT and cmp_.ctype == syntax.INT


def test_literal_range_rules():
    with pytest.raises(TypeCheckError, match="U suffix"):
        check("int main() { int x = 3000000000; return 0; }")
    with pytest.raises(TypeCheckError, match="U suffix"):
        check("int main() { unsigned int x = 0x80000000; return 0; }")
    check("int main() { unsigned int x = 3000000000U; return 0; }")
    with pytest.raises(TypeCheckError):
        check("int main() { unsigned int x = 5000000000U; return 0; }")


def test_undeclared_and_redeclared():
    with pytest.raises(UndeclaredVariable):
        check("int main() { x = 1; return 0; }")
    with pytest.raises(TypeCheckError):
        check("int main() { int x = 0; int x = 1; return 0; }")


def test_call_placement_rules():
    base = "extern int __VERIFIER_nondet_int();\n"
    check(base + "int main() { int x = __VERIFIER_nondet_int(); return x; }")
    with pytest.raises(TypeCheckError):
        check(base + "int main() { int x = __VERIFIER_nondet_int() + 1; return x; }")
    with pytest.raises(TypeCheckError):
        check(base + "int f(int p) { return p; }\n"
                     "int main() { int x = f(f(1)); return x; }")


def test_void_call_rules():
    base = "extern void __assert_fail();\n"
    check(base + "int main() { __assert_fail(); return 0; }")
    with pytest.raises(TypeCheckError):
        check(base + "int main() { int x = __assert_fail(); return x; }")


def test_arity_and_return():
    with pytest.raises(TypeCheckError):
        check("int f(int a, int b) { return a; } int main() { return f(1); }")
    with pytest.raises(TypeCheckError):
        check("void f() { return 1; } int main() { f(); return 0; }")
    with pytest.raises(TypeCheckError):
        check("int f() { return; } int main() { return f(); }")


def test_recursion_rejected():
    with pytest.raises(TypeCheckError) as exc:
        check("""\
int g(int x);
int f(int x) { return g(x); }
int g(int x) { return f(x); }
int main() { return f(1); }
""")
    assert "recursion" in str(exc.value).lower()


def test_missing_entry():
    with pytest.raises(TypeCheckError):
        check("int helper() { return 0; }")


def test_duplicate_labels():
    with pytest.raises(TypeCheckError):
        check("int main() { a: ; a: ; return 0; }")
    with pytest.raises(TypeCheckError):
        check("int main() { goto nowhere; return 0; }")


# -- whole-corpus round-trip ---------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_corpus_roundtrip(seed):
    source = corpus.gen_source(seed, division=(seed % 3 == 0))
    program = roundtrip(source)
    typecheck(program)
