"""Parsing, pretty-printing, and library-spec loading."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakward import syntax as sx
from leakward.errors import DuplicateName, SpecFormatError, SyntaxError, UnknownMethodInMustCall
from leakward.fuzz import generate_source
from leakward.libspec import load_library_spec
from leakward.parser import parse
from leakward.printer import pretty_print

WRITER_SRC = """class MyWriter {
  private PrintWriter pw;

  MyWriter(String path) {
    pw = new PrintWriter(path);
  }
  void close() {
    pw.close();
  }
}
class Client {
  static void use() {
    MyWriter writer = new MyWriter("f.txt");
  }
  static void main() {
    Client.use();
  }
}
"""


def test_parse_writer_shape():
    p = parse(WRITER_SRC, "writer_wrapper.mj")
    assert [c.name for c in p.classes] == ["MyWriter", "Client"]
    writer = p.classes[0]
    assert writer.fields[0].name == "pw"
    assert writer.fields[0].declared_type == "PrintWriter"
    assert len(writer.constructors) == 1
    assert writer.method_named("close") is not None


def test_parse_empty_input():
    assert parse("").classes == []


def test_round_trip_writer():
    p = parse(WRITER_SRC)
    assert parse(pretty_print(p)) == p


def test_positions_total_and_alloc_sites_in_parse_order():
    p = parse(WRITER_SRC, "writer_wrapper.mj")
    news = [e for c in p.classes for m in c.all_methods() for e in sx.walk_exprs(m.body) if isinstance(e, sx.New)]
    assert [n.site for n in news] == [1, 2]
    for c in p.classes:
        for m in c.all_methods():
            for node in list(sx.walk_stmts(m.body)) + list(sx.walk_exprs(m.body)):
                assert p.pos_of(node.nid) != (0, 0)
    line, col = p.pos_of(news[0].nid)
    assert line == 5


def test_annotations_round_trip():
    src = (
        '@MustCall("close")\n'
        "class W {\n"
        "  @Owning private PrintWriter pw;\n"
        "  W(@Owning PrintWriter given) {\n"
        "    pw = given;\n"
        "  }\n"
        '  @EnsuresCalledMethods(value="pw", methods="close")\n'
        "  void close() {\n"
        "    pw.close();\n"
        "  }\n"
        "}\n"
    )
    p = parse(src)
    assert pretty_print(p) == src
    ann = sx.annotation_named(p.classes[0].annotations, sx.MUST_CALL)
    assert ann.methods == ("close",)


def test_comments_and_blank_lines_ignored():
    src = "// leading\nclass A {\n\n  /* block\n     comment */\n  void m() {\n  }\n}\n"
    p = parse(src)
    assert p.classes[0].method_named("m") is not None


@pytest.mark.parametrize(
    "bad, exc",
    [
        ("class A { class", SyntaxError),
        ("class A { void m() { x = ; } }", SyntaxError),
        ("class A {} class A {}", DuplicateName),
        ("class A { int x; int x; }", DuplicateName),
        ("class A { void m() {} void m() {} }", DuplicateName),
        ("class A { A() {} A() {} }", DuplicateName),
        ("class A { void m(int a, int a) {} }", DuplicateName),
        ("class A { void m() { return 1; } }", SyntaxError),
        ('class A { @Owning class B {} }', SyntaxError),
        ("class A { void m() { try { } } }", SyntaxError),
    ],
)
def test_parse_errors(bad, exc):
    with pytest.raises(exc):
        parse(bad)


def test_syntax_error_carries_position():
    try:
        parse("class A {\n  void m() { x = ; }\n}")
    except SyntaxError as e:
        assert e.line == 2 and e.col > 0
    else:  # pragma: no cover
        raise AssertionError("expected a syntax error")


def test_equality_only_in_conditions():
    with pytest.raises(SyntaxError):
        parse("class A { void m() { PrintWriter x = a == b; } }")
    p = parse("class A { void m(String c) { if (c == null) { return; } } }")
    cond = p.classes[0].methods[0].body.stmts[0].cond
    assert isinstance(cond, sx.Eq) and not cond.negated


def test_pretty_print_empty_program():
    assert pretty_print(parse("")) == "\n"


def test_pretty_print_deterministic():
    p = parse(WRITER_SRC)
    assert pretty_print(p) == pretty_print(p)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_fuzzer_round_trip_fixed_point(seed):
    src = generate_source(seed)
    p1 = parse(src, "fuzz.mj")
    printed = pretty_print(p1)
    p2 = parse(printed, "fuzz.mj")
    assert p2 == p1
    assert pretty_print(p2) == printed


def test_site_ids_stable_across_round_trip():
    src = generate_source(7)
    p1 = parse(src, "a.mj")
    p2 = parse(pretty_print(p1), "a.mj")
    sites1 = [e.site for c in p1.classes for m in c.all_methods() for e in sx.walk_exprs(m.body) if isinstance(e, sx.New)]
    sites2 = [e.site for c in p2.classes for m in c.all_methods() for e in sx.walk_exprs(m.body) if isinstance(e, sx.New)]
    assert sites1 == sites2


# --- library specs ---


def test_load_library_spec_basic():
    spec = load_library_spec("resource PrintStream { must_call: [close]; method PrintStream(notowning) -> void; method close() -> void; }")
    assert spec.must_call("PrintStream") == frozenset({"close"})
    assert spec.must_call("Unknown") == frozenset()


def test_load_library_spec_empty():
    spec = load_library_spec("")
    assert spec.must_call("Anything") == frozenset()


def test_libspec_rejects_unknown_mustcall_method():
    with pytest.raises(UnknownMethodInMustCall):
        load_library_spec("resource S { must_call: [close]; }")


@pytest.mark.parametrize(
    "bad",
    [
        "resource { }",
        "resource S { must_call [close]; }",
        "resource S { method m(sideways) -> void; method m() -> void; }",
        "resource S { must_call: [a]; method a() -> maybe; }",
        "resource S { } resource S { }",
    ],
)
def test_libspec_format_errors(bad):
    with pytest.raises(SpecFormatError):
        load_library_spec(bad)


def test_corpus_round_trip(corpus_sources):
    for name, text in corpus_sources:
        p = parse(text, name)
        assert parse(pretty_print(p), name) == p, name
