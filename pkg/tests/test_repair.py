"""Repair planning, the pre-close eligibility conditions, and materialization."""

import pytest

from helpers import apply_unified_diff
from leakward import cfg as C
from leakward.checker import check_program, filter_constructor_first_writes
from leakward.errors import MaterializationFailure, StaleWarning
from leakward.escape import escapes
from leakward.inference import infer_specs, write_specs
from leakward.libspec import load_library_spec
from leakward.parser import parse
from leakward.printer import pretty_print
from leakward.repair import (
    CLOSE_IN_FINALLY,
    PRE_CLOSE_INSERTION,
    TRY_FINALLY_WRAP,
    RepairPlan,
    Unfixable,
    locate_anchor,
    materialize,
    plan_fix,
    pre_close_check,
    rebind_warning,
)
from leakward.specs import SpecSet

LIB = load_library_spec(
    """
resource Socket { must_call: [close]; method Socket() -> void; method close() -> void; method send(notowning) -> void; }
resource PrintStream { must_call: [close]; method PrintStream(notowning) -> void; method close() -> void; method println(notowning) -> void; }
resource List { must_call: []; method List() -> void; method add(notowning) -> void; method get(notowning) -> notowning; }
"""
)


def _plan_first(src, kind=None):
    prog = parse(src, "r.mj")
    specs = infer_specs(prog, LIB)
    annotated = write_specs(prog, specs)
    warnings = filter_constructor_first_writes(check_program(annotated, specs, LIB), annotated)
    if kind:
        warnings = [w for w in warnings if w.kind == kind]
    w = warnings[0]
    er = None
    if w.kind == "UnsatisfiedObligation":
        cls = annotated.class_named(w.class_name)
        meth = cls.method_named(w.method_name) if not w.method_name.startswith("<init>") else cls.constructors[0]
        g = C.lower(annotated, cls, meth, LIB)
        if w.site >= 0:
            er = escapes(w.site, g, C.must_alias(g), annotated, specs, LIB)
    return plan_fix(w, annotated, specs, er, LIB), annotated, w


# --- pre-close eligibility: six cases (acceptance criterion 7) ---

PRECLOSE_TEMPLATE = """class W {{
  {field_decl}

  void reset() {{
    {write}
  }}
  void close() {{
    if (f != null) {{
      f.close();
    }}
  }}
  {extra}
}}
"""


def _eligibility(field_decl="private Socket f;", write="f = new Socket();", extra=""):
    src = PRECLOSE_TEMPLATE.format(field_decl=field_decl, write=write, extra=extra)
    prog = parse(src, "p.mj")
    specs = infer_specs(prog, LIB)
    return pre_close_check("W", "f", prog, specs, LIB)


PRECLOSE_CASES = [
    ("all three conditions hold", {}, True, ""),
    ("condition 1 violated: field not private", {"field_decl": "Socket f;"}, False, "FieldNotPrivate"),
    (
        "condition 2 violated: assigned from a parameter",
        {"write": "f = new Socket();", "extra": "void adopt(Socket given) {\n    f = given;\n  }"},
        False,
        "NonFreshWrite",
    ),
    (
        "condition 3 violated: containment broken by a field store",
        {"extra": "void spill(List bag) {\n    bag.add(f);\n  }"},
        False,
        "ContainmentFails",
    ),
    (
        "containment broken via getter",
        {"extra": "Socket leak() {\n    return f;\n  }"},
        False,
        "ContainmentFails",
    ),
    (
        "non-fresh assignment through a local",
        {"write": "Socket tmp = new Socket();\n    f = tmp;"},
        False,
        "NonFreshWrite",
    ),
]


@pytest.mark.parametrize("label, kwargs, expected, which", PRECLOSE_CASES, ids=[c[0] for c in PRECLOSE_CASES])
def test_pre_close_eligibility_cases(label, kwargs, expected, which):
    ok, failing = _eligibility(**kwargs)
    assert ok is expected
    if not expected:
        assert failing == which


def test_pre_close_cases_count():
    assert len(PRECLOSE_CASES) == 6


def test_pre_close_eligible_boolean_surface():
    from leakward.repair import pre_close_eligible

    src = PRECLOSE_TEMPLATE.format(field_decl="private Socket f;", write="f = new Socket();", extra="")
    prog = parse(src, "p.mj")
    specs = infer_specs(prog, LIB)
    assert pre_close_eligible("W", "f", prog, specs, LIB) is True
    assert pre_close_eligible("W", "ghost", prog, specs, LIB) is False


def test_null_initializer_is_benign_for_freshness():
    ok, _ = _eligibility(field_decl="private Socket f = null;")
    assert ok is True  # a null initializer cannot leak, so freshness still holds


# --- planning ---


def test_plan_try_finally_wrap_for_local_leak():
    plan, _, _ = _plan_first('class A { static void main() { Socket s = new Socket(); s.send("x"); } }')
    assert isinstance(plan, RepairPlan) and plan.template == TRY_FINALLY_WRAP
    assert plan.finalizer_method == "close"


def test_plan_close_in_finally_when_try_exists():
    src = """class A {
  static void main() {
    try {
      Socket s = new Socket();
      s.send("x");
    } catch (Exception e) {
      e.printStackTrace();
    }
  }
}
"""
    plan, _, _ = _plan_first(src)
    assert isinstance(plan, RepairPlan) and plan.template == CLOSE_IN_FINALLY


def test_plan_unfixable_on_return_escape():
    src = """class A {
  static Socket partial(String m) {
    Socket s = new Socket();
    if (m == null) {
      return s;
    }
    return null;
  }
  static void main() {
    A.partial("x");
  }
}
"""
    prog = parse(src, "r.mj")
    specs = infer_specs(prog, LIB)
    warnings = check_program(prog, specs, LIB)
    alloc_warning = next(w for w in warnings if w.anchor_kind == "new")
    cls = prog.class_named("A")
    g = C.lower(prog, cls, cls.method_named("partial"), LIB)
    er = escapes(alloc_warning.site, g, C.must_alias(g), prog, specs, LIB)
    plan = plan_fix(alloc_warning, prog, specs, er, LIB)
    assert isinstance(plan, Unfixable) and plan.reason == "EscapesReturn"


def test_plan_pre_close_for_overwrite():
    src = """class W {
  private Socket f;

  void reset() {
    f = new Socket();
  }
  void close() {
    if (f != null) {
      f.close();
    }
  }
}
class M {
  static void main() {
    W w = new W();
    w.reset();
    w.close();
  }
}
"""
    plan, annotated, w = _plan_first(src, kind="OwningFieldOverwrite")
    assert isinstance(plan, RepairPlan) and plan.template == PRE_CLOSE_INSERTION


def test_plan_stale_warning_raises():
    plan, annotated, w = _plan_first('class A { static void main() { Socket s = new Socket(); } }')
    stripped = parse("class A { static void main() { } }", "r.mj")
    with pytest.raises(StaleWarning):
        plan_fix(w, stripped, SpecSet(), None, LIB)


# --- materialization ---


def test_materialize_pre_close_block_matches_template():
    src = """class W {
  private Socket f;

  void reset() {
    f = new Socket();
  }
  void close() {
    if (f != null) {
      f.close();
    }
  }
}
class M {
  static void main() {
    W w = new W();
    w.reset();
    w.close();
  }
}
"""
    plan, annotated, _ = _plan_first(src, kind="OwningFieldOverwrite")
    patch = materialize(annotated, plan, LIB)
    assert patch.status == "Materialized"
    text = pretty_print(patch.patched_program)
    block = (
        "    if (f != null) {\n"
        "      try {\n"
        "        f.close();\n"
        "      } catch (Exception e) {\n"
        "        e.printStackTrace();\n"
        "      }\n"
        "    }\n"
        "    f = new Socket();"
    )
    assert block in text


def test_materialize_diff_applies_to_canonical_text():
    plan, annotated, w = _plan_first('class A { static void main() { Socket s = new Socket(); s.send("x"); } }')
    patch = materialize(annotated, plan, LIB)
    patched_text = apply_unified_diff(pretty_print(annotated), patch.diff)
    assert patched_text == pretty_print(patch.patched_program)
    # re-check: the fixed warning id is gone
    reparsed = parse(patched_text, "r.mj")
    specs = infer_specs(reparsed, LIB)
    remaining = {x.id for x in check_program(reparsed, specs, LIB)}
    assert w.id not in remaining


def test_materialize_is_deterministic():
    plan, annotated, _ = _plan_first('class A { static void main() { Socket s = new Socket(); s.send("x"); } }')
    p1 = materialize(annotated, plan, LIB)
    p2 = materialize(annotated, plan, LIB)
    assert p1.diff == p2.diff


def test_materialize_stale_anchor_on_already_patched_site():
    plan, annotated, _ = _plan_first(
        """class W {
  private Socket f;

  void reset() {
    f = new Socket();
  }
  void close() {
    if (f != null) {
      f.close();
    }
  }
}
class M {
  static void main() {
    W w = new W();
    w.reset();
    w.close();
  }
}
""",
        kind="OwningFieldOverwrite",
    )
    patch = materialize(annotated, plan, LIB)
    with pytest.raises(MaterializationFailure) as err:
        materialize(patch.patched_program, plan, LIB)
    assert err.value.reason == "StaleAnchor"


def test_fresh_temp_extraction_for_nested_allocation():
    src = """class A {
  static void main() {
    new Socket().send("fire");
  }
}
"""
    plan, annotated, _ = _plan_first(src)
    assert isinstance(plan, RepairPlan)
    patch = materialize(annotated, plan, LIB)
    text = pretty_print(patch.patched_program)
    assert "__lw_tmp1" in text and plan.fresh_names == ["__lw_tmp1"]
    assert "Socket __lw_tmp1 = null;" in text


def test_multi_mustcall_inserts_every_finalizer():
    lib2 = load_library_spec(
        "resource Pipe { must_call: [drain, close]; method Pipe() -> void; method close() -> void; method drain() -> void; }"
    )
    prog = parse("class A { static void main() { Pipe p = new Pipe(); } }", "r.mj")
    specs = infer_specs(prog, lib2)
    w = check_program(prog, specs, lib2)[0]
    cls = prog.class_named("A")
    g = C.lower(prog, cls, cls.method_named("main"), lib2)
    er = escapes(w.site, g, C.must_alias(g), prog, specs, lib2)
    plan = plan_fix(w, prog, specs, er, lib2)
    assert isinstance(plan, RepairPlan)
    assert plan.finalizer_methods == ("close", "drain")
    text = pretty_print(materialize(prog, plan, lib2).patched_program)
    assert "p.close();" in text and "p.drain();" in text


def test_rebind_warning_round_trip():
    prog = parse('class A { static void main() { Socket s = new Socket(); } }', "r.mj")
    specs = SpecSet.from_declared(prog)
    w = check_program(prog, specs, LIB)[0]
    back = rebind_warning(w.to_json(), prog)
    assert back.id == w.id and back.ast_nid == w.ast_nid and back.site == w.site
    assert locate_anchor(back, prog).nid == w.ast_nid
