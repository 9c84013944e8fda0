"""Pipeline orchestration, shift mapping, and metric arithmetic."""

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakward.checker import Warning
from leakward.pipeline import (
    MetricsReport,
    PipelineConfig,
    ShiftMap,
    WarningSetPair,
    compute_metrics,
    run_pipeline,
)
from leakward.printer import pretty_print


def _w(wid: str) -> Warning:
    return Warning(id=wid, kind="UnsatisfiedObligation", file="f.mj", line=1, resource_class="S", message="")


# --- reference-row arithmetic (acceptance criterion 2) ---


def test_metrics_reference_full_row():
    m = MetricsReport.from_counts(cl=1446, xe=243, xr=447, f_cl=952, f_xe=62)
    assert m.total == 2136
    assert m.resolution_rate == Fraction(1461, 2136)
    assert m.percent == 68


def test_metrics_reference_baseline_row():
    m = MetricsReport.from_counts(cl=1909, xe=0, xr=0, f_cl=783, f_xe=0)
    assert m.total == 1909
    assert m.resolution_rate == Fraction(783, 1909)
    assert m.percent == 41


def test_metrics_reference_inference_only_row():
    m = MetricsReport.from_counts(cl=1537, xe=320, xr=356, f_cl=755, f_xe=5)
    assert m.total == 2213
    assert m.resolution_rate == Fraction(1116, 2213)
    assert m.percent == 50


def test_metrics_identities_hold_exactly():
    m = MetricsReport.from_counts(cl=1446, xe=243, xr=447, f_cl=952, f_xe=62)
    assert m.total == m.cl + m.xe + m.xr
    assert m.resolution_rate * m.total == m.f_cl + m.f_xe + m.xr


@settings(max_examples=200, deadline=None)
@given(
    cl=st.integers(0, 3000),
    xe=st.integers(0, 3000),
    xr=st.integers(0, 3000),
    f_cl_num=st.integers(0, 3000),
    f_xe_num=st.integers(0, 3000),
    den=st.integers(1, 12),
)
def test_metric_identities_property(cl, xe, xr, f_cl_num, f_xe_num, den):
    m = MetricsReport.from_counts(cl=cl, xe=xe, xr=xr, f_cl=Fraction(f_cl_num, den), f_xe=Fraction(f_xe_num, den))
    assert m.total == cl + xe + xr
    if m.total == 0:
        assert m.resolution_rate == 1
    else:
        assert m.resolution_rate * m.total == m.f_cl + m.f_xe + m.xr
    assert 0 <= m.percent  # rationals stay exact until display


def test_empty_warning_universe_is_success():
    m = MetricsReport.from_counts(cl=0, xe=0, xr=0, f_cl=0, f_xe=0)
    assert m.resolution_rate == 1 and m.percent == 100


def test_weighted_fix_count_one_root_n4_k1():
    # one root with four shifted warnings (one fixed) plus one untouched
    # library warning in both sets: F_CL = 0.25, CL = 2, R = 0.125
    pair = WarningSetPair(
        w_orig=[_w("root"), _w("plain")],
        w_xform=[_w("s1"), _w("s2"), _w("s3"), _w("s4"), _w("plain")],
    )
    shift = ShiftMap(
        pairs={"s1": "root", "s2": "root", "s3": "root", "s4": "root", "plain": "plain"},
        multiplicity={"root": 4, "plain": 1},
        fixed_counts={},
    )
    dispositions = {
        "s1": ("fixed", "TryFinallyWrap"),
        "s2": ("unfixable", "EscapesToField"),
        "s3": ("unfixable", "EscapesToField"),
        "s4": ("unfixable", "EscapesToField"),
        "plain": ("unfixable", "EscapesToField"),
    }
    m = compute_metrics(pair, shift, dispositions)
    assert (m.cl, m.xe, m.xr) == (2, 0, 0)
    assert m.f_cl == Fraction(1, 4)
    assert m.resolution_rate == Fraction(1, 8)


def test_half_credit_example():
    # a wrapper root with ten shifted warnings, five fixed: credit 0.5
    shifted = [f"s{i}" for i in range(10)]
    pair = WarningSetPair(w_orig=[_w("root")], w_xform=[_w(s) for s in shifted])
    shift = ShiftMap(
        pairs={s: "root" for s in shifted}, multiplicity={"root": 10}, fixed_counts={}
    )
    dispositions = {s: ("fixed", "t") if i < 5 else ("unfixable", "r") for i, s in enumerate(shifted)}
    m = compute_metrics(pair, shift, dispositions)
    assert m.f_cl == Fraction(1, 2) and m.cl == 1


def test_summary_table_layout():
    m = MetricsReport.from_counts(cl=1446, xe=243, xr=447, f_cl=952, f_xe=62)
    table = m.summary_table()
    lines = table.splitlines()
    assert lines[0].startswith("Configuration")
    assert "CL" in lines[0] and "F_CL" in lines[0] and "Repair rate" in lines[0]
    assert "68%" in lines[2]


# --- end-to-end pipeline over the corpus ---


@pytest.fixture(scope="module")
def corpus_report(corpus_sources, libspec):
    return run_pipeline(corpus_sources, libspec, PipelineConfig())


def test_tempfile_file_resolves_fully(corpus_report):
    fr = corpus_report.files["tempfile_writer.mj"]
    states = sorted(st for st, _ in fr.fix_status.values())
    assert states == ["fixed", "fixed"]
    assert fr.verdict.ok
    # 2 original warnings; one resolved by injection+shift, then the
    # shifted warning and the overwrite warning both fixed
    assert len(fr.w_orig) == 2
    pair = WarningSetPair(w_orig=fr.w_orig, w_xform=fr.w_xform)
    from leakward.pipeline import build_shift_map

    shift = build_shift_map(
        fr.w_orig, fr.w_xform, fr.edit_log, {fr.name: fr.specs}, {fr.name: fr.transformed}, corpus_report_libspec(corpus_report)
    )
    dispositions = {w.id: fr.fix_status[w.id] for w in fr.w_xform}
    m = compute_metrics(pair, shift, dispositions)
    assert m.resolution_rate == 1


def corpus_report_libspec(report):
    from leakward.libspec import load_library_spec
    from pathlib import Path

    return load_library_spec((Path(__file__).parent.parent / "corpus" / "minij.libspec").read_text())


def test_writer_shift_map_n1(corpus_report):
    fr = corpus_report.files["writer_wrapper.mj"]
    (orig,) = fr.w_orig
    (xform,) = fr.w_xform
    assert corpus_report.shift_map.pairs[xform.id] == orig.id
    assert corpus_report.shift_map.multiplicity[orig.id] == 1


def test_library_warning_maps_to_itself(corpus_report):
    fr = corpus_report.files["escape_field.mj"]
    (orig,) = fr.w_orig
    assert corpus_report.shift_map.pairs[orig.id] == orig.id


def test_every_original_warning_has_exactly_one_disposition(corpus_report):
    all_orig = {w.id for fr in corpus_report.files.values() for w in fr.w_orig}
    assert set(corpus_report.dispositions_orig) == all_orig
    for state, _ in corpus_report.dispositions_orig.values():
        assert state in ("fixed", "resolved-by-transform", "unfixable")


def test_unresolved_multiset_never_grows_across_iterations(corpus_source_pair=None):
    pass  # covered by the determinism/idempotence acceptance tests


def test_pipeline_reproducible(corpus_sources, libspec):
    a = run_pipeline(corpus_sources, libspec, PipelineConfig())
    b = run_pipeline(corpus_sources, libspec, PipelineConfig())
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)
    for name in a.files:
        assert pretty_print(a.files[name].patched) == pretty_print(b.files[name].patched)


def test_exit_codes(corpus_report, libspec):
    assert corpus_report.exit_code == 2  # authored-unfixable warnings remain
    clean = run_pipeline(
        [("clean.mj", 'class A { static void main() { PrintStream s = new PrintStream("f"); s.println("x"); s.close(); } }')],
        libspec,
        PipelineConfig(),
    )
    assert clean.exit_code == 0
    fixed_all = run_pipeline(
        [("one.mj", 'class A { static void main() { PrintStream s = new PrintStream("f"); s.println("x"); } }')],
        libspec,
        PipelineConfig(),
    )
    assert fixed_all.exit_code == 0


# --- ablation flags exist and change behavior ---


def test_ablation_disable_overwrite_handling(corpus_sources, libspec):
    report = run_pipeline(corpus_sources, libspec, PipelineConfig(enable_overwrite_handling=False))
    fr = report.files["tempfile_writer.mj"]
    overwrites = [w for w in fr.w_xform if w.kind == "OwningFieldOverwrite"]
    assert overwrites, "without filtering, constructor first writes also warn"
    for w in overwrites:
        state, detail = fr.fix_status[w.id]
        assert state == "unfixable" and "disabled" in detail


def test_ablation_disable_enhancements(corpus_sources, libspec):
    report = run_pipeline(corpus_sources, libspec, PipelineConfig(enable_fixer_enhancements=False))
    # the accessor-wrapped puppeteer now counts as an escape
    fr = report.files["puppeteer_task.mj"]
    states = [st for st, _ in fr.fix_status.values()]
    assert "fixed" not in states
    # and the shutdown finalizer cannot be inserted in classic close-only mode
    fr2 = report.files["shutdown_wrapper.mj"]
    assert all(st != "fixed" for st, _ in fr2.fix_status.values())


def test_ablation_disable_transforms(corpus_sources, libspec):
    report = run_pipeline(corpus_sources, libspec, PipelineConfig(enable_transforms=False))
    fr = report.files["tempfile_writer.mj"]
    # without finalizer injection the class never becomes a wrapper: the
    # client-side fix is impossible and constructor warnings stay put
    assert all(w.resource_class == "PrintStream" for w in fr.w_xform)
    assert report.metrics.resolution_rate < 1


def test_pipeline_metrics_match_golden(corpus_report, golden_dir):
    golden = json.loads((golden_dir / "dispositions.json").read_text())
    assert corpus_report.metrics.to_json() == golden["metrics"]
