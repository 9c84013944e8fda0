"""The leakward command line, exercised in-process."""

import json

import pytest

from leakward.cli import main

CLEAN = 'class A {\n  static void main() {\n    Socket s = new Socket();\n    s.close();\n  }\n}\n'
LEAKY = 'class A {\n  static void main() {\n    Socket s = new Socket();\n    s.send("x");\n  }\n}\n'

LIBSPEC = """resource Socket {
  must_call: [close];
  method Socket() -> void;
  method close() -> void;
  method send(notowning) -> void;
}
"""


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "lib.libspec").write_text(LIBSPEC)
    (tmp_path / "clean.mj").write_text(CLEAN)
    (tmp_path / "leaky.mj").write_text(LEAKY)
    return tmp_path


def test_check_exit_codes_and_json(workdir, capsys):
    assert main(["check", str(workdir / "clean.mj"), "--libspec", str(workdir / "lib.libspec")]) == 0
    code = main(["check", str(workdir / "leaky.mj"), "--libspec", str(workdir / "lib.libspec"), "--json"])
    assert code == 1
    out = capsys.readouterr().out
    data = json.loads(out[out.index("[") :])
    assert data and data[0]["kind"] == "UnsatisfiedObligation"
    assert set(data[0]) == {"id", "kind", "file", "line", "resourceClass", "message", "descriptor"}


def test_check_dump_cfg(workdir):
    outdir = workdir / "dots"
    main(
        [
            "check",
            str(workdir / "leaky.mj"),
            "--libspec",
            str(workdir / "lib.libspec"),
            "--dump-cfg",
            str(outdir),
        ]
    )
    dots = list(outdir.glob("*.dot"))
    assert dots and "digraph" in dots[0].read_text()


def test_infer_writes_spec_json(workdir, capsys):
    src = """class W {
  private Socket s;

  W() {
    s = new Socket();
  }
  void close() {
    s.close();
  }
}
class M {
  static void main() {
    W w = new W();
  }
}
"""
    (workdir / "wrap.mj").write_text(src)
    out_path = workdir / "specs.json"
    assert main(["infer", str(workdir / "wrap.mj"), "--libspec", str(workdir / "lib.libspec"), "-o", str(out_path)]) == 0
    data = json.loads(out_path.read_text())
    assert data["classes"]["W"]["mustCall"] == ["close"]
    assert data["fields"]["W.s"] == "owning"
    assert data["ensures"]["W.close"] == [{"field": "s", "methods": ["close"]}]


def test_run_reports_leaks(workdir, capsys):
    assert main(["run", str(workdir / "leaky.mj"), "--libspec", str(workdir / "lib.libspec")]) == 0
    out = capsys.readouterr().out
    data = json.loads(out[out.index("{") :])
    assert data["leaked"] == [1] and data["status"] == "Completed"


def test_run_trace_shows_events(workdir, capsys):
    main(["run", str(workdir / "clean.mj"), "--libspec", str(workdir / "lib.libspec"), "--trace"])
    out = capsys.readouterr().out
    assert "[open] Socket@s1" in out and "[close] Socket@s1" in out


def test_explain_escape(workdir, capsys):
    (workdir / "esc.mj").write_text(
        "class Box {\n  static Socket kept;\n}\nclass M {\n  static void main() {\n    Socket s = new Socket();\n    Box.kept = s;\n  }\n}\n"
    )
    assert main(["explain-escape", str(workdir / "esc.mj"), "--site", "1", "--libspec", str(workdir / "lib.libspec")]) == 0
    out = capsys.readouterr().out
    assert "escapes: True" in out and "ToField" in out


def test_check_then_fix_flow(workdir, capsys):
    lib = str(workdir / "lib.libspec")
    main(["check", str(workdir / "leaky.mj"), "--libspec", lib, "--json"])
    out = capsys.readouterr().out
    warnings = out[out.index("[") :]
    (workdir / "warnings.json").write_text(warnings)
    fixdir = workdir / "fixes"
    assert (
        main(
            [
                "fix",
                str(workdir / "leaky.mj"),
                "--libspec",
                lib,
                "--warnings",
                str(workdir / "warnings.json"),
                "-o",
                str(fixdir),
            ]
        )
        == 0
    )
    patch = (fixdir / "leaky.mj.patch").read_text()
    assert "+    try {" in patch and "s.close();" in patch
    report = json.loads((fixdir / "fixreport.json").read_text())
    assert report[0]["template"] == "TryFinallyWrap"


def test_transform_command(workdir, capsys):
    src = """class TempFileWriter {
  private Socket stream;

  TempFileWriter() {
    stream = new Socket();
  }
  void poke() {
    stream.send("x");
  }
}
class M {
  static void main() {
    TempFileWriter t = new TempFileWriter();
    t.poke();
  }
}
"""
    (workdir / "wrapme.mj").write_text(src)
    lib = str(workdir / "lib.libspec")
    main(["check", str(workdir / "wrapme.mj"), "--libspec", lib, "--json"])
    out = capsys.readouterr().out
    (workdir / "w.json").write_text(out[out.index("[") :])
    outdir = workdir / "xform"
    assert (
        main(
            [
                "transform",
                str(workdir / "wrapme.mj"),
                "--libspec",
                lib,
                "--warnings",
                str(workdir / "w.json"),
                "-o",
                str(outdir),
            ]
        )
        == 0
    )
    transformed = (outdir / "wrapme.mj").read_text()
    assert "implements AutoCloseable" in transformed and "public void close()" in transformed
    log = json.loads((outdir / "wrapme.mj.editlog.json").read_text())
    assert any(e["transform"] == "inject_finalizer" for e in log)


def test_pipeline_command_outputs(workdir, capsys):
    lib = str(workdir / "lib.libspec")
    outdir = workdir / "out"
    code = main(["pipeline", str(workdir), "--libspec", lib, "-o", str(outdir)])
    assert code == 0  # both programs end clean (leak fixed, clean untouched)
    assert (outdir / "report.json").exists()
    assert (outdir / "metrics.json").exists()
    summary = (outdir / "summary.txt").read_text()
    assert "Repair rate" in summary
    patched = (outdir / "patched" / "leaky.mj").read_text()
    assert "finally" in patched
    metrics = json.loads((outdir / "metrics.json").read_text())
    assert metrics["percent"] == 100


def test_pipeline_exit_code_unfixable(workdir):
    (workdir / "stuck.mj").write_text(
        "class Box {\n  static Socket kept;\n}\nclass M {\n  static void main() {\n    Socket s = new Socket();\n    Box.kept = s;\n  }\n}\n"
    )
    lib = str(workdir / "lib.libspec")
    outdir = workdir / "out2"
    code = main(["pipeline", str(workdir), "--libspec", lib, "-o", str(outdir)])
    assert code == 2
