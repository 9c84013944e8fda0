"""Seeded random MiniJ program generator.

Programs are well-formed, null-dereference-free, and step-bounded by
construction: every local is initialized before use, receivers are only drawn
from definitely-non-null locals, and the only loop shape is
`while (v == null) { v = new ...; }`, which runs exactly once. Leaks,
branch-dependent closes, aliasing, wrapper usage, escapes, and try/finally
cleanup all appear with tunable frequency, which makes the output suitable
for round-trip, checker-soundness, and repair-safety properties.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .libspec import LibrarySpec, load_library_spec

FUZZ_LIBSPEC_TEXT = """
resource Stream {
  must_call: [close];
  method Stream(notowning) -> void;
  method close() -> void;
  method write(notowning) -> void;
}
resource Sock {
  must_call: [shutdown];
  method Sock(notowning) -> void;
  method shutdown() -> void;
  method send(notowning) -> void;
}
resource Buffered {
  must_call: [close];
  method Buffered(owning) -> void;
  method close() -> void;
  method write(notowning) -> void;
}
resource List {
  must_call: [];
  method List() -> void;
  method add(notowning) -> void;
  method get(notowning) -> notowning;
}
"""


def fuzz_libspec() -> LibrarySpec:
    return load_library_spec(FUZZ_LIBSPEC_TEXT)


_FINALIZER = {"Stream": "close", "Sock": "shutdown", "Buffered": "close"}


@dataclass
class _Local:
    name: str
    type_name: str
    closed: bool = False
    escaped: bool = False


class _Gen:
    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.lines: list[str] = []
        self.counter = 0
        self.live: list[_Local] = []
        self.helpers_used: set[str] = set()

    def fresh(self, base: str) -> str:
        self.counter += 1
        return f"{base}{self.counter}"

    def emit(self, depth: int, text: str) -> None:
        self.lines.append("    " * depth + text)

    def usable(self) -> list[_Local]:
        return [l for l in self.live if not l.closed and not l.escaped]

    def generate(self) -> str:
        rng = self.rng
        self.wrapper_kind = rng.choice(["alias", "leaky", "accessor", "none"])
        use_holder = rng.random() < 0.4
        n_stmts = rng.randint(3, 9)
        for _ in range(n_stmts):
            self.gen_stmt(2)
        # optionally close some survivors at the end
        for l in list(self.usable()):
            if rng.random() < 0.45:
                self.close_stmt(2, l)
        body = self.lines
        out: list[str] = []
        if self.wrapper_kind in ("alias", "leaky"):
            out += [
                "class Wrap {",
                "    private Stream inner;",
                "",
                "    Wrap(String path) {",
                "        inner = new Stream(path);",
                "    }",
                "    void use() {",
                '        inner.write("w");',
                "    }",
            ]
            if self.wrapper_kind == "alias":
                out += [
                    "    void close() {",
                    "        if (inner != null) {",
                    "            inner.close();",
                    "        }",
                    "    }",
                ]
            out += ["}"]
        if self.wrapper_kind == "accessor":
            out += [
                "class Keep {",
                "    private Stream held;",
                "",
                "    Keep(Stream in) {",
                "        held = in;",
                "    }",
                "    void poke() {",
                '        held.write("k");',
                "    }",
                "}",
            ]
        if use_holder or "holder" in self.helpers_used:
            out += [
                "class Box {",
                "    static Stream kept;",
                "}",
            ]
        out += ["class Main {"]
        if "factory" in self.helpers_used:
            out += [
                "    static Stream makeStream() {",
                '        Stream made = new Stream("made");',
                "        return made;",
                "    }",
            ]
        if "borrower" in self.helpers_used:
            out += [
                "    static void borrow(Stream b) {",
                '        b.write("borrowed");',
                "    }",
            ]
        out += ["    static void main() {"]
        out += body
        out += ["    }", "}"]
        return "\n".join(out) + "\n"

    def close_stmt(self, depth: int, l: _Local) -> None:
        fin = self.finalizer_of(l)
        if self.rng.random() < 0.3:
            self.emit(depth, f"if ({l.name} != null) {{")
            self.emit(depth + 1, f"{l.name}.{fin}();")
            self.emit(depth, "}")
        else:
            self.emit(depth, f"{l.name}.{fin}();")
        l.closed = True

    def finalizer_of(self, l: _Local) -> str:
        if l.type_name == "Wrap":
            return "close"
        return _FINALIZER.get(l.type_name, "close")

    def gen_stmt(self, depth: int) -> None:
        rng = self.rng
        choices = ["alloc", "alloc", "use", "close", "alias", "branch_close", "tryfinally", "loop_alloc"]
        if self.wrapper_kind in ("alias", "leaky"):
            choices.append("alloc_wrap")
        if self.wrapper_kind == "accessor":
            choices.append("wrap_accessor")
        choices += ["escape_static", "factory", "borrow", "collection", "buffered"]
        kind = rng.choice(choices)
        if kind == "alloc":
            t = rng.choice(["Stream", "Sock"])
            name = self.fresh(t.lower())
            self.emit(depth, f'{t} {name} = new {t}("{name}.dat");')
            self.live.append(_Local(name, t))
        elif kind == "alloc_wrap":
            name = self.fresh("wrap")
            self.emit(depth, f'Wrap {name} = new Wrap("{name}.p");')
            if self.wrapper_kind == "alias":
                self.live.append(_Local(name, "Wrap"))
            if rng.random() < 0.7:
                self.emit(depth, f"{name}.use();")
        elif kind == "wrap_accessor":
            targets = [l for l in self.usable() if l.type_name == "Stream"]
            if not targets:
                return
            t = rng.choice(targets)
            name = self.fresh("keep")
            self.emit(depth, f"Keep {name} = new Keep({t.name});")
            if rng.random() < 0.7:
                self.emit(depth, f"{name}.poke();")
        elif kind == "use":
            targets = self.usable()
            if not targets:
                return
            t = rng.choice(targets)
            if t.type_name == "Wrap":
                self.emit(depth, f"{t.name}.use();")
            else:
                self.emit(depth, f'{t.name}.{self.use_method(t)}("x");')
        elif kind == "close":
            targets = self.usable()
            if not targets:
                return
            self.close_stmt(depth, rng.choice(targets))
        elif kind == "alias":
            targets = self.usable()
            if not targets:
                return
            t = rng.choice(targets)
            name = self.fresh("alias")
            self.emit(depth, f"{t.type_name} {name} = {t.name};")
            if rng.random() < 0.5:
                # close through the alias; the original is the same object
                fin = self.finalizer_of(t)
                self.emit(depth, f"{name}.{fin}();")
                t.closed = True
        elif kind == "branch_close":
            targets = [l for l in self.usable() if l.type_name in _FINALIZER]
            if len(targets) < 2:
                return
            a, b = rng.sample(targets, 2)
            fin = self.finalizer_of(a)
            self.emit(depth, f"if ({a.name} == {b.name}) {{")
            self.emit(depth + 1, f"{a.name}.{fin}();")
            self.emit(depth, "}")
            # closed only on one (statically unknown, dynamically false) path
            a.closed = True  # conservatively stop using it afterwards
        elif kind == "tryfinally":
            name = self.fresh("t")
            t = rng.choice(["Stream", "Sock"])
            fin = _FINALIZER[t]
            self.emit(depth, f"{t} {name} = null;")
            self.emit(depth, "try {")
            self.emit(depth + 1, f'{name} = new {t}("{name}.tmp");')
            self.emit(depth + 1, f'{name}.{self.use_method(_Local(name, t))}("inside");')
            self.emit(depth, "} finally {")
            self.emit(depth + 1, f"if ({name} != null) {{")
            self.emit(depth + 2, f"{name}.{fin}();")
            self.emit(depth + 1, "}")
            self.emit(depth, "}")
        elif kind == "loop_alloc":
            name = self.fresh("loop")
            self.emit(depth, f"Stream {name} = null;")
            self.emit(depth, f"while ({name} == null) {{")
            self.emit(depth + 1, f'{name} = new Stream("{name}.l");')
            self.emit(depth, "}")
            self.live.append(_Local(name, "Stream"))
        elif kind == "escape_static":
            targets = [l for l in self.usable() if l.type_name == "Stream"]
            if not targets:
                return
            t = rng.choice(targets)
            self.helpers_used.add("holder")
            self.emit(depth, f"Box.kept = {t.name};")
            t.escaped = True
        elif kind == "factory":
            self.helpers_used.add("factory")
            name = self.fresh("made")
            self.emit(depth, f"Stream {name} = Main.makeStream();")
            self.live.append(_Local(name, "Stream"))
        elif kind == "borrow":
            targets = [l for l in self.usable() if l.type_name == "Stream"]
            if not targets:
                return
            self.helpers_used.add("borrower")
            t = rng.choice(targets)
            self.emit(depth, f"Main.borrow({t.name});")
        elif kind == "collection":
            targets = [l for l in self.usable() if l.type_name == "Stream"]
            if not targets:
                return
            t = rng.choice(targets)
            name = self.fresh("bag")
            self.emit(depth, f"List {name} = new List();")
            self.emit(depth, f"{name}.add({t.name});")
            t.escaped = True
        elif kind == "buffered":
            targets = [l for l in self.usable() if l.type_name == "Stream"]
            if not targets:
                return
            t = rng.choice(targets)
            name = self.fresh("buf")
            self.emit(depth, f"Buffered {name} = new Buffered({t.name});")
            t.escaped = True  # ownership transferred into the pass-through wrapper
            self.live.append(_Local(name, "Buffered"))

    def use_method(self, l: _Local) -> str:
        return {"Stream": "write", "Sock": "send", "Buffered": "write", "Wrap": "use"}.get(l.type_name, "write")


def generate_source(seed: int) -> str:
    """Deterministic MiniJ source for a seed."""
    return _Gen(seed).generate()
