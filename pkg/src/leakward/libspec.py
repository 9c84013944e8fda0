"""Library resource specifications (.libspec files).

One block per class:

    resource Socket {
      must_call: [close];
      method Socket(notowning) -> void;
      method close() -> void;
      method send(notowning) -> void;
    }

A method entry whose name equals the class name describes the constructor;
an `owning` constructor parameter is a pass-through position: the argument's
close obligation transfers to the newly built object.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import SpecFormatError, UnknownMethodInMustCall

OWNING = "owning"
NOT_OWNING = "notowning"


@dataclass
class LibMethod:
    name: str
    param_ownership: tuple[str, ...]  # owning | notowning per position
    return_ownership: str  # owning | notowning | void


@dataclass
class LibClass:
    name: str
    must_call: frozenset[str]
    methods: dict[str, LibMethod] = field(default_factory=dict)

    def ctor(self) -> LibMethod | None:
        return self.methods.get(self.name)


@dataclass
class LibrarySpec:
    entries: dict[str, LibClass] = field(default_factory=dict)

    def has_class(self, name: str) -> bool:
        return name in self.entries

    def must_call(self, class_name: str) -> frozenset[str]:
        """Required finalizer methods; empty for classes absent from the spec."""
        entry = self.entries.get(class_name)
        return entry.must_call if entry else frozenset()

    def method(self, class_name: str, method_name: str) -> LibMethod | None:
        entry = self.entries.get(class_name)
        return entry.methods.get(method_name) if entry else None

    def is_retaining_sink(self, class_name: str, method_name: str) -> bool:
        """Collection-style methods that capture their argument into a data structure."""
        return class_name == "List" and method_name == "add"


_TOKEN_RE = re.compile(r"resource|must_call|method|owning|notowning|void|->|[A-Za-z_][A-Za-z0-9_]*|[{}\[\](),;:]")


def load_library_spec(text: str) -> LibrarySpec:
    """Parse .libspec text; validates arities and must_call membership."""
    toks = _scan(text)
    pos = 0

    def peek() -> str:
        return toks[pos] if pos < len(toks) else ""

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(toks):
            raise SpecFormatError(f"unexpected end of spec, wanted {expected or 'a token'}")
        tok = toks[pos]
        if expected is not None and tok != expected:
            raise SpecFormatError(f"expected {expected!r}, found {tok!r}")
        pos += 1
        return tok

    def take_name() -> str:
        tok = take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            raise SpecFormatError(f"expected a name, found {tok!r}")
        return tok

    spec = LibrarySpec()
    while pos < len(toks):
        take("resource")
        cname = take_name()
        if cname in spec.entries:
            raise SpecFormatError(f"duplicate resource block for {cname}")
        take("{")
        must_call: list[str] = []
        methods: dict[str, LibMethod] = {}
        while peek() != "}":
            if peek() == "must_call":
                take()
                take(":")
                take("[")
                while peek() != "]":
                    if must_call:
                        take(",")
                    must_call.append(take_name())
                take("]")
                take(";")
            elif peek() == "method":
                take()
                mname = take_name()
                take("(")
                ownership: list[str] = []
                while peek() != ")":
                    if ownership:
                        take(",")
                    tok = take()
                    if tok not in (OWNING, NOT_OWNING):
                        raise SpecFormatError(f"parameter ownership must be owning|notowning, found {tok!r}")
                    ownership.append(tok)
                take(")")
                take("->")
                ret = take()
                if ret not in (OWNING, NOT_OWNING, "void"):
                    raise SpecFormatError(f"return ownership must be owning|notowning|void, found {ret!r}")
                take(";")
                if mname in methods:
                    raise SpecFormatError(f"duplicate method {cname}.{mname}")
                methods[mname] = LibMethod(name=mname, param_ownership=tuple(ownership), return_ownership=ret)
            else:
                raise SpecFormatError(f"expected must_call or method, found {peek()!r}")
        take("}")
        for m in must_call:
            if m not in methods:
                raise UnknownMethodInMustCall(f"{cname} lists must_call method {m} but never declares it")
        spec.entries[cname] = LibClass(name=cname, must_call=frozenset(must_call), methods=methods)
    return spec


def _scan(text: str) -> list[str]:
    toks = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            i = len(text) if j < 0 else j
            continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise SpecFormatError(f"bad token at offset {i}: {text[i:i+10]!r}")
        toks.append(m.group())
        i = m.end()
    return toks
