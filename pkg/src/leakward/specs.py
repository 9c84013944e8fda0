"""Resource-management specification sets.

A SpecSet aggregates @MustCall, field ownership, and @EnsuresCalledMethods
facts for user classes, whether declared in source, inferred, or injected.
Library classes are covered by LibrarySpec, not by SpecSet.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import syntax as sx
from .errors import UnknownClass
from .libspec import LibrarySpec

OWNING = "owning"
NOT_OWNING = "notowning"


@dataclass(frozen=True)
class MustCallSet:
    methods: frozenset[str]
    source: str  # library | declared | inferred | injected

    def __bool__(self) -> bool:
        return bool(self.methods)


EMPTY_MUST_CALL = MustCallSet(methods=frozenset(), source="declared")


@dataclass
class EnsuresEntry:
    field_name: str
    methods: tuple[str, ...]
    provenance: str = "declared"


@dataclass
class SpecSet:
    class_mustcall: dict[str, MustCallSet] = field(default_factory=dict)
    field_ownership: dict[tuple[str, str], str] = field(default_factory=dict)
    field_provenance: dict[tuple[str, str], str] = field(default_factory=dict)
    method_ensures: dict[tuple[str, str], list[EnsuresEntry]] = field(default_factory=dict)

    @classmethod
    def from_declared(cls, program: sx.Program) -> "SpecSet":
        """Collect the annotations already written in source."""
        specs = cls()
        for c in program.classes:
            ann = sx.annotation_named(c.annotations, sx.MUST_CALL)
            if ann is not None:
                specs.class_mustcall[c.name] = MustCallSet(frozenset(ann.methods), source="declared")
            for f in c.fields:
                if sx.annotation_named(f.annotations, sx.OWNING):
                    specs.field_ownership[(c.name, f.name)] = OWNING
                    specs.field_provenance[(c.name, f.name)] = "declared"
                elif sx.annotation_named(f.annotations, sx.NOT_OWNING):
                    specs.field_ownership[(c.name, f.name)] = NOT_OWNING
                    specs.field_provenance[(c.name, f.name)] = "declared"
            for m in c.all_methods():
                for a in m.annotations:
                    if a.kind == sx.ENSURES_CALLED_METHODS:
                        specs.method_ensures.setdefault((c.name, m.name), []).append(
                            EnsuresEntry(field_name=a.target_field or "", methods=a.methods, provenance="declared")
                        )
        return specs

    def ownership(self, class_name: str, field_name: str) -> str:
        return self.field_ownership.get((class_name, field_name), NOT_OWNING)

    def copy(self) -> "SpecSet":
        out = SpecSet()
        out.class_mustcall = dict(self.class_mustcall)
        out.field_ownership = dict(self.field_ownership)
        out.field_provenance = dict(self.field_provenance)
        out.method_ensures = {k: list(v) for k, v in self.method_ensures.items()}
        return out

    # --- JSON wire format (External Interfaces) ---

    def to_json(self) -> dict:
        classes = {
            name: {"mustCall": sorted(mc.methods)}
            for name, mc in sorted(self.class_mustcall.items())
            if mc.methods
        }
        fields = {
            f"{c}.{f}": own for (c, f), own in sorted(self.field_ownership.items())
        }
        ensures = {}
        for (c, m), entries in sorted(self.method_ensures.items()):
            ensures[f"{c}.{m}"] = [{"field": e.field_name, "methods": sorted(e.methods)} for e in entries]
        return {"classes": classes, "fields": fields, "ensures": ensures}

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "SpecSet":
        specs = cls()
        for name, entry in data.get("classes", {}).items():
            specs.class_mustcall[name] = MustCallSet(frozenset(entry.get("mustCall", [])), source="inferred")
        for key, own in data.get("fields", {}).items():
            c, f = key.split(".", 1)
            specs.field_ownership[(c, f)] = own
            specs.field_provenance[(c, f)] = "inferred"
        for key, entries in data.get("ensures", {}).items():
            c, m = key.split(".", 1)
            specs.method_ensures[(c, m)] = [
                EnsuresEntry(field_name=e["field"], methods=tuple(e["methods"]), provenance="inferred")
                for e in entries
            ]
        return specs


def must_call_of(class_name: str, specs: SpecSet, libspec: LibrarySpec, program: sx.Program | None = None) -> MustCallSet:
    """Required finalizers of a class: library spec for library classes,
    @MustCall (declared or inferred) for user classes, else empty."""
    if program is not None and program.class_named(class_name) is not None:
        return specs.class_mustcall.get(class_name, EMPTY_MUST_CALL)
    if libspec.has_class(class_name):
        return MustCallSet(libspec.must_call(class_name), source="library")
    if class_name in specs.class_mustcall:
        return specs.class_mustcall[class_name]
    if program is not None and class_name not in BUILTIN_VALUE_TYPES:
        raise UnknownClass(class_name)
    return EMPTY_MUST_CALL


BUILTIN_VALUE_TYPES = frozenset({"int", "String", "Exception", "void", "?", "AutoCloseable"})


def is_resource_type(class_name: str, specs: SpecSet, libspec: LibrarySpec) -> bool:
    if libspec.has_class(class_name):
        return bool(libspec.must_call(class_name))
    return bool(specs.class_mustcall.get(class_name, EMPTY_MUST_CALL).methods)


def resource_must_call(class_name: str, specs: SpecSet, libspec: LibrarySpec) -> frozenset[str]:
    if libspec.has_class(class_name):
        return libspec.must_call(class_name)
    return specs.class_mustcall.get(class_name, EMPTY_MUST_CALL).methods


def method_return_ownership(method: sx.MethodDecl) -> str:
    """Returns default to owning, matching RLC; @NotOwning on the method overrides."""
    if sx.annotation_named(method.annotations, sx.NOT_OWNING):
        return NOT_OWNING
    return OWNING


def param_ownership(param: sx.Param) -> str:
    """Parameters default to non-owning; @Owning transfers the obligation."""
    if sx.annotation_named(param.annotations, sx.OWNING):
        return OWNING
    return NOT_OWNING
