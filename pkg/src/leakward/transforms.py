"""Semantics-preserving code transformations.

Three rewrites reshape code so inference and repair see clearer ownership:

  finalize_fields   adds `final` to private fields assigned exactly once, at
                    declaration or in constructors; a lone assignment inside a
                    try gets the temp-variable rewrite (assign a fresh temp in
                    the try, copy it to the field in a finally);
  field_to_local    demotes a private field read by a single method into a
                    local of that method, shrinking the value's lifetime;
  inject_finalizers adds `implements AutoCloseable` plus a close() method to
                    warning-flagged wrapper classes that allocate a resource
                    in a constructor, store it in a field, and never dispose
                    it.

Each returns a fresh Program plus an EditLog whose entries replay to the same
output.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field as dc_field
from typing import Optional

from . import cfg as C
from . import syntax as sx
from .checker import Warning, stores_to_field
from .inference import disposes
from .libspec import LibrarySpec
from .specs import SpecSet, resource_must_call


@dataclass
class EditEntry:
    transform: str
    class_name: str
    member: str
    description: str
    nodes: list[int] = dc_field(default_factory=list)
    meta: dict = dc_field(default_factory=dict)

    def to_json(self) -> dict:
        # node ids are process-local handles into the in-memory AST; the wire
        # form carries only their count so reports stay byte-reproducible
        return {
            "transform": self.transform,
            "class": self.class_name,
            "member": self.member,
            "description": self.description,
            "touchedNodes": len(self.nodes),
            "meta": self.meta,
        }


@dataclass
class EditLog:
    entries: list[EditEntry] = dc_field(default_factory=list)

    def to_json(self) -> list:
        return [e.to_json() for e in self.entries]

    def extend(self, other: "EditLog") -> None:
        self.entries.extend(other.entries)


class FreshNames:
    """Deterministic collision-free identifiers, one counter per file."""

    def __init__(self, program: sx.Program):
        self.used = set()
        for cls in program.classes:
            self.used.add(cls.name)
            for f in cls.fields:
                self.used.add(f.name)
            for m in cls.all_methods():
                self.used.add(m.name)
                for p in m.params:
                    self.used.add(p.name)
                for s in sx.walk_stmts(m.body):
                    if isinstance(s, sx.LocalDecl):
                        self.used.add(s.name)
        self.counter = 0

    def next(self, hint: str = "tmp") -> str:
        while True:
            self.counter += 1
            name = f"__lw_{hint}{self.counter}"
            if name not in self.used:
                self.used.add(name)
                return name


# --- finalize_fields ---------------------------------------------------------


def finalize_fields(program: sx.Program, libspec: Optional[LibrarySpec] = None) -> tuple[sx.Program, EditLog]:
    libspec = libspec or LibrarySpec()
    out = copy.deepcopy(program)
    log = EditLog()
    fresh = FreshNames(out)
    for cls in out.classes:
        for fld in cls.fields:
            if fld.has("final") or not fld.has("private"):
                continue
            if not _finalize_eligible(out, cls, fld, libspec):
                continue
            _apply_finalize(out, cls, fld, fresh, log)
    return out, log


def _finalize_eligible(program: sx.Program, cls: sx.ClassDecl, fld: sx.FieldDecl, libspec: LibrarySpec) -> bool:
    method_writers = [m for m in cls.methods if stores_to_field(m, fld.name)]
    if method_writers:
        return False
    ctor_writers = [c for c in cls.constructors if stores_to_field(c, fld.name)]
    if fld.has("static"):
        return fld.initializer is not None and not ctor_writers
    if fld.initializer is not None:
        return not ctor_writers
    if not ctor_writers or len(ctor_writers) != len(cls.constructors):
        return False  # some constructor leaves the field unassigned
    for ctor in cls.constructors:
        if not _writes_exactly_once_per_normal_path(program, cls, ctor, fld.name, libspec):
            return False
    return True


def _writes_exactly_once_per_normal_path(
    program: sx.Program, cls: sx.ClassDecl, ctor: sx.MethodDecl, field_name: str, libspec: LibrarySpec
) -> bool:
    cfg = C.lower(program, cls, ctor, libspec)
    stores = [
        i
        for i, ins in enumerate(cfg.nodes)
        if isinstance(ins, C.StoreField) and ins.field == field_name and ins.field_class == cls.name
    ]
    if not stores:
        return False
    # max <= 1: no store reaches another store (or itself through a cycle)
    for a in stores:
        reach: set[int] = set()
        work = list(cfg.succs(a))
        while work:
            n = work.pop()
            if n in reach:
                continue
            reach.add(n)
            work.extend(cfg.succs(n))
        if any(b in reach for b in stores):
            return False
    # min >= 1 along pure-normal paths: exit unreachable once stores are removed
    blocked = set(stores)
    reach = set()
    work = [cfg.entry]
    while work:
        n = work.pop()
        if n in reach or n in blocked:
            continue
        reach.add(n)
        for (f, t, k) in cfg.edges:
            if f == n and k == C.NORMAL and t not in blocked:
                work.append(t)
    return cfg.exit not in reach


def _apply_finalize(
    program: sx.Program, cls: sx.ClassDecl, fld: sx.FieldDecl, fresh: FreshNames, log: EditLog
) -> None:
    touched = [fld.nid]
    rewrites = []
    for ctor in cls.constructors:
        store = next(iter(stores_to_field(ctor, fld.name)), None)
        if store is None:
            continue
        enclosing_try = _enclosing_try(ctor.body, store)
        if enclosing_try is not None:
            rewrites.append((ctor, store, enclosing_try))
    for ctor, store, try_stmt in rewrites:
        temp = fresh.next(hint=fld.name)
        touched += _temp_rewrite(program, ctor, store, try_stmt, fld, temp)
    fld.modifiers = tuple([m for m in fld.modifiers] + ["final"])
    log.entries.append(
        EditEntry(
            transform="finalize_field",
            class_name=cls.name,
            member=fld.name,
            description=f"added final to {cls.name}.{fld.name}"
            + (" with try/finally temp rewrite" if rewrites else ""),
            nodes=touched,
            meta={"temp_rewrites": len(rewrites)},
        )
    )


def _enclosing_try(block: sx.Block, target: sx.Stmt) -> Optional[sx.Try]:
    """Innermost try whose body (not catch/finally) contains target."""

    def search(b: sx.Block, trail: list[sx.Try]) -> Optional[list[sx.Try]]:
        for s in b.stmts:
            if s is target:
                return list(trail)
            if isinstance(s, sx.If):
                for sub in (s.then_block, s.else_block):
                    if sub is not None:
                        r = search(sub, trail)
                        if r is not None:
                            return r
            elif isinstance(s, sx.While):
                r = search(s.body, trail)
                if r is not None:
                    return r
            elif isinstance(s, sx.Try):
                r = search(s.body, trail + [s])
                if r is not None:
                    return r
                for sub in (s.catch_block, s.finally_block):
                    if sub is not None:
                        r = search(sub, trail)
                        if r is not None:
                            return r
        return None

    trail = search(block, [])
    if not trail:
        return None
    return trail[-1]


def _temp_rewrite(
    program: sx.Program, ctor: sx.MethodDecl, store: sx.Assign, try_stmt: sx.Try, fld: sx.FieldDecl, temp: str
) -> list[int]:
    """Null-initialized temp before the try, assign the temp inside the try,
    copy the temp into the field in a (possibly new) finally."""
    null_init = sx.NullLit()
    temp_decl = sx.LocalDecl(type_name=fld.declared_type, name=temp, init=null_init)
    idx = _stmt_index(ctor.body, try_stmt)
    assert idx is not None
    ctor.body.stmts.insert(idx, temp_decl)
    # retarget the original store
    store.target = sx.VarRef(name=temp)
    field_assign = sx.Assign(target=sx.VarRef(name=fld.name), value=sx.VarRef(name=temp))
    if try_stmt.finally_block is None:
        try_stmt.finally_block = sx.Block(stmts=[field_assign])
    else:
        try_stmt.finally_block.stmts.append(field_assign)
    for node in (null_init, temp_decl, store.target, field_assign, field_assign.target, field_assign.value):
        program.inherit_pos(node, try_stmt)
    if try_stmt.finally_block is not None:
        program.inherit_pos(try_stmt.finally_block, try_stmt)
    return [temp_decl.nid, field_assign.nid]


def _stmt_index(block: sx.Block, stmt: sx.Stmt) -> Optional[int]:
    for i, s in enumerate(block.stmts):
        if s is stmt:
            return i
    return None


# --- field_to_local ----------------------------------------------------------


def field_to_local(program: sx.Program, libspec: Optional[LibrarySpec] = None) -> tuple[sx.Program, EditLog]:
    libspec = libspec or LibrarySpec()
    out = copy.deepcopy(program)
    log = EditLog()
    for cls in out.classes:
        for fld in list(cls.fields):
            target = _demote_target(cls, fld)
            if target is None:
                continue
            _apply_demote(out, cls, fld, target, log)
    return out, log


def _reads_of_field(method: sx.MethodDecl, cls: sx.ClassDecl, field_name: str) -> list[sx.Expr]:
    shadowed = any(p.name == field_name for p in method.params) or any(
        isinstance(s, sx.LocalDecl) and s.name == field_name for s in sx.walk_stmts(method.body)
    )
    write_targets = {s.target.nid for s in stores_to_field(method, field_name)}
    reads = []
    for e in sx.walk_exprs(method.body):
        if e.nid in write_targets:
            continue
        if isinstance(e, sx.FieldRef) and e.name == field_name and isinstance(e.receiver, sx.VarRef) and e.receiver.name == C.THIS:
            reads.append(e)
        elif isinstance(e, sx.VarRef) and e.name == field_name and not shadowed:
            reads.append(e)
    return reads


def _demote_target(cls: sx.ClassDecl, fld: sx.FieldDecl) -> Optional[sx.MethodDecl]:
    if not fld.has("private") or fld.initializer is not None:
        return None
    readers = [m for m in cls.all_methods() if _reads_of_field(m, cls, fld.name)]
    writers = [m for m in cls.all_methods() if stores_to_field(m, fld.name)]
    if len(readers) > 1 or len(writers) != 1:
        return None
    if readers and readers[0] is not writers[0]:
        return None
    m = writers[0]
    # the first write must be a top-level statement preceding every read
    stores = stores_to_field(m, fld.name)
    anchor = stores[0]
    if anchor not in m.body.stmts:
        return None
    anchor_idx = m.body.stmts.index(anchor)
    read_nids = {e.nid for e in _reads_of_field(m, cls, fld.name)}
    for i, s in enumerate(m.body.stmts):
        if i >= anchor_idx:
            break
        if any(e.nid in read_nids for e in sx.walk_exprs(s)):
            return None
    if any(e.nid in read_nids for e in sx.walk_exprs_of_expr(anchor.value)):
        return None
    return m


def _apply_demote(program: sx.Program, cls: sx.ClassDecl, fld: sx.FieldDecl, method: sx.MethodDecl, log: EditLog) -> None:
    stores = stores_to_field(method, fld.name)
    anchor = stores[0]
    decl = sx.LocalDecl(type_name=fld.declared_type, name=fld.name, init=anchor.value)
    program.inherit_pos(decl, anchor)
    idx = method.body.stmts.index(anchor)
    method.body.stmts[idx] = decl
    _rewrite_this_refs(program, method.body, fld.name)
    cls.fields.remove(fld)
    log.entries.append(
        EditEntry(
            transform="field_to_local",
            class_name=cls.name,
            member=fld.name,
            description=f"demoted {cls.name}.{fld.name} to a local of {method.name}",
            nodes=[decl.nid],
            meta={"method": method.name},
        )
    )


def _rewrite_this_refs(program: sx.Program, block: sx.Block, field_name: str) -> None:
    """Replace this.f reads/writes with bare f references."""

    def fix_expr(e: sx.Expr) -> sx.Expr:
        if isinstance(e, sx.FieldRef) and e.name == field_name and isinstance(e.receiver, sx.VarRef) and e.receiver.name == C.THIS:
            v = sx.VarRef(name=field_name)
            program.inherit_pos(v, e)
            return v
        if isinstance(e, sx.New):
            e.args = [fix_expr(a) for a in e.args]
        elif isinstance(e, sx.Call):
            e.receiver = fix_expr(e.receiver)
            e.args = [fix_expr(a) for a in e.args]
        elif isinstance(e, sx.FieldRef):
            e.receiver = fix_expr(e.receiver)
        elif isinstance(e, sx.Eq):
            e.lhs = fix_expr(e.lhs)
            e.rhs = fix_expr(e.rhs)
        return e

    def fix_stmt(s: sx.Stmt) -> None:
        if isinstance(s, sx.LocalDecl) and s.init is not None:
            s.init = fix_expr(s.init)
        elif isinstance(s, sx.Assign):
            s.target = fix_expr(s.target)  # type: ignore[assignment]
            s.value = fix_expr(s.value)
        elif isinstance(s, sx.ExprStmt):
            s.expr = fix_expr(s.expr)
        elif isinstance(s, sx.Return) and s.value is not None:
            s.value = fix_expr(s.value)
        elif isinstance(s, sx.If):
            s.cond = fix_expr(s.cond)
            fix_block(s.then_block)
            if s.else_block:
                fix_block(s.else_block)
        elif isinstance(s, sx.While):
            s.cond = fix_expr(s.cond)
            fix_block(s.body)
        elif isinstance(s, sx.Try):
            fix_block(s.body)
            if s.catch_block:
                fix_block(s.catch_block)
            if s.finally_block:
                fix_block(s.finally_block)

    def fix_block(b: sx.Block) -> None:
        for s in b.stmts:
            fix_stmt(s)

    fix_block(block)


# --- inject_finalizers -------------------------------------------------------


def inject_finalizers(
    program: sx.Program,
    warnings: list[Warning],
    specs: Optional[SpecSet] = None,
    libspec: Optional[LibrarySpec] = None,
) -> tuple[sx.Program, EditLog]:
    """Add `implements AutoCloseable` and a close() method to classes where a
    first-pass warning flags a constructor allocation stored into an instance
    field no method disposes. Warning-driven by design."""
    libspec = libspec or LibrarySpec()
    specs = specs or SpecSet.from_declared(program)
    out = copy.deepcopy(program)
    log = EditLog()
    for cls in out.classes:
        if cls.method_named("close") is not None:
            continue
        flagged = _warned_ctor_fields(out, cls, warnings, specs, libspec)
        if not flagged:
            continue
        undisposed = []
        for fname, wids in flagged:
            if not any(
                disposes(C.lower(out, cls, m, libspec), fname, specs, libspec) for m in cls.methods
            ):
                undisposed.append((fname, wids))
        if not undisposed:
            continue
        _apply_inject(out, cls, undisposed, specs, libspec, log)
    return out, log


def _warned_ctor_fields(
    program: sx.Program, cls: sx.ClassDecl, warnings: list[Warning], specs: SpecSet, libspec: LibrarySpec
) -> list[tuple[str, list[str]]]:
    """Instance fields of cls receiving a warned constructor allocation, in
    field declaration order, with the driving warning ids."""
    ws = [
        w
        for w in warnings
        if w.kind == "UnsatisfiedObligation"
        and w.class_name == cls.name
        and w.method_name.startswith("<init>#")
        and w.anchor_kind == "new"
    ]
    if not ws:
        return []
    hits: dict[str, list[str]] = {}
    for ctor in cls.constructors:
        cfg = C.lower(program, cls, ctor, libspec)
        sites = {ins.site: i for i, ins in enumerate(cfg.nodes) if isinstance(ins, C.Alloc)}
        for w in ws:
            if w.site not in sites:
                continue
            node = sites[w.site]
            alloc = cfg.nodes[node]
            taintmap = _taint_from(cfg, node, alloc.dst)  # type: ignore[union-attr]
            for i, ins in enumerate(cfg.nodes):
                if (
                    isinstance(ins, C.StoreField)
                    and ins.recv == C.THIS
                    and ins.field_class == cls.name
                    and ins.src in taintmap.get(i, frozenset())
                ):
                    fld = cls.field_named(ins.field)
                    if fld is not None and not fld.has("static"):
                        hits.setdefault(ins.field, []).append(w.id)
    order = {f.name: i for i, f in enumerate(cls.fields)}
    return sorted(((f, sorted(set(ids))) for f, ids in hits.items()), key=lambda kv: order.get(kv[0], 99))


def _taint_from(cfg: C.Cfg, start_node: int, start_local: str) -> dict[int, frozenset[str]]:
    from .escape import taint_fixpoint

    return taint_fixpoint(cfg, start_node, start_local)


def _apply_inject(
    program: sx.Program,
    cls: sx.ClassDecl,
    fields_with_ids: list[tuple[str, list[str]]],
    specs: SpecSet,
    libspec: LibrarySpec,
    log: EditLog,
) -> None:
    stmts: list[sx.Stmt] = []
    guarded = []
    for fname, _ids in fields_with_ids:
        fld = cls.field_named(fname)
        assert fld is not None
        always_assigned = all(
            _writes_exactly_once_per_normal_path(program, cls, ctor, fname, libspec) for ctor in cls.constructors
        ) and bool(cls.constructors)
        calls: list[sx.Stmt] = []
        for d in sorted(resource_must_call(fld.declared_type, specs, libspec)):
            call = sx.ExprStmt(expr=sx.Call(receiver=sx.VarRef(name=fname), method=d, args=[]))
            program.inherit_pos(call, cls)
            program.inherit_pos(call.expr, cls)
            calls.append(call)
        if always_assigned:
            stmts.extend(calls)
        else:
            guarded.append(fname)
            guard = sx.If(
                cond=sx.Eq(lhs=sx.VarRef(name=fname), rhs=sx.NullLit(), negated=True),
                then_block=sx.Block(stmts=calls),
                else_block=None,
            )
            program.inherit_pos(guard, cls)
            stmts.append(guard)
    body = sx.Block(stmts=stmts)
    close = sx.MethodDecl(
        name="close", params=[], return_type="void", body=body, annotations=[], modifiers=("public",)
    )
    program.inherit_pos(close, cls)
    program.inherit_pos(body, cls)
    for node in sx.walk_stmts(body):
        program.inherit_pos(node, cls)
    for node in sx.walk_exprs(body):
        program.inherit_pos(node, cls)
    cls.methods.append(close)
    implements_set = False
    if cls.implements is None:
        cls.implements = "AutoCloseable"
        implements_set = True
    log.entries.append(
        EditEntry(
            transform="inject_finalizer",
            class_name=cls.name,
            member="close",
            description=f"injected close() covering {', '.join(f for f, _ in fields_with_ids)}",
            nodes=[close.nid],
            meta={
                "fields": [f for f, _ in fields_with_ids],
                "warning_ids": {f: ids for f, ids in fields_with_ids},
                "guarded": guarded,
                "implements_set": implements_set,
            },
        )
    )


# --- replay -------------------------------------------------------------------


def replay(program: sx.Program, log: EditLog, libspec: Optional[LibrarySpec] = None, specs: Optional[SpecSet] = None) -> sx.Program:
    """Re-apply a recorded edit log to the original input, reproducing the
    transformed output (the transforms are deterministic given their targets)."""
    libspec = libspec or LibrarySpec()
    out = copy.deepcopy(program)
    fresh = FreshNames(out)
    sublog = EditLog()
    for entry in log.entries:
        cls = out.class_named(entry.class_name)
        if cls is None:
            continue
        if entry.transform == "finalize_field":
            fld = cls.field_named(entry.member)
            if fld is not None and not fld.has("final"):
                _apply_finalize(out, cls, fld, fresh, sublog)
        elif entry.transform == "field_to_local":
            fld = cls.field_named(entry.member)
            if fld is not None:
                m = _demote_target(cls, fld)
                if m is not None:
                    _apply_demote(out, cls, fld, m, sublog)
        elif entry.transform == "inject_finalizer":
            if cls.method_named("close") is None:
                pairs = [(f, entry.meta.get("warning_ids", {}).get(f, [])) for f in entry.meta.get("fields", [])]
                _apply_inject(out, cls, pairs, specs or SpecSet.from_declared(out), libspec, sublog)
    return out
