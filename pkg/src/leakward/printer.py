"""Deterministic MiniJ pretty-printer.

The printer is the single source of truth for patched output: unchanged
subtrees print byte-identically across calls, and parse(pretty_print(p))
is structurally equal to p.
"""

from __future__ import annotations

from . import syntax as sx

INDENT = "  "


def pretty_print(program: sx.Program) -> str:
    lines: list[str] = []
    for cls in program.classes:
        _print_class(cls, lines)
    return "\n".join(lines) + "\n"


def _ann_text(a: sx.Annotation) -> str:
    if a.kind == sx.ENSURES_CALLED_METHODS:
        methods = ", ".join(f'"{m}"' for m in a.methods)
        return f'@EnsuresCalledMethods(value="{a.target_field}", methods={methods})'
    if a.kind == sx.MUST_CALL:
        methods = ", ".join(f'"{m}"' for m in a.methods)
        return f"@MustCall({methods})"
    return f"@{a.kind}"


def _print_class(cls: sx.ClassDecl, lines: list[str]) -> None:
    for a in cls.annotations:
        lines.append(_ann_text(a))
    impl = f" implements {cls.implements}" if cls.implements else ""
    lines.append(f"class {cls.name}{impl} {{")
    for f in cls.fields:
        lines.append(INDENT + _field_text(f))
    for ctor in cls.constructors:
        _print_method(ctor, cls.name, lines, is_ctor=True)
    for m in cls.methods:
        _print_method(m, cls.name, lines, is_ctor=False)
    lines.append("}")


def _field_text(f: sx.FieldDecl) -> str:
    parts = [_ann_text(a) for a in f.annotations]
    parts += [m for m in ("private", "static", "final") if m in f.modifiers]
    parts += [f.declared_type, f.name]
    text = " ".join(parts)
    if f.initializer is not None:
        text += f" = {expr_text(f.initializer)}"
    return text + ";"


def _print_method(m: sx.MethodDecl, class_name: str, lines: list[str], is_ctor: bool) -> None:
    for a in m.annotations:
        lines.append(INDENT + _ann_text(a))
    params = ", ".join(_param_text(p) for p in m.params)
    mods = [w for w in ("public", "private", "static") if w in m.modifiers]
    head = " ".join(mods)
    if is_ctor:
        sig = f"{class_name}({params})"
    else:
        sig = f"{m.return_type} {m.name}({params})"
    prefix = f"{head} " if head else ""
    lines.append(f"{INDENT}{prefix}{sig} {{")
    _print_block_stmts(m.body, lines, 2)
    lines.append(INDENT + "}")


def _param_text(p: sx.Param) -> str:
    anns = "".join(_ann_text(a) + " " for a in p.annotations)
    return f"{anns}{p.type_name} {p.name}"


def _print_block_stmts(block: sx.Block, lines: list[str], depth: int) -> None:
    pad = INDENT * depth
    for s in block.stmts:
        if isinstance(s, sx.LocalDecl):
            init = f" = {expr_text(s.init)}" if s.init is not None else ""
            lines.append(f"{pad}{s.type_name} {s.name}{init};")
        elif isinstance(s, sx.Assign):
            lines.append(f"{pad}{expr_text(s.target)} = {expr_text(s.value)};")
        elif isinstance(s, sx.ExprStmt):
            lines.append(f"{pad}{expr_text(s.expr)};")
        elif isinstance(s, sx.Return):
            lines.append(f"{pad}return {expr_text(s.value)};" if s.value is not None else f"{pad}return;")
        elif isinstance(s, sx.If):
            lines.append(f"{pad}if ({expr_text(s.cond)}) {{")
            _print_block_stmts(s.then_block, lines, depth + 1)
            if s.else_block is not None:
                lines.append(f"{pad}}} else {{")
                _print_block_stmts(s.else_block, lines, depth + 1)
            lines.append(f"{pad}}}")
        elif isinstance(s, sx.While):
            lines.append(f"{pad}while ({expr_text(s.cond)}) {{")
            _print_block_stmts(s.body, lines, depth + 1)
            lines.append(f"{pad}}}")
        elif isinstance(s, sx.Try):
            lines.append(f"{pad}try {{")
            _print_block_stmts(s.body, lines, depth + 1)
            if s.catch_block is not None:
                lines.append(f"{pad}}} catch ({s.catch_type} {s.catch_name}) {{")
                _print_block_stmts(s.catch_block, lines, depth + 1)
            if s.finally_block is not None:
                lines.append(f"{pad}}} finally {{")
                _print_block_stmts(s.finally_block, lines, depth + 1)
            lines.append(f"{pad}}}")
        else:  # pragma: no cover
            raise AssertionError(f"unprintable statement {s!r}")


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")


def expr_text(e: sx.Expr) -> str:
    if isinstance(e, sx.New):
        args = ", ".join(expr_text(a) for a in e.args)
        return f"new {e.class_name}({args})"
    if isinstance(e, sx.Call):
        args = ", ".join(expr_text(a) for a in e.args)
        return f"{expr_text(e.receiver)}.{e.method}({args})"
    if isinstance(e, sx.VarRef):
        return e.name
    if isinstance(e, sx.FieldRef):
        return f"{expr_text(e.receiver)}.{e.name}"
    if isinstance(e, sx.NullLit):
        return "null"
    if isinstance(e, sx.IntLit):
        return str(e.value)
    if isinstance(e, sx.StrLit):
        return f'"{_escape(e.value)}"'
    if isinstance(e, sx.Eq):
        op = "!=" if e.negated else "=="
        return f"{expr_text(e.lhs)} {op} {expr_text(e.rhs)}"
    raise AssertionError(f"unprintable expression {e!r}")  # pragma: no cover
