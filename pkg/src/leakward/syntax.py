"""MiniJ abstract syntax.

Node identity (``nid``) and allocation-site ids are excluded from structural
equality, so ``parse(pretty_print(p)) == p`` holds position-free. Source
positions live in ``Program.line_index`` keyed by node id, never on the nodes
themselves.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

_node_counter = itertools.count(1)


def fresh_nid() -> int:
    return next(_node_counter)


@dataclass
class Node:
    nid: int = field(default_factory=fresh_nid, compare=False, repr=False, kw_only=True)


# --- annotations -----------------------------------------------------------

MUST_CALL = "MustCall"
OWNING = "Owning"
NOT_OWNING = "NotOwning"
ENSURES_CALLED_METHODS = "EnsuresCalledMethods"

ANNOTATION_KINDS = (MUST_CALL, OWNING, NOT_OWNING, ENSURES_CALLED_METHODS)


@dataclass
class Annotation(Node):
    """One @-annotation. ``methods`` holds MustCall's list or ECM's methods;
    ``target_field`` is ECM's value= field."""

    kind: str
    methods: tuple[str, ...] = ()
    target_field: Optional[str] = None
    provenance: str = field(default="declared", compare=False)


# --- expressions -----------------------------------------------------------


@dataclass
class Expr(Node):
    pass


@dataclass
class New(Expr):
    class_name: str
    args: list["Expr"]
    site: int = field(default=-1, compare=False)


@dataclass
class Call(Expr):
    receiver: "Expr"
    method: str
    args: list["Expr"]


@dataclass
class VarRef(Expr):
    name: str


@dataclass
class FieldRef(Expr):
    receiver: "Expr"
    name: str


@dataclass
class NullLit(Expr):
    pass


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class Eq(Expr):
    """Equality test; only legal as an if/while condition."""

    lhs: "Expr"
    rhs: "Expr"
    negated: bool


# --- statements ------------------------------------------------------------


@dataclass
class Stmt(Node):
    pass


@dataclass
class Block(Node):
    stmts: list[Stmt]


@dataclass
class LocalDecl(Stmt):
    type_name: str
    name: str
    init: Optional[Expr]


@dataclass
class Assign(Stmt):
    target: Union[VarRef, FieldRef]
    value: Expr


@dataclass
class ExprStmt(Stmt):
    expr: Expr


@dataclass
class If(Stmt):
    cond: Expr
    then_block: Block
    else_block: Optional[Block]


@dataclass
class While(Stmt):
    cond: Expr
    body: Block


@dataclass
class Try(Stmt):
    body: Block
    catch_type: Optional[str]
    catch_name: Optional[str]
    catch_block: Optional[Block]
    finally_block: Optional[Block]


@dataclass
class Return(Stmt):
    value: Optional[Expr]


# --- declarations ----------------------------------------------------------


@dataclass
class Param(Node):
    type_name: str
    name: str
    annotations: list[Annotation] = field(default_factory=list)


@dataclass
class FieldDecl(Node):
    name: str
    declared_type: str
    modifiers: tuple[str, ...] = ()  # subset of private/static/final
    initializer: Optional[Expr] = None
    annotations: list[Annotation] = field(default_factory=list)

    def has(self, modifier: str) -> bool:
        return modifier in self.modifiers


@dataclass
class MethodDecl(Node):
    name: str
    params: list[Param]
    return_type: str  # class name, "void", or "" for constructors
    body: Block
    annotations: list[Annotation] = field(default_factory=list)
    modifiers: tuple[str, ...] = ()  # subset of public/private/static

    @property
    def is_static(self) -> bool:
        return "static" in self.modifiers


@dataclass
class ClassDecl(Node):
    name: str
    implements: Optional[str]
    annotations: list[Annotation]
    fields: list[FieldDecl]
    constructors: list[MethodDecl]
    methods: list[MethodDecl]

    def field_named(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def method_named(self, name: str) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def all_methods(self) -> list[MethodDecl]:
        return list(self.constructors) + list(self.methods)


@dataclass
class Program(Node):
    classes: list[ClassDecl]
    source_name: str = field(default="<memory>", compare=False)
    line_index: dict[int, tuple[int, int]] = field(default_factory=dict, compare=False)
    source_text: str = field(default="", compare=False)

    def class_named(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def pos_of(self, nid: int) -> tuple[int, int]:
        return self.line_index.get(nid, (0, 0))

    def set_pos(self, node: Node, line: int, col: int) -> None:
        self.line_index[node.nid] = (line, col)

    def inherit_pos(self, node: Node, anchor: Node) -> None:
        """Give a synthesized node the position of the original node it hangs off."""
        self.line_index[node.nid] = self.line_index.get(anchor.nid, (0, 0))


# --- traversal helpers -----------------------------------------------------


def walk_exprs(root: Union[Expr, Stmt, Block, None]) -> Iterator[Expr]:
    """All expression nodes under root, preorder."""
    if root is None:
        return
    if isinstance(root, Block):
        for s in root.stmts:
            yield from walk_exprs(s)
    elif isinstance(root, LocalDecl):
        yield from walk_exprs(root.init)
    elif isinstance(root, Assign):
        yield from walk_exprs(root.target)
        yield from walk_exprs(root.value)
    elif isinstance(root, ExprStmt):
        yield from walk_exprs(root.expr)
    elif isinstance(root, If):
        yield from walk_exprs(root.cond)
        yield from walk_exprs(root.then_block)
        yield from walk_exprs(root.else_block)
    elif isinstance(root, While):
        yield from walk_exprs(root.cond)
        yield from walk_exprs(root.body)
    elif isinstance(root, Try):
        yield from walk_exprs(root.body)
        yield from walk_exprs(root.catch_block)
        yield from walk_exprs(root.finally_block)
    elif isinstance(root, Return):
        yield from walk_exprs(root.value)
    elif isinstance(root, Expr):
        yield root
        if isinstance(root, New):
            for a in root.args:
                yield from walk_exprs(a)
        elif isinstance(root, Call):
            yield from walk_exprs(root.receiver)
            for a in root.args:
                yield from walk_exprs(a)
        elif isinstance(root, FieldRef):
            yield from walk_exprs(root.receiver)
        elif isinstance(root, Eq):
            yield from walk_exprs(root.lhs)
            yield from walk_exprs(root.rhs)


def walk_stmts(root: Union[Block, Stmt, None]) -> Iterator[Stmt]:
    """All statement nodes under root, preorder."""
    if root is None:
        return
    if isinstance(root, Block):
        for s in root.stmts:
            yield from walk_stmts(s)
        return
    yield root
    if isinstance(root, If):
        yield from walk_stmts(root.then_block)
        yield from walk_stmts(root.else_block)
    elif isinstance(root, While):
        yield from walk_stmts(root.body)
    elif isinstance(root, Try):
        yield from walk_stmts(root.body)
        yield from walk_stmts(root.catch_block)
        yield from walk_stmts(root.finally_block)


def walk_exprs_of_expr(e: Expr) -> Iterator[Expr]:
    yield from walk_exprs(ExprStmt(e))


def annotation_named(annotations: list[Annotation], kind: str) -> Optional[Annotation]:
    for a in annotations:
        if a.kind == kind:
            return a
    return None
