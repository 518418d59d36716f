"""Syntax tree for the Driver-Model IR.

Node equality ignores source positions so that a pretty-printed program
reparses to an equal tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

PTYPES = ("uint", "int", "bool", "string")
FIELD_TYPES = ("uint", "int", "bool", "string", "handle", "list")
ARG_TYPES = ("uint", "int", "string")
RETURN_CODES = ("OK", "EINVAL", "EIO")
HELPERS = ("match_string", "kstrtouint", "kstrtoint", "kstrtobool", "scan")

COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")
ARITH = ("+", "-", "*", "/", "%")
LOGICAL = ("&&", "||")


def _pos():
    return field(default=0, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass
class IntLit:
    value: int
    line: int = _pos()


@dataclass
class BoolLit:
    value: bool
    line: int = _pos()


@dataclass
class StrLit:
    value: str
    line: int = _pos()


@dataclass
class NullLit:
    line: int = _pos()


@dataclass
class Name:
    """A local, an op argument, a list_iter variable, or ``buf``."""

    name: str
    line: int = _pos()


@dataclass
class FieldRef:
    scope: str  # "self" | "parent" | "shared"
    name: str
    line: int = _pos()

    @property
    def text(self) -> str:
        return f"{self.scope}.{self.name}"


@dataclass
class ParamRef:
    module: str
    name: str
    line: int = _pos()


@dataclass
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = _pos()


@dataclass
class UnOp:
    op: str  # "-" | "!"
    operand: "Expr"
    line: int = _pos()


Expr = Union[IntLit, BoolLit, StrLit, NullLit, Name, FieldRef, ParamRef, BinOp, UnOp]
LValue = Union[Name, FieldRef]


@dataclass
class HelperCall:
    helper: str
    strings: Optional[list[str]] = None  # match_string candidates
    fmt: Optional[str] = None  # scan format
    line: int = _pos()


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass
class Block:
    stmts: list["Stmt"]
    block_id: int = -1


@dataclass
class Assign:
    target: LValue
    value: Expr
    sid: int = 0
    line: int = _pos()


@dataclass
class Let:
    names: list[str]
    value: Union[Expr, HelperCall]
    sid: int = 0
    line: int = _pos()

    @property
    def is_helper(self) -> bool:
        return isinstance(self.value, HelperCall)


@dataclass
class If:
    cond: Expr
    then: Block
    orelse: Optional[Block]
    edge_true: int = -1
    edge_false: int = -1
    sid: int = 0
    line: int = _pos()


@dataclass
class Switch:
    subject: Expr
    cases: list[tuple[int, Block]]
    default: Optional[Block]
    case_edges: list[int] = field(default_factory=list)
    default_edge: int = -1
    sid: int = 0
    line: int = _pos()


@dataclass
class Return:
    code: str
    sid: int = 0
    line: int = _pos()


@dataclass
class Lock:
    ref: LValue  # Name => module-global lock, FieldRef => per-device lock
    sid: int = 0
    line: int = _pos()


@dataclass
class Unlock:
    ref: LValue
    sid: int = 0
    line: int = _pos()


@dataclass
class Alloc:
    target: LValue
    sid: int = 0
    line: int = _pos()


@dataclass
class Free:
    target: LValue
    sid: int = 0
    line: int = _pos()


@dataclass
class Use:
    value: Expr
    sid: int = 0
    line: int = _pos()


@dataclass
class ListAdd:
    lst: LValue
    value: Expr
    sid: int = 0
    line: int = _pos()


@dataclass
class ListDel:
    lst: LValue
    value: Expr
    sid: int = 0
    line: int = _pos()


@dataclass
class ListIter:
    source: LValue  # Name("buf") iterates the bytes of the input string
    var: str
    body: Block
    edge_body: int = -1
    edge_exit: int = -1
    sid: int = 0
    line: int = _pos()


@dataclass
class Yield:
    sid: int = 0
    line: int = _pos()


Stmt = Union[Assign, Let, If, Switch, Return, Lock, Unlock, Alloc, Free, Use, ListAdd, ListDel, ListIter, Yield]
BRANCHING = (If, Switch, ListIter)


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass
class Body:
    """A unit of driver code: a store/show callback, an op, or a probe."""

    kind: str  # "store" | "show" | "op" | "probe"
    driver: str
    name: str  # attr file name, op name, or "probe"
    block: Block
    entry_edge: int = -1
    args: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class ParamDecl:
    name: str
    ptype: str
    default: object
    line: int = _pos()


@dataclass
class SharedDecl:
    name: str
    ftype: str
    default: object
    line: int = _pos()


@dataclass
class FieldDecl:
    name: str
    ftype: str
    default: object
    line: int = _pos()


@dataclass
class AttrDecl:
    fname: str
    mode: str  # "rw" | "ro"
    store: Optional[Body] = None
    show: Optional[Body] = None
    group_path: tuple[str, ...] = ()
    line: int = _pos()

    @property
    def writable(self) -> bool:
        return self.mode == "rw"

    @property
    def rel_path(self) -> str:
        return "/".join(self.group_path + (self.fname,))


@dataclass
class AttrGroupDecl:
    name: str
    members: list[Union[AttrDecl, "AttrGroupDecl"]]
    line: int = _pos()


@dataclass
class OpDecl:
    name: str
    args: list[tuple[str, str]]
    body: Body
    line: int = _pos()


@dataclass
class DriverDecl:
    name: str
    module: str
    devnode: bool
    fields: list[FieldDecl]
    attrs: list[Union[AttrDecl, AttrGroupDecl]]
    ops: list[OpDecl]
    probe: Optional[Body] = None
    line: int = _pos()

    def field_named(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def op_named(self, name: str) -> Optional[OpDecl]:
        for op in self.ops:
            if op.name == name:
                return op
        return None

    def bodies(self) -> Iterator[Body]:
        yield from _member_bodies(self.attrs)
        for op in self.ops:
            yield op.body
        if self.probe is not None:
            yield self.probe


def _member_bodies(members) -> Iterator[Body]:
    for m in members:
        if isinstance(m, AttrGroupDecl):
            yield from _member_bodies(m.members)
        else:
            if m.store is not None:
                yield m.store
            if m.show is not None:
                yield m.show


@dataclass
class ModuleDecl:
    name: str
    params: list[ParamDecl]
    drivers: list[DriverDecl]
    shared: list[SharedDecl] = field(default_factory=list)
    line: int = _pos()


@dataclass
class DeviceDecl:
    id: str
    driver: str
    parent: str
    devnode_name: Optional[str] = None
    line: int = _pos()


@dataclass
class DmirProgram:
    modules: list[ModuleDecl]
    buses: list[str]
    devices: list[DeviceDecl]

    def __post_init__(self) -> None:
        self.reindex()

    def reindex(self) -> None:
        self.drivers: dict[str, DriverDecl] = {}
        for m in self.modules:
            for d in m.drivers:
                self.drivers[d.name] = d
        self.module_by_name = {m.name: m for m in self.modules}
        self.device_by_id = {d.id: d for d in self.devices}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DmirProgram):
            return NotImplemented
        return (self.modules, self.buses, self.devices) == (other.modules, other.buses, other.devices)

    def bodies(self) -> Iterator[Body]:
        for m in self.modules:
            for d in m.drivers:
                yield from d.bodies()

    def children_of(self, parent: str) -> list[DeviceDecl]:
        return [d for d in self.devices if d.parent == parent]

    def parent_drivers(self, driver: str) -> list[str]:
        """Drivers bound to the parents of this driver's devices."""
        out = []
        for dev in self.devices:
            if dev.driver != driver:
                continue
            parent = self.device_by_id.get(dev.parent)
            if parent is not None and parent.driver not in out:
                out.append(parent.driver)
        return sorted(out)


def iter_stmts(block: Block) -> Iterator[Stmt]:
    """Pre-order walk over every statement nested in ``block``."""
    for s in block.stmts:
        yield s
        for child in child_blocks(s):
            yield from iter_stmts(child)


def child_blocks(stmt: Stmt) -> list[Block]:
    if isinstance(stmt, If):
        return [stmt.then] + ([stmt.orelse] if stmt.orelse is not None else [])
    if isinstance(stmt, Switch):
        return [b for _, b in stmt.cases] + ([stmt.default] if stmt.default is not None else [])
    if isinstance(stmt, ListIter):
        return [stmt.body]
    return []


def iter_blocks(block: Block) -> Iterator[Block]:
    yield block
    for s in block.stmts:
        for child in child_blocks(s):
            yield from iter_blocks(child)


def iter_exprs(expr) -> Iterator[Expr]:
    yield expr
    if isinstance(expr, BinOp):
        yield from iter_exprs(expr.left)
        yield from iter_exprs(expr.right)
    elif isinstance(expr, UnOp):
        yield from iter_exprs(expr.operand)


def stmt_exprs(stmt: Stmt) -> list:
    """Expressions read by ``stmt`` itself (not by nested blocks)."""
    if isinstance(stmt, Assign):
        return [stmt.value]
    if isinstance(stmt, Let):
        return [] if stmt.is_helper else [stmt.value]
    if isinstance(stmt, If):
        return [stmt.cond]
    if isinstance(stmt, Switch):
        return [stmt.subject]
    if isinstance(stmt, Use):
        return [stmt.value]
    if isinstance(stmt, (ListAdd, ListDel)):
        return [stmt.lst, stmt.value]
    if isinstance(stmt, ListIter):
        return [stmt.source]
    if isinstance(stmt, Free):
        return [stmt.target]
    return []
