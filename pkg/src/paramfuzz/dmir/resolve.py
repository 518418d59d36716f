"""Name resolution, well-formedness checks and deterministic id numbering."""

from __future__ import annotations

from . import ast as A
from .errors import ResolveError

RESERVED_BUSES = ("module",)


def _dup(names, what, line=0):
    seen = set()
    for n in names:
        if n in seen:
            raise ResolveError(f"duplicate {what} {n!r}", line)
        seen.add(n)


def flatten_members(members) -> list[A.AttrDecl]:
    out: list[A.AttrDecl] = []
    for m in members:
        if isinstance(m, A.AttrGroupDecl):
            out.extend(flatten_members(m.members))
        else:
            out.append(m)
    return out


def resolve(program: A.DmirProgram) -> None:
    _dup(program.buses, "bus")
    for b in program.buses:
        if b in RESERVED_BUSES:
            raise ResolveError(f"bus name {b!r} is reserved")
    _dup([m.name for m in program.modules], "module")
    _dup([d.name for m in program.modules for d in m.drivers], "driver")
    _dup([d.id for d in program.devices], "device")
    program.reindex()

    for dev in program.devices:
        if dev.id in program.buses:
            raise ResolveError(f"device id {dev.id!r} collides with a bus name", dev.line)
        if dev.driver not in program.drivers:
            raise ResolveError(f"device {dev.id!r}: unknown driver {dev.driver!r}", dev.line)
        if dev.parent not in program.device_by_id and dev.parent not in program.buses:
            raise ResolveError(f"device {dev.id!r}: unknown parent {dev.parent!r}", dev.line)
    for dev in program.devices:
        seen = {dev.id}
        cur = dev.parent
        while cur in program.device_by_id:
            if cur in seen:
                raise ResolveError(f"device {dev.id!r}: parent cycle", dev.line)
            seen.add(cur)
            cur = program.device_by_id[cur].parent
    for dev in program.devices:
        drv = program.drivers[dev.driver]
        if drv.devnode and dev.devnode_name is None:
            raise ResolveError(f"device {dev.id!r}: driver {drv.name!r} needs a devnode name", dev.line)
        if not drv.devnode and dev.devnode_name is not None:
            raise ResolveError(f"device {dev.id!r}: driver {drv.name!r} has no devnode", dev.line)

    for mod in program.modules:
        _dup([p.name for p in mod.params], f"param in module {mod.name}")
        _dup([s.name for s in mod.shared], f"shared variable in module {mod.name}")
        for drv in mod.drivers:
            _dup([f.name for f in drv.fields], f"field in driver {drv.name}", drv.line)
            _dup([o.name for o in drv.ops], f"op in driver {drv.name}", drv.line)
            attrs = flatten_members(drv.attrs)
            _dup([a.fname for a in attrs], f"attribute in driver {drv.name}", drv.line)
            _check_group_names(drv.attrs, drv)
            for body in drv.bodies():
                _BodyChecker(program, mod, drv, body).check()


def _check_group_names(members, drv) -> None:
    names = []
    for m in members:
        names.append(m.name if isinstance(m, A.AttrGroupDecl) else m.fname)
        if isinstance(m, A.AttrGroupDecl):
            _check_group_names(m.members, drv)
    _dup(names, f"sysfs entry in driver {drv.name}", drv.line)


class _BodyChecker:
    def __init__(self, program, mod, drv, body: A.Body) -> None:
        self.program = program
        self.mod = mod
        self.drv = drv
        self.body = body
        self.args = {a for a, _ in body.args}
        self.locals = set()
        for s in A.iter_stmts(body.block):
            if isinstance(s, A.Let):
                self.locals.update(s.names)
            elif isinstance(s, A.ListIter):
                self.locals.add(s.var)

    def fail(self, msg: str, node) -> ResolveError:
        where = f"{self.drv.name}.{self.body.name} ({self.body.kind})"
        return ResolveError(f"{where}: {msg}", getattr(node, "line", 0))

    def check(self) -> None:
        for s in A.iter_stmts(self.body.block):
            self.stmt(s)

    def field_type(self, ref: A.FieldRef):
        if ref.scope == "self":
            f = self.drv.field_named(ref.name)
            if f is None:
                raise self.fail(f"unknown field self.{ref.name}", ref)
            return f.ftype
        if ref.scope == "shared":
            for s in self.mod.shared:
                if s.name == ref.name:
                    return s.ftype
            raise self.fail(f"unknown shared variable shared.{ref.name}", ref)
        # parent.x
        devices = [d for d in self.program.devices if d.driver == self.drv.name]
        ftype = None
        if not devices:
            for d in self.program.drivers.values():
                f = d.field_named(ref.name)
                if f is not None:
                    return f.ftype
            raise self.fail(f"no driver declares parent field {ref.name!r}", ref)
        for dev in devices:
            parent = self.program.device_by_id.get(dev.parent)
            if parent is None:
                raise self.fail(f"parent.{ref.name} used but device {dev.id!r} sits directly on a bus", ref)
            f = self.program.drivers[parent.driver].field_named(ref.name)
            if f is None:
                raise self.fail(f"parent driver {parent.driver!r} has no field {ref.name!r}", ref)
            ftype = f.ftype
        return ftype

    def name(self, n: A.Name, writing: bool = False) -> None:
        if n.name == "buf":
            if self.body.kind != "store":
                raise self.fail("buf is only defined inside store blocks", n)
            if writing:
                raise self.fail("buf is read-only", n)
            return
        if n.name not in self.locals and n.name not in self.args:
            raise self.fail(f"unknown name {n.name!r}", n)

    def expr(self, e) -> None:
        for sub in A.iter_exprs(e):
            if isinstance(sub, A.Name):
                self.name(sub)
            elif isinstance(sub, A.FieldRef):
                self.field_type(sub)
            elif isinstance(sub, A.ParamRef):
                mod = self.program.module_by_name.get(sub.module)
                if mod is None or all(p.name != sub.name for p in mod.params):
                    raise self.fail(f"unknown module parameter param.{sub.module}.{sub.name}", sub)

    def lvalue(self, lv, writing: bool = True):
        if isinstance(lv, A.Name):
            self.name(lv, writing=writing)
            return None
        return self.field_type(lv)

    def list_ref(self, lv) -> None:
        if isinstance(lv, A.Name):
            raise self.fail(f"{lv.name!r} is not a list", lv)
        if self.field_type(lv) != "list":
            raise self.fail(f"{lv.text} is not a list", lv)

    def stmt(self, s) -> None:
        if isinstance(s, A.Assign):
            ftype = self.lvalue(s.target)
            if ftype == "list":
                raise self.fail("lists cannot be assigned", s)
            self.expr(s.value)
        elif isinstance(s, A.Let):
            if s.is_helper:
                h = s.value
                if h.helper == "scan":
                    from .parser import scan_arity

                    if scan_arity(h.fmt) != len(s.names):
                        raise self.fail(f"scan format {h.fmt!r} binds {scan_arity(h.fmt)} names", s)
                elif len(s.names) != 1:
                    raise self.fail("helper binds exactly one name", s)
            else:
                self.expr(s.value)
        elif isinstance(s, A.If):
            self.expr(s.cond)
        elif isinstance(s, A.Switch):
            self.expr(s.subject)
        elif isinstance(s, (A.Lock, A.Unlock)):
            if isinstance(s.ref, A.FieldRef) and s.ref.scope == "parent":
                for dev in self.program.devices:
                    if dev.driver == self.drv.name and dev.parent not in self.program.device_by_id:
                        raise self.fail(f"parent lock used but device {dev.id!r} sits directly on a bus", s)
        elif isinstance(s, (A.Alloc, A.Free)):
            ftype = self.lvalue(s.target)
            if ftype is not None and ftype != "handle":
                raise self.fail(f"{s.target.text} is not a handle", s)
        elif isinstance(s, A.Use):
            self.expr(s.value)
        elif isinstance(s, (A.ListAdd, A.ListDel)):
            self.list_ref(s.lst)
            self.expr(s.value)
        elif isinstance(s, A.ListIter):
            if isinstance(s.source, A.Name) and s.source.name == "buf":
                self.name(s.source)
            else:
                self.list_ref(s.source)


def assign_ids(program: A.DmirProgram) -> None:
    """Number blocks, edges and statements in canonical declaration order.

    Bodies are visited module by module, driver by driver; within a driver
    attribute callbacks come first (depth-first through groups, store before
    show), then ops, then the probe. The numbering therefore depends only on
    the program structure, never on formatting.
    """
    counters = {"block": 0, "edge": 0}

    def new(kind: str) -> int:
        v = counters[kind]
        counters[kind] += 1
        return v

    for body in program.bodies():
        body.entry_edge = new("edge")
        sid = [0]

        def number(block: A.Block) -> None:
            block.block_id = new("block")
            for s in block.stmts:
                sid[0] += 1
                s.sid = sid[0]
                if isinstance(s, A.If):
                    s.edge_true = new("edge")
                    s.edge_false = new("edge")
                    number(s.then)
                    if s.orelse is not None:
                        number(s.orelse)
                elif isinstance(s, A.Switch):
                    s.case_edges = [new("edge") for _ in s.cases]
                    s.default_edge = new("edge")
                    for _, b in s.cases:
                        number(b)
                    if s.default is not None:
                        number(s.default)
                elif isinstance(s, A.ListIter):
                    s.edge_body = new("edge")
                    s.edge_exit = new("edge")
                    number(s.body)

        number(body.block)
    program.edge_count = counters["edge"]
    program.block_count = counters["block"]
