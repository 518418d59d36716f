"""Count branches and basic blocks whose control decision depends on a parameter source.

Three source classes are tracked separately: op arguments, module
parameters, and device-attribute fields (fields some store callback
writes). Within each body, taint is propagated forward to a fixpoint over
locals and written locations; the body is the boundary, as values are not
followed into other bodies. An ``if``/``switch`` whose condition is tainted
is affected, and so is every basic block inside its arms.
"""

from __future__ import annotations

from ..dmir import ast as A
from ..dmir.cfg import control_flow_graph
from .records import ImpactReport, SourceImpact


def store_written_fields(program: A.DmirProgram) -> set[tuple]:
    """Locations assigned by at least one store callback."""
    out: set[tuple] = set()
    for mod in program.modules:
        for drv in mod.drivers:
            for body in drv.bodies():
                if body.kind != "store":
                    continue
                for s in A.iter_stmts(body.block):
                    if isinstance(s, (A.Assign, A.Alloc)) and isinstance(s.target, A.FieldRef):
                        out.update(_field_keys(program, mod.name, drv.name, s.target))
    return out


def _field_keys(program: A.DmirProgram, module: str, driver: str, ref: A.FieldRef) -> list[tuple]:
    if ref.scope == "self":
        return [("field", driver, ref.name)]
    if ref.scope == "parent":
        return [("field", pd, ref.name) for pd in program.parent_drivers(driver)]
    return [("shared", module, ref.name)]


class _Taint:
    def __init__(self, program, module: str, body: A.Body, source: str, attr_fields: set) -> None:
        self.program = program
        self.module = module
        self.body = body
        self.source = source
        self.attr_fields = attr_fields
        self.args = {a for a, _ in body.args}
        self.locals: set[str] = set()
        self.locations: set[str] = set()  # lvalue text such as "self.x" written with tainted data

    def is_source(self, e) -> bool:
        if self.source == "op_args":
            return isinstance(e, A.Name) and self.body.kind == "op" and e.name in self.args
        if self.source == "module_params":
            return isinstance(e, A.ParamRef)
        if isinstance(e, A.FieldRef):
            keys = _field_keys(self.program, self.module, self.body.driver, e)
            return any(k in self.attr_fields for k in keys)
        return False

    def tainted(self, e) -> bool:
        for sub in A.iter_exprs(e):
            if self.is_source(sub):
                return True
            if isinstance(sub, A.Name) and sub.name in self.locals:
                return True
            if isinstance(sub, A.FieldRef) and sub.text in self.locations:
                return True
        return False

    def mark(self, target) -> bool:
        if isinstance(target, A.Name):
            if target.name in self.locals:
                return False
            self.locals.add(target.name)
            return True
        if target.text in self.locations:
            return False
        self.locations.add(target.text)
        return True

    def fixpoint(self) -> None:
        stmts = list(A.iter_stmts(self.body.block))
        changed = True
        while changed:
            changed = False
            for s in stmts:
                if isinstance(s, A.Assign) and self.tainted(s.value):
                    changed |= self.mark(s.target)
                elif isinstance(s, A.Let) and not s.is_helper and self.tainted(s.value):
                    changed |= self.mark(A.Name(s.names[0]))
                elif isinstance(s, A.ListIter) and self.tainted(s.source):
                    changed |= self.mark(A.Name(s.var))
                elif isinstance(s, A.ListAdd) and self.tainted(s.value):
                    changed |= self.mark(s.lst)


def impact_count(program: A.DmirProgram) -> ImpactReport:
    attr_fields = store_written_fields(program)
    report = ImpactReport()
    for source in report.per_source:
        ifs = switches = 0
        blocks: set[str] = set()
        for mod in program.modules:
            for drv in mod.drivers:
                for body in drv.bodies():
                    t = _Taint(program, mod.name, body, source, attr_fields)
                    t.fixpoint()
                    cfg = control_flow_graph(body.block)
                    by_block: dict[int, list[str]] = {}
                    for bb in cfg.blocks:
                        by_block.setdefault(bb.block_id, []).append(bb.id)
                    for s in A.iter_stmts(body.block):
                        if isinstance(s, A.If) and t.tainted(s.cond):
                            ifs += 1
                        elif isinstance(s, A.Switch) and t.tainted(s.subject):
                            switches += 1
                        else:
                            continue
                        for arm in A.child_blocks(s):
                            for inner in A.iter_blocks(arm):
                                blocks.update(by_block[inner.block_id])
        report.per_source[source] = SourceImpact(ifs, switches, len(blocks))
    return report
