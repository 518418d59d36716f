"""Store-function identification and module parameter collection."""

from __future__ import annotations

from ..dmir import ast as A
from .records import AttributeRecord, ModuleParamRecord


def identify_store_functions(program: A.DmirProgram) -> list[AttributeRecord]:
    """Pair every writable attribute with its store callback.

    Walks each driver's attribute declarations; a group is a structure whose
    sub-fields are visited recursively, so attributes at any nesting depth
    are found. Read-only attributes are skipped.
    """
    out: list[AttributeRecord] = []

    def visit(module: str, driver: str, decl, path: tuple[str, ...]) -> None:
        if isinstance(decl, A.AttrGroupDecl):
            for sub in decl.members:
                visit(module, driver, sub, path + (decl.name,))
            return
        if decl.mode != "rw" or decl.store is None:
            return
        rel = "/".join(path + (decl.fname,))
        out.append(AttributeRecord(driver, decl.fname, decl.store.block.block_id, True, module, rel))

    for mod in program.modules:
        for drv in mod.drivers:
            for decl in drv.attrs:
                visit(mod.name, drv.name, decl, ())
    out.sort(key=lambda r: (r.driver, r.fname))
    return out


def collect_module_params(program: A.DmirProgram) -> list[ModuleParamRecord]:
    out = [ModuleParamRecord(m.name, p.name, p.ptype, p.default) for m in program.modules for p in m.params]
    out.sort(key=lambda r: (r.module, r.name))
    return out
