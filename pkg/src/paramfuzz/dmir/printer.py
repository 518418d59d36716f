"""Canonical pretty-printer; ``parse(pretty(p)) == p`` for every program."""

from __future__ import annotations

from . import ast as A
from .lexer import escape

_PREC = {"||": 1, "&&": 2, **{op: 3 for op in A.COMPARISONS}, "+": 4, "-": 4, "*": 5, "/": 5, "%": 5}
_IND = "  "


def _lit(value, ftype: str) -> str:
    if ftype == "bool":
        return "true" if value else "false"
    if ftype == "string":
        return f'"{escape(value)}"'
    if ftype == "handle":
        return "null"
    return str(value)


def expr(e, parent_prec: int = 0) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value) if e.value >= 0 or parent_prec == 0 else f"({e.value})"
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.StrLit):
        return f'"{escape(e.value)}"'
    if isinstance(e, A.NullLit):
        return "null"
    if isinstance(e, A.Name):
        return e.name
    if isinstance(e, A.FieldRef):
        return e.text
    if isinstance(e, A.ParamRef):
        return f"param.{e.module}.{e.name}"
    if isinstance(e, A.UnOp):
        return f"{e.op}{expr(e.operand, 9)}"
    if isinstance(e, A.BinOp):
        p = _PREC[e.op]
        # left-associative: the right operand needs parens at equal precedence
        left_prec = p + 1 if e.op in A.COMPARISONS else p
        s = f"{expr(e.left, left_prec)} {e.op} {expr(e.right, p + 1)}"
        return f"({s})" if p < parent_prec else s
    raise TypeError(f"not an expression: {e!r}")


def _helper(h: A.HelperCall) -> str:
    if h.helper == "match_string":
        items = ", ".join(f'"{escape(s)}"' for s in h.strings or [])
        return f"match_string(buf, [{items}])"
    if h.helper == "scan":
        return f'scan(buf, "{escape(h.fmt or "")}")'
    return f"{h.helper}(buf)"


def block(b: A.Block, depth: int) -> list[str]:
    out = []
    for s in b.stmts:
        out.extend(stmt(s, depth))
    return out


def _braced(head: str, b: A.Block, depth: int) -> list[str]:
    pad = _IND * depth
    return [f"{pad}{head}{{"] + block(b, depth + 1) + [f"{pad}}}"]


def stmt(s, depth: int) -> list[str]:
    pad = _IND * depth
    if isinstance(s, A.Assign):
        return [f"{pad}{expr(s.target)} = {expr(s.value)};"]
    if isinstance(s, A.Let):
        rhs = _helper(s.value) if s.is_helper else expr(s.value)
        return [f"{pad}let {', '.join(s.names)} = {rhs};"]
    if isinstance(s, A.If):
        lines = _braced(f"if ({expr(s.cond)}) ", s.then, depth)
        if s.orelse is not None:
            lines[-1] += " else {"
            lines += block(s.orelse, depth + 1) + [f"{pad}}}"]
        return lines
    if isinstance(s, A.Switch):
        lines = [f"{pad}switch ({expr(s.subject)}) {{"]
        for val, b in s.cases:
            lines += _braced(f"case {val}: ", b, depth + 1)
        if s.default is not None:
            lines += _braced("default: ", s.default, depth + 1)
        return lines + [f"{pad}}}"]
    if isinstance(s, A.Return):
        return [f"{pad}return {s.code};"]
    if isinstance(s, (A.Lock, A.Unlock, A.Alloc, A.Free)):
        kw = type(s).__name__.lower()
        ref = s.ref if isinstance(s, (A.Lock, A.Unlock)) else s.target
        return [f"{pad}{kw}({expr(ref)});"]
    if isinstance(s, A.Use):
        return [f"{pad}use({expr(s.value)});"]
    if isinstance(s, A.ListAdd):
        return [f"{pad}list_add({expr(s.lst)}, {expr(s.value)});"]
    if isinstance(s, A.ListDel):
        return [f"{pad}list_del({expr(s.lst)}, {expr(s.value)});"]
    if isinstance(s, A.ListIter):
        return _braced(f"list_iter({expr(s.source)}) as {s.var} ", s.body, depth)
    if isinstance(s, A.Yield):
        return [f"{pad}yield;"]
    raise TypeError(f"not a statement: {s!r}")


def _members(members, depth: int) -> list[str]:
    pad = _IND * depth
    out = []
    for m in members:
        if isinstance(m, A.AttrGroupDecl):
            out.append(f"{pad}group {m.name} {{")
            out += _members(m.members, depth + 1)
            out.append(f"{pad}}}")
            continue
        out.append(f'{pad}attr "{escape(m.fname)}" {m.mode} {{')
        if m.store is not None:
            out += _braced("store ", m.store.block, depth + 1)
        if m.show is not None:
            out += _braced("show ", m.show.block, depth + 1)
        out.append(f"{pad}}}")
    return out


def pretty(program: A.DmirProgram) -> str:
    out: list[str] = []
    for b in program.buses:
        out.append(f"bus {b};")
    for m in program.modules:
        out.append(f"module {m.name} {{")
        for p in m.params:
            out.append(f"{_IND}param {p.name}: {p.ptype} = {_lit(p.default, p.ptype)};")
        for s in m.shared:
            default = "" if s.ftype == "list" else f" = {_lit(s.default, s.ftype)}"
            out.append(f"{_IND}shared {s.name}: {s.ftype}{default};")
        for d in m.drivers:
            out.append(f"{_IND}driver {d.name}{' devnode' if d.devnode else ''} {{")
            for f in d.fields:
                default = "" if f.ftype == "list" else f" = {_lit(f.default, f.ftype)}"
                out.append(f"{_IND * 2}field {f.name}: {f.ftype}{default};")
            out += _members(d.attrs, 2)
            for op in d.ops:
                args = ", ".join(f"{n}: {t}" for n, t in op.args)
                out += _braced(f"op {op.name}({args}) ", op.body.block, 2)
            if d.probe is not None:
                out += _braced("probe ", d.probe.block, 2)
            out.append(f"{_IND}}}")
        out.append("}")
    for dev in program.devices:
        tail = f', devnode="{escape(dev.devnode_name)}"' if dev.devnode_name is not None else ""
        out.append(f"device {dev.id}: driver={dev.driver}, parent={dev.parent}{tail};")
    return "\n".join(out) + "\n"
