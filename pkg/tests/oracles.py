"""Independent reimplementations used as test oracles.

None of these import the code they check; they share only the AST, the
virtual filesystem and the scheduler entry point.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from pathlib import Path

from paramfuzz.dmir import ast as A

# -- corpus annotations ------------------------------------------------------


def expected_attrs(path: Path) -> dict[tuple[str, str], dict]:
    """(driver, fname) -> expected value spec, from ``# expect-attr:`` lines."""
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        m = re.match(r"#\s*expect-attr:\s*(\S+)\s+(\S+)\s+(\S+)\s*(.*)$", line)
        if not m:
            continue
        driver, fname, kind, rest = m.groups()
        spec: dict = {"kind": kind}
        rest = rest.strip()
        if kind in ("uint_range", "int_range"):
            lo, hi = rest.split()
            spec["lo"], spec["hi"] = int(lo), int(hi)
        elif kind == "string_set":
            spec["strings"] = rest.split("|")
        elif kind == "formatted":
            spec["format"] = rest
        out[(driver, fname)] = spec
    return out


def expected_params(path: Path) -> dict[tuple[str, str], str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        m = re.match(r"#\s*expect-param:\s*(\S+)\s+(\S+)\s+(\S+)", line)
        if m:
            out[(m.group(1), m.group(2))] = m.group(3)
    return out


# -- impact recount ------------------------------------------------------------


def _walk(stmts):
    for s in stmts:
        yield s
        for b in _arms(s):
            yield from _walk(b.stmts)


def _arms(s) -> list:
    if isinstance(s, A.If):
        return [s.then] + ([s.orelse] if s.orelse else [])
    if isinstance(s, A.Switch):
        return [b for _, b in s.cases] + ([s.default] if s.default else [])
    if isinstance(s, A.ListIter):
        return [s.body]
    return []


def _atoms(e) -> set[str]:
    if isinstance(e, A.Name):
        return {"L:" + e.name}
    if isinstance(e, A.FieldRef):
        return {"F:" + e.scope + "." + e.name}
    if isinstance(e, A.ParamRef):
        return {"P"}
    if isinstance(e, A.BinOp):
        return _atoms(e.left) | _atoms(e.right)
    if isinstance(e, A.UnOp):
        return _atoms(e.operand)
    return set()


def _key(lv) -> str:
    return "L:" + lv.name if isinstance(lv, A.Name) else "F:" + lv.scope + "." + lv.name


def _parents(program, driver: str) -> set[str]:
    ids = {d.id: d for d in program.devices}
    return {ids[d.parent].driver for d in program.devices if d.driver == driver and d.parent in ids}


def recount_impact(program) -> dict:
    """Impact counts by reachability over a def-use graph, per source class."""
    written = set()  # (module, driver, scope, name), with parent refs resolved
    for mod in program.modules:
        for drv in mod.drivers:
            for body in drv.bodies():
                if body.kind != "store":
                    continue
                for s in _walk(body.block.stmts):
                    if isinstance(s, (A.Assign, A.Alloc)) and isinstance(s.target, A.FieldRef):
                        t = s.target
                        if t.scope == "self":
                            written.add(("field", drv.name, t.name))
                        elif t.scope == "parent":
                            written.update(("field", p, t.name) for p in _parents(program, drv.name))
                        else:
                            written.add(("shared", mod.name, t.name))

    result = {}
    for source in ("op_args", "module_params", "device_attrs"):
        n_if = n_sw = 0
        seen_blocks = set()
        for mod in program.modules:
            for drv in mod.drivers:
                for bi, body in enumerate(drv.bodies()):
                    stmts = list(_walk(body.block.stmts))
                    seeds = set()
                    if source == "op_args" and body.kind == "op":
                        seeds = {"L:" + a for a, _ in body.args}
                    elif source == "module_params":
                        seeds = {"P"}
                    elif source == "device_attrs":
                        for s in stmts:
                            for e in _exprs(s):
                                for a in _atoms(e):
                                    if a.startswith("F:") and _attr_field(program, mod.name, drv.name, a, written):
                                        seeds.add(a)
                    graph: dict[str, set[str]] = {}
                    for s in stmts:
                        if isinstance(s, A.Assign):
                            dst, src = _key(s.target), _atoms(s.value)
                        elif isinstance(s, A.Let) and not isinstance(s.value, A.HelperCall):
                            dst, src = "L:" + s.names[0], _atoms(s.value)
                        elif isinstance(s, A.ListIter):
                            dst, src = "L:" + s.var, _atoms(s.source)
                        elif isinstance(s, A.ListAdd):
                            dst, src = _key(s.lst), _atoms(s.value)
                        else:
                            continue
                        for a in src:
                            graph.setdefault(a, set()).add(dst)
                    reach = set(seeds)
                    todo = deque(seeds)
                    while todo:
                        for nxt in graph.get(todo.popleft(), ()):
                            if nxt not in reach:
                                reach.add(nxt)
                                todo.append(nxt)
                    for s in stmts:
                        if isinstance(s, A.If):
                            hit = bool(_atoms(s.cond) & reach)
                            n_if += hit
                        elif isinstance(s, A.Switch):
                            hit = bool(_atoms(s.subject) & reach)
                            n_sw += hit
                        else:
                            continue
                        if hit:
                            for arm in _arms(s):
                                _collect_blocks(arm, (drv.name, bi), seen_blocks)
        result[source] = {"affected_if": n_if, "affected_switch": n_sw, "affected_basic_blocks": len(seen_blocks)}
    return result


def _exprs(s) -> list:
    if isinstance(s, A.Assign):
        return [s.value]
    if isinstance(s, A.Let):
        return [] if isinstance(s.value, A.HelperCall) else [s.value]
    if isinstance(s, A.If):
        return [s.cond]
    if isinstance(s, A.Switch):
        return [s.subject]
    if isinstance(s, (A.Use,)):
        return [s.value]
    if isinstance(s, (A.ListAdd, A.ListDel)):
        return [s.lst, s.value]
    if isinstance(s, A.ListIter):
        return [s.source]
    return []


def _attr_field(program, module: str, driver: str, atom: str, written: set) -> bool:
    scope, name = atom[2:].split(".", 1)
    if scope == "self":
        return ("field", driver, name) in written
    if scope == "parent":
        return any(("field", p, name) in written for p in _parents(program, driver))
    return ("shared", module, name) in written


def _collect_blocks(block, owner, seen: set) -> None:
    """Basic blocks of ``block`` and everything nested: one per segment between branches."""
    n_branch = sum(1 for s in block.stmts[:-1] if _arms(s) or isinstance(s, A.ListIter))
    for seg in range(1 + n_branch):
        seen.add((owner, id(block), seg))
    for s in block.stmts:
        for arm in _arms(s):
            _collect_blocks(arm, owner, seen)


# -- name join -------------------------------------------------------------------


def name_join(vfs) -> set[tuple[str, str]]:
    """(param path, devnode path) pairs by joining /dev names with /sys directory names."""
    files = vfs.files()
    device_dirs = {f.rsplit("/", 1)[0] for f in files if f.endswith("/uevent") and f.startswith("/sys/")}
    device_dirs = {d for d in device_dirs if not d.startswith("/sys/module/")}
    by_name: dict[str, list[str]] = {}
    for d in device_dirs:
        by_name.setdefault(d.rsplit("/", 1)[1], []).append(d)

    def owner(path: str) -> str:
        parts = path.split("/")
        for i in range(len(parts) - 1, 0, -1):
            cand = "/".join(parts[:i])
            if cand in device_dirs:
                return cand
        return ""

    driver_module = {}
    for f in files:
        m = re.match(r"^/sys/module/([^/]+)/drivers/([^/]+)", f)
        if m:
            driver_module[m.group(2)] = m.group(1)
    for path in list(vfs.nodes):
        m = re.match(r"^/sys/module/([^/]+)/drivers/([^/]+)$", path)
        if m:
            driver_module[m.group(2)] = m.group(1)

    out = set()
    for f in files:
        if not f.startswith("/dev/"):
            continue
        name = f[len("/dev/"):]
        dirs = by_name.get(name, [])
        if len(dirs) != 1:
            continue
        d = dirs[0]
        for p in files:
            node = vfs.lookup(p)
            if p.startswith(d + "/") and node.writable and owner(p) == d:
                out.add((p, f))
        ev = dict(line.split("=", 1) for line in vfs.read(d + "/uevent").splitlines() if "=" in line)
        mod = driver_module.get(ev.get("DRIVER", ""))
        if mod:
            for p in files:
                if p.startswith(f"/sys/module/{mod}/parameters/"):
                    out.add((p, f))
    return out


# -- interleavings by exhaustive choice strings ------------------------------


class _BitsChooser:
    def __init__(self, bits) -> None:
        self.bits = list(bits)
        self.used = 0

    def choose(self, runnable, steps) -> int:
        b = self.bits[self.used] if self.used < len(self.bits) else 0
        self.used += 1
        return b % len(runnable)


def brute_force_verdicts(kernel, case, run_case, length: int) -> tuple[set, set]:
    """Verdicts and distinct traces over every choice string of ``length`` binary digits.

    For two threads every scheduling decision is binary, so when ``length``
    covers the longest run this visits every interleaving.
    """
    verdicts, traces = set(), set()
    for bits in itertools.product((0, 1), repeat=length):
        ch = _BitsChooser(bits)
        res = run_case(kernel, case, ch)
        assert ch.used <= length, "choice string too short for this case"
        verdicts.add(res.title)
        traces.add(tuple(res.trace))
    return verdicts, traces
