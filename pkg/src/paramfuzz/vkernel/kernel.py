"""Kernel state: device tree, sysfs/dev namespaces, and the call entry points."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..dmir import ast as A
from ..dmir.cfg import flatten_attrs
from ..rng import SplitMix64
from . import values as V
from .compile import CompiledBody, Frame, compile_body
from .report import BootError, BugFound, BugReport, EngineFatal
from .vfs import Vfs, VfsError, wildcard_regex

OPEN_FLAGS = ("read", "write", "read_write")


@dataclass
class DeviceInst:
    id: str
    driver: A.DriverDecl
    module: str
    parent: Optional["DeviceInst"]
    bus: str
    sysfs_path: str
    devnode_path: Optional[str]
    fields: dict
    children: list["DeviceInst"] = field(default_factory=list)

    @property
    def parent_id(self) -> Optional[str]:
        return self.parent.id if self.parent is not None else None


class DeviceTree:
    def __init__(self, devices: dict[str, DeviceInst], buses: list[str]) -> None:
        self.nodes = devices
        self.roots = list(buses)

    def edges(self) -> set[tuple[str, str]]:
        """(parent, child) pairs; a bus name is the parent of top-level devices."""
        return {(d.parent.id if d.parent else d.bus, d.id) for d in self.nodes.values()}

    def children(self, dev_id: str) -> list[str]:
        return [c.id for c in self.nodes[dev_id].children]


class CaseCtx:
    """Per-test-case runtime: open file descriptors and the wildcard RNG."""

    __slots__ = ("fds", "wild")

    def __init__(self, wild_seed: int) -> None:
        self.fds: dict[str, str] = {}
        self.wild = SplitMix64(wild_seed)


class KernelBug(Exception):
    """A bug oracle fired during a direct (non-scheduled) call."""

    def __init__(self, report) -> None:
        super().__init__(report.title)
        self.report = report


class Kernel:
    def __init__(self, program: A.DmirProgram) -> None:
        self.program = program
        self.cov: set[int] = set()
        self.handles: dict[int, bool] = {}
        self.locks: dict = {}
        self.params: dict[str, object] = {}
        self.shared: dict[str, dict] = {}
        self.next_handle = 1
        self.verdict = None
        self.devices: dict[str, DeviceInst] = {}
        self.vfs = Vfs()
        self.stores: dict[tuple[str, str], CompiledBody] = {}
        self.shows: dict[tuple[str, str], CompiledBody] = {}
        self.ops: dict[tuple[str, str], tuple[A.OpDecl, CompiledBody]] = {}
        self.probes: dict[str, CompiledBody] = {}
        self._devnode_owner: dict[str, str] = {}
        self._pair_cache: dict[tuple[str, str], list[tuple[str, str]]] = {}
        self._compile()
        self._boot()

    # -- construction ------------------------------------------------------

    def _compile(self) -> None:
        for mod in self.program.modules:
            for drv in mod.drivers:
                for attr in flatten_attrs(drv):
                    if attr.store is not None:
                        self.stores[(drv.name, attr.fname)] = compile_body(self, mod.name, attr.store)
                    if attr.show is not None:
                        self.shows[(drv.name, attr.fname)] = compile_body(self, mod.name, attr.show)
                for op in drv.ops:
                    self.ops[(drv.name, op.name)] = (op, compile_body(self, mod.name, op.body))
                if drv.probe is not None:
                    self.probes[drv.name] = compile_body(self, mod.name, drv.probe)

    def _boot(self) -> None:
        prog = self.program
        vfs = self.vfs
        try:
            vfs.mkdir("/sys", "root")
            vfs.mkdir("/dev", "root")
            vfs.mkdir("/sys/module", "root")
            for bus in prog.buses:
                vfs.mkdir(f"/sys/{bus}", "bus")
            for mod in prog.modules:
                self.shared[mod.name] = {s.name: ([] if s.ftype == "list" else s.default) for s in mod.shared}
                vfs.mkdir(f"/sys/module/{mod.name}", "module", module=mod.name)
                if mod.params:
                    vfs.mkdir(f"/sys/module/{mod.name}/parameters", "parameters", module=mod.name)
                for p in mod.params:
                    self.params[f"{mod.name}.{p.name}"] = p.default
                    vfs.create(
                        f"/sys/module/{mod.name}/parameters/{p.name}", "param", writable=True, module=mod.name, name=p.name
                    )
                if mod.drivers:
                    vfs.mkdir(f"/sys/module/{mod.name}/drivers", "drivers", module=mod.name)
                for drv in mod.drivers:
                    vfs.mkdir(f"/sys/module/{mod.name}/drivers/{drv.name}", "driver", module=mod.name, name=drv.name)
            for decl in self._topo_order():
                self._add_device(decl)
        except VfsError as e:
            raise BootError(str(e)) from None
        for dev in self.devices.values():
            probe = self.probes.get(dev.driver.name)
            if probe is None:
                continue
            try:
                self._drive(self._run_body(probe, dev, None, 0), 0)
            except KernelBug as e:
                raise BootError(f"probe of {dev.id} crashed: {e.report.title}") from None
        self.locks.clear()
        self.cov.clear()
        self.verdict = None
        self._snapshot = self._take_snapshot()

    def _topo_order(self) -> list[A.DeviceDecl]:
        """Declaration order, except a parent always precedes its children."""
        placed: set[str] = set()
        out: list[A.DeviceDecl] = []
        by_id = self.program.device_by_id

        def place(d: A.DeviceDecl) -> None:
            if d.id in placed:
                return
            if d.parent in by_id:
                place(by_id[d.parent])
            placed.add(d.id)
            out.append(d)

        for d in self.program.devices:
            place(d)
        return out

    def _add_device(self, decl: A.DeviceDecl) -> None:
        drv = self.program.drivers[decl.driver]
        parent = self.devices.get(decl.parent)
        if parent is None:
            bus, base = decl.parent, f"/sys/{decl.parent}"
        else:
            bus, base = parent.bus, parent.sysfs_path
        path = f"{base}/{decl.id}"
        fields = {f.name: ([] if f.ftype == "list" else f.default) for f in drv.fields}
        devnode_path = None
        if decl.devnode_name is not None:
            devnode_path = f"/dev/{decl.devnode_name}"
            if devnode_path in self._devnode_owner:
                other = self._devnode_owner[devnode_path]
                raise BootError(f"devices {other!r} and {decl.id!r} both claim {devnode_path}")
            self._devnode_owner[devnode_path] = decl.id
        dev = DeviceInst(decl.id, drv, drv.module, parent, bus, path, devnode_path, fields)
        self.vfs.mkdir(path, "device", device=decl.id)
        uevent = f"DRIVER={drv.name}\n"
        if decl.devnode_name is not None:
            uevent += f"DEVNAME={decl.devnode_name}\n"
        self.vfs.create(f"{path}/uevent", "uevent", device=decl.id, content=uevent)
        for attr in flatten_attrs(drv):
            d = path
            for g in attr.group_path:
                d = f"{d}/{g}"
                self.vfs.ensure_dir(d, "group")
            self.vfs.create(f"{path}/{attr.rel_path}", "attr", writable=attr.writable, device=decl.id, attr=attr.fname)
        if devnode_path is not None:
            self.vfs.create(devnode_path, "devnode", device=decl.id)
        if parent is not None:
            parent.children.append(dev)
        self.devices[decl.id] = dev

    # -- state snapshot / reset -------------------------------------------

    def _take_snapshot(self):
        def copy(d: dict) -> dict:
            return {k: (list(v) if isinstance(v, list) else v) for k, v in d.items()}

        return (
            {i: copy(d.fields) for i, d in self.devices.items()},
            {m: copy(s) for m, s in self.shared.items()},
            dict(self.params),
            dict(self.handles),
            self.next_handle,
        )

    def reset(self) -> None:
        """Return to the post-boot state. Containers are refilled in place."""
        fields, shared, params, handles, next_handle = self._snapshot
        for i, d in self.devices.items():
            d.fields.clear()
            for k, v in fields[i].items():
                d.fields[k] = list(v) if isinstance(v, list) else v
        for m, s in self.shared.items():
            s.clear()
            for k, v in shared[m].items():
                s[k] = list(v) if isinstance(v, list) else v
        self.params.clear()
        self.params.update(params)
        self.handles.clear()
        self.handles.update(handles)
        self.next_handle = next_handle
        self.locks.clear()
        self.cov.clear()
        self.verdict = None

    def new_handle(self) -> int:
        h = self.next_handle
        self.next_handle += 1
        self.handles[h] = True
        return h

    @property
    def tree(self) -> DeviceTree:
        return DeviceTree(self.devices, self.program.buses)

    # -- path resolution ---------------------------------------------------

    def expand(self, pattern: str, pick: int) -> Optional[str]:
        cands = self.vfs.match(pattern)
        if not cands:
            return None
        return cands[pick % len(cands)]

    def devnodes(self, pattern: str) -> list[str]:
        return [p for p in self.vfs.match(pattern) if p.startswith("/dev/")]

    def mod_dev_pairs(self, param_pattern: str, dev_pattern: str) -> list[tuple[str, str]]:
        """(param file, devnode) pairs a syz_mod_dev call may pick between.

        A pair is valid when the parameter belongs to the device itself or is
        a parameter of the module that provides the device's driver.
        """
        key = (param_pattern, dev_pattern)
        hit = self._pair_cache.get(key)
        if hit is not None:
            return hit
        pairs = []
        params = self.vfs.match(param_pattern)
        for d in self.devnodes(dev_pattern):
            dev = self.devices[self.vfs.nodes[d].device]  # type: ignore[index]
            for p in params:
                node = self.vfs.nodes[p]
                if node.kind == "attr" and node.device == dev.id and node.writable:
                    pairs.append((p, d))
                elif node.kind == "param" and node.module == dev.module:
                    pairs.append((p, d))
        self._pair_cache[key] = pairs
        return pairs

    # -- call implementations (generators returning a status) --------------

    def _frame(self, dev: DeviceInst, buf, tid: int) -> Frame:
        parent = dev.parent
        return Frame(
            dev.fields,
            parent.fields if parent is not None else None,
            self.shared[dev.module],
            buf,
            tid,
            dev.id,
            parent.id if parent is not None else None,
        )

    def _run_body(self, cb: CompiledBody, dev: DeviceInst, buf, tid: int, args: Optional[dict] = None):
        f = self._frame(dev, buf, tid)
        if args:
            f.loc.update(args)
        self.cov.add(cb.entry_edge)
        if cb.is_gen:
            r = yield from cb.fn(f)
        else:
            r = cb.fn(f)
        return r or "OK"

    def gen_write(self, path: str, value: str, tid: int):
        node = self.vfs.lookup(path)
        if node is None or node.is_dir:
            return "ENOENT"
        if node.kind == "param":
            key = f"{node.module}.{node.name}"
            ptype = next(p.ptype for p in self.program.module_by_name[node.module].params if p.name == node.name)  # type: ignore[index]
            v = V.parse_param(ptype, value)
            if v is None:
                return "EINVAL"
            self.params[key] = v
            return "OK"
        if node.kind != "attr":
            return "EIO"
        if not node.writable:
            return "EIO"
        dev = self.devices[node.device]  # type: ignore[index]
        cb = self.stores[(dev.driver.name, node.attr)]  # type: ignore[index]
        return (yield from self._run_body(cb, dev, value, tid))

    def gen_op(self, dev_id: str, op_name: str, args: list, tid: int):
        dev = self.devices[dev_id]
        entry = self.ops.get((dev.driver.name, op_name))
        if entry is None:
            return "ENOENT"
        decl, cb = entry
        if len(args) != len(decl.args):
            return "EINVAL"
        bound = {}
        for (name, atype), v in zip(decl.args, args):
            if (atype == "string") != isinstance(v, str) or isinstance(v, bool):
                return "EINVAL"
            bound[name] = v
        return (yield from self._run_body(cb, dev, None, tid, bound))

    def open_path(self, pattern: str, rng: Optional[SplitMix64]) -> Optional[str]:
        """Resolve a /dev pattern to a device id; ``#`` is expanded with ``rng``."""
        cands = self.devnodes(pattern)
        if not cands:
            return None
        if len(cands) == 1 or rng is None:
            path = cands[0]
        else:
            path = cands[rng.below(len(cands))]
        return self.vfs.nodes[path].device

    def gen_call(self, call, tid: int, ctx: CaseCtx):
        kind = call.kind
        if kind == "op":
            dev_id = ctx.fds.get(call.fd)
            if dev_id is None:
                return "EBADF"
            return (yield from self.gen_op(dev_id, call.op, call.args, tid))
        if kind == "open":
            if call.flags not in OPEN_FLAGS:
                return "EINVAL"
            dev_id = self.open_path(call.path, ctx.wild)
            if dev_id is None:
                return "ENOENT"
            if call.ret:
                ctx.fds[call.ret] = dev_id
            return "OK"
        if kind == "write_param":
            path = self.expand(call.path, call.seed)
            if path is None:
                return "ENOENT"
            return (yield from self.gen_write(path, call.value, tid))
        if kind == "syz_mod_dev":
            if call.flags not in OPEN_FLAGS:
                return "EINVAL"
            pairs = self.mod_dev_pairs(call.path, call.dev)
            if not pairs:
                return "ENOENT"
            ppath, dpath = pairs[call.seed % len(pairs)]
            wst = yield from self.gen_write(ppath, call.value, tid)
            dev_id = self.vfs.nodes[dpath].device
            if call.ret:
                ctx.fds[call.ret] = dev_id  # type: ignore[assignment]
            return f"{wst}+OK"
        raise EngineFatal(f"unknown call kind {kind!r}")

    # -- direct (single-threaded) entry points -----------------------------

    def _drive(self, gen, tid: int):
        """Run a call generator to completion outside the scheduler."""
        try:
            while True:
                req = next(gen)
                if req is not None:
                    key, site = req
                    if key in self.locks:
                        # the only thread is waiting on itself
                        raise BugFound(BugReport("DEADLOCK", *site))
                    self.locks[key] = tid
        except StopIteration as stop:
            return stop.value
        except BugFound as b:
            self.verdict = b.report
            raise KernelBug(b.report) from None

    def write_param(self, path: str, value: str, tid: int = 0) -> str:
        return self._drive(self.gen_write(path, value, tid), tid)

    def open_dev(self, pattern: str, rng: Optional[SplitMix64] = None) -> str:
        """Return the device id behind ``pattern`` or the string ``"ENOENT"``."""
        dev = self.open_path(pattern, rng)
        return dev if dev is not None else "ENOENT"

    def invoke_op(self, dev_or_path: str, op: str, args: list, tid: int = 0) -> str:
        dev_id = dev_or_path
        if dev_or_path.startswith("/dev/"):
            node = self.vfs.lookup(dev_or_path)
            if node is None:
                return "ENOENT"
            dev_id = node.device  # type: ignore[assignment]
        if dev_id not in self.devices:
            return "ENOENT"
        return self._drive(self.gen_op(dev_id, op, args, tid), tid)

    def read_param(self, path: str):
        """Current value behind a module parameter or the field an attribute shows."""
        node = self.vfs.lookup(path)
        if node is None:
            raise VfsError(f"no such file {path}")
        if node.kind == "param":
            return self.params[f"{node.module}.{node.name}"]
        raise VfsError(f"{path} is not a module parameter")

    def iter_devices(self) -> Iterator[DeviceInst]:
        return iter(self.devices.values())


def boot(program: A.DmirProgram) -> Kernel:
    return Kernel(program)


__all__ = ["Kernel", "KernelBug", "DeviceInst", "DeviceTree", "CaseCtx", "boot", "wildcard_regex", "OPEN_FLAGS"]
