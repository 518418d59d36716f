"""Relation identification over the virtual filesystem.

Nothing here reads the DMIR program: the tree and the map are recovered
from /sys and /dev alone, the way a tool on a live system would. A
directory is a device directory when it holds a ``uevent`` file; its
parent device is the nearest enclosing device directory, or the bus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from ..vkernel.kernel import Kernel
from ..vkernel.vfs import Vfs


@dataclass
class RelationNode:
    id: str
    parent: str  # device id or bus name
    bus: str
    sysfs_path: str
    driver: str
    devname: Optional[str]
    attrs: list[str] = field(default_factory=list)  # writable attribute files in this device's directory
    children: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "parent": self.parent,
            "bus": self.bus,
            "sysfs_path": self.sysfs_path,
            "driver": self.driver,
            "devname": self.devname,
            "attrs": self.attrs,
            "children": self.children,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RelationNode":
        return cls(d["id"], d["parent"], d["bus"], d["sysfs_path"], d["driver"], d["devname"], list(d["attrs"]), list(d["children"]))


@dataclass
class RelationTree:
    roots: list[str]
    nodes: dict[str, RelationNode]

    def edges(self) -> set[tuple[str, str]]:
        return {(n.parent, n.id) for n in self.nodes.values()}

    def parent(self, dev: str) -> Optional[str]:
        p = self.nodes[dev].parent
        return p if p in self.nodes else None

    def children(self, dev: str) -> list[str]:
        return list(self.nodes[dev].children)

    def siblings(self, dev: str) -> list[str]:
        p = self.nodes[dev].parent
        return sorted(n.id for n in self.nodes.values() if n.parent == p and n.id != dev)

    def neighborhood(self, dev: str) -> list[str]:
        """The device, its parent, its children and its siblings, in that order."""
        out = [dev]
        p = self.parent(dev)
        if p is not None:
            out.append(p)
        out += self.children(dev)
        out += self.siblings(dev)
        seen: set[str] = set()
        return [d for d in out if not (d in seen or seen.add(d))]  # type: ignore[func-returns-value]

    def to_json(self) -> dict:
        return {"roots": self.roots, "nodes": [self.nodes[k].to_json() for k in sorted(self.nodes)]}

    @classmethod
    def from_json(cls, d: dict) -> "RelationTree":
        nodes = [RelationNode.from_json(n) for n in d["nodes"]]
        return cls(list(d["roots"]), {n.id: n for n in nodes})


def _parse_uevent(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        k, _, v = line.partition("=")
        out[k] = v
    return out


def build_relation_tree(state: Kernel) -> RelationTree:
    vfs: Vfs = state.vfs
    roots = [b for b in vfs.listdir("/sys") if b != "module"]
    nodes: dict[str, RelationNode] = {}

    def visit(path: str, bus: str, owner: str, owner_node: Optional[RelationNode], rel: str) -> None:
        for name in vfs.listdir(path):
            child = f"{path}/{name}"
            if vfs.is_dir(child):
                if vfs.exists(f"{child}/uevent"):
                    ev = _parse_uevent(vfs.read(f"{child}/uevent"))
                    node = RelationNode(name, owner, bus, child, ev.get("DRIVER", ""), ev.get("DEVNAME"))
                    nodes[name] = node
                    if owner_node is not None:
                        owner_node.children.append(name)
                    visit(child, bus, name, node, "")
                else:
                    visit(child, bus, owner, owner_node, f"{rel}{name}/")
            elif owner_node is not None:
                vn = vfs.lookup(child)
                if vn is not None and vn.writable:
                    owner_node.attrs.append(child)

    for bus in roots:
        visit(f"/sys/{bus}", bus, bus, None, "")
    for n in nodes.values():
        n.attrs.sort()
        n.children.sort()
    return RelationTree(roots, nodes)


@dataclass(frozen=True)
class ParamDriverEntry:
    param_path: str
    devnode_path: str
    driver: str
    device: str

    def to_json(self) -> dict:
        return {"param_path": self.param_path, "devnode_path": self.devnode_path, "driver": self.driver, "device": self.device}


@dataclass
class ParamDriverMap:
    entries: list[ParamDriverEntry]
    warnings: list[str] = field(default_factory=list)

    def for_device(self, dev: str) -> list[str]:
        return sorted({e.param_path for e in self.entries if e.device == dev})

    def to_json(self) -> list:
        return [e.to_json() for e in self.entries]

    @classmethod
    def from_json(cls, entries: list, warnings=()) -> "ParamDriverMap":
        return cls([ParamDriverEntry(**e) for e in entries], list(warnings))


def _module_of_driver(vfs: Vfs) -> dict[str, str]:
    out = {}
    for mod in vfs.listdir("/sys/module"):
        drivers = f"/sys/module/{mod}/drivers"
        if vfs.is_dir(drivers):
            for drv in vfs.listdir(drivers):
                out[drv] = mod
    return out


def map_params_to_drivers(state: Kernel, tree: Optional[RelationTree] = None) -> ParamDriverMap:
    vfs = state.vfs
    tree = tree or build_relation_tree(state)
    module_of = _module_of_driver(vfs)
    dirs_by_name: dict[str, list[RelationNode]] = {}
    for n in tree.nodes.values():
        dirs_by_name.setdefault(n.sysfs_path.rsplit("/", 1)[1], []).append(n)
    entries: list[ParamDriverEntry] = []
    warnings: list[str] = []
    for name in vfs.listdir("/dev"):
        dev_path = f"/dev/{name}"
        matches = dirs_by_name.get(name, [])
        if not matches:
            continue
        if len(matches) > 1:
            warnings.append(f"{dev_path}: {len(matches)} sysfs directories named {name!r}; skipped")
            continue
        node = matches[0]
        params = list(node.attrs)
        mod = module_of.get(node.driver)
        pdir = f"/sys/module/{mod}/parameters"
        if mod is not None and vfs.is_dir(pdir):
            params += [f"{pdir}/{p}" for p in vfs.listdir(pdir)]
        for p in sorted(params):
            entries.append(ParamDriverEntry(p, dev_path, node.driver, node.id))
    entries.sort(key=lambda e: (e.devnode_path, e.param_path))
    return ParamDriverMap(entries, warnings)


def related_params(tree: RelationTree, pmap: ParamDriverMap, device: str) -> list[str]:
    """Writable parameter files of the device's one-hop neighborhood."""
    out: set[str] = set()
    for d in tree.neighborhood(device):
        out.update(tree.nodes[d].attrs)
    out.update(pmap.for_device(device))
    return sorted(out)


@dataclass
class Relations:
    program_hash: str
    tree: RelationTree
    pmap: ParamDriverMap

    def related(self, device: str) -> list[str]:
        return related_params(self.tree, self.pmap, device)

    def to_json(self) -> dict:
        return {
            "program_hash": self.program_hash,
            "tree": self.tree.to_json(),
            "map": self.pmap.to_json(),
            "warnings": self.pmap.warnings,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Relations":
        return cls(d["program_hash"], RelationTree.from_json(d["tree"]), ParamDriverMap.from_json(d["map"], d.get("warnings", ())))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def build_relations(state: Kernel) -> Relations:
    from ..dmir import program_hash

    tree = build_relation_tree(state)
    return Relations(program_hash(state.program), tree, map_params_to_drivers(state, tree))
