"""In-memory /sys and /dev namespaces."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional


@dataclass
class VNode:
    path: str
    is_dir: bool
    kind: str  # dirs: root, bus, device, group, module, parameters, drivers, driver; files: attr, param, uevent, devnode
    writable: bool = False
    device: Optional[str] = None
    attr: Optional[str] = None  # attribute rel_path inside its device dir
    module: Optional[str] = None
    name: Optional[str] = None  # param or driver name
    content: str = ""
    children: dict[str, "VNode"] = field(default_factory=dict)


class VfsError(Exception):
    pass


class Vfs:
    def __init__(self) -> None:
        self.root = VNode("/", True, "root")
        self.nodes: dict[str, VNode] = {"/": self.root}
        self._pattern_cache: dict[str, list[str]] = {}

    def _add(self, node: VNode) -> VNode:
        if node.path in self.nodes:
            raise VfsError(f"path collision at {node.path}")
        parent_path, _, base = node.path.rpartition("/")
        parent = self.nodes[parent_path or "/"]
        if not parent.is_dir:
            raise VfsError(f"{parent.path} is not a directory")
        parent.children[base] = node
        self.nodes[node.path] = node
        self._pattern_cache.clear()
        return node

    def mkdir(self, path: str, kind: str, **kw) -> VNode:
        return self._add(VNode(path, True, kind, **kw))

    def ensure_dir(self, path: str, kind: str) -> VNode:
        node = self.nodes.get(path)
        if node is not None:
            return node
        return self.mkdir(path, kind)

    def create(self, path: str, kind: str, **kw) -> VNode:
        return self._add(VNode(path, False, kind, **kw))

    def lookup(self, path: str) -> Optional[VNode]:
        return self.nodes.get(path)

    def exists(self, path: str) -> bool:
        return path in self.nodes

    def is_dir(self, path: str) -> bool:
        n = self.nodes.get(path)
        return n is not None and n.is_dir

    def listdir(self, path: str) -> list[str]:
        n = self.nodes.get(path)
        if n is None or not n.is_dir:
            raise VfsError(f"not a directory: {path}")
        return sorted(n.children)

    def read(self, path: str) -> str:
        n = self.nodes.get(path)
        if n is None or n.is_dir:
            raise VfsError(f"not a file: {path}")
        return n.content

    def walk(self, top: str = "/") -> Iterator[VNode]:
        """Depth-first pre-order, children in name order."""
        stack = [self.nodes[top]]
        while stack:
            n = stack.pop()
            yield n
            if n.is_dir:
                stack.extend(n.children[c] for c in sorted(n.children, reverse=True))

    def files(self) -> list[str]:
        return sorted(p for p, n in self.nodes.items() if not n.is_dir)

    def match(self, pattern: str) -> list[str]:
        """Every file path matching ``pattern``, where ``#`` stands for a decimal number."""
        hit = self._pattern_cache.get(pattern)
        if hit is not None:
            return hit
        if "#" not in pattern:
            n = self.nodes.get(pattern)
            hit = [pattern] if n is not None and not n.is_dir else []
        else:
            rx = wildcard_regex(pattern)
            hit = [p for p in self.files() if rx.match(p)]
        self._pattern_cache[pattern] = hit
        return hit


def wildcard_regex(pattern: str) -> re.Pattern:
    return re.compile("".join("([0-9]+)" if c == "#" else re.escape(c) for c in pattern) + r"\Z")


def substitute(pattern: str, numbers: tuple[str, ...]) -> str:
    it = iter(numbers)
    return "".join(next(it, "#") if c == "#" else c for c in pattern)
