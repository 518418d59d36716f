"""Syscall-description generation: write_param, open, op and syz_mod_dev templates."""

import json
from pathlib import Path

from .gens import HOSTILE_RATE, Gen, from_value_spec
from .generate import dumps_meta, generalize, generate
from .model import ARG_ROLES, DESC_KINDS, ArgSpec, Descriptor, DescriptorSet, GenError
from .szp import parse, render


def meta_path(szp_path) -> Path:
    p = Path(szp_path)
    name = p.name[: -len(".szp")] if p.name.endswith(".szp") else p.name
    return p.with_name(name + ".meta.json")


def load(szp_path) -> DescriptorSet:
    """Read a ``.szp`` file and the ``.meta.json`` written next to it."""
    descs = parse(Path(szp_path).read_text(encoding="utf-8"))
    meta = json.loads(meta_path(szp_path).read_text(encoding="utf-8"))
    return DescriptorSet(meta["program_hash"], descs, meta)


def for_program(program) -> DescriptorSet:
    """Run extraction, relation building and generation in memory."""
    from ..extractor import Inventory
    from ..relations import build_relations
    from ..vkernel import boot

    return generate(Inventory.from_program(program), build_relations(boot(program)))


__all__ = [
    "ARG_ROLES",
    "DESC_KINDS",
    "HOSTILE_RATE",
    "ArgSpec",
    "Descriptor",
    "DescriptorSet",
    "Gen",
    "GenError",
    "dumps_meta",
    "for_program",
    "from_value_spec",
    "generalize",
    "generate",
    "load",
    "meta_path",
    "parse",
    "render",
]
