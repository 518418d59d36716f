"""Descriptors: declarative templates the fuzzer instantiates into calls."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .gens import Gen

DESC_KINDS = ("open_dev", "driver_op", "write_param", "syz_mod_dev")
ARG_ROLES = ("param_path", "param_val", "dev_path", "rng_seed", "flags", "op_arg")
CALL_KIND = {"open_dev": "open", "driver_op": "op", "write_param": "write_param", "syz_mod_dev": "syz_mod_dev"}
NAME_PREFIX = {"open_dev": "open", "driver_op": "op", "write_param": "write_param", "syz_mod_dev": "syz_mod_dev"}


class GenError(Exception):
    pass


@dataclass(frozen=True)
class ArgSpec:
    name: str
    role: str
    gen: Gen

    def __post_init__(self) -> None:
        if self.role not in ARG_ROLES:
            raise ValueError(f"unknown argument role {self.role!r}")


@dataclass(frozen=True)
class Descriptor:
    name: str
    kind: str
    owner: str  # driver name, or "module:<m>" for module parameters
    target: str  # attribute file, op name, parameter name, or "" for open / syz_mod_dev
    arg_specs: tuple[ArgSpec, ...] = ()
    resource: Optional[str] = None  # handle type produced or consumed
    produces_handle: bool = False
    consumes_handle: bool = False

    def __post_init__(self) -> None:
        if self.kind not in DESC_KINDS:
            raise ValueError(f"unknown descriptor kind {self.kind!r}")
        if not self.name.startswith(NAME_PREFIX[self.kind] + "$"):
            raise ValueError(f"descriptor {self.name!r} does not match kind {self.kind}")
        if self.kind == "driver_op" and not self.consumes_handle:
            raise ValueError("driver_op descriptors consume a handle")
        if self.kind in ("open_dev", "syz_mod_dev") and not self.produces_handle:
            raise ValueError(f"{self.kind} descriptors produce a handle")
        if (self.produces_handle or self.consumes_handle) and not self.resource:
            raise ValueError("handle descriptors need a resource type")

    def arg(self, role: str) -> Optional[ArgSpec]:
        for a in self.arg_specs:
            if a.role == role:
                return a
        return None

    def op_args(self) -> list[ArgSpec]:
        return [a for a in self.arg_specs if a.role == "op_arg"]

    @property
    def call_kind(self) -> str:
        return CALL_KIND[self.kind]


@dataclass
class DescriptorSet:
    """Descriptors plus the annotations the mutator needs, keyed by name."""

    program_hash: str
    descriptors: list[Descriptor]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.by_name = {d.name: d for d in self.descriptors}
        if len(self.by_name) != len(self.descriptors):
            raise GenError("duplicate descriptor names")

    def of_kind(self, *kinds: str) -> list[Descriptor]:
        return [d for d in self.descriptors if d.kind in kinds]

    def filtered(self, kinds) -> "DescriptorSet":
        keep = [d for d in self.descriptors if d.kind in kinds]
        return DescriptorSet(self.program_hash, keep, self.meta)
