from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

VALUE_KINDS = ("string_set", "uint_range", "int_range", "bool", "formatted", "any_string", "ignores_input", "undetermined")


@dataclass(frozen=True)
class ValueSpec:
    kind: str
    strings: Optional[tuple[str, ...]] = None
    lo: Optional[int] = None
    hi: Optional[int] = None
    format: Optional[str] = None
    reason: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in VALUE_KINDS:
            raise ValueError(f"unknown value kind {self.kind!r}")
        if self.kind == "string_set" and not self.strings:
            raise ValueError("string_set needs at least one string")
        if self.kind in ("uint_range", "int_range", "bool"):
            if self.lo is None or self.hi is None or self.lo > self.hi:
                raise ValueError(f"{self.kind} needs lo <= hi")
        if self.kind == "formatted" and not self.format:
            raise ValueError("formatted needs a format")
        if self.kind == "undetermined" and not self.reason:
            raise ValueError("undetermined needs a reason")

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.strings is not None:
            out["strings"] = list(self.strings)
        if self.lo is not None:
            out["lo"] = self.lo
            out["hi"] = self.hi
        if self.format is not None:
            out["format"] = self.format
        if self.reason is not None:
            out["reason"] = self.reason
        return out

    @classmethod
    def from_json(cls, d: dict) -> "ValueSpec":
        return cls(
            d["kind"],
            tuple(d["strings"]) if "strings" in d else None,
            d.get("lo"),
            d.get("hi"),
            d.get("format"),
            d.get("reason"),
        )


@dataclass(frozen=True)
class AttributeRecord:
    driver: str
    fname: str
    store_ref: int  # block id of the store callback
    writable: bool
    module: str = ""
    rel_path: str = ""  # path inside the device directory (group dirs included)
    value_spec: Optional[ValueSpec] = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.driver, self.fname)

    def to_json(self) -> dict:
        return {
            "driver": self.driver,
            "fname": self.fname,
            "module": self.module,
            "rel_path": self.rel_path,
            "store_ref": self.store_ref,
            "writable": self.writable,
            "value_spec": self.value_spec.to_json() if self.value_spec is not None else None,
        }

    @classmethod
    def from_json(cls, d: dict) -> "AttributeRecord":
        vs = d.get("value_spec")
        return cls(
            d["driver"],
            d["fname"],
            d["store_ref"],
            d["writable"],
            d.get("module", ""),
            d.get("rel_path", ""),
            ValueSpec.from_json(vs) if vs else None,
        )


@dataclass(frozen=True)
class ModuleParamRecord:
    module: str
    name: str
    ptype: str
    default: object

    def to_json(self) -> dict:
        return {"module": self.module, "name": self.name, "ptype": self.ptype, "default": self.default}

    @classmethod
    def from_json(cls, d: dict) -> "ModuleParamRecord":
        return cls(d["module"], d["name"], d["ptype"], d["default"])


SOURCES = ("op_args", "module_params", "device_attrs")


@dataclass
class SourceImpact:
    affected_if: int = 0
    affected_switch: int = 0
    affected_basic_blocks: int = 0

    def to_json(self) -> dict:
        return {
            "affected_if": self.affected_if,
            "affected_switch": self.affected_switch,
            "affected_basic_blocks": self.affected_basic_blocks,
        }


@dataclass
class ImpactReport:
    per_source: dict[str, SourceImpact] = field(default_factory=lambda: {s: SourceImpact() for s in SOURCES})

    def __getitem__(self, source: str) -> SourceImpact:
        return self.per_source[source]

    def to_json(self) -> dict:
        return {s: self.per_source[s].to_json() for s in SOURCES}

    @classmethod
    def from_json(cls, d: dict) -> "ImpactReport":
        return cls({s: SourceImpact(**d[s]) for s in SOURCES})

    def as_tuple(self) -> tuple:
        return tuple(
            (self.per_source[s].affected_if, self.per_source[s].affected_switch, self.per_source[s].affected_basic_blocks)
            for s in SOURCES
        )
