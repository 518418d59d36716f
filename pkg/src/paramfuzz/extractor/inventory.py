"""The inventory document written by ``paramfuzz extract``."""

from __future__ import annotations

import json
from dataclasses import replace

from ..dmir import ast as A
from ..dmir import program_hash
from .impact import impact_count
from .records import AttributeRecord, ImpactReport, ModuleParamRecord
from .stores import collect_module_params, identify_store_functions
from .valueflow import extract_valid_values

INVENTORY_VERSION = 1


def attribute_records(program: A.DmirProgram) -> list[AttributeRecord]:
    return [replace(r, value_spec=extract_valid_values(program, r)) for r in identify_store_functions(program)]


def driver_summaries(program: A.DmirProgram) -> list[dict]:
    out = []
    for mod in program.modules:
        for drv in mod.drivers:
            out.append(
                {
                    "driver": drv.name,
                    "module": mod.name,
                    "devnode": drv.devnode,
                    "ops": [{"name": op.name, "args": [[n, t] for n, t in op.args]} for op in drv.ops],
                }
            )
    out.sort(key=lambda d: d["driver"])
    return out


def build_inventory(program: A.DmirProgram) -> dict:
    return {
        "version": INVENTORY_VERSION,
        "program_hash": program_hash(program),
        "attribute_records": [r.to_json() for r in attribute_records(program)],
        "module_params": [p.to_json() for p in collect_module_params(program)],
        "impact_report": impact_count(program).to_json(),
        "drivers": driver_summaries(program),
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


class Inventory:
    """Typed view over an inventory document."""

    def __init__(self, doc: dict) -> None:
        self.doc = doc
        self.program_hash: str = doc["program_hash"]
        self.records = [AttributeRecord.from_json(d) for d in doc["attribute_records"]]
        self.params = [ModuleParamRecord.from_json(d) for d in doc["module_params"]]
        self.impact = ImpactReport.from_json(doc["impact_report"])
        self.drivers: list[dict] = doc["drivers"]

    @classmethod
    def from_program(cls, program: A.DmirProgram) -> "Inventory":
        return cls(build_inventory(program))

    def record(self, driver: str, fname: str) -> AttributeRecord:
        for r in self.records:
            if r.driver == driver and r.fname == fname:
                return r
        raise KeyError((driver, fname))
