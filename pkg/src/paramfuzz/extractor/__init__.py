"""Offline information collection: store functions, valid values, module parameters, impact counts."""

from .impact import impact_count, store_written_fields
from .intervals import IntervalSet
from .inventory import Inventory, attribute_records, build_inventory
from .records import VALUE_KINDS, AttributeRecord, ImpactReport, ModuleParamRecord, SourceImpact, ValueSpec
from .stores import collect_module_params, identify_store_functions
from .valueflow import analyze_store, extract_valid_values

__all__ = [
    "AttributeRecord",
    "ImpactReport",
    "IntervalSet",
    "Inventory",
    "ModuleParamRecord",
    "SourceImpact",
    "VALUE_KINDS",
    "ValueSpec",
    "analyze_store",
    "attribute_records",
    "build_inventory",
    "collect_module_params",
    "extract_valid_values",
    "identify_store_functions",
    "impact_count",
    "store_written_fields",
]
