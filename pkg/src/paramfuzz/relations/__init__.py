"""Device relation tree and parameter-to-driver mapping, recovered from the virtual sysfs."""

from .model import (
    ParamDriverEntry,
    ParamDriverMap,
    RelationTree,
    Relations,
    build_relation_tree,
    build_relations,
    map_params_to_drivers,
    related_params,
)

__all__ = [
    "ParamDriverEntry",
    "ParamDriverMap",
    "RelationTree",
    "Relations",
    "build_relation_tree",
    "build_relations",
    "map_params_to_drivers",
    "related_params",
]
