"""Descriptor generation from an inventory and a relations document."""

from __future__ import annotations

import json
import re
from collections import defaultdict

from ..extractor.inventory import Inventory
from ..relations import Relations
from ..vkernel.values import U32_MAX, S32_MAX, S32_MIN
from ..vkernel.vfs import wildcard_regex
from . import gens as G
from .model import ArgSpec, Descriptor, DescriptorSet, GenError

_UNSAFE = re.compile(r"[^A-Za-z0-9_]")


def _ident(s: str) -> str:
    return _UNSAFE.sub("_", s)


def generalize(paths: list[str], universe: set[str]) -> list[str]:
    """Merge instance paths into one ``#`` pattern when that is exact.

    Only components that differ between instances are generalized, and only
    by turning digit runs into ``#``. The pattern is kept when it matches
    exactly the given paths among all known files; otherwise the concrete
    paths are returned as alternatives.
    """
    paths = sorted(set(paths))
    if len(paths) <= 1:
        return paths
    split = [p.split("/") for p in paths]
    if len({len(s) for s in split}) == 1:
        comps = []
        for column in zip(*split):
            if len(set(column)) == 1:
                comps.append(column[0])
                continue
            generalized = {re.sub(r"[0-9]+", "#", c) for c in column}
            if len(generalized) != 1:
                break
            comps.append(generalized.pop())
        else:
            pattern = "/".join(comps)
            rx = wildcard_regex(pattern)
            if {u for u in universe if rx.fullmatch(u)} == set(paths):
                return [pattern]
    return paths


def _op_arg_gen(atype: str) -> G.Gen:
    if atype == "uint":
        return G.IntGen(0, U32_MAX)
    if atype == "int":
        return G.IntGen(S32_MIN, S32_MAX)
    return G.StringGen()


def generate(inventory: Inventory, relations: Relations) -> DescriptorSet:
    if inventory.program_hash != relations.program_hash:
        raise GenError(
            f"inventory and relations describe different programs ({inventory.program_hash[:12]} vs {relations.program_hash[:12]})"
        )
    tree = relations.tree
    nodes_by_driver: dict[str, list] = defaultdict(list)
    for n in sorted(tree.nodes.values(), key=lambda n: n.id):
        nodes_by_driver[n.driver].append(n)
    param_paths = {
        (p.module, p.name): f"/sys/module/{p.module}/parameters/{p.name}" for p in inventory.params
    }
    universe = {a for n in tree.nodes.values() for a in n.attrs} | set(param_paths.values())
    seed_gen = G.IntGen(0, U32_MAX)

    fname_drivers: dict[str, set[str]] = defaultdict(set)
    for r in inventory.records:
        fname_drivers[_ident(r.fname)].add(r.driver)

    descs: list[Descriptor] = []
    meta_wp: dict[str, dict] = {}
    param_desc: dict[str, str] = {}
    device_of_param: dict[str, str | None] = {}
    skipped: list[str] = []
    driver_params: dict[str, list[str]] = defaultdict(list)  # driver -> write_param names
    module_params: dict[str, list[str]] = defaultdict(list)  # module -> write_param names

    for r in inventory.records:
        instances = []
        for n in nodes_by_driver.get(r.driver, []):
            p = f"{n.sysfs_path}/{r.rel_path}"
            if p in n.attrs:
                instances.append((p, n.id))
        if not instances:
            skipped.append(f"{r.driver}/{r.fname}: no device instance")
            continue
        base = _ident(r.fname)
        name = f"write_param${base}" if len(fname_drivers[base]) == 1 else f"write_param${r.driver}_{base}"
        paths = [p for p, _ in instances]
        args = (
            ArgSpec("path", "param_path", G.PathsGen(generalize(paths, universe))),
            ArgSpec("val", "param_val", G.from_value_spec(r.value_spec)),
            ArgSpec("seed", "rng_seed", seed_gen),
        )
        descs.append(Descriptor(name, "write_param", r.driver, r.fname, args))
        meta_wp[name] = {"instances": sorted(paths), "value_kind": r.value_spec.kind if r.value_spec else None}
        for p, dev in instances:
            param_desc[p] = name
            device_of_param[p] = dev
        driver_params[r.driver].append(name)

    for p in inventory.params:
        path = param_paths[(p.module, p.name)]
        name = f"write_param$module_{_ident(p.module)}_{_ident(p.name)}"
        args = (
            ArgSpec("path", "param_path", G.PathsGen([path])),
            ArgSpec("val", "param_val", G.PtypeGen(p.ptype)),
            ArgSpec("seed", "rng_seed", seed_gen),
        )
        descs.append(Descriptor(name, "write_param", f"module:{p.module}", p.name, args))
        meta_wp[name] = {"instances": [path], "value_kind": f"ptype:{p.ptype}"}
        param_desc[path] = name
        device_of_param[path] = None
        module_params[p.module].append(name)

    devnode_device: dict[str, str] = {}
    for drv in inventory.drivers:
        dname = drv["driver"]
        nodes = [n for n in nodes_by_driver.get(dname, []) if n.devname]
        if not drv["devnode"] or not nodes:
            continue
        devnodes = [f"/dev/{n.devname}" for n in nodes]
        for dp, n in zip(devnodes, nodes):
            devnode_device[dp] = n.id
        dev_universe = {f"/dev/{n.devname}" for n in tree.nodes.values() if n.devname}
        dev_gen = G.PathsGen(generalize(devnodes, dev_universe))
        res = f"fd_{dname}"
        descs.append(
            Descriptor(
                f"open${dname}",
                "open_dev",
                dname,
                "",
                (ArgSpec("dev", "dev_path", dev_gen), ArgSpec("flags", "flags", G.FlagsGen())),
                res,
                produces_handle=True,
            )
        )
        for op in drv["ops"]:
            args = tuple(ArgSpec(an, "op_arg", _op_arg_gen(at)) for an, at in op["args"])
            descs.append(Descriptor(f"op${dname}_{op['name']}", "driver_op", dname, op["name"], args, res, consumes_handle=True))
        choices = driver_params.get(dname, []) + module_params.get(drv["module"], [])
        if choices:
            args = (
                ArgSpec("param", "param_path", G.ParamsGen(choices)),
                ArgSpec("val", "param_val", G.FollowsGen("param")),
                ArgSpec("dev", "dev_path", dev_gen),
                ArgSpec("seed", "rng_seed", seed_gen),
                ArgSpec("flags", "flags", G.FlagsGen()),
            )
            descs.append(Descriptor(f"syz_mod_dev${dname}", "syz_mod_dev", dname, "", args, res, produces_handle=True))

    order = {"write_param": 0, "open_dev": 1, "driver_op": 2, "syz_mod_dev": 3}
    descs.sort(key=lambda d: (order[d.kind], d.name))
    names = [d.name for d in descs]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise GenError(f"descriptor names collide after sanitizing: {dup}")

    related = {dev: relations.related(dev) for dev in sorted(tree.nodes)}
    meta = {
        "program_hash": inventory.program_hash,
        "write_param": meta_wp,
        "param_desc": dict(sorted(param_desc.items())),
        "device_of_param": dict(sorted(device_of_param.items())),
        "devnode_device": dict(sorted(devnode_device.items())),
        "related": related,
        "skipped": skipped,
    }
    return DescriptorSet(inventory.program_hash, descs, meta)


def dumps_meta(ds: DescriptorSet) -> str:
    return json.dumps(ds.meta, indent=2, sort_keys=False) + "\n"
