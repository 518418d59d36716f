"""Turning descriptors into concrete calls."""

from __future__ import annotations

from typing import Optional

from ..descgen.gens import FollowsGen
from ..descgen.model import Descriptor, DescriptorSet
from ..rng import SplitMix64
from ..vkernel.case import MAX_CALLS, MAX_THREADS, Call, TestCase
from ..vkernel.vfs import wildcard_regex

MODES = ("baseline", "syzlang", "syzlang_mutation")
MODE_KINDS = {
    "baseline": ("open_dev", "driver_op"),
    "syzlang": ("open_dev", "driver_op", "write_param", "syz_mod_dev"),
    "syzlang_mutation": ("open_dev", "driver_op", "write_param", "syz_mod_dev"),
}


def resources_of(case: TestCase) -> list[str]:
    return [c.ret for _, _, c in case.calls() if c.ret is not None]


def fresh_resource(taken) -> str:
    n = 0
    taken = set(taken)
    while f"r{n}" in taken:
        n += 1
    return f"r{n}"


class Builder:
    """Instantiates descriptors allowed by a mode."""

    def __init__(self, ds: DescriptorSet, mode: str, max_threads: int = MAX_THREADS, max_calls: int = MAX_CALLS) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.full = ds
        self.ds = ds.filtered(MODE_KINDS[mode])
        self.mode = mode
        self.max_threads = max_threads
        self.max_calls = max_calls
        self.by_name = self.ds.by_name
        self.descs = self.ds.descriptors
        self.producers: dict[str, list[Descriptor]] = {}
        self.consumers: dict[str, list[Descriptor]] = {}
        for d in self.descs:
            if d.produces_handle:
                self.producers.setdefault(d.resource, []).append(d)  # type: ignore[arg-type]
            if d.consumes_handle:
                self.consumers.setdefault(d.resource, []).append(d)  # type: ignore[arg-type]
        # a consumer is only usable when something can produce its handle
        self.insertable = [d for d in self.descs if not d.consumes_handle or d.resource in self.producers]
        self.write_params = [d for d in self.descs if d.kind == "write_param"]
        self.path_desc: dict[str, str] = {}
        for d in ds.of_kind("write_param"):
            for pat in d.arg("param_path").gen.patterns:  # type: ignore[union-attr]
                self.path_desc[pat] = d.name
        self.path_desc.update(ds.meta.get("param_desc", {}))
        self.devnode_device: dict[str, str] = ds.meta.get("devnode_device", {})
        self.related: dict[str, list[str]] = ds.meta.get("related", {})
        self.device_of_param: dict[str, Optional[str]] = ds.meta.get("device_of_param", {})
        self._dev_cache: dict[str, tuple[str, ...]] = {}
        self._pdev_cache: dict[str, tuple[str, ...]] = {}

    # -- lookups -----------------------------------------------------------

    def resource_type(self, call: Call) -> Optional[str]:
        d = self.full.by_name.get(call.desc)
        return d.resource if d is not None else None

    def desc_for_path(self, path: str) -> Optional[Descriptor]:
        name = self.path_desc.get(path)
        return self.full.by_name.get(name) if name else None

    def devices_of(self, dev_pattern: str) -> tuple[str, ...]:
        hit = self._dev_cache.get(dev_pattern)
        if hit is None:
            rx = wildcard_regex(dev_pattern)
            hit = tuple(dev for path, dev in sorted(self.devnode_device.items()) if rx.fullmatch(path))
            self._dev_cache[dev_pattern] = hit
        return hit

    def devices_of_param(self, param_pattern: str) -> tuple[str, ...]:
        """Devices owning the attribute files a parameter pattern can expand to."""
        hit = self._pdev_cache.get(param_pattern)
        if hit is None:
            rx = wildcard_regex(param_pattern)
            hit = tuple(sorted({d for path, d in self.device_of_param.items() if d and rx.fullmatch(path)}))
            self._pdev_cache[param_pattern] = hit
        return hit

    # -- instantiation -----------------------------------------------------

    def write_call(self, d: Descriptor, rng: SplitMix64, path: Optional[str] = None) -> Call:
        if path is None:
            path = d.arg("param_path").gen.sample(rng)[0]  # type: ignore[union-attr]
        value = d.arg("param_val").gen.sample(rng)[0]  # type: ignore[union-attr]
        seed = d.arg("rng_seed").gen.sample(rng)[0]  # type: ignore[union-attr]
        return Call("write_param", d.name, path=path, value=value, seed=seed)

    def mod_dev_param(self, d: Descriptor, rng: SplitMix64) -> tuple[str, str]:
        wp = self.full.by_name[d.arg("param_path").gen.sample(rng)[0]]  # type: ignore[union-attr,index]
        path = wp.arg("param_path").gen.sample(rng)[0]  # type: ignore[union-attr]
        value = wp.arg("param_val").gen.sample(rng)[0]  # type: ignore[union-attr]
        return path, value  # type: ignore[return-value]

    def producer_call(self, d: Descriptor, rng: SplitMix64, ret: str) -> Call:
        dev = d.arg("dev_path").gen.sample(rng)[0]  # type: ignore[union-attr]
        flags = d.arg("flags").gen.sample(rng)[0]  # type: ignore[union-attr]
        if d.kind == "open_dev":
            return Call("open", d.name, path=dev, flags=flags, ret=ret)
        path, value = self.mod_dev_param(d, rng)
        seed = d.arg("rng_seed").gen.sample(rng)[0]  # type: ignore[union-attr]
        return Call("syz_mod_dev", d.name, path=path, dev=dev, value=value, seed=seed, flags=flags, ret=ret)

    def op_call(self, d: Descriptor, rng: SplitMix64, fd: str) -> Call:
        args = tuple(a.gen.sample(rng)[0] for a in d.op_args())
        return Call("op", d.name, fd=fd, op=d.target, args=args)

    def random_case(self, rng: SplitMix64, max_len: int = 4) -> TestCase:
        thread: list[Call] = []
        taken: list[str] = []
        for _ in range(rng.randint(1, max_len)):
            calls = self.instantiate(rng.choice(self.insertable), rng, thread, taken, {})
            if len(thread) + len(calls) > self.max_calls:
                break
            thread += calls
            taken += [c.ret for c in calls if c.ret]
        return TestCase((tuple(thread),), rng.next_u64())

    def instantiate(
        self, d: Descriptor, rng: SplitMix64, before: list[Call], taken: list[str], elsewhere: dict[str, str]
    ) -> list[Call]:
        """Calls realizing ``d``; a consumer gets a producer prepended when none is reusable.

        ``before`` are the calls preceding the insertion point on the same
        thread, ``taken`` every resource name already used in the case, and
        ``elsewhere`` maps resources produced on other threads to their
        handle type.
        """
        if d.kind == "write_param":
            return [self.write_call(d, rng)]
        if d.produces_handle:
            return [self.producer_call(d, rng, fresh_resource(taken))]
        usable = [c.ret for c in before if c.ret and self.resource_type(c) == d.resource]
        usable += [r for r, t in elsewhere.items() if t == d.resource]
        if usable and rng.chance(0.8):
            return [self.op_call(d, rng, rng.choice(usable))]
        prod = rng.choice(self.producers[d.resource])  # type: ignore[index]
        ret = fresh_resource(taken)
        return [self.producer_call(prod, rng, ret), self.op_call(d, rng, ret)]


def follows_value(builder: Builder, path: str, rng: SplitMix64) -> Optional[str]:
    d = builder.desc_for_path(path)
    if d is None:
        return None
    gen = d.arg("param_val").gen  # type: ignore[union-attr]
    if isinstance(gen, FollowsGen):
        return None
    return gen.sample(rng)[0]  # type: ignore[return-value]
