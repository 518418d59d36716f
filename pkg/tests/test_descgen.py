import pytest
from conftest import CORPUS, CORPUS_FILES
from hypothesis import given, settings
from strategies import multi_instance

from paramfuzz import descgen
from paramfuzz.descgen import GenError, HOSTILE_RATE, dumps_meta, generalize, generate, render
from paramfuzz.descgen import gens as G
from paramfuzz.dmir import parse, parse_file
from paramfuzz.extractor import Inventory
from paramfuzz.relations import build_relations
from paramfuzz.rng import SplitMix64
from paramfuzz.vkernel import boot

THREE_OPS = """bus b;
module m {
  param level: uint = 1;
  driver d devnode {
    field x: uint;
    attr "rate" rw { store { let v = kstrtouint(buf); if (v > 9) { return EINVAL; } self.x = v; return OK; } }
    op start() { return OK; }
    op stop() { return OK; }
    op poke(n: uint) { self.x = n; return OK; }
  }
}
device d0: driver=d, parent=b, devnode="d0";
"""


def _kinds(ds):
    out = {}
    for d in ds.descriptors:
        out[d.kind] = out.get(d.kind, 0) + 1
    return out


def test_one_devnode_driver_with_three_ops():
    ds = descgen.for_program(parse(THREE_OPS))
    assert _kinds(ds) == {"write_param": 2, "open_dev": 1, "driver_op": 3, "syz_mod_dev": 1}
    mod = ds.by_name["syz_mod_dev$d"]
    assert mod.arg("param_path").gen.names == ("write_param$rate", "write_param$module_m_level")
    assert all(d.resource == "fd_d" for d in ds.of_kind("driver_op", "open_dev", "syz_mod_dev"))


def test_loop_instances_merge_into_pattern():
    ds = descgen.for_program(parse_file(CORPUS / "loop.dmir"))
    wp = ds.by_name["write_param$poll_rate"]
    assert wp.arg("param_path").gen.patterns == ("/sys/virtual/loop#/poll_rate",)
    assert ds.by_name["open$loop"].arg("dev_path").gen.patterns == ("/dev/loop#",)
    assert ds.meta["write_param"]["write_param$poll_rate"]["instances"] == [
        "/sys/virtual/loop0/poll_rate",
        "/sys/virtual/loop1/poll_rate",
    ]


def test_generalize_refuses_inexact_pattern():
    universe = {"/sys/a/dev1/x", "/sys/a/dev2/x", "/sys/a/dev3/x"}
    assert generalize(["/sys/a/dev1/x", "/sys/a/dev2/x"], universe) == ["/sys/a/dev1/x", "/sys/a/dev2/x"]
    assert generalize(sorted(universe), universe) == ["/sys/a/dev#/x"]
    assert generalize(["/sys/a/dev1/x"], universe) == ["/sys/a/dev1/x"]


def test_driver_without_devnode_gets_no_handle_descriptors():
    ds = descgen.for_program(parse_file(CORPUS / "hub_disconnect_npd.dmir"))
    owners = {d.owner for d in ds.of_kind("open_dev", "syz_mod_dev")}
    assert owners == {"usb_hub"}
    assert "write_param$disable" in ds.by_name


def test_program_mismatch_is_an_error(bugbench):
    inv = Inventory.from_program(bugbench)
    rel = build_relations(boot(parse_file(CORPUS / "loop.dmir")))
    with pytest.raises(GenError):
        generate(inv, rel)


def test_render_empty():
    assert render([]) == ""
    assert descgen.parse("") == []


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_render_parse_round_trip(path):
    ds = descgen.for_program(parse_file(path))
    text = render(ds.descriptors)
    again = descgen.parse(text)
    assert again == ds.descriptors
    assert render(again) == text
    # generation is a pure function of the program
    assert render(descgen.for_program(parse_file(path)).descriptors) == text


def test_load_reads_meta(tmp_path, bugbench):
    ds = descgen.for_program(bugbench)
    szp = tmp_path / "descs.szp"
    szp.write_text(render(ds.descriptors))
    descgen.meta_path(szp).write_text(dumps_meta(ds))
    got = descgen.load(szp)
    assert got.descriptors == ds.descriptors
    assert got.meta == ds.meta
    assert got.program_hash == ds.program_hash


@pytest.mark.parametrize(
    "line",
    [
        'write_param$x "d" "x" (path: param_path nonsense[])',
        'open$x "d" "" (dev: dev_path paths["/dev/x"], flags: flags flags[read])',
        'write_param$x "d" "x" (path: bogus_role paths["/a"])',
        'write_param$x "d" "x" (path: param_path paths["/a"]',
    ],
)
def test_parse_rejects_bad_lines(line):
    with pytest.raises((GenError, ValueError)):
        descgen.parse(line)


def test_string_set_support_and_hostile_rate():
    g = G.StringSetGen(["off", "unmap", "zero"])
    rng = SplitMix64(1)
    n, hostile = 10_000, 0
    seen = set()
    for _ in range(n):
        v, h = g.sample(rng)
        seen.add(v)
        hostile += h
        assert (v in g.strings) != h
    assert seen == set(g.strings) | set(g.mutants())
    assert abs(hostile / n - HOSTILE_RATE) < 0.015


def test_range_samples_stay_in_range():
    g = G.UintRangeGen(1, 1000)
    rng = SplitMix64(2)
    for _ in range(5000):
        v, h = g.sample(rng)
        if not h:
            assert 1 <= int(v) <= 1000
        else:
            assert v in g.mutants()


CHECKED_HOSTILE = ("string_set", "uint_range", "int_range", "bool")


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_generated_values_respect_the_store(path):
    p = parse_file(path)
    ds = descgen.for_program(p)
    k = boot(p)
    rng = SplitMix64(3)
    for d in ds.of_kind("write_param"):
        gen = d.arg("param_val").gen
        if gen.tag == "undetermined":
            continue
        for inst in ds.meta["write_param"][d.name]["instances"]:
            for _ in range(150):
                v, hostile = gen.sample(rng)
                k.reset()
                st = k.write_param(inst, v)
                if not hostile:
                    assert st == "OK", (inst, v, st)
                elif gen.tag in CHECKED_HOSTILE:
                    assert st == "EINVAL", (inst, v, st)


@settings(max_examples=60, deadline=None)
@given(multi_instance())
def test_merging_is_sound(src_pairs):
    src, pairs = src_pairs
    p = parse(src)
    k = boot(p)
    ds = descgen.for_program(p)
    wps = [d for d in ds.of_kind("write_param") if not d.owner.startswith("module:")]
    assert {(d.owner, d.target) for d in wps} == pairs
    assert len(wps) == len(pairs)
    for d in wps:
        covered = set()
        for pat in d.arg("param_path").gen.patterns:
            covered.update(k.vfs.match(pat))
        want = {
            f"{dev.sysfs_path}/{d.target}" for dev in k.iter_devices() if dev.driver.name == d.owner
        }
        assert covered == want
