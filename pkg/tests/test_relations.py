from types import SimpleNamespace

import pytest
from conftest import CORPUS, CORPUS_FILES
from hypothesis import given, settings
from oracles import name_join
from strategies import topology

from paramfuzz.dmir import parse, parse_file
from paramfuzz.relations import Relations, build_relation_tree, build_relations, map_params_to_drivers
from paramfuzz.vkernel import boot


@pytest.fixture(scope="module")
def hub():
    return boot(parse_file(CORPUS / "hub_disconnect_npd.dmir"))


def test_hub_tree_shape(hub):
    t = build_relation_tree(hub)
    assert t.roots == ["usb"]
    assert t.edges() == {("usb", "hub1"), ("hub1", "port1"), ("hub1", "port2")}
    assert t.children("hub1") == ["port1", "port2"]
    assert t.parent("port1") == "hub1"
    assert t.parent("hub1") is None
    assert t.neighborhood("port1") == ["port1", "hub1", "port2"]


def test_port_related_params_reach_the_hub(hub):
    r = build_relations(hub)
    rel = r.related("port1")
    assert "/sys/usb/hub1/autosuspend_delay_ms" in rel
    assert "/sys/usb/hub1/port2/disable" in rel
    assert "/sys/usb/hub1/port1/disable" in rel
    # ports have no devnode, so only the hub appears in the map
    assert {e.device for e in r.pmap.entries} == {"hub1"}


def test_tree_built_from_vfs_alone(hub):
    # the builder must not need anything but the filesystem view
    t = build_relation_tree(SimpleNamespace(vfs=hub.vfs))
    assert t.edges() == hub.tree.edges()


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_tree_matches_kernel(path):
    k = boot(parse_file(path))
    assert build_relation_tree(k).edges() == k.tree.edges()


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_map_matches_name_join(path):
    k = boot(parse_file(path))
    m = map_params_to_drivers(k)
    assert {(e.param_path, e.devnode_path) for e in m.entries} == name_join(k.vfs)


def test_devnode_name_differs_from_dir():
    src = """bus b;
module m { param p: uint = 1; driver d devnode { field x: uint; attr "a" rw { store { self.x = 1; return OK; } } } }
device x0: driver=d, parent=b, devnode="other";"""
    k = boot(parse(src))
    m = map_params_to_drivers(k)
    assert m.entries == []
    assert name_join(k.vfs) == set()


def test_round_trip(bugbench):
    r = build_relations(boot(bugbench))
    again = Relations.from_json(r.to_json())
    assert again.dumps() == r.dumps()
    assert again.related("md0") == r.related("md0")


@settings(max_examples=80, deadline=None)
@given(topology())
def test_random_topology(src_devices):
    src, devices = src_devices
    k = boot(parse(src))
    t = build_relation_tree(k)
    want = {(parent, dev) for dev, (_, parent) in devices.items()}
    assert t.edges() == want
    for a in t.nodes:
        assert t.nodes[a].driver == devices[a][0]
        for b in t.neighborhood(a):
            assert a in t.neighborhood(b)
    m = map_params_to_drivers(k, t)
    assert {(e.param_path, e.devnode_path) for e in m.entries} == name_join(k.vfs)
    # only devices with a devnode show up, each with its own attr and the module param
    for e in m.entries:
        assert devices[e.device][0] != "d2"
    for dev, (drv, _) in devices.items():
        if drv != "d2":
            got = set(m.for_device(dev))
            assert got == {t.nodes[dev].sysfs_path + f"/{drv}_a", "/sys/module/m/parameters/p"}
