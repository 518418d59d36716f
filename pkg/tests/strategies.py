"""Hypothesis strategies that build random DMIR programs as source text."""

from __future__ import annotations

from hypothesis import strategies as st

STORE = 'store { let v = kstrtouint(buf); if (v > 9) { return EINVAL; } self.x = v; return OK; }'


@st.composite
def attr_tree(draw, max_depth: int = 3):
    """Nested attribute/group members with globally unique names.

    Returns (members, flat) where members is a list of ("attr", name) and
    ("group", name, members) and flat is the expected depth-first order.
    """
    counter = iter(range(10_000))

    def members(depth: int):
        out = []
        for _ in range(draw(st.integers(0, 3))):
            if depth < max_depth and draw(st.booleans()):
                out.append(("group", f"g{next(counter)}", members(depth + 1)))
            else:
                out.append(("attr", f"a{next(counter)}"))
        return out

    tree = members(0)
    flat: list[str] = []

    def walk(ms):
        for m in ms:
            if m[0] == "attr":
                flat.append(m[1])
            else:
                walk(m[2])

    walk(tree)
    return tree, flat


def render_members(ms, indent: str = "    ") -> str:
    lines = []
    for m in ms:
        if m[0] == "attr":
            lines.append(f'{indent}attr "{m[1]}" rw {{ {STORE} }}')
        else:
            lines.append(f"{indent}group {m[1]} {{")
            lines.append(render_members(m[2], indent + "  "))
            lines.append(f"{indent}}}")
    return "\n".join(line for line in lines if line)


@st.composite
def topology(draw, max_devices: int = 8):
    """A program with random buses, drivers and a random device forest.

    Returns (source, devices) where devices maps id -> (driver, parent).
    Every driver has one writable attr named after it; drivers d0 and d1
    have devnodes, d2 does not.
    """
    n_bus = draw(st.integers(1, 2))
    buses = [f"b{i}" for i in range(n_bus)]
    n = draw(st.integers(1, max_devices))
    devices: dict[str, tuple[str, str]] = {}
    lines = []
    for i in range(n):
        parent = draw(st.sampled_from(buses + list(devices)))
        drv = draw(st.sampled_from(["d0", "d1", "d2"]))
        devices[f"x{i}"] = (drv, parent)
        node = f', devnode="x{i}"' if drv != "d2" else ""
        lines.append(f"device x{i}: driver={drv}, parent={parent}{node};")
    drivers = []
    for d in ("d0", "d1", "d2"):
        dn = " devnode" if d != "d2" else ""
        drivers.append(f"  driver {d}{dn} {{\n    field x: uint;\n    attr \"{d}_a\" rw {{ {STORE} }}\n  }}")
    src = "".join(f"bus {b};\n" for b in buses)
    src += "module m {\n  param p: uint = 1;\n" + "\n".join(drivers) + "\n}\n" + "\n".join(lines) + "\n"
    return src, devices


@st.composite
def multi_instance(draw):
    """Drivers with random attr counts and random instance multiplicities.

    Returns (source, pairs) where pairs is the set of distinct (driver, fname).
    """
    n_drv = draw(st.integers(1, 3))
    pairs = set()
    drivers, devices = [], []
    for d in range(n_drv):
        n_attr = draw(st.integers(1, 3))
        attrs = []
        for a in range(n_attr):
            fname = draw(st.sampled_from(["rate", "mode", "size", f"own{d}_{a}"]))
            if (f"drv{d}", fname) in pairs:
                continue
            pairs.add((f"drv{d}", fname))
            attrs.append(f'    attr "{fname}" rw {{ {STORE} }}')
        drivers.append(f"  driver drv{d} devnode {{\n    field x: uint;\n" + "\n".join(attrs) + "\n  }")
        for i in range(draw(st.integers(1, 4))):
            devices.append(f'device drv{d}_{i}: driver=drv{d}, parent=bus0, devnode="drv{d}_{i}";')
    src = "bus bus0;\nmodule m {\n" + "\n".join(drivers) + "\n}\n" + "\n".join(devices) + "\n"
    return src, pairs
