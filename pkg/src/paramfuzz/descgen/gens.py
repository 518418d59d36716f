"""Argument generators.

A generator samples one concrete argument from an rng and says whether the
sample was drawn from the hostile budget. In-spec samples are values the
attribute's store accepts; hostile samples are boundary probes (one past a
range end, truncated or extended strings, the empty string, an overlong
string) meant to exercise rejection paths.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from typing import Optional

from ..extractor.records import ValueSpec
from ..rng import SplitMix64
from ..vkernel.values import S32_MAX, S32_MIN, U32_MAX

HOSTILE_RATE = 0.10
OVERLONG = "A" * 300
BOOL_VALUES = ("0", "1", "y", "n", "Y", "N", "on", "off")
FLAGS = ("read", "write", "read_write")
_TOKEN_CHARS = string.ascii_letters + string.digits + "_-.:"
_RANDOM_CHARS = string.ascii_letters + string.digits + " ,-_:.\n"


def _q(s: str) -> str:
    return json.dumps(s, ensure_ascii=True)


def _token(rng: SplitMix64, lo: int = 1, hi: int = 8) -> str:
    return "".join(rng.choice(_TOKEN_CHARS) for _ in range(rng.randint(lo, hi)))


def _random_string(rng: SplitMix64) -> str:
    return "".join(rng.choice(_RANDOM_CHARS) for _ in range(rng.randint(0, 12)))


def _pick_int(rng: SplitMix64, lo: int, hi: int) -> int:
    """Boundary-biased integer in [lo, hi]."""
    r = rng.below(8)
    if r == 0:
        return lo
    if r == 1:
        return hi
    if r == 2:
        return min(hi, lo + 1)
    if r == 3:
        return max(lo, hi - 1)
    if r == 4:
        small = rng.randint(0, 16)
        return small if lo <= small <= hi else lo
    return rng.randint(lo, hi)


class Gen:
    tag = ""

    def sample(self, rng: SplitMix64) -> tuple[object, bool]:
        raise NotImplementedError

    def body(self) -> str:
        return ""

    def render(self) -> str:
        return f"{self.tag}[{self.body()}]"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.render() == other.render()

    def __hash__(self) -> int:
        return hash(self.render())


class StringSetGen(Gen):
    tag = "string_set"

    def __init__(self, strings) -> None:
        self.strings = tuple(strings)

    def body(self) -> str:
        return ", ".join(_q(s) for s in self.strings)

    def mutants(self) -> tuple[str, ...]:
        """The complete, fixed list of hostile values for this set."""
        out: list[str] = ["", OVERLONG]
        for s in self.strings:
            out += [s[:-1], s + "_"]
        valid = set(self.strings)
        seen: set[str] = set()
        return tuple(m for m in out if m not in valid and not (m in seen or seen.add(m)))  # type: ignore[func-returns-value]

    def sample(self, rng):
        if rng.chance(HOSTILE_RATE):
            return rng.choice(self.mutants()), True
        return rng.choice(self.strings), False


class RangeGen(Gen):
    def __init__(self, lo: int, hi: int) -> None:
        self.lo, self.hi = lo, hi

    def body(self) -> str:
        return f"{self.lo}:{self.hi}"

    def mutants(self) -> tuple[str, ...]:
        bound_lo, bound_hi = (0, U32_MAX) if self.tag == "uint_range" else (S32_MIN, S32_MAX)
        out = ["", OVERLONG, "x"]
        if self.lo > bound_lo:
            out.append(str(self.lo - 1))
        if self.hi < bound_hi:
            out.append(str(self.hi + 1))
        if self.tag == "uint_range":
            out.append("-1")
        return tuple(out)

    def sample(self, rng):
        if rng.chance(HOSTILE_RATE):
            return rng.choice(self.mutants()), True
        return str(_pick_int(rng, self.lo, self.hi)), False


class UintRangeGen(RangeGen):
    tag = "uint_range"


class IntRangeGen(RangeGen):
    tag = "int_range"


class BoolGen(Gen):
    tag = "bool"

    def mutants(self) -> tuple[str, ...]:
        return ("", "2", "x", "-")

    def sample(self, rng):
        if rng.chance(HOSTILE_RATE):
            return rng.choice(self.mutants()), True
        return rng.choice(BOOL_VALUES), False


class FormattedGen(Gen):
    tag = "formatted"

    def __init__(self, fmt: str) -> None:
        self.fmt = fmt

    def body(self) -> str:
        return _q(self.fmt)

    def fill(self, rng: SplitMix64) -> str:
        out = []
        i = 0
        f = self.fmt
        while i < len(f):
            if f[i] == "%" and i + 1 < len(f):
                d = f[i + 1]
                if d == "u":
                    out.append(str(_pick_int(rng, 0, U32_MAX)))
                elif d == "d":
                    out.append(str(_pick_int(rng, S32_MIN, S32_MAX)))
                elif d == "s":
                    out.append(_token(rng))
                else:
                    out.append("%")
                i += 2
            else:
                out.append(f[i])
                i += 1
        return "".join(out)

    def sample(self, rng):
        if rng.chance(HOSTILE_RATE):
            return rng.choice(("", OVERLONG, self.fill(rng) + " x")), True
        return self.fill(rng), False


class AnyStringGen(Gen):
    tag = "any_string"

    def sample(self, rng):
        if rng.chance(HOSTILE_RATE):
            return rng.choice(("", OVERLONG)), True
        return _token(rng, 1, 12), False


class IgnoredGen(Gen):
    tag = "ignores_input"

    def sample(self, rng):
        return rng.choice(("1", "0", "")), False


class RandomStringGen(Gen):
    """Payloads for stores whose accepted values could not be determined."""

    tag = "undetermined"

    def __init__(self, reason: str = "") -> None:
        self.reason = reason

    def body(self) -> str:
        return _q(self.reason)

    def sample(self, rng):
        r = rng.below(4)
        if r == 0:
            return str(_pick_int(rng, 0, U32_MAX)), False
        if r == 1:
            return "".join(rng.choice("01") for _ in range(rng.randint(1, 8))), False
        return _random_string(rng), False


class PtypeGen(Gen):
    """Module parameter values, chosen by declared type only."""

    tag = "ptype"

    def __init__(self, ptype: str) -> None:
        self.ptype = ptype

    def body(self) -> str:
        return self.ptype

    def sample(self, rng):
        hostile = rng.chance(HOSTILE_RATE)
        p = self.ptype
        if hostile:
            return rng.choice(("", "x", OVERLONG, "-1" if p == "uint" else "99999999999")), True
        if p == "uint":
            return str(_pick_int(rng, 0, U32_MAX)), False
        if p == "int":
            return str(_pick_int(rng, S32_MIN, S32_MAX)), False
        if p == "bool":
            return rng.choice(BOOL_VALUES), False
        return _token(rng), False


class IntGen(Gen):
    """Plain integers: op arguments and rng seeds."""

    tag = "int"

    def __init__(self, lo: int, hi: int) -> None:
        self.lo, self.hi = lo, hi

    def body(self) -> str:
        return f"{self.lo}:{self.hi}"

    def sample(self, rng):
        return _pick_int(rng, self.lo, self.hi), False


class StringGen(Gen):
    tag = "string"

    def sample(self, rng):
        return _token(rng, 0, 10), False


class PathsGen(Gen):
    """One of a fixed list of path patterns (each may hold ``#``)."""

    tag = "paths"

    def __init__(self, patterns) -> None:
        self.patterns = tuple(patterns)

    def body(self) -> str:
        return ", ".join(_q(p) for p in self.patterns)

    def sample(self, rng):
        return rng.choice(self.patterns), False


class ParamsGen(Gen):
    """One of the named write_param descriptors; used by syz_mod_dev."""

    tag = "params"

    def __init__(self, names) -> None:
        self.names = tuple(names)

    def body(self) -> str:
        return ", ".join(self.names)

    def sample(self, rng):
        return rng.choice(self.names), False


class FollowsGen(Gen):
    """Value drawn from the generator of the descriptor chosen by another argument."""

    tag = "follows"

    def __init__(self, arg: str) -> None:
        self.arg = arg

    def body(self) -> str:
        return self.arg

    def sample(self, rng):
        raise TypeError("follows[] is resolved by the caller")


class FlagsGen(Gen):
    tag = "flags"

    def __init__(self, flags=FLAGS) -> None:
        self.flags = tuple(flags)

    def body(self) -> str:
        return ", ".join(self.flags)

    def sample(self, rng):
        return rng.choice(self.flags), False


def from_value_spec(spec: Optional[ValueSpec]) -> Gen:
    if spec is None:
        return RandomStringGen("no value spec")
    k = spec.kind
    if k == "string_set":
        return StringSetGen(spec.strings)
    if k == "uint_range":
        return UintRangeGen(spec.lo, spec.hi)  # type: ignore[arg-type]
    if k == "int_range":
        return IntRangeGen(spec.lo, spec.hi)  # type: ignore[arg-type]
    if k == "bool":
        return BoolGen()
    if k == "formatted":
        return FormattedGen(spec.format)  # type: ignore[arg-type]
    if k == "any_string":
        return AnyStringGen()
    if k == "ignores_input":
        return IgnoredGen()
    return RandomStringGen(spec.reason or "")


GEN_TAGS = {
    c.tag: c
    for c in (
        StringSetGen,
        UintRangeGen,
        IntRangeGen,
        BoolGen,
        FormattedGen,
        AnyStringGen,
        IgnoredGen,
        RandomStringGen,
        PtypeGen,
        IntGen,
        StringGen,
        PathsGen,
        ParamsGen,
        FollowsGen,
        FlagsGen,
    )
}
