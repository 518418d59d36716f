"""Runtime value semantics: 64-bit wrapping arithmetic and the kernel input helpers."""

from __future__ import annotations

import re
from typing import Optional

MASK64 = (1 << 64) - 1
INT64_MIN = -(1 << 63)
U32_MAX = (1 << 32) - 1
S32_MIN, S32_MAX = -(1 << 31), (1 << 31) - 1
EINVAL_NEG = -22  # what match_string hands back on a miss


def wrap(x: int) -> int:
    return ((x - INT64_MIN) & MASK64) + INT64_MIN


def cdiv(a: int, b: int) -> int:
    """C division: truncates toward zero. Caller rules out b == 0."""
    q = abs(a) // abs(b)
    return wrap(q if (a < 0) == (b < 0) else -q)


def cmod(a: int, b: int) -> int:
    return wrap(a - b * cdiv(a, b))


def _strip_nl(s: str) -> str:
    return s[:-1] if s.endswith("\n") else s


def match_string(buf: str, strings: list[str]) -> int:
    """sysfs_match_string(): index of the first equal entry, tolerating one trailing newline."""
    s = _strip_nl(buf)
    for i, cand in enumerate(strings):
        if s == cand:
            return i
    return EINVAL_NEG


_UINT_RE = re.compile(r"\+?[0-9]+\Z")
_INT_RE = re.compile(r"[+-]?[0-9]+\Z")


def kstrtouint(buf: str) -> Optional[int]:
    """Base-10 kstrtouint(); None on any parse or range failure."""
    s = _strip_nl(buf)
    if not _UINT_RE.match(s) or not s.isascii():
        return None
    v = int(s)
    return v if v <= U32_MAX else None


def kstrtoint(buf: str) -> Optional[int]:
    s = _strip_nl(buf)
    if not _INT_RE.match(s) or not s.isascii():
        return None
    v = int(s)
    return v if S32_MIN <= v <= S32_MAX else None


def kstrtobool(buf: str) -> Optional[bool]:
    """Same acceptance rules as the kernel: only the first one or two characters matter."""
    if not buf:
        return None
    c = buf[0]
    if c in "yYtT1":
        return True
    if c in "nNfF0":
        return False
    if c in "oO" and len(buf) > 1:
        if buf[1] in "nN":
            return True
        if buf[1] in "fF":
            return False
    return None


_DIRECTIVE = {"u": r"(\+?[0-9]+)", "d": r"([+-]?[0-9]+)", "s": r"(\S+)"}
_scan_cache: dict[str, tuple[re.Pattern, str]] = {}


def _compile_format(fmt: str) -> tuple[re.Pattern, str]:
    hit = _scan_cache.get(fmt)
    if hit is not None:
        return hit
    parts, kinds = [], []
    i = 0
    while i < len(fmt):
        c = fmt[i]
        if c == "%":
            d = fmt[i + 1]
            if d == "%":
                parts.append("%")
            else:
                parts.append(_DIRECTIVE[d])
                kinds.append(d)
            i += 2
        else:
            parts.append(re.escape(c))
            i += 1
    hit = (re.compile("".join(parts) + r"\Z", re.ASCII), "".join(kinds))
    _scan_cache[fmt] = hit
    return hit


def scan(buf: str, fmt: str) -> Optional[list]:
    """Whole-string match of ``fmt``; returns converted values or None."""
    pattern, kinds = _compile_format(fmt)
    m = pattern.match(_strip_nl(buf))
    if m is None:
        return None
    out: list = []
    for kind, text in zip(kinds, m.groups()):
        if kind == "s":
            out.append(text)
            continue
        v = int(text)
        if kind == "u" and v > U32_MAX:
            return None
        if kind == "d" and not S32_MIN <= v <= S32_MAX:
            return None
        out.append(v)
    return out


def format_directives(fmt: str) -> str:
    """The directive letters of a scan format, in order (``%%`` skipped)."""
    return _compile_format(fmt)[1]


def parse_param(ptype: str, value: str):
    """Module parameter assignment: type conversion only, no range checks."""
    if ptype == "uint":
        return kstrtouint(value)
    if ptype == "int":
        return kstrtoint(value)
    if ptype == "bool":
        return kstrtobool(value)
    return _strip_nl(value)
