from __future__ import annotations

from dataclasses import dataclass

BUG_TYPES = ("UAF", "NPD", "DIV0", "DOUBLE_FREE", "DEADLOCK")


@dataclass(frozen=True)
class BugReport:
    bug_type: str
    driver: str
    where: str  # op name or attribute file name
    stmt: int

    @property
    def title(self) -> str:
        return make_title(self.bug_type, self.driver, self.where, self.stmt)

    def to_json(self) -> dict:
        return {"bug_type": self.bug_type, "driver": self.driver, "where": self.where, "stmt": self.stmt, "title": self.title}

    @classmethod
    def from_json(cls, d: dict) -> "BugReport":
        return cls(d["bug_type"], d["driver"], d["where"], d["stmt"])


def make_title(bug_type: str, driver: str, where: str, stmt: int) -> str:
    return f"{bug_type}/{driver}/{where}/stmt{stmt}"


class BugFound(Exception):
    """Raised by an oracle inside interpreted code; aborts the running case."""

    def __init__(self, report: BugReport) -> None:
        super().__init__(report.title)
        self.report = report


class EngineFatal(Exception):
    """Interpreter-level failure (type confusion, undefined local). Not a kernel bug."""


class BootError(Exception):
    pass
