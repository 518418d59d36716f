"""The simulated kernel: device tree, virtual sysfs and /dev, interpreter and scheduler."""

from .case import Call, TestCase, well_formed
from .explore import Exploration, ExplosionError, count_yield_points, enumerate_interleavings
from .kernel import OPEN_FLAGS, CaseCtx, DeviceInst, DeviceTree, Kernel, KernelBug, boot
from .report import BUG_TYPES, BootError, BugReport, EngineFatal, make_title
from .sched import ExecutionResult, PrefixChooser, RandomChooser, ReplayError, TraceChooser, replay, run_case
from .vfs import Vfs, VNode

__all__ = [
    "BUG_TYPES",
    "BootError",
    "BugReport",
    "Call",
    "CaseCtx",
    "DeviceInst",
    "DeviceTree",
    "EngineFatal",
    "ExecutionResult",
    "Exploration",
    "ExplosionError",
    "Kernel",
    "KernelBug",
    "OPEN_FLAGS",
    "PrefixChooser",
    "RandomChooser",
    "ReplayError",
    "TestCase",
    "TraceChooser",
    "VNode",
    "Vfs",
    "boot",
    "count_yield_points",
    "enumerate_interleavings",
    "make_title",
    "replay",
    "run_case",
    "well_formed",
]
