"""Kernel selection: the compiled extension when available, else the pure
fallback.  Set MAGICKNIGHT_KERNEL=pure to force the fallback."""

from __future__ import annotations

import os

from .common import KernelOptions, Topo, UnitResult, build_topo, decode_stats, encode_stats
from . import pure as _pure

if os.environ.get("MAGICKNIGHT_KERNEL", "") == "pure":
    _impl = _pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

run_unit = _impl.run_unit
KERNEL_NAME: str = _impl.KERNEL_NAME


def get_kernel(name: str):
    """Explicit access to one kernel implementation ("pure" or "compiled")."""
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel {name!r}")


__all__ = [
    "KernelOptions",
    "Topo",
    "UnitResult",
    "build_topo",
    "decode_stats",
    "encode_stats",
    "run_unit",
    "KERNEL_NAME",
    "get_kernel",
]
