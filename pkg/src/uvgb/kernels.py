"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy fallback in ``_pykernels`` is used. ``use_backend`` switches at runtime
(benchmarks and cross-checking tests rely on it).
"""
from __future__ import annotations

from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None

BORDER_ZERO = _pykernels.BORDER_ZERO
BORDER_CLAMP = _pykernels.BORDER_CLAMP

_active: ModuleType = _ckernels if _ckernels is not None else _pykernels


def available_backends() -> list[str]:
    return ["cython", "python"] if _ckernels is not None else ["python"]


def backend_name() -> str:
    return "cython" if _active is _ckernels else "python"


def use_backend(name: str) -> None:
    global _active
    if name == "python":
        _active = _pykernels
    elif name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built; reinstall with a C compiler")
        _active = _ckernels
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def get_backend(name: str) -> ModuleType:
    if name == "python":
        return _pykernels
    if name == "cython" and _ckernels is not None:
        return _ckernels
    raise RuntimeError(f"kernel backend {name!r} unavailable")


def label_components(mask):
    return _active.label_components(mask)


def warp_bilinear(src, inv, out_h: int, out_w: int, border: int = BORDER_ZERO):
    return _active.warp_bilinear(src, inv, out_h, out_w, border)
