"""Numeric training kernels with a compiled fast path and a numpy fallback.

The backend is selected once at import: the Cython extension when it built,
otherwise the pure numpy implementation. Override with the environment
variable ``FINEDESIGN_KERNELS`` (``auto``, ``compiled``, ``pure``) or
programmatically with :func:`set_backend`. Both backends implement the same
arithmetic; results agree to floating-point accumulation order.
"""

from __future__ import annotations

import os

from . import pure

try:
    from . import _speed
except ImportError:  # extension not built; numpy fallback only
    _speed = None

_BACKENDS = {"pure": pure}
if _speed is not None:
    _BACKENDS["compiled"] = _speed

_active: str | None = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def _resolve(name: str) -> str:
    name = name.strip().lower()
    if name in ("", "auto"):
        return "compiled" if "compiled" in _BACKENDS else "pure"
    if name not in ("pure", "compiled"):
        raise ValueError(f"unknown kernel backend {name!r} (use auto, pure, or compiled)")
    if name not in _BACKENDS:
        raise ValueError("compiled kernels are not available in this installation")
    return name


def set_backend(name: str) -> str:
    """Select the kernel backend; returns the previously active name."""
    global _active
    previous = active_backend()
    _active = _resolve(name)
    return previous


def active_backend() -> str:
    global _active
    if _active is None:
        _active = _resolve(os.environ.get("FINEDESIGN_KERNELS", "auto"))
    return _active


def get_kernels():
    """The module implementing ``batch_backward`` and ``adam_update``."""
    return _BACKENDS[active_backend()]
