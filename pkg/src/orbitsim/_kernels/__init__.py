"""Kernel implementation selection.

The compiled extension (``_core``) is preferred when importable; the
pure-Python twin (``pure``) is the fallback.  Set ``ORBITSIM_KERNELS``
to ``pure`` or ``cython`` to force one (``cython`` raises if the
extension is missing).  Both implementations are bit-identical; the
selection only affects speed.
"""

import os

from orbitsim._kernels import pure

_FORCED = os.environ.get("ORBITSIM_KERNELS", "auto").lower()

if _FORCED == "pure":
    active = pure
elif _FORCED == "cython":
    from orbitsim._kernels import _core as active  # type: ignore[no-redef]
else:
    try:
        from orbitsim._kernels import _core as active  # type: ignore[no-redef]
    except ImportError:
        active = pure


def implementation_name() -> str:
    return active.IMPLEMENTATION


def available_implementations() -> dict:
    """Name -> module for every importable implementation (for tests/benchmarks)."""
    impls = {"python": pure}
    try:
        from orbitsim._kernels import _core

        impls["cython"] = _core
    except ImportError:
        pass
    return impls


REGIME_GROUND = pure.REGIME_GROUND
REGIME_CW = pure.REGIME_CW
REGIME_J2 = pure.REGIME_J2
KIND_AGENT = pure.KIND_AGENT
KIND_OBSTACLE = pure.KIND_OBSTACLE
KIND_GOAL = pure.KIND_GOAL
