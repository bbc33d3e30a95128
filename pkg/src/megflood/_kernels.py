"""Kernel backend selection.

The compiled ``_ckernels`` module is used when importable; setting the
environment variable ``MEGFLOOD_PURE=1`` forces the numpy fallback.
"""

import os

from . import _pykernels

if os.environ.get("MEGFLOOD_PURE", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
geo_pairs = _impl.geo_pairs
geo_degrees = _impl.geo_degrees
geo_expand = _impl.geo_expand
LazyFloodLedger = _impl.LazyFloodLedger


def available_backends():
    """Map of backend name to kernel module, for tests and benchmarks."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
