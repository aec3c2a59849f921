"""Kernel backend selection.

The Monte Carlo inner loop (affine transform of a standard-normal block
fused with the per-trial metric reduction) exists twice: a Cython
extension and a pure numpy fallback with the identical contract. The
extension is preferred when it imported cleanly; RATEBLUR_NO_EXT=1
forces the fallback. Both consume the same numpy-generated z draws, so
switching backends changes results only at float-summation-order level.
"""

import os

from . import _fallback

_impl = _fallback
_BACKEND = "fallback"

if os.environ.get("RATEBLUR_NO_EXT", "") != "1":
    try:
        from . import _mckernels as _ext
    except ImportError:
        pass
    else:
        _impl = _ext
        _BACKEND = "compiled"

metric_reduce = _impl.metric_reduce
filtered_reduce = _impl.filtered_reduce

KIND_RMSE = 0
KIND_MAE = 1
KIND_MSD = 2


def backend_name() -> str:
    """Which implementation got selected at import: 'compiled' or 'fallback'."""
    return _BACKEND
