"""Loop kernels, dispatched to the compiled extension when it is built.

Set ``KICKENT_KERNELS=python`` to force the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("KICKENT_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

diagonal_means = _impl.diagonal_means
cumulative_block_sums = _impl.cumulative_block_sums
sphere_minima = _impl.sphere_minima
