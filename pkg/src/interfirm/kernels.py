"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Set ``INTERFIRM_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("INTERFIRM_PURE"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = _impl.BACKEND
mix64 = _impl.mix64
stream_key = _impl.stream_key
uniforms = _impl.uniforms
cascade_step = _impl.cascade_step
cmi_rows = _impl.cmi_rows

__all__ = ["BACKEND", "mix64", "stream_key", "uniforms", "cascade_step", "cmi_rows"]
