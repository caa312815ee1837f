"""Hot-kernel backend selection.

The compiled extension is preferred; the pure NumPy fallback is used when
the extension is missing or when CBIRKIT_PURE=1 is set. Both expose the
same three functions with identical semantics and bit-identical output,
so mixing them is safe: assignment always comes from the fallback, whose
scipy cdist core outruns the handwritten loop."""

import os

from cbirkit._kernels import fallback as _fallback

if os.environ.get("CBIRKIT_PURE"):
    _impl = _fallback
else:
    try:
        from cbirkit._kernels import native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
hessian_layer = _impl.hessian_layer
upright_descriptors = _impl.upright_descriptors
assign_nearest = _fallback.assign_nearest

__all__ = ["BACKEND", "hessian_layer", "upright_descriptors", "assign_nearest"]
