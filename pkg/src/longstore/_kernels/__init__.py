"""GF(256) kernel backend selection.

The compiled extension is preferred when present; the pure-Python backend
is the fallback. Set ``LONGSTORE_PURE=1`` to force the fallback (used by
the equivalence tests and the kernel benchmark).
"""

from __future__ import annotations

import os

from . import pure

if os.environ.get("LONGSTORE_PURE") == "1":
    _impl = pure
else:
    try:
        from . import _gf256 as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND
gf_mul = _impl.gf_mul
gf_div = _impl.gf_div
eval_shares = _impl.eval_shares
interpolate_at_zero = _impl.interpolate_at_zero

__all__ = ["BACKEND", "gf_mul", "gf_div", "eval_shares", "interpolate_at_zero", "pure"]
