"""Kernel backend selection.

The compiled Cython backend is used when its extension module built; the
numpy implementation in pylib is the fallback. Set LEXPLAIN_KERNELS=python
(or =cython) to force a backend. Checkpoints and outputs are bit-reproducible
for a fixed backend; the two backends agree numerically but not bitwise.
"""

import os

from . import pylib

_forced = os.environ.get("LEXPLAIN_KERNELS", "").lower()

if _forced in ("python", "py"):
    _impl = pylib
elif _forced in ("cython", "cy"):
    from . import cylib as _impl
else:
    try:
        from . import cylib as _impl
    except ImportError:
        _impl = pylib

BACKEND = _impl.BACKEND
gru_forward = _impl.gru_forward
gru_backward = _impl.gru_backward

__all__ = ["BACKEND", "gru_forward", "gru_backward", "pylib"]
