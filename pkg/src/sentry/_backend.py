"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise, or when
``SENTRY_PURE_PYTHON=1`` is set, the numpy fallback is used. Complex pivoting
always runs on the fallback.
"""
import os

from . import _purepy

if os.environ.get("SENTRY_PURE_PYTHON") == "1":
    _kernels = None
else:
    try:
        from . import _kernels
    except ImportError:  # extension not built
        _kernels = None

BACKEND = "compiled" if _kernels is not None else "python"


def cost_qr_pivot(V, eta, gamma, p, tie_tol):
    if _kernels is not None and not _is_complex(V):
        return _kernels.cost_qr_pivot(V, eta, gamma, p, tie_tol)
    return _purepy.cost_qr_pivot(V, eta, gamma, p, tie_tol)


def enumerate_logdet(G, p, eta, rel_tol):
    if _kernels is not None:
        return _kernels.enumerate_logdet(G, p, eta, rel_tol)
    return _purepy.enumerate_logdet(G, p, eta, rel_tol)


def _is_complex(V):
    return getattr(V, "dtype", None) is not None and V.dtype.kind == "c"
