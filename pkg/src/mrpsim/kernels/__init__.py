"""Hot numeric kernels with a compiled core and a pure-Python fallback.

The compiled extension is preferred when present; set MRPSIM_PURE_PYTHON=1
to force the numpy/scipy fallback (used by the benchmark and tests).
"""

import os

from . import _pykern

if os.environ.get("MRPSIM_PURE_PYTHON"):
    _impl = _pykern
    BACKEND = "python"
else:
    try:
        from . import _ckern as _impl

        BACKEND = "c"
    except ImportError:
        _impl = _pykern
        BACKEND = "python"

tn_loglik_rows = _impl.tn_loglik_rows
tn_loglik_total = _impl.tn_loglik_total
tn_loglik_grouped = _impl.tn_loglik_grouped
group_sums = _impl.group_sums
tn_mean = _impl.tn_mean
tn_ppf = _impl.tn_ppf

__all__ = [
    "BACKEND",
    "group_sums",
    "tn_loglik_grouped",
    "tn_loglik_rows",
    "tn_loglik_total",
    "tn_mean",
    "tn_ppf",
]
