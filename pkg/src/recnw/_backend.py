"""Pick the compiled core when it is importable, else the numpy fallback.

Set ``RECNW_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _pycore

_compiled = None
if os.environ.get("RECNW_PURE_PYTHON", "") != "1":
    try:
        from . import _core as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def has_compiled() -> bool:
    return _compiled is not None


def _use_compiled(kernel, force_python):
    return _compiled is not None and kernel.code is not None and not force_python


def stream_update(grid, xs, ys, inv_g, n0, alpha, kernel, H, G, Hp, Gp,
                  C=None, Cp=None, force_python=False):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    if inv_g is not None:
        inv_g = np.ascontiguousarray(inv_g, dtype=np.float64)
    if _use_compiled(kernel, force_python):
        return _compiled.stream_update(grid, xs, ys, inv_g, int(n0), float(alpha),
                                       kernel.code, H, G, Hp, Gp, C, Cp)
    return _pycore.stream_update(grid, xs, ys, inv_g, n0, alpha, kernel,
                                 H, G, Hp, Gp, C, Cp)


def loo_sums(xs, ys, alpha, kernel, eval_idx, force_python=False):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    eval_idx = np.ascontiguousarray(eval_idx, dtype=np.int64)
    if _use_compiled(kernel, force_python):
        return _compiled.loo_sums(xs, ys, float(alpha), kernel.code, eval_idx)
    return _pycore.loo_sums(xs, ys, alpha, kernel, eval_idx)
