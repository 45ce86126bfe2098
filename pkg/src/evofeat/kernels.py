"""Backend selection for the hot loops.

The compiled extension ``evofeat._kernels`` is used when importable; set
``EVOFEAT_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("EVOFEAT_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

eval_prefix = _impl.eval_prefix
criteria_verdict = _impl.criteria_verdict
gnb_fit = _impl.gnb_fit
gnb_predict = _impl.gnb_predict
build_tree = _impl.build_tree
tree_apply = _impl.tree_apply


def backends():
    """Available kernel modules by name, for parity tests and benchmarks."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels as compiled
    except ImportError:
        pass
    else:
        found["cython"] = compiled
    return found
