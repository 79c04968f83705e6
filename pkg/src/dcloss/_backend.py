"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. ``use_backend`` switches explicitly (tests and benchmarks compare
both).
"""

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = _compiled if _compiled is not None else _pykernels


def available_backends():
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def backend_name():
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def use_backend(name):
    """Select ``"compiled"`` or ``"python"``; returns the previous name."""
    global _active
    previous = backend_name()
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        _active = _compiled
    elif name == "python":
        _active = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def erasure_windows(u, pi_start, p_gb, p_bb):
    return _active.erasure_windows(u, float(pi_start), float(p_gb), float(p_bb))


def batch_rank(mats, log, exp, order, binary):
    return _active.batch_rank(mats, log, exp, int(order), bool(binary))
