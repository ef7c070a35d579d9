"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy versions
run. Set ``GAUGELAB_PURE=1`` to force the numpy path.
"""

import os

from . import _kernels_py

SUM = _kernels_py.SUM
MAX = _kernels_py.MAX

_impl = _kernels_py
BACKEND = "python"
if not os.environ.get("GAUGELAB_PURE"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def _threads():
    env = os.environ.get("GRL_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


_NTHREADS = _threads()


def set_threads(n):
    global _NTHREADS
    _NTHREADS = max(1, int(n)) if n else _threads()


def get_threads():
    return _NTHREADS


def line_windows(values, mmax, periodic, mode):
    return _impl.line_windows(values, int(mmax), bool(periodic), int(mode), _NTHREADS)


def ball_reduce(windows, triples, halfwidths, periodic, mode):
    return _impl.ball_reduce(windows, triples, halfwidths, bool(periodic), int(mode), _NTHREADS)


def relax_sweep(links, frame, parity, omega, h2):
    return _impl.relax_sweep(links, frame, int(parity), float(omega), float(h2), _NTHREADS)
