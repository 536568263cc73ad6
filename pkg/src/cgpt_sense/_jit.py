"""Optional numba acceleration.

Set ``CGPT_SENSE_DISABLE_JIT=1`` to force the pure-numpy kernels, e.g. when
debugging or on platforms without numba.  ``CGPT_SENSE_THREADS`` caps the
number of worker threads used by numba and by the experiment runner.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in _FALSY


JIT_DISABLED = _flag("CGPT_SENSE_DISABLE_JIT")

try:
    if JIT_DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def thread_count() -> int:
    """Worker count from ``CGPT_SENSE_THREADS`` (default: all cores)."""
    raw = os.environ.get("CGPT_SENSE_THREADS", "").strip()
    if raw:
        n = int(raw)
        if n < 1:
            raise ValueError("CGPT_SENSE_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


if HAVE_NUMBA and os.environ.get("CGPT_SENSE_THREADS"):
    numba.set_num_threads(min(thread_count(), numba.config.NUMBA_NUM_THREADS))
