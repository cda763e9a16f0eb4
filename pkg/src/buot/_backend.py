"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy kernels in ``_pykernels``.  ``BUOT_BACKEND=python`` forces the fallback.
"""

import logging
import os

from buot import _pykernels

log = logging.getLogger(__name__)

python = _pykernels

try:
    from buot import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None


def _select():
    want = os.environ.get("BUOT_BACKEND", "").strip().lower()
    if want in ("python", "py", "numpy"):
        return python
    if compiled is None:
        if want in ("c", "cython", "compiled"):
            raise ImportError("BUOT_BACKEND requests the compiled kernels but buot._ckernels "
                              "is not built; run `pip install -e . --no-build-isolation`")
        log.debug("compiled kernels unavailable, using numpy fallback")
        return python
    return compiled


active = _select()
NAME = active.NAME


def use(name):
    """Switch the process-wide backend (``"python"`` or ``"cython"``); returns the old name."""
    global active, NAME
    old = NAME
    if name == "python":
        active = python
    elif name in ("cython", "compiled", "c"):
        if compiled is None:
            raise ImportError("compiled kernels are not built")
        active = compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    NAME = active.NAME
    return old


def divergence(m, shape, spacings, out=None):
    return active.divergence(m, tuple(shape), tuple(spacings), out)


def gradient(u, shape, spacings, out=None):
    return active.gradient(u, tuple(shape), tuple(spacings), out)


def pdhg_run(*args):
    return active.pdhg_run(*args)
