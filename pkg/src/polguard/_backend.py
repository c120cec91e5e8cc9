"""Monte Carlo kernel backend selection.

The hot per-round loop exists twice: a Cython extension
(``polguard._kernels``) and a vectorized NumPy fallback
(``polguard._kernels_py``).  Both consume the same random stream with the
same per-round draw layout, so they produce the same tallies for the same
seed.  Selection happens at import: the compiled kernels are used when
importable unless ``POLGUARD_BACKEND=python`` forces the fallback
(``POLGUARD_BACKEND=compiled`` errors if the extension is missing).
"""

from __future__ import annotations

import os

from polguard import _kernels_py

_FORCED = os.environ.get("POLGUARD_BACKEND", "").strip().lower()

if _FORCED == "python":
    _impl = _kernels_py
elif _FORCED in ("compiled", "cython"):
    from polguard import _kernels as _impl  # noqa: F401  (raises if unavailable)
else:
    try:
        from polguard import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py


def backend_name() -> str:
    """'compiled' when the Cython kernels are active, else 'python'."""
    return "compiled" if _impl.__name__.endswith("_kernels") else "python"


def run_rounds(mode, n_rounds, bit_generator, params, knots):
    """Dispatch one worker's rounds to the active kernel backend."""
    return _impl.run_rounds(mode, n_rounds, bit_generator, params, knots)


def get_kernel_module(name: str):
    """Explicit backend lookup ('python' or 'compiled') for benchmarks/tests."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from polguard import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
