"""Backend selection for the weight-assembly kernel.

The compiled Cython extension is preferred when it imported cleanly; the
NumPy implementation is the fallback. The choice happens once, at import
time. Set ``MORPHKIT_KERNEL=numpy`` or ``MORPHKIT_KERNEL=compiled`` to
force a backend (forcing an unavailable one raises immediately).
"""

import os

import numpy as np

from . import numpy_backend

try:
    from . import _idw_core
except ImportError:
    _idw_core = None

_requested = os.environ.get("MORPHKIT_KERNEL", "auto").strip().lower()
if _requested not in ("auto", "compiled", "numpy"):
    raise RuntimeError(
        f"MORPHKIT_KERNEL must be 'auto', 'compiled' or 'numpy', got {_requested!r}")
if _requested == "compiled" and _idw_core is None:
    raise RuntimeError(
        "MORPHKIT_KERNEL=compiled but the compiled kernel is not importable")

if _requested == "numpy" or _idw_core is None:
    _active = numpy_backend
    _active_name = "numpy"
else:
    _active = _idw_core
    _active_name = "compiled"


def backend_name():
    """Name of the backend in use: 'compiled' or 'numpy'."""
    return _active_name


def compiled_available():
    return _idw_core is not None


def _resolve_backend(backend):
    if backend is None:
        return _active
    if backend == "numpy":
        return numpy_backend
    if backend == "compiled":
        if _idw_core is None:
            raise RuntimeError("compiled kernel is not importable")
        return _idw_core
    if hasattr(backend, "assemble_rows"):
        return backend
    raise ValueError(f"unknown backend {backend!r}")


def assemble_weight_matrix(targets, controls, p, tol, backend=None):
    """Dense (n_targets, n_controls) inverse-distance weight matrix.

    ``backend`` overrides the import-time choice, mainly for benchmarks
    and tests: "numpy", "compiled", or a module with an
    ``assemble_rows`` function.
    """
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    controls = np.ascontiguousarray(controls, dtype=np.float64)
    out = np.empty((targets.shape[0], controls.shape[0]), dtype=np.float64)
    if targets.shape[0]:
        _resolve_backend(backend).assemble_rows(targets, controls, int(p),
                                                float(tol), out)
    return out
