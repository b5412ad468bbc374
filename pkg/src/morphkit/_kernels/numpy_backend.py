"""Pure-NumPy weight assembly, used when the compiled kernel is absent.

Semantics match ``_idw_core.assemble_rows`` exactly: ratio-form weights
(d_min / d_k)^p, indicator rows for targets coinciding with a control
(lowest control index wins ties), row-normalized. Rows are processed in
chunks to bound the size of the distance intermediates.
"""

import numpy as np
from scipy.spatial.distance import cdist

# ~64 MB of float64 scratch per chunk
_CHUNK_BUDGET = 8_000_000


def assemble_rows(targets, controls, p, tol, out):
    n = targets.shape[0]
    m = controls.shape[0]
    chunk = max(1, _CHUNK_BUDGET // max(m, 1))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        dist = cdist(targets[lo:hi], controls)
        dmin = dist.min(axis=1)
        block = out[lo:hi]
        coincident = dmin <= tol
        regular = ~coincident
        if coincident.any():
            rows = np.nonzero(coincident)[0]
            block[rows] = 0.0
            block[rows, dist[rows].argmin(axis=1)] = 1.0
        if regular.any():
            w = dmin[regular, None] / dist[regular]
            np.power(w, p, out=w)
            w /= w.sum(axis=1, keepdims=True)
            block[regular] = w
