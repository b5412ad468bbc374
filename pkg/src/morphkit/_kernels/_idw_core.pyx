# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled inner loop for inverse-distance weight matrix assembly."""

from libc.math cimport sqrt


cdef inline double _ipow(double base, int p) nogil:
    cdef double acc = 1.0
    cdef int i
    for i in range(p):
        acc *= base
    return acc


def assemble_rows(double[:, ::1] targets, double[:, ::1] controls,
                  int p, double tol, double[:, ::1] out):
    """Fill ``out[i, k]`` with the weight of control ``k`` at target ``i``.

    Distances are staged in ``out`` itself and overwritten in place.
    Weights are evaluated as (d_min / d_k)^p so no inverse power can
    overflow; the row sum uses Kahan compensation so normalization holds
    row sums at 1 even for tens of thousands of controls.
    """
    cdef Py_ssize_t n = targets.shape[0]
    cdef Py_ssize_t m = controls.shape[0]
    cdef Py_ssize_t d = targets.shape[1]
    cdef Py_ssize_t i, k, j, kmin
    cdef double diff, dist2, dmin, s, w, comp, y, t

    with nogil:
        for i in range(n):
            dmin = -1.0
            kmin = 0
            for k in range(m):
                dist2 = 0.0
                for j in range(d):
                    diff = targets[i, j] - controls[k, j]
                    dist2 += diff * diff
                out[i, k] = sqrt(dist2)
                if dmin < 0.0 or out[i, k] < dmin:
                    dmin = out[i, k]
                    kmin = k
            if dmin <= tol:
                # coincident with a control: indicator row, lowest index wins
                for k in range(m):
                    out[i, k] = 0.0
                out[i, kmin] = 1.0
                continue
            s = 0.0
            comp = 0.0
            for k in range(m):
                w = _ipow(dmin / out[i, k], p)
                out[i, k] = w
                y = w - comp
                t = s + y
                comp = (t - s) - y
                s = t
            for k in range(m):
                out[i, k] /= s
