# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled delay line-search kernel.

Scans |S(tau)| = |sum_m coeff[e, m] * exp(-j 2 pi f_m tau)| over a uniform
delay grid for every antenna element. Instead of recomputing exponentials
per grid point, the per-subcarrier phasor is advanced by a constant step
exp(-j 2 pi f_m dtau), so the inner loop is pure multiply-accumulate.
Elements are independent and processed in parallel.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel import prange

cnp.import_array()


def scan_batch_uniform(
    double[:, ::1] coeff_re,
    double[:, ::1] coeff_im,
    double[::1] step_re,
    double[::1] step_im,
    Py_ssize_t n_grid,
):
    """Argmax of |S| over the grid per element plus the complex S there.

    coeff_* are (n_rx, M): the tau = 0 phasors. step_* are (M,): the
    per-grid-step phasor increments. Ties resolve to the smallest grid
    index. Returns (int64 indices (n_rx,), complex sums (n_rx,)).
    """
    cdef Py_ssize_t n_rx = coeff_re.shape[0]
    cdef Py_ssize_t m_sub = coeff_re.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_idx = np.empty(n_rx, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best_re = np.empty(n_rx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best_im = np.empty(n_rx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] work = np.empty((n_rx, 2 * m_sub), dtype=np.float64)
    cdef double[::1] br = best_re
    cdef double[::1] bi = best_im
    cdef cnp.int64_t[::1] bg = best_idx
    cdef double[:, ::1] wk = work
    cdef Py_ssize_t e, g, m
    cdef double acc_re, acc_im, mag, best_mag, cr, ci, tr
    cdef double* cur_re
    cdef double* cur_im

    for e in prange(n_rx, nogil=True, schedule="static"):
        cur_re = &wk[e, 0]
        cur_im = &wk[e, m_sub]
        for m in range(m_sub):
            cur_re[m] = coeff_re[e, m]
            cur_im[m] = coeff_im[e, m]
        best_mag = -1.0
        for g in range(n_grid):
            acc_re = 0.0
            acc_im = 0.0
            for m in range(m_sub):
                acc_re = acc_re + cur_re[m]
                acc_im = acc_im + cur_im[m]
            mag = acc_re * acc_re + acc_im * acc_im
            if mag > best_mag:
                best_mag = mag
                bg[e] = g
                br[e] = acc_re
                bi[e] = acc_im
            if g + 1 < n_grid:
                for m in range(m_sub):
                    cr = cur_re[m]
                    ci = cur_im[m]
                    tr = cr * step_re[m] - ci * step_im[m]
                    cur_im[m] = cr * step_im[m] + ci * step_re[m]
                    cur_re[m] = tr
    return best_idx, best_re + 1j * best_im
