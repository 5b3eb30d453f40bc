"""Compiled sweep kernel.

Counts true/false positives at every grid threshold in a single pass over
the image: two 1001-bin histograms of the quantized probabilities (one for
foreground pixels, one for background), then suffix cumulative sums.
"""

import numpy as np

BACKEND = "cython"


def sweep_counts(const unsigned short[::1] probs, const unsigned char[::1] labels):
    """Return (tp, fp) as int64 arrays of length 990.

    tp[k-1] = number of pixels with quantized probability >= k and label 1,
    for k = 1..990; fp analogously for label 0.
    """
    cdef Py_ssize_t n = probs.shape[0]
    if labels.shape[0] != n:
        raise ValueError("probs and labels length mismatch")

    cdef long long hist_fg[1001]
    cdef long long hist_bg[1001]
    cdef Py_ssize_t i
    cdef int v
    for v in range(1001):
        hist_fg[v] = 0
        hist_bg[v] = 0
    for i in range(n):
        v = probs[i]
        if labels[i]:
            hist_fg[v] += 1
        else:
            hist_bg[v] += 1

    tp_arr = np.empty(990, dtype=np.int64)
    fp_arr = np.empty(990, dtype=np.int64)
    cdef long long[::1] tp = tp_arr
    cdef long long[::1] fp = fp_arr
    cdef long long acc_fg = 0
    cdef long long acc_bg = 0
    for v in range(1000, 0, -1):
        acc_fg += hist_fg[v]
        acc_bg += hist_bg[v]
        if v <= 990:
            tp[v - 1] = acc_fg
            fp[v - 1] = acc_bg
    return tp_arr, fp_arr
