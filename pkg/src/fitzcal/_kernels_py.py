"""Pure-numpy fallback for the sweep kernel, used when the compiled
extension is unavailable. Same contract as ``_kernels.sweep_counts``."""

import numpy as np

BACKEND = "python"


def sweep_counts(probs, labels):
    """Return (tp, fp) int64 arrays of length 990 for thresholds k=1..990."""
    if probs.shape[0] != labels.shape[0]:
        raise ValueError("probs and labels length mismatch")
    fg = labels.astype(bool)
    hist_fg = np.bincount(probs[fg], minlength=1001).astype(np.int64)
    hist_bg = np.bincount(probs[~fg], minlength=1001).astype(np.int64)
    # tail[v] = count of pixels with quantized value >= v
    tail_fg = hist_fg[::-1].cumsum()[::-1]
    tail_bg = hist_bg[::-1].cumsum()[::-1]
    return tail_fg[1:991].copy(), tail_bg[1:991].copy()
