"""Independent reference solvers shared by the test modules."""
import numpy as np


def taut_string(g, lam):
    """
    Exact minimizer of ``0.5 ||f - g||^2 + lam sum |f[i+1] - f[i]|``.

    ``f`` is the slope of the shortest path through the tube of half-width
    ``lam`` around the cumulative sum of ``g``, pinned at both ends.
    """
    g = np.asarray(g, float)
    n = g.size
    S = np.concatenate([[0.0], np.cumsum(g)])
    lower, upper = S - lam, S + lam
    lower[0] = upper[0] = 0.0
    lower[n] = upper[n] = S[n]
    f = np.empty(n)
    pos, val = 0, 0.0
    while pos < n:
        lo_s, hi_s = -np.inf, np.inf
        lo_i = hi_i = pos + 1
        for j in range(pos + 1, n + 1):
            s_lo = (lower[j] - val) / (j - pos)
            s_hi = (upper[j] - val) / (j - pos)
            if s_lo > hi_s:  # the tube floor rises above the upper funnel
                f[pos:hi_i] = hi_s
                val += hi_s * (hi_i - pos)
                pos = hi_i
                break
            if s_hi < lo_s:
                f[pos:lo_i] = lo_s
                val += lo_s * (lo_i - pos)
                pos = lo_i
                break
            if s_lo >= lo_s:
                lo_s, lo_i = s_lo, j
            if s_hi <= hi_s:
                hi_s, hi_i = s_hi, j
        else:
            f[pos:] = (S[n] - val) / (n - pos)
            pos = n
    return f
