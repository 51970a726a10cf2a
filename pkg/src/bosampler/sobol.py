"""Sobol low-discrepancy points and the Gaussian inverse CDF.

The direction numbers are the first 32 dimensions of the Joe-Kuo
``new-joe-kuo-6.21201`` table (search-optimized primitive polynomials and
initial values).  Points are built with the Gray-code recursion over 32-bit
integers; the all-zeros first point of the raw sequence is skipped, so the
first point returned is (0.5, ..., 0.5).
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = ["MAX_DIM", "sobol_points", "inverse_normal_cdf", "normal_qmc_points"]

MAX_DIM = 32
_MAXBIT = 32

# Per dimension >= 2: (a, (m_1..m_s)) where s = len(m) is the degree of the
# primitive polynomial and a packs its interior coefficient bits.  Dimension 1
# is the plain van der Corput sequence and needs no entry.
_JOE_KUO = (
    (0, (1,)),
    (1, (1, 3)),
    (1, (1, 3, 1)),
    (2, (1, 1, 1)),
    (1, (1, 1, 3, 3)),
    (4, (1, 3, 5, 13)),
    (2, (1, 1, 5, 5, 17)),
    (4, (1, 1, 5, 5, 5)),
    (7, (1, 1, 7, 11, 19)),
    (11, (1, 1, 5, 1, 1)),
    (13, (1, 1, 1, 3, 11)),
    (14, (1, 3, 5, 5, 31)),
    (1, (1, 3, 3, 9, 7, 49)),
    (13, (1, 1, 1, 15, 21, 21)),
    (16, (1, 3, 1, 13, 27, 49)),
    (19, (1, 1, 1, 15, 7, 5)),
    (22, (1, 3, 1, 15, 13, 25)),
    (25, (1, 1, 5, 5, 19, 61)),
    (1, (1, 3, 7, 11, 23, 15, 103)),
    (4, (1, 3, 7, 13, 13, 15, 69)),
    (7, (1, 1, 3, 13, 7, 35, 63)),
    (8, (1, 3, 5, 9, 1, 25, 53)),
    (14, (1, 3, 1, 13, 9, 35, 107)),
    (19, (1, 3, 1, 5, 27, 61, 31)),
    (21, (1, 1, 5, 11, 19, 41, 61)),
    (28, (1, 3, 5, 3, 3, 13, 69)),
    (31, (1, 1, 7, 13, 1, 19, 1)),
    (32, (1, 3, 7, 5, 13, 19, 59)),
    (37, (1, 1, 3, 9, 25, 29, 41)),
    (41, (1, 3, 5, 13, 23, 1, 55)),
    (42, (1, 3, 7, 3, 13, 59, 17)),
)


def _direction_numbers(dim: int) -> np.ndarray:
    """V[j, k] = k-th direction number of dimension j+1, as a 32-bit integer."""
    V = np.zeros((dim, _MAXBIT), dtype=np.uint64)
    # dimension 1: V_k = 2^(32-k)
    V[0] = 1 << (np.uint64(_MAXBIT) - np.arange(1, _MAXBIT + 1, dtype=np.uint64))
    for j in range(1, dim):
        a, m = _JOE_KUO[j - 1]
        s = len(m)
        row = V[j]
        for k in range(min(s, _MAXBIT)):
            row[k] = m[k] << (_MAXBIT - (k + 1))
        for k in range(s, _MAXBIT):
            v = row[k - s] ^ (row[k - s] >> np.uint64(s))
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    v ^= row[k - i]
            row[k] = v
    return V


def sobol_points(n: int, dim: int) -> np.ndarray:
    """First ``n`` Sobol points in ``dim`` dimensions, shape (n, dim).

    Deterministic, unscrambled.  Raises ValueError for dim outside 1..32 or
    negative n.
    """
    if not 1 <= dim <= MAX_DIM:
        raise ValueError(f"sobol dimension must be in 1..{MAX_DIM}, got {dim}")
    if n < 0:
        raise ValueError("number of points must be nonnegative")
    if n >= (1 << _MAXBIT):
        raise ValueError("number of points exceeds 32-bit sequence length")
    V = _direction_numbers(dim)
    X = np.zeros(dim, dtype=np.uint64)
    out = np.empty((n, dim), dtype=float)
    scale = 0.5 ** _MAXBIT
    for t in range(n):
        # c = 1-based position of the rightmost zero bit of t (Gray-code step);
        # t here is the raw-sequence index of the previous point, with the
        # all-zeros point 0 as the implicit start.
        c = 0
        i = t
        while i & 1:
            i >>= 1
            c += 1
        X ^= V[:, c]
        out[t] = X * scale
    return out


def inverse_normal_cdf(u) -> np.ndarray:
    """Standard-normal quantile function, elementwise.

    Input must lie strictly inside (0, 1).
    """
    u = np.asarray(u, dtype=float)
    if not np.all((u > 0.0) & (u < 1.0)):
        raise ValueError("inverse normal CDF requires arguments strictly in (0, 1)")
    return ndtri(u)


def normal_qmc_points(n: int, dim: int) -> np.ndarray:
    """Gaussianized Sobol points: coordinatewise inverse CDF of sobol_points."""
    return inverse_normal_cdf(sobol_points(n, dim))
