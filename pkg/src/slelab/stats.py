"""Two-sample Kolmogorov--Smirnov test with the asymptotic null distribution.

Self-contained so that statistical reports depend only on this package; the
test suite cross-checks against scipy.  The p-value uses the limiting
distribution of ``sqrt(n1*n2/(n1+n2)) * D`` -- the Kolmogorov function
``Q(lam) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2)`` -- with the
theta-function form for small ``lam`` where the alternating series is slow.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError


def ks_statistic(x, y) -> float:
    """Sup-distance between the empirical CDFs of samples ``x`` and ``y``."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ParameterError("KS statistic needs nonempty samples")
    pooled = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, pooled, side="right") / x.size
    cdf_y = np.searchsorted(y, pooled, side="right") / y.size
    return float(np.max(np.abs(cdf_x - cdf_y)))


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov limit law, Q(lam)."""
    if lam < 0.0:
        raise ParameterError(f"need lam >= 0, got {lam}")
    if lam == 0.0:
        return 1.0
    if lam < 1.18:
        # Jacobi theta form: 1 - sqrt(2 pi)/lam * sum exp(-(2k-1)^2 pi^2 / (8 lam^2))
        t = math.exp(-math.pi * math.pi / (8.0 * lam * lam))
        cdf = (math.sqrt(2.0 * math.pi) / lam) * (t + t**9 + t**25 + t**49)
        return min(1.0, max(0.0, 1.0 - cdf))
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += -term if k % 2 == 0 else term
        if term < 1e-300:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(x, y) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = ks_statistic(x, y)
    en = x.size * y.size / (x.size + y.size)
    return d, kolmogorov_sf(math.sqrt(en) * d)
