"""Percentile bootstrap of the mean for per-question score vectors."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ValidationError

DEFAULT_RESAMPLES = 10_000
DEFAULT_LEVEL = 0.95


def bootstrap_ci(
    scores: Sequence[float],
    resamples: int = DEFAULT_RESAMPLES,
    level: float = DEFAULT_LEVEL,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap CI of the mean.

    Draws `resamples` resamples with replacement of size len(scores) and takes
    the (1-level)/2 and (1+level)/2 empirical quantiles of resample means.
    Deterministic given seed.

    Raises:
        ValidationError: empty scores, resamples < 1, or level outside (0, 1).
    """
    values = np.asarray(list(scores), dtype=float)
    if values.size == 0:
        raise ValidationError("scores must be nonempty")
    if resamples < 1:
        raise ValidationError("resamples must be >= 1")
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie strictly between 0 and 1")
    if np.ptp(values) == 0.0:
        # Zero variance: every resample mean equals the mean exactly.
        mean = float(values[0])
        return mean, mean
    rng = np.random.default_rng(seed)
    n = values.size
    # Chunk so huge vectors don't allocate resamples x n all at once.
    chunk = max(1, min(resamples, 20_000_000 // max(n, 1)))
    means = np.empty(resamples, dtype=float)
    done = 0
    while done < resamples:
        take = min(chunk, resamples - done)
        draws = rng.integers(0, n, size=(take, n))
        means[done : done + take] = values[draws].mean(axis=1)
        done += take
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(means, [alpha, 1.0 - alpha])
    return float(low), float(high)
