"""Small Monte Carlo summary helpers."""
from dataclasses import dataclass
import math

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo point estimate with its standard error."""

    value: float
    stderr: float
    reps: int

    def within(self, target, sigmas=3.0, slack=0.0):
        return abs(self.value - target) <= sigmas * self.stderr + slack

    def __float__(self):
        return float(self.value)


def mean_estimate(samples):
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return Estimate(float(x.mean()), se, int(x.size))


def binomial_estimate(successes, trials):
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    return Estimate(float(p), math.sqrt(p * (1.0 - p) / trials), int(trials))


def band_ratio(values):
    """max/min of positive values; ``inf`` when any value is not positive."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.any(~np.isfinite(v)) or np.any(v <= 0):
        return math.inf
    return float(v.max() / v.min())
