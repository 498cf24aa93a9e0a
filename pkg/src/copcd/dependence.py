"""Rank-based dependence measures: Kendall's tau, empirical CDFs,
orientation for negative association, and nonparametric tail-dependence
estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TAIL_CLAYTON = "clayton"
TAIL_CLAYTON_SURVIVAL = "clayton_survival"
ORIENT_IDENTITY = "identity"
ORIENT_NEGATED = "negated"

_CHUNK = 256


def kendall_tau(x, y) -> float:
    """Concordance statistic: (concordant - discordant) / (N(N-1)/2).

    Tied pairs contribute zero to the numerator but stay in the denominator.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D vectors of equal length")
    n = len(x)
    if n < 2:
        raise ValueError("need at least 2 samples")
    num = 0
    for start in range(0, n - 1, _CHUNK):
        stop = min(start + _CHUNK, n - 1)
        rows = np.arange(start, stop)
        dx = x[rows, None] - x[None, :]
        dy = y[rows, None] - y[None, :]
        s = np.sign(dx * dy)
        # Only pairs j > i count.
        mask = np.arange(n)[None, :] > rows[:, None]
        num += int(s[mask].sum())
    return 2.0 * num / (n * (n - 1))


class EmpiricalCdf:
    """Right-continuous empirical CDF: F(h) = #{samples <= h} / N."""

    def __init__(self, samples):
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 1 or len(samples) == 0:
            raise ValueError("samples must be a nonempty 1-D vector")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        self.sorted = np.sort(samples)
        self.n = len(samples)

    def __call__(self, h):
        h = np.asarray(h, dtype=np.float64)
        counts = np.searchsorted(self.sorted, h, side="right")
        out = counts / self.n
        return float(out) if out.ndim == 0 else out


def empirical_cdf(samples) -> EmpiricalCdf:
    return EmpiricalCdf(samples)


def orient(u, tau: float):
    """Reflect pseudo-observations when the association is negative."""
    u = np.asarray(u, dtype=np.float64)
    if (u < 0).any() or (u > 1).any():
        raise ValueError("pseudo-observations must lie in [0, 1]")
    return 1.0 - u if tau < 0 else u.copy()


def tail_dependence(u, v):
    """Empirical lower/upper tail-dependence estimates from oriented
    pseudo-observations, clipped to [0, 1].

    Uses k = floor(sqrt(N)) corner cells of width k/N; comparisons are
    inclusive.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("u and v must be 1-D vectors of equal length")
    n = len(u)
    if n < 4:
        raise ValueError("need at least 4 samples")
    if (u < 0).any() or (u > 1).any() or (v < 0).any() or (v > 1).any():
        raise ValueError("pseudo-observations must lie in [0, 1]")
    k = int(np.floor(np.sqrt(n)))
    t = k / n
    lower = np.count_nonzero((u <= t) & (v <= t)) / k
    upper = np.count_nonzero((u >= 1 - t) & (v >= 1 - t)) / k
    return float(np.clip(lower, 0.0, 1.0)), float(np.clip(upper, 0.0, 1.0))


@dataclass(frozen=True)
class DependenceProfile:
    """Summary of a channel pair's dependence structure.

    tail_mode and orientation are pure functions of (tau, eta_lower,
    eta_upper).
    """

    tau: float
    eta_lower: float
    eta_upper: float

    @property
    def orientation(self) -> str:
        return ORIENT_NEGATED if self.tau < 0 else ORIENT_IDENTITY

    @property
    def tail_mode(self) -> str:
        return TAIL_CLAYTON if self.eta_lower > self.eta_upper else TAIL_CLAYTON_SURVIVAL

    @classmethod
    def from_samples(cls, x, y) -> "DependenceProfile":
        tau = kendall_tau(x, y)
        u = empirical_cdf(x)(x)
        v = orient(empirical_cdf(y)(y), tau)
        lower, upper = tail_dependence(u, v)
        return cls(tau=tau, eta_lower=lower, eta_upper=upper)
