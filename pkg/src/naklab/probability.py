"""Shared probability toolkit.

Thin wrappers over scipy.special for the Poisson / Erlang / binomial tails
used everywhere else, a Prob type that records clamping instead of silently
saturating, integer-supported CDFs with generalized-inverse sampling, and the
worst-case additive coupling used to check tightness of two-part tail bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp

from .errors import DomainError, ParameterError, SearchExhaustedError


class Prob(float):
    """A float in [0,1] that remembers whether it was clamped to get there.

    Numeric bound formulas can legitimately stray outside [0,1] (they are
    bounds, not probabilities, until clamped).  Clamping happens only at the
    reporting boundary and the pre-clamp value stays available as .raw.
    """

    __slots__ = ("raw", "clamped")

    def __new__(cls, value: float, *, raw: float | None = None, clamped: bool = False):
        self = super().__new__(cls, value)
        self.raw = float(value) if raw is None else float(raw)
        self.clamped = bool(clamped)
        return self

    @classmethod
    def clamp(cls, value: float) -> "Prob":
        v = float(value)
        if math.isnan(v):
            raise DomainError("probability is NaN")
        c = min(1.0, max(0.0, v))
        return cls(c, raw=v, clamped=(c != v))


def poisson_pmf(i, mu):
    """P(Poisson(mu) = i), vectorized, exact 1/0 at mu=0."""
    i = np.asarray(i)
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise ParameterError("poisson mean must be >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = sp.xlogy(i, mu) - mu - sp.gammaln(i + 1)
        out = np.where(i < 0, 0.0, np.exp(logp))
    out = np.where((mu == 0), np.where(i == 0, 1.0, 0.0), out)
    return out if out.ndim else float(out)


def poisson_cdf(i, mu):
    """P(Poisson(mu) <= i) via the regularized upper incomplete gamma."""
    i = np.asarray(i)
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise ParameterError("poisson mean must be >= 0")
    out = np.where(i < 0, 0.0, sp.gammaincc(np.maximum(i, 0) + 1.0, mu))
    return out if out.ndim else float(out)


def erlang_pdf(t, k: int, rate: float):
    """Density of the sum of k independent Exp(rate) variables."""
    if k < 1 or rate <= 0:
        raise ParameterError("erlang needs shape >= 1 and rate > 0")
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = k * math.log(rate) + sp.xlogy(k - 1, t) - rate * t - sp.gammaln(k)
        out = np.where(t > 0, np.exp(logf), 0.0)
    out = np.where(t == 0, rate if k == 1 else 0.0, out)
    return out if out.ndim else float(out)


def erlang_cdf(t, k: int, rate: float):
    if k < 1 or rate <= 0:
        raise ParameterError("erlang needs shape >= 1 and rate > 0")
    t = np.asarray(t, dtype=float)
    out = np.where(t > 0, sp.gammainc(k, rate * np.maximum(t, 0.0)), 0.0)
    return out if out.ndim else float(out)


def erlang_quantile(p: float, k: int, rate: float) -> float:
    """Smallest t with P(Erlang(k, rate) <= t) >= p, by bracket + bisection."""
    if not 0.0 <= p < 1.0:
        raise ParameterError("quantile level must be in [0, 1)")
    if p == 0.0:
        return 0.0
    hi = k / rate
    for _ in range(400):
        if erlang_cdf(hi, k, rate) >= p:
            break
        hi *= 2.0
    else:
        raise SearchExhaustedError("erlang quantile bracket did not close")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if erlang_cdf(mid, k, rate) >= p:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return hi


def binom_ccdf(n, k: int, p: float):
    """P(Binomial(k, p) >= n) through the regularized incomplete beta."""
    if k < 0 or not 0.0 <= p <= 1.0:
        raise ParameterError("binomial needs k >= 0 and p in [0,1]")
    n = np.asarray(n)
    res = np.ones(np.shape(n), dtype=float)
    inside = (n >= 1) & (n <= k)
    if np.any(inside):
        nn = np.asarray(n, dtype=float)[inside]
        res[inside] = sp.betainc(nn, k - nn + 1.0, p)
    res[np.asarray(n) > k] = 0.0
    return res if res.ndim else float(res)


@dataclass(frozen=True)
class DiscreteCdf:
    """CDF of an integer random variable stored on a contiguous window.

    cdf[i] = P(X <= origin + i).  Mass beyond the last stored point, if any,
    is tail_mass; F() returns the stored plateau there, so bounds built from
    Fbar of a truncated distribution err on the safe side only when the
    caller accounts for tail_mass explicitly.
    """

    origin: int
    cdf: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.cdf, dtype=float)
        if c.ndim != 1 or len(c) == 0:
            raise ParameterError("cdf must be a non-empty 1-d array")
        if np.any(np.diff(c) < -1e-12):
            raise ParameterError("cdf must be non-decreasing")
        if c[0] < -1e-12 or c[-1] > 1.0 + 1e-9:
            raise ParameterError("cdf values must stay within [0, 1]")
        if self.tail_mass < -1e-12:
            raise ParameterError("tail_mass must be >= 0")
        object.__setattr__(self, "cdf", c)

    @classmethod
    def from_pmf(cls, origin: int, pmf) -> "DiscreteCdf":
        p = np.asarray(pmf, dtype=float)
        if np.any(p < -1e-9):
            raise ParameterError("pmf has a significantly negative entry")
        c = np.minimum(np.cumsum(np.maximum(p, 0.0)), 1.0)
        return cls(origin=int(origin), cdf=c, tail_mass=max(0.0, 1.0 - float(c[-1])))

    @property
    def last(self) -> int:
        return self.origin + len(self.cdf) - 1

    def F(self, n) -> np.ndarray | float:
        n = np.asarray(n)
        idx = np.clip(n - self.origin, 0, len(self.cdf) - 1).astype(int)
        out = np.where(n < self.origin, 0.0, self.cdf[idx])
        return out if out.ndim else float(out)

    def Fbar(self, n):
        """P(X > n), honest about stored truncation: includes tail_mass."""
        out = 1.0 - np.asarray(self.F(n))
        return out if out.ndim else float(out)

    def quantile(self, x) -> np.ndarray | int:
        """Generalized inverse: min{v : F(v) >= x}, clamped to origin at x<=0.

        The x<=0 clamp only matters on a measure-zero event when x comes from
        a uniform draw, which is the intended use.
        """
        x = np.asarray(x, dtype=float)
        if np.any(x > self.cdf[-1] + 1e-9):
            raise DomainError("quantile level exceeds stored support")
        idx = np.searchsorted(self.cdf, x, side="left")
        idx = np.minimum(idx, len(self.cdf) - 1)
        out = self.origin + idx
        return out if out.ndim else int(out)


def phi_split(cdf_x: DiscreteCdf, cdf_y: DiscreteCdf, n) -> np.ndarray | float:
    """phi(n) = P(X >= -n+1... ) in the union-bound form Fbar_X(-n) + Fbar_Y(n-1)."""
    n = np.asarray(n)
    out = np.asarray(cdf_x.Fbar(-n)) + np.asarray(cdf_y.Fbar(n - 1))
    return out if out.ndim else float(out)


def minimize_phi(cdf_x: DiscreteCdf, cdf_y: DiscreteCdf) -> tuple[int, float]:
    """Best split point for the two-sided tail bound on P(X + Y >= 0).

    Scans every n where either term can change value; returns the smallest
    argmin.  With finite supports the scan set is exact, not heuristic.
    """
    cand = set()
    for v in range(cdf_x.origin - 1, cdf_x.last + 2):
        cand.add(-v)
    for v in range(cdf_y.origin - 1, cdf_y.last + 2):
        cand.add(v + 1)
    ns = np.array(sorted(cand), dtype=int)
    vals = np.asarray(phi_split(cdf_x, cdf_y, ns))
    i = int(np.argmin(vals))
    return int(ns[i]), float(vals[i])


def couple_extremal(cdf_x: DiscreteCdf, cdf_y: DiscreteCdf, a: int, u):
    """Joint draw (X0, Y0) with the given marginals that attains phi(a).

    X0 = Fx^{-1}(frac(U + Fx(-a))), Y0 = Fy^{-1}(frac(Fy(a-1) - U)): the two
    uniforms are antithetic and offset so that the events {X0 >= -a+1} and
    {Y0 >= a} partition the part of the probability space where X0+Y0 can
    reach 0, making the union bound an equality.
    """
    u = np.asarray(u, dtype=float)
    fx = float(cdf_x.F(-a))
    fy = float(cdf_y.F(a - 1))
    ux = (u + fx) % 1.0
    uy = (fy - u) % 1.0
    return cdf_x.quantile(ux), cdf_y.quantile(uy)


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ParameterError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ParameterError("successes must lie in [0, trials]")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class EmpiricalCdf:
    """Accumulates integer observations as exact counts, then freezes to a CDF."""

    counts: dict = field(default_factory=dict)
    total: int = 0

    def add(self, values, weights=None):
        values = np.asarray(values).ravel()
        if weights is None:
            uniq, cnt = np.unique(values, return_counts=True)
        else:
            w = np.asarray(weights).ravel()
            uniq, inv = np.unique(values, return_inverse=True)
            cnt = np.bincount(inv, weights=w).astype(np.int64)
        for v, c in zip(uniq.tolist(), cnt.tolist()):
            self.counts[int(v)] = self.counts.get(int(v), 0) + int(c)
            self.total += int(c)

    def merge(self, other: "EmpiricalCdf"):
        for v, c in other.counts.items():
            self.counts[v] = self.counts.get(v, 0) + c
            self.total += c

    def freeze(self) -> DiscreteCdf:
        if not self.counts:
            raise DomainError("no observations recorded")
        lo = min(self.counts)
        hi = max(self.counts)
        pmf = np.zeros(hi - lo + 1, dtype=float)
        for v, c in self.counts.items():
            pmf[v - lo] = c / self.total
        return DiscreteCdf.from_pmf(lo, pmf)
