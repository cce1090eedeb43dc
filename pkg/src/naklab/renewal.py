"""Race between a Poisson attack stream and a dead-time renewal stream.

The honest chain provably gains a height at a cadence described by a renewal
process whose interarrival time is the propagation delay plus an exponential
wait.  Everything downstream of this module reduces questions about safety to
questions about

    M = sup over t >= 0 of (attacker arrivals in (0, t] - renewal points in (0, t]),

the largest deficit the renewal stream ever concedes.  M is finite almost
surely exactly when the renewal stream is faster on average.  Its generating
function has a closed form; the pmf is recovered by dividing the numerator
power series by the denominator power series term by term.

The division recurrence deserves a warning: the denominator has a root at
exactly 1 (mass conservation), so rounding noise in the coefficients is never
damped and settles at a constant absolute floor around 1e-13.  Coefficients
are fine individually, but weighted sums with rapidly growing weights (for
example evaluating the series at an argument near 2) amplify that floor.
Consistency checks against the closed form must therefore stay at arguments
well inside (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as sopt

from .errors import AccuracyError, DomainError, ParameterError, PoleError
from .probability import DiscreteCdf


@dataclass(frozen=True)
class MiningParams:
    """Arrival rates of the two block streams and the propagation delay bound.

    adv_rate and hon_rate are in blocks per unit time; delay is in the same
    time unit.  Honest blocks reach everyone within `delay`.
    """

    adv_rate: float
    hon_rate: float
    delay: float

    def __post_init__(self):
        if not (self.adv_rate >= 0 and math.isfinite(self.adv_rate)):
            raise ParameterError("adv_rate must be finite and >= 0")
        if not (self.hon_rate > 0 and math.isfinite(self.hon_rate)):
            raise ParameterError("hon_rate must be finite and > 0")
        if not (self.delay >= 0 and math.isfinite(self.delay)):
            raise ParameterError("delay must be finite and >= 0")

    @classmethod
    def from_split(cls, adv_fraction: float, total_rate: float, delay: float) -> "MiningParams":
        if not 0.0 <= adv_fraction < 1.0:
            raise ParameterError("adv_fraction must be in [0, 1)")
        if not total_rate > 0:
            raise ParameterError("total_rate must be > 0")
        return cls(adv_fraction * total_rate, (1.0 - adv_fraction) * total_rate, delay)

    @property
    def total_rate(self) -> float:
        return self.adv_rate + self.hon_rate

    @property
    def adv_fraction(self) -> float:
        return self.adv_rate / self.total_rate

    @property
    def growth_margin(self) -> float:
        """hon_rate - adv_rate - hon_rate*adv_rate*delay; > 0 iff tolerable."""
        return self.hon_rate - self.adv_rate - self.hon_rate * self.adv_rate * self.delay

    @property
    def within_tolerance(self) -> bool:
        """Mean attack interarrival strictly exceeds delay + mean honest wait."""
        if self.adv_rate == 0:
            return True
        return 1.0 / self.adv_rate > self.delay + 1.0 / self.hon_rate

    @property
    def pacer_rate(self) -> float:
        """Long-run rate of the dead-time renewal stream: h / (1 + h*delay)."""
        return self.hon_rate / (1.0 + self.hon_rate * self.delay)


def _denominator(p: MiningParams, r: float) -> float:
    a, h, d = p.adv_rate, p.hon_rate, p.delay
    return h - math.exp((1.0 - r) * a * d) * (h + a - a * r) * r


def pgf_pole(p: MiningParams) -> float:
    """Radius of convergence of the peak-deficit pgf.

    The denominator vanishes at 1 (removable) and again somewhere inside
    (1, 1 + h/a]; the second root is the pole.
    """
    if p.adv_rate == 0:
        return math.inf
    if not p.within_tolerance:
        raise DomainError("peak deficit is defective outside the tolerance region")
    hi = 1.0 + p.hon_rate / p.adv_rate
    lo = 1.0 + 1e-9 * (hi - 1.0)
    # just past the removable root the denominator is negative (slope -margin)
    for _ in range(60):
        if _denominator(p, lo) < 0:
            break
        lo = 1.0 + (lo - 1.0) * 0.5
    else:
        raise AccuracyError("could not bracket the pgf pole")
    return float(sopt.brentq(lambda r: _denominator(p, r), lo, hi, xtol=1e-14, rtol=8.9e-16))


def peak_lead_pgf(p: MiningParams, r: float) -> float:
    """E[r^M] in closed form; r must stay strictly inside the pole radius."""
    if p.adv_rate == 0:
        return 1.0
    if not p.within_tolerance:
        raise DomainError("peak deficit is defective outside the tolerance region")
    if abs(r) >= pgf_pole(p):
        raise PoleError(f"argument {r} is at or beyond the pole")
    if abs(r - 1.0) <= 1e-13:
        return 1.0
    num = (1.0 - r) * p.growth_margin
    return num / _denominator(p, r)


def peak_lead_mgf(p: MiningParams, nu: float) -> float:
    """E[exp(nu*M)]; defined for exp(nu) below the pole."""
    return peak_lead_pgf(p, math.exp(nu))


@dataclass(frozen=True)
class PmfSeries:
    """pmf of the peak deficit M, plus how much mass the truncation left out."""

    coeffs: np.ndarray
    residual: float
    used_extended: bool = False

    def __len__(self) -> int:
        return len(self.coeffs)

    def cdf(self) -> DiscreteCdf:
        return DiscreteCdf.from_pmf(0, self.coeffs)


# double-double helpers for the fallback pass; values are (hi, lo) pairs
_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(x, y):
    s = x + y
    b = s - x
    return s, (x - (s - b)) + (y - b)


def _fast_two_sum(x, y):
    s = x + y
    return s, y - (s - x)


def _two_prod(x, y):
    p = x * y
    xh = _SPLIT * x
    xh = xh - (xh - x)
    xl = x - xh
    yh = _SPLIT * y
    yh = yh - (yh - y)
    yl = y - yh
    return p, ((xh * yh - p) + xh * yl + xl * yh) + xl * yl


def _dd_add(x, y):
    s, e = _two_sum(x[0], y[0])
    return _fast_two_sum(s, e + x[1] + y[1])


def _dd_mul(x, y):
    p, e = _two_prod(x[0], y[0])
    return _fast_two_sum(p, e + x[0] * y[1] + x[1] * y[0])


def _dd_div(x, y):
    q1 = x[0] / y[0]
    p = _dd_mul((q1, 0.0), y)
    rh, rl = _dd_add(x, (-p[0], -p[1]))
    return _fast_two_sum(q1, (rh + rl) / y[0])


def _series_coeffs_dd(p: MiningParams, count: int) -> np.ndarray:
    a, h, d = p.adv_rate, p.hon_rate, p.delay
    margin = p.growth_margin
    ad = a * d
    e_terms = [(math.exp(ad), 0.0)]
    for m in range(1, count):
        t = _dd_mul(e_terms[-1], (-ad, 0.0))
        e_terms.append(_dd_div(t, (float(m), 0.0)))
    den = [(h, 0.0)]
    for j in range(1, count):
        t1 = _dd_mul((h + a, 0.0), e_terms[j - 1])
        t2 = _dd_mul((a, 0.0), e_terms[j - 2]) if j >= 2 else (0.0, 0.0)
        s = _dd_add(t1, (-t2[0], -t2[1]))
        den.append((-s[0], -s[1]))
    out = []
    for n in range(count):
        num = (margin, 0.0) if n == 0 else ((-margin, 0.0) if n == 1 else (0.0, 0.0))
        acc = num
        for m in range(1, n + 1):
            t = _dd_mul(den[m], out[n - m])
            acc = _dd_add(acc, (-t[0], -t[1]))
        out.append(_dd_div(acc, den[0]))
    return np.array([c[0] + c[1] for c in out])


def _series_coeffs(p: MiningParams, count: int) -> np.ndarray:
    a, h, d = p.adv_rate, p.hon_rate, p.delay
    margin = p.growth_margin
    ad = a * d
    e_terms = np.empty(count)
    e_terms[0] = math.exp(ad)
    for m in range(1, count):
        e_terms[m] = e_terms[m - 1] * (-ad) / m
    den = np.empty(count)
    den[0] = h
    if count > 1:
        den[1] = -(h + a) * e_terms[0]
    for j in range(2, count):
        den[j] = -((h + a) * e_terms[j - 1] - a * e_terms[j - 2])
    out = np.empty(count)
    for n in range(count):
        num = margin if n == 0 else (-margin if n == 1 else 0.0)
        acc, comp = num, 0.0  # Kahan over the convolution
        for m in range(1, n + 1):
            y = -den[m] * out[n - m] - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        out[n] = acc / den[0]
    return out


def peak_lead_pmf(
    p: MiningParams,
    n_max: int | None = None,
    residual_target: float = 1e-10,
    cap: int = 2000,
) -> PmfSeries:
    """pmf of the peak deficit M by power-series division.

    With n_max unset, stops at the shortest series whose missing mass is
    below residual_target (raising AccuracyError if `cap` coefficients are
    not enough).  Coefficients more negative than -1e-9 trigger one retry in
    double-double arithmetic before giving up.
    """
    if not p.within_tolerance:
        raise DomainError("peak deficit is defective outside the tolerance region")
    if p.adv_rate == 0:
        return PmfSeries(np.array([1.0]), 0.0)
    if n_max is not None:
        if n_max < 0 or n_max > cap:
            raise ParameterError(f"n_max must be in [0, {cap}]")
        count = n_max + 1
        coeffs = _series_coeffs(p, count)
        used = False
        if coeffs.min() < -1e-9:
            coeffs = _series_coeffs_dd(p, count)
            used = True
            if coeffs.min() < -1e-9:
                raise AccuracyError("series coefficients stayed negative in extended precision")
        return PmfSeries(coeffs, float(1.0 - coeffs.sum()), used)

    # adaptive length: grow geometrically, reuse nothing (cheap enough)
    count = 32
    while True:
        coeffs = _series_coeffs(p, count)
        used = False
        if coeffs.min() < -1e-9:
            coeffs = _series_coeffs_dd(p, count)
            used = True
            if coeffs.min() < -1e-9:
                raise AccuracyError("series coefficients stayed negative in extended precision")
        sums = np.cumsum(coeffs)
        ok = np.flatnonzero(1.0 - sums < residual_target)
        if len(ok):
            n = int(ok[0])
            c = coeffs[: n + 1]
            return PmfSeries(c, float(1.0 - c.sum()), used)
        if count >= cap:
            raise AccuracyError(
                f"missing mass still >= {residual_target:g} after {cap} coefficients"
            )
        count = min(cap, count * 2)
