"""Safety bounds for confirmation by depth and by time.

Four bound families, all functions of the two mining rates and the delay:

* an exponential-in-depth upper bound with explicit prefactor and decay rate
  (cheap, valid all the way to the tolerance boundary);
* a finer upper bound for confirmation depth k, obtained by optimizing a
  split point n between the tied-height tail and a race integral against an
  Erlang-distributed confirmation interval;
* a matching lower bound from the best known concrete attack;
* upper/lower bounds for confirmation by elapsed time t.

Conventions that keep truncated evaluations honest: an upper bound may only
drop mass that it subtracts (making it larger), and every quantity a lower
bound subtracts is rounded up by the truncation allowance, which is recorded
in the report.  Values are clamped into [0, 1] only at the report boundary;
the raw value is kept alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .balance import tie_cdf, tie_cdf_bounded, tie_params
from .errors import (
    AccuracyError,
    DomainError,
    ParameterError,
    SearchExhaustedError,
)
from .probability import Prob, erlang_cdf, erlang_pdf, erlang_quantile, poisson_cdf, poisson_pmf
from .renewal import MiningParams, PmfSeries, peak_lead_pmf


@dataclass(frozen=True)
class ToleranceReport:
    within: bool
    slack: float        # mean attack interarrival minus (delay + mean honest wait)
    beta_star: float    # critical adversary fraction at this total rate and delay


def beta_star(total_rate: float, delay: float) -> float:
    """Largest tolerable adversary fraction at a fixed total mining rate."""
    if total_rate <= 0 or delay < 0:
        raise ParameterError("need total_rate > 0 and delay >= 0")
    x = total_rate * delay
    if x == 0:
        return 0.5
    return ((2.0 + x) - math.sqrt((2.0 + x) ** 2 - 4.0 * x)) / (2.0 * x)


def tolerance_check(p: MiningParams) -> ToleranceReport:
    slack = math.inf if p.adv_rate == 0 else 1.0 / p.adv_rate - p.delay - 1.0 / p.hon_rate
    return ToleranceReport(
        within=p.within_tolerance,
        slack=slack,
        beta_star=beta_star(p.total_rate, p.delay),
    )


@dataclass(frozen=True)
class ChernoffConstants:
    """Prefactor and decay rate of the exponential depth bound.

    alpha and eta are the mining rates normalized by the delay; gamma solves
    the tilted-drift equation and is positive exactly inside the tolerance
    region; the bound is amp * exp(-decay * k).
    """

    alpha: float
    eta: float
    gamma: float
    xi: float
    decay: float
    amp: float
    variant: bool = False

    @property
    def tilt_base(self) -> float:
        """Argument at which the peak-deficit pgf equals the tilted moment."""
        return 1.0 + self.gamma / self.alpha


def chernoff_constants(p: MiningParams, variant: bool = False) -> ChernoffConstants:
    if p.adv_rate <= 0:
        raise DomainError("exponential bound needs a positive adversary rate")
    if p.delay <= 0:
        raise DomainError("exponential bound needs a positive delay")
    if not p.within_tolerance:
        raise DomainError("exponential bound only exists inside the tolerance region")
    alpha = p.adv_rate * p.delay
    eta = p.hon_rate * p.delay
    gamma = (2.0 - alpha + eta - math.sqrt(4.0 + (alpha + eta) ** 2)) / 2.0
    xi = math.log1p(gamma / alpha) + math.log1p(-gamma / eta) - gamma
    lr = math.log(tie_params(p).ratio)
    decay = xi / (1.0 - math.log1p(gamma / alpha) / lr)
    boost = 2.5 if variant else 3.0
    root = (
        math.exp(boost * gamma)
        * gamma
        * (eta - alpha - alpha * eta)
        / (alpha * eta * math.exp(gamma) - (alpha + gamma) * (eta - gamma))
    )
    amp = root * root + 1.0 - (eta - alpha - alpha * eta) / (eta * math.exp(alpha))
    return ChernoffConstants(
        alpha=alpha, eta=eta, gamma=gamma, xi=xi, decay=decay, amp=amp, variant=variant
    )


@dataclass(frozen=True)
class BoundReport:
    kind: str                 # depth-upper | depth-lower | depth-chernoff | time-upper | time-lower
    value: Prob
    direction: str            # "upper" | "lower"
    n_star: int | None = None
    truncation: float = 0.0   # allowance charged for truncated sums/integrals

    @property
    def clamped(self) -> bool:
        return self.value.clamped

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": float(self.value),
            "raw": self.value.raw,
            "direction": self.direction,
            "n_star": self.n_star,
            "truncation": self.truncation,
            "clamped": self.clamped,
        }


def chernoff_depth_bound(p: MiningParams, k: int, variant: bool = False) -> BoundReport:
    if k < 0:
        raise ParameterError("confirmation depth must be >= 0")
    c = chernoff_constants(p, variant)
    return BoundReport(
        kind="depth-chernoff",
        value=Prob.clamp(c.amp * math.exp(-c.decay * k)),
        direction="upper",
    )


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(deg: int):
    if deg not in _GL_CACHE:
        _GL_CACHE[deg] = np.polynomial.legendre.leggauss(deg)
    return _GL_CACHE[deg]


def _erlang_mix(fn, k: int, rate: float, tol: float = 1e-10, tail: float = 1e-12,
                deg: int = 24, max_panels: int = 512):
    """E[fn(U)] componentwise for U ~ Erlang(k, rate).

    Truncates U at its (1 - tail) quantile, then applies composite
    Gauss-Legendre with panel doubling until two refinements agree within
    tol.  Returns (vector, truncated_tail_mass).
    """
    u_max = erlang_quantile(1.0 - tail, k, rate)
    x, w = _leggauss(deg)
    prev = None
    panels = 4
    while panels <= max_panels:
        edges = np.linspace(0.0, u_max, panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wts = (half[:, None] * w[None, :]).ravel() * erlang_pdf(u, k, rate)
        vals = fn(u) @ wts
        if prev is not None and np.max(np.abs(vals - prev)) < tol:
            return vals, 1.0 - float(erlang_cdf(u_max, k, rate))
        prev = vals
        panels *= 2
    raise AccuracyError("erlang quadrature failed to settle within tolerance")


def _series(p: MiningParams, series: PmfSeries | None) -> PmfSeries:
    return series if series is not None else peak_lead_pmf(p)


def depth_upper(
    p: MiningParams,
    k: int,
    variant: bool = False,
    series: PmfSeries | None = None,
    n_cap: int = 400,
) -> BoundReport:
    """Finer upper bound on violating a depth-k confirmation.

    For each split n, charges the event of more than n-1 tied heights at its
    bounded-opportunity tail, and the complementary racing event through an
    expectation over the Erlang(k) confirmation interval.  Scans n = 1..400
    and keeps the best.  Dropped series/integral mass only loosens the bound,
    so no allowance needs to be subtracted; the report still records it.
    """
    if k < 1:
        raise ParameterError("confirmation depth must be >= 1")
    if not p.within_tolerance:
        raise DomainError("bound requires parameters inside the tolerance region")
    ser = _series(p, series)
    coeffs = np.maximum(ser.coeffs, 0.0)
    a, h, d = p.adv_rate, p.hon_rate, p.delay
    shift = (k + (3 if variant else 4)) * d
    rows = np.arange(1.0, k + 1.0)  # cdf row m corresponds to shape m+1

    def integrand(u):
        mu = a * (u + shift)
        return sp.gammaincc(rows[:, None], mu[None, :])

    race, tail_mass = _erlang_mix(integrand, k, h)
    ee = np.convolve(coeffs, coeffs)
    best_val, best_n = math.inf, None
    for n in range(1, min(k, n_cap) + 1):
        top = k - n
        mm = min(top, len(ee) - 1)
        s = float(np.dot(ee[: mm + 1], race[top - mm: top + 1][::-1]))
        val = 2.0 - s - float(tie_cdf_bounded(p, k, n - 1))
        if val < best_val:
            best_val, best_n = val, n
    return BoundReport(
        kind="depth-upper",
        value=Prob.clamp(best_val),
        direction="upper",
        n_star=best_n,
        truncation=tail_mass + 2.0 * max(ser.residual, 0.0),
    )


def depth_lower(
    p: MiningParams,
    k: int,
    series: PmfSeries | None = None,
) -> BoundReport:
    """Success probability of the concrete attack; true risk is at least this.

    Combines the stationary private lead (geometric), the peak deficit pmf,
    and the race against the Erlang(k) confirmation interval.  All truncated
    mass is charged against the value so the reported number never exceeds
    the exact expression.
    """
    if k < 1:
        raise ParameterError("confirmation depth must be >= 1")
    if p.adv_rate >= p.hon_rate:
        raise DomainError("attack lower bound needs adv_rate < hon_rate")
    if not p.within_tolerance:
        raise DomainError("bound requires parameters inside the tolerance region")
    ser = _series(p, series)
    coeffs = np.maximum(ser.coeffs, 0.0)
    a, h, d = p.adv_rate, p.hon_rate, p.delay

    first = 2.0 ** (-k) * math.exp(-h * (k + 2.0) * d)

    rows = np.arange(1.0, k + 2.0)
    shift = (k - 1.0) * d

    def integrand(u):
        mu = a * (u + shift)
        return sp.gammaincc(rows[:, None], mu[None, :])

    race, tail_mass = _erlang_mix(integrand, k, h)  # race[m] for m = 0..k
    lead = (1.0 - a / h) * (a / h) ** np.arange(k + 1)
    w = np.convolve(lead, coeffs)[: k + 1]
    p_quiet = math.exp(-h * d)
    m = np.arange(len(w))
    tight = np.where(k - 1 - m >= 0, race[np.maximum(k - 1 - m, 0)], 0.0)
    loose = race[k - m]
    second = float(np.dot(w, p_quiet * tight + (1.0 - p_quiet) * loose))

    allowance = tail_mass + max(ser.residual, 0.0) + float(np.abs(np.minimum(ser.coeffs, 0.0)).sum())
    val = 1.0 - first - second - allowance
    return BoundReport(
        kind="depth-lower",
        value=Prob.clamp(val),
        direction="lower",
        truncation=allowance,
    )


def time_upper(
    p: MiningParams,
    t: float,
    series: PmfSeries | None = None,
    n_cap: int = 64,
    i_cap: int = 2000,
) -> BoundReport:
    """Upper bound on violating a confirmation that waits t units of time.

    The infinite mixture over (attack arrivals, two peak-deficit draws) is
    cut off once the joint cdf leaves at most ~1e-12 behind; the entire
    dropped mass is added back as slack, so the bound stays valid.
    """
    if t < 0:
        raise ParameterError("confirmation time must be >= 0")
    if not p.within_tolerance:
        raise DomainError("bound requires parameters inside the tolerance region")
    ser = _series(p, series)
    coeffs = np.maximum(ser.coeffs, 0.0)
    a, h, d = p.adv_rate, p.hon_rate, p.delay
    mu = a * (t + 2.0 * d)

    i0 = int(mu + 10.0 * math.sqrt(mu + 1.0) + 20.0)
    while poisson_cdf(i0, mu) < 1.0 - 1e-12 and i0 < i_cap:
        i0 = min(i_cap, i0 * 2)
    pois = poisson_pmf(np.arange(i0 + 1), mu)
    slack = 1.0 - float(poisson_cdf(i0, mu)) * float(coeffs.sum()) ** 2

    w = np.convolve(np.convolve(pois, coeffs), coeffs)
    m = np.arange(len(w))
    best_val, best_n, worse = math.inf, None, 0
    for n in range(1, n_cap + 1):
        arg = t - (m + n + 2.0) * d
        cdf = sp.gammainc(m + n, h * np.maximum(arg, 0.0))
        cdf = np.where(arg > 0, cdf, 0.0)
        g = float(np.dot(w, 1.0 - cdf)) + slack
        val = 1.0 - float(tie_cdf(p, n - 1)) + g
        if val < best_val:
            best_val, best_n, worse = val, n, 0
        else:
            worse += 1
            if worse >= 8:
                break
    return BoundReport(
        kind="time-upper",
        value=Prob.clamp(best_val),
        direction="upper",
        n_star=best_n,
        truncation=slack,
    )


def time_lower(
    p: MiningParams,
    t: float,
    series: PmfSeries | None = None,
    k_cap: int = 2000,
) -> BoundReport:
    """Attack success probability against a time-t confirmation.

    Partial sums of the nonnegative mixture only lower the value, so the cut
    at k_cap terms is safe.  The exponentially tilted Poisson cdf factor is
    fused in log space to survive large t.
    """
    if t < 0:
        raise ParameterError("confirmation time must be >= 0")
    if p.adv_rate >= p.hon_rate:
        raise DomainError("attack lower bound needs adv_rate < hon_rate")
    if not p.within_tolerance:
        raise DomainError("bound requires parameters inside the tolerance region")
    if p.adv_rate == 0:
        return BoundReport(kind="time-lower", value=Prob.clamp(0.0), direction="lower")
    ser = _series(p, series)
    coeffs = np.maximum(ser.coeffs, 0.0)
    a, h, d = p.adv_rate, p.hon_rate, p.delay
    big_t = t + 2.0 * d
    ln_ah = math.log(a / h)

    kk = int(min(k_cap, max(8.0, (50.0 + max(0.0, (h - a) * big_t)) / -ln_ah)))
    i = np.arange(kk + 1)
    # ln[(a/h)^k * e^{(h-a)T} * PoissonCdf(k; hT)] without overflow
    lse = np.logaddexp.accumulate(i * math.log(h * big_t) - sp.gammaln(i + 1.0)) if h * big_t > 0 \
        else np.where(i >= 0, 0.0, -np.inf)
    tilt = i * ln_ah - a * big_t + lse

    s = np.arange(len(coeffs) + kk)
    arg = t + d - s * d
    cdf = sp.gammainc(s + 1.0, h * np.maximum(arg, 0.0))
    tail2 = np.where(arg > 0, 1.0 - cdf, 1.0)
    with np.errstate(divide="ignore"):
        ln_tail2 = np.log(tail2)
        ln_e = np.log(np.maximum(coeffs, 0.0))
    jj = np.arange(len(coeffs))
    ln_terms = ln_e[:, None] + tilt[None, :] + ln_tail2[jj[:, None] + i[None, :]]
    total = math.exp(sp.logsumexp(ln_terms)) if np.any(np.isfinite(ln_terms)) else 0.0
    val = (1.0 - a / h) * total - math.exp(-h * big_t)
    return BoundReport(
        kind="time-lower",
        value=Prob.clamp(val),
        direction="lower",
    )


_BOUNDS_BY_DEPTH = {
    "finer": lambda p, k, series, variant: depth_upper(p, k, variant=variant, series=series),
    "chernoff": lambda p, k, series, variant: chernoff_depth_bound(p, k, variant=variant),
    "lower": lambda p, k, series, variant: depth_lower(p, k, series=series),
}


@dataclass(frozen=True)
class MinDepthResult:
    k: int
    report: BoundReport
    method: str
    target: float


def min_depth(
    p: MiningParams,
    q: float,
    method: str = "finer",
    variant: bool = False,
    k_cap: int = 5000,
) -> MinDepthResult:
    """Smallest depth whose bound meets the risk target q.

    Doubles k until the bound crosses below q, then binary-searches the
    crossing.  The bound families here decrease in k, which the search
    assumes.
    """
    if not 0.0 < q < 1.0:
        raise ParameterError("risk target must be in (0, 1)")
    if method not in _BOUNDS_BY_DEPTH:
        raise ParameterError(f"unknown method {method!r}")
    fn = _BOUNDS_BY_DEPTH[method]
    series = None if method == "chernoff" else peak_lead_pmf(p)

    def ok(k: int) -> BoundReport | None:
        r = fn(p, k, series, variant)
        return r if float(r.value) <= q else None

    hi, lo = 1, 0
    rep = ok(hi)
    while rep is None:
        lo, hi = hi, hi * 2
        if hi > k_cap:
            raise SearchExhaustedError(f"no depth <= {k_cap} meets target {q:g}")
        rep = ok(hi)
    while hi - lo > 1:
        mid = (hi + lo) // 2
        r = ok(mid)
        if r is not None:
            hi, rep = mid, r
        else:
            lo = mid
    return MinDepthResult(k=hi, report=rep, method=method, target=q)


@dataclass(frozen=True)
class MinTimeResult:
    t: float
    report: BoundReport
    method: str
    target: float


def min_time(
    p: MiningParams,
    q: float,
    method: str = "upper",
    rel_tol: float = 1e-3,
    max_doublings: int = 60,
) -> MinTimeResult:
    """Shortest confirmation time whose bound meets the risk target q.

    Expands a bracket by doubling, then bisects to relative width rel_tol
    and returns the safe (upper) end.
    """
    if not 0.0 < q < 1.0:
        raise ParameterError("risk target must be in (0, 1)")
    if method not in ("upper", "lower"):
        raise ParameterError(f"unknown method {method!r}")
    series = peak_lead_pmf(p)
    fn = time_upper if method == "upper" else time_lower

    def ok(t: float):
        r = fn(p, t, series=series)
        return r if float(r.value) <= q else None

    lo = 0.0
    hi = 4.0 * (p.delay + 1.0 / p.hon_rate)
    rep = ok(hi)
    for _ in range(max_doublings):
        if rep is not None:
            break
        lo, hi = hi, hi * 2.0
        rep = ok(hi)
    else:
        raise SearchExhaustedError(f"no time within {hi:g} meets target {q:g}")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        r = ok(mid)
        if r is not None:
            hi, rep = mid, r
        else:
            lo = mid
    return MinTimeResult(t=hi, report=rep, method=method, target=q)


def depth_table(
    total_rate: float,
    delay: float,
    betas,
    q: float,
    variant: bool = False,
) -> list[dict]:
    """Per-adversary-share table of minimal depths under each bound family."""
    rows = []
    for beta in betas:
        p = MiningParams.from_split(beta, total_rate, delay)
        row = {"beta": float(beta), "q": float(q)}
        row["k_upper"] = min_depth(p, q, method="finer", variant=variant).k
        row["k_lower"] = min_depth(p, q, method="lower").k
        row["k_chernoff"] = min_depth(p, q, method="chernoff", variant=variant).k
        rows.append(row)
    return rows
