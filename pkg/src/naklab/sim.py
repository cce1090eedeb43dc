"""Direct Monte-Carlo of the mining race.

Every estimator here simulates raw arrival processes and shares no formulas
with the bound modules, so agreement between the two is meaningful evidence.
Trials are laid out in fixed 4096-trial blocks with independent substreams
(see rng.py); per-block tallies are integers and are combined with
commutative sums, making every result independent of thread scheduling.

Attack trials that can no longer plausibly succeed are cut once the
attacker's deficit reaches stop_margin; the chance of cutting a would-be
success is at most (a*(1+h*delay)/h)**stop_margin, far below the Monte-Carlo
noise at the default margin of 60.  Trials still undecided at the horizon
count as failures and are reported in truncated_trials, which keeps every
attack estimate a valid lower estimate of the unbounded-time probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import DomainError, ParameterError
from .parallel import run_blocks
from .probability import DiscreteCdf, EmpiricalCdf, wilson_interval
from .renewal import MiningParams

_CHUNK = 256          # attack arrivals generated per refill
_PACER_CHUNK = 512    # pacer intervals generated per refill


@dataclass(frozen=True)
class SimConfig:
    """Common simulation knobs.

    horizon and warmup are in seconds of simulated time; warmup left unset
    picks a window long enough for the walk in question to mix (see each
    operation).  stop_margin is the deficit at which an attack trial is
    abandoned as hopeless.
    """

    params: MiningParams
    trials: int = 10_000
    seed: int = 0
    horizon: float = 1e6
    warmup: float | None = None
    stop_margin: int = 60

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if not self.horizon > 0:
            raise ParameterError("horizon must be > 0 seconds")
        if self.warmup is not None and self.warmup < 0:
            raise ParameterError("warmup must be >= 0 seconds")
        if self.stop_margin < 1:
            raise ParameterError("stop_margin must be >= 1")

    def warmup_window(self, interarrivals: float) -> float:
        """Warmup span in seconds covering the given expected event count."""
        if self.warmup is not None:
            return float(self.warmup)
        return interarrivals / self.params.total_rate


@dataclass(frozen=True)
class SimEstimate:
    successes: int
    trials: int
    truncated_trials: int
    seed: int
    z: float = 1.959963984540054

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials

    @property
    def ci95(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials, self.z)

    def as_dict(self) -> dict:
        lo, hi = self.ci95
        return {
            "successes": self.successes,
            "trials": self.trials,
            "p_hat": self.p_hat,
            "ci95": [lo, hi],
            "truncated_trials": self.truncated_trials,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Histogram:
    counts: dict[int, int]
    trials: int
    truncated_trials: int
    seed: int

    def cdf(self) -> DiscreteCdf:
        emp = EmpiricalCdf(counts=dict(self.counts), total=sum(self.counts.values()))
        return emp.freeze()

    def point_estimate(self, value: int, z: float = 2.5758293035489004):
        """(p_hat, lo, hi) for P(X == value)."""
        n = self.counts.get(value, 0)
        lo, hi = wilson_interval(n, self.trials, z)
        return n / self.trials, lo, hi

    def as_dict(self) -> dict:
        return {
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "trials": self.trials,
            "truncated_trials": self.truncated_trials,
            "seed": self.seed,
        }


def _merge_histograms(parts, trials, seed) -> Histogram:
    counts: dict[int, int] = {}
    truncated = 0
    for c, tr in parts:
        truncated += tr
        for v, n in c.items():
            counts[v] = counts.get(v, 0) + n
    return Histogram(counts=counts, trials=trials, truncated_trials=truncated, seed=seed)


def sim_max_diff(cfg: SimConfig) -> Histogram:
    """Sampled peak excess of the attack stream over the paced honest stream.

    Tracks max(attack count - paced count) at attack arrival epochs, where
    the supremum is attained.  A trial settles once the running deficit falls
    stop_margin below its peak; the walk drifts down inside the tolerance
    region, so unsettled-at-horizon trials are rare and reported.
    """
    p = cfg.params
    if not p.within_tolerance:
        raise DomainError("the peak excess diverges outside the tolerance region")
    if p.adv_rate == 0:
        return Histogram({0: cfg.trials}, cfg.trials, 0, cfg.seed)
    a, h, d = p.adv_rate, p.hon_rate, p.delay

    def one_block(spec):
        idx, size = spec
        g = rng.substream(cfg.seed, "max_diff", idx)
        counts: dict[int, int] = {}
        truncated = 0
        for _ in range(size):
            peak = 0
            a_count = 0
            a_t = 0.0
            q_times = np.empty(0)
            q_t = 0.0
            done = False
            while not done:
                a_new = a_t + np.cumsum(g.exponential(1.0 / a, _CHUNK))
                a_t = a_new[-1]
                while q_t <= a_t:
                    q_new = q_t + np.cumsum(d + g.exponential(1.0 / h, _PACER_CHUNK))
                    q_t = q_new[-1]
                    q_times = np.concatenate([q_times, q_new])
                behind = np.searchsorted(q_times, a_new, side="right")
                deficit = (a_count + np.arange(1, _CHUNK + 1)) - behind
                peak = max(peak, int(deficit.max()))
                a_count += _CHUNK
                if deficit[-1] <= peak - cfg.stop_margin:
                    done = True
                elif a_t >= cfg.horizon:
                    truncated += 1
                    done = True
            counts[peak] = counts.get(peak, 0) + 1
        return counts, truncated

    parts = run_blocks(one_block, rng.block_layout(cfg.trials))
    return _merge_histograms(parts, cfg.trials, cfg.seed)


def _lead_walk(g, p: MiningParams, window: float) -> int:
    """One realization of the withholding lead after `window` seconds.

    The lead gains one per attack arrival, loses one per pacer, and is
    floored at zero (honest blocks assumed maximally delayed throughout).
    """
    if window <= 0 or p.adv_rate == 0:
        return 0
    a, h, d = p.adv_rate, p.hon_rate, p.delay
    n_a = g.poisson(a * window)
    a_times = np.sort(g.random(n_a)) * window
    est = int(window * p.pacer_rate * 1.05) + 16
    q_times = np.cumsum(d + g.exponential(1.0 / h, est))
    while q_times[-1] <= window:
        q_times = np.concatenate(
            [q_times, q_times[-1] + np.cumsum(d + g.exponential(1.0 / h, est))]
        )
    q_times = q_times[q_times <= window]
    steps = np.concatenate([np.ones(len(a_times)), -np.ones(len(q_times))])
    order = np.argsort(np.concatenate([a_times, q_times]), kind="stable")
    s = np.cumsum(steps[order])
    if len(s) == 0:
        return 0
    return int(s[-1] - min(0.0, float(s.min())))


def sim_lead(cfg: SimConfig) -> Histogram:
    """Distribution of the withholding lead after the warmup window.

    The default window covers one million expected block interarrivals,
    ample mixing time anywhere inside the tolerance region.
    """
    p = cfg.params
    if not p.within_tolerance:
        raise DomainError("the lead walk has no stationary law outside tolerance")
    if p.adv_rate == 0:
        return Histogram({0: cfg.trials}, cfg.trials, 0, cfg.seed)
    window = cfg.warmup_window(1e6)

    def one_block(spec):
        idx, size = spec
        g = rng.substream(cfg.seed, "lead", idx)
        counts: dict[int, int] = {}
        for _ in range(size):
            lead = _lead_walk(g, p, window)
            counts[lead] = counts.get(lead, 0) + 1
        return counts, 0

    parts = run_blocks(one_block, rng.block_layout(cfg.trials))
    return _merge_histograms(parts, cfg.trials, cfg.seed)


def _draw_lead(g, p: MiningParams, lead, warmup_window: float) -> int:
    if isinstance(lead, str):
        if lead == "warmup":
            return _lead_walk(g, p, warmup_window)
        if lead == "geometric":
            if p.adv_rate >= p.hon_rate:
                raise DomainError(
                    "geometric lead needs adv_rate < hon_rate; use an integer lead"
                )
            if p.adv_rate == 0:
                return 0
            return int(g.geometric(1.0 - p.adv_rate / p.hon_rate)) - 1
        raise ParameterError("lead must be 'warmup', 'geometric', or an integer >= 0")
    lead = int(lead)
    if lead < 0:
        raise ParameterError("lead must be >= 0")
    return lead


def _attack_run(cfg: SimConfig, succeeds, tag, lead) -> SimEstimate:
    """Shared chunked walk over pacer intervals for both attack flavors.

    succeeds(interval_idx, boundary_time, margin) -> bool array marks the
    intervals in which the withheld chain can be released; the walk stops
    early once the deficit at an interval start reaches -stop_margin, and a
    trial still undecided past the horizon counts as a failure.
    """
    p = cfg.params
    a, h, d = p.adv_rate, p.hon_rate, p.delay
    warm = cfg.warmup_window(1e4)

    def one_block(spec):
        idx, size = spec
        g = rng.substream(cfg.seed, tag, idx)
        wins = 0
        truncated = 0
        for _ in range(size):
            start = _draw_lead(g, p, lead, warm)
            j_off = 0          # pacer boundaries consumed so far
            n_before = 0       # attack arrivals strictly before the last boundary
            t_last = 0.0
            decided = False
            while not decided:
                raw = g.exponential(1.0 / h, _PACER_CHUNK)
                gaps = raw + d
                if j_off == 0:
                    gaps[0] = raw[0]
                arrivals = g.poisson(a * gaps) if a > 0 else np.zeros(len(gaps), dtype=np.int64)
                bounds = j_off + 1 + np.arange(_PACER_CHUNK)   # pacer ordinals
                n_at = n_before + np.cumsum(arrivals)          # attacks before each boundary
                times = t_last + np.cumsum(gaps)
                stop = start + n_at - bounds <= -cfg.stop_margin
                succ = succeeds(bounds - 1, times, start + n_at - (bounds - 1))
                c_stop = int(np.argmax(stop)) if stop.any() else _PACER_CHUNK
                c_succ = int(np.argmax(succ)) if succ.any() else _PACER_CHUNK
                # the success candidate at a boundary happens strictly before
                # the stop check at the same boundary, so ties go to success
                if c_succ <= c_stop and c_succ < _PACER_CHUNK:
                    wins += 1
                    decided = True
                elif c_stop < _PACER_CHUNK:
                    decided = True
                elif times[-1] >= cfg.horizon:
                    truncated += 1
                    decided = True
                else:
                    j_off += _PACER_CHUNK
                    n_before = int(n_at[-1])
                    t_last = float(times[-1])
        return wins, truncated

    parts = run_blocks(one_block, rng.block_layout(cfg.trials))
    wins = sum(w for w, _ in parts)
    truncated = sum(tr for _, tr in parts)
    return SimEstimate(
        successes=wins, trials=cfg.trials, truncated_trials=truncated, seed=cfg.seed
    )


def sim_private_attack_depth(cfg: SimConfig, k: int, lead="warmup") -> SimEstimate:
    """Success rate of withheld-chain mining against a depth-k confirmation.

    An interval between consecutive new pacers is a success window when at
    least k pacers exist and the withheld chain is not behind at some instant
    inside it.  The lead entering the attack comes from an explicit warmup
    walk by default; lead='geometric' samples the stationary law directly
    and an integer fixes it exactly.
    """
    if k < 1:
        raise ParameterError("confirmation depth must be >= 1")

    def succeeds(interval_idx, _times, margin):
        return (interval_idx >= k) & (margin >= 0)

    return _attack_run(cfg, succeeds, "attack_depth", lead)


def sim_private_attack_time(cfg: SimConfig, t: float, lead="warmup") -> SimEstimate:
    """Success rate of withheld-chain mining against a time-t confirmation."""
    if t < 0:
        raise ParameterError("confirmation time must be >= 0")

    def succeeds(interval_idx, times, margin):
        return (interval_idx >= 1) & (times > t) & (margin >= 0)

    return _attack_run(cfg, succeeds, "attack_time", lead)


def jumper_pacer_check(p: MiningParams, events: int = 1_000_000, seed: int = 0) -> dict:
    """Height bookkeeping invariant on an honest-only arrival stream.

    Every block's height is one above the highest block that propagated to it
    (arrived at least `delay` earlier).  A block is a jumper when it is first
    at its height.  The count of jumpers up to any instant must cover the
    count of pacers mined after the first delay window; with zero delay the
    two counts agree exactly.
    """
    if events < 1:
        raise ParameterError("events must be >= 1")
    h, d = p.hon_rate, p.delay
    g = rng.substream(seed, "lemma", 0)
    times = np.cumsum(g.exponential(1.0 / h, events))

    seen = np.searchsorted(times, times - d, side="right")
    parent = np.minimum(seen, np.arange(events)) - 1   # -1 means only genesis propagated
    heights = np.empty(events, dtype=np.int64)
    for i in range(events):
        heights[i] = 1 + (heights[parent[i]] if parent[i] >= 0 else 0)

    prev = np.concatenate(([0], heights[:-1]))
    jumper = heights > prev

    pacer = np.zeros(events, dtype=bool)
    last = 0.0   # genesis anchors the pacer chain at time zero
    for i in range(events):
        if times[i] >= last + d:
            pacer[i] = True
            last = times[i]

    cum_j = np.cumsum(jumper)
    cum_p = np.cumsum(pacer & (times > d))
    at_pacers = np.flatnonzero(pacer)
    violations = int(np.sum(cum_j[at_pacers] < cum_p[at_pacers]))
    return {
        "events": events,
        "jumpers": int(jumper.sum()),
        "pacers": int(pacer.sum()),
        "violations": violations,
        "exact_match": bool(np.array_equal(cum_j, cum_p)) if d == 0 else None,
        "seed": seed,
    }


def arrival_stats(p: MiningParams, span: float = 1e6, seed: int = 0) -> dict:
    """Empirical rates of the raw streams over one long window (sanity op)."""
    if span <= 0:
        raise ParameterError("span must be > 0")
    g = rng.substream(seed, "arrivals", 0)
    n_a = int(g.poisson(p.adv_rate * span)) if p.adv_rate > 0 else 0
    h_times = np.cumsum(g.exponential(1.0 / p.hon_rate, max(16, int(p.hon_rate * span * 1.1))))
    while h_times[-1] <= span:
        h_times = np.concatenate(
            [h_times, h_times[-1] + np.cumsum(g.exponential(1.0 / p.hon_rate, 1024))]
        )
    h_times = h_times[h_times <= span]
    pacer_times = []
    last = 0.0
    for t in h_times:
        if t >= last + p.delay:
            pacer_times.append(t)
            last = t
    gaps = np.diff(np.array([0.0] + pacer_times)) if pacer_times else np.empty(0)
    return {
        "span": span,
        "adv_rate_hat": n_a / span,
        "hon_rate_hat": len(h_times) / span,
        "pacer_rate_hat": len(pacer_times) / span,
        "pacer_rate_theory": p.pacer_rate,
        "mean_pacer_gap_hat": float(gaps.mean()) if len(gaps) else math.nan,
        "mean_pacer_gap_theory": p.delay + 1.0 / p.hon_rate,
        "seed": seed,
    }
