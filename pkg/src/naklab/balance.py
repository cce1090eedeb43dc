"""Distribution of tied heights: how often rival chains can match levels.

A safety attack that is short on blocks can only stay alive if honest blocks
end up facing each other at the same height.  Each opportunity for such a tie
resolves like a two-state race: from the neutral state the whole contest ends
for good with probability `absorb`, otherwise an opportunity opens; an open
opportunity converts into an actual tie with probability `eps` and re-opens,
or falls back to neutral.  The count X of converted ties is then geometric-
like, and its distribution has the closed forms below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import DomainError, ParameterError
from .parallel import run_blocks
from .probability import binom_ccdf, wilson_interval
from .renewal import MiningParams


@dataclass(frozen=True)
class TieParams:
    eps: float      # P(an open opportunity converts into a tie)
    absorb: float   # P(the contest ends for good from the neutral state)
    ratio: float    # P(an opportunity converts before the contest ends)

    @property
    def round_prob(self) -> float:
        return self.eps + self.absorb - self.eps * self.absorb


def tie_params(p: MiningParams) -> TieParams:
    a, h, d = p.adv_rate, p.hon_rate, p.delay
    eps = -math.expm1(-h * d)
    absorb = max(0.0, 1.0 - a * (1.0 + h * d) / h) * math.exp(-a * d)
    denom = eps + absorb - eps * absorb
    # denom == 0 only with zero delay and no absorption: the count is then
    # unbounded and the tail formula below degenerates to ratio 1
    ratio = eps / denom if denom > 0 else 1.0
    return TieParams(eps=eps, absorb=absorb, ratio=ratio)


def tie_tail(p: MiningParams, n) -> np.ndarray | float:
    """P(X > n): chance of more than n tied heights over the whole horizon."""
    t = tie_params(p)
    n = np.asarray(n)
    out = np.where(n < 0, 1.0, (1.0 - t.absorb) * t.ratio ** (np.maximum(n, -1) + 1.0))
    return out if out.ndim else float(out)


def tie_cdf(p: MiningParams, n) -> np.ndarray | float:
    out = 1.0 - np.asarray(tie_tail(p, n))
    return out if out.ndim else float(out)


def tie_cdf_bounded(p: MiningParams, k: int, n) -> np.ndarray | float:
    """Lower bound on P(X <= n) when at most k opportunities can ever open.

    Tightens tie_cdf by the chance that a binomial on k rounds produces more
    than n conversions at all.  Valid for n >= 0; approaches tie_cdf as k
    grows.
    """
    if k < 0:
        raise ParameterError("opportunity count k must be >= 0")
    t = tie_params(p)
    n = np.asarray(n)
    if np.any(n < 0):
        raise ParameterError("tie_cdf_bounded is only defined for n >= 0")
    tail = (1.0 - t.absorb) * t.ratio ** (n + 1.0) * binom_ccdf(n + 1, k, t.round_prob)
    out = 1.0 - tail
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ChainSimResult:
    """Exact tally of simulated tie counts."""

    counts: np.ndarray          # counts[x] = number of trials with X == x
    trials: int
    truncated_trials: int       # trials still unresolved at the round cap
    seed: int

    def tail_estimate(self, n: int, z: float = 2.5758293035489004):
        """(p_hat, lo, hi) for P(X > n); default z is the 99% normal quantile."""
        successes = int(self.counts[n + 1:].sum()) if n + 1 < len(self.counts) else 0
        lo, hi = wilson_interval(successes, self.trials, z)
        return successes / self.trials, lo, hi


def simulate_chain(
    p: MiningParams,
    trials: int = 10_000_000,
    seed: int = 0,
    round_cap: int = 10_000_000,
) -> ChainSimResult:
    """Monte-Carlo draw of the tie-count race itself.

    Each trial walks the two-state chain with one uniform per step until it
    absorbs (or hits round_cap, counted as truncated; the recorded count is
    then a lower estimate).  Exists to cross-check the closed-form tail, so
    it deliberately shares nothing with the formulas above.
    """
    t = tie_params(p)
    if t.absorb <= 0.0:
        raise DomainError("tie chain never absorbs: escape probability is zero "
                          "at these parameters")

    def one_block(spec):
        idx, size = spec
        g = rng.substream(seed, "chain", idx)
        open_state = np.zeros(size, dtype=bool)
        x = np.zeros(size, dtype=np.int64)
        alive = np.ones(size, dtype=bool)
        rounds = 0
        while True:
            live = np.flatnonzero(alive)
            if len(live) == 0 or rounds >= round_cap:
                break
            u = g.random(len(live))
            was_open = open_state[live]
            convert = was_open & (u < t.eps)
            fall_back = was_open & ~convert
            settle = ~was_open & (u < t.absorb)
            open_up = ~was_open & ~settle
            x[live[convert]] += 1
            open_state[live[fall_back]] = False
            open_state[live[open_up]] = True
            alive[live[settle]] = False
            rounds += 1
        return np.bincount(x), int(alive.sum())

    parts = run_blocks(one_block, rng.block_layout(trials))
    width = max(len(c) for c, _ in parts)
    counts = np.zeros(width, dtype=np.int64)
    for c, _ in parts:
        counts[: len(c)] += c
    truncated = sum(tr for _, tr in parts)
    return ChainSimResult(counts=counts, trials=int(trials), truncated_trials=truncated, seed=seed)
