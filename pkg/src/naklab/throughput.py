"""Planning block size and mining rate under a safety budget.

Propagation delay is modeled as affine in the block size, delay = size/rate +
overhead.  Tolerating an adversary share beta caps the natural fork number
(expected blocks mined per delay) and therefore the sustainable throughput;
within those caps, the planner grid-searches the fork number and block size,
picking the confirmation depth from the safety bound and enforcing that the
depth is reachable within the wanted expected confirmation time.

Safety depends on the fork number and the adversary share only (the model is
invariant to rescaling time), which is why the planner can reuse one depth
per fork-number grid point across all block sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bounds import min_depth
from .errors import InfeasibleError, ParameterError, SearchExhaustedError
from .renewal import MiningParams


def delay_of_block(size_kb: float, link_rate: float, overhead: float) -> float:
    """Propagation delay bound for a block of size_kb, affine model."""
    if size_kb < 0 or link_rate <= 0 or overhead < 0:
        raise ParameterError("need size >= 0, link_rate > 0, overhead >= 0")
    return size_kb / link_rate + overhead


def fork_cap(beta: float) -> float:
    """Largest natural fork number that keeps adversary share beta tolerable."""
    if not 0.0 < beta < 0.5:
        raise ParameterError("adversary share must be in (0, 0.5)")
    return 1.0 / beta - 1.0 / (1.0 - beta)


def throughput_rate_cap(beta: float, link_rate: float) -> float:
    """Hard ceiling on optimistic throughput at adversary share beta (KB/s)."""
    if link_rate <= 0:
        raise ParameterError("link_rate must be > 0")
    if not 0.0 < beta < 0.5:
        raise ParameterError("adversary share must be in (0, 0.5)")
    return (1.0 - 2.0 * beta) / (1.0 - beta - beta * beta) * link_rate


@dataclass(frozen=True)
class ThroughputProblem:
    beta: float                     # adversary share to tolerate
    link_rate: float                # KB per second
    overhead: float                 # seconds of size-independent delay
    q: float                        # violation probability budget
    horizon: float = math.inf       # expected confirmation time budget (seconds)
    size_min: float = 1.0           # KB
    size_max: float = 16_000.0      # KB
    grid: int = 64
    lam_delta_fixed: float | None = None
    method: str = "chernoff"        # depth rule: "chernoff" or "finer"
    variant: bool = False

    def __post_init__(self):
        fork_cap(self.beta)
        if self.link_rate <= 0 or self.overhead < 0:
            raise ParameterError("need link_rate > 0 and overhead >= 0")
        if not 0.0 < self.q <= 1.0:
            raise ParameterError("q must be in (0, 1]")
        if not 0.0 < self.size_min <= self.size_max:
            raise ParameterError("need 0 < size_min <= size_max")
        if self.grid < 2:
            raise ParameterError("grid must be >= 2")
        if self.horizon <= 0:
            raise ParameterError("horizon must be > 0")
        if self.lam_delta_fixed is not None and not 0.0 < self.lam_delta_fixed < fork_cap(self.beta):
            raise ParameterError("lam_delta_fixed must lie below the fork cap")
        if self.method not in ("chernoff", "finer"):
            raise ParameterError("method must be 'chernoff' or 'finer'")


@dataclass(frozen=True)
class ThroughputSolution:
    throughput: float               # KB per second
    mining_rate: float              # blocks per second
    size: float                     # KB
    delay: float                    # seconds
    lam_delta: float
    k: int
    rate_cap: float
    certificate: dict = field(default_factory=dict)


def _geomspace(lo: float, hi: float, n: int) -> list[float]:
    if n == 1 or lo == hi:
        return [lo]
    step = (hi / lo) ** (1.0 / (n - 1))
    return [lo * step ** i for i in range(n)]


def _depth_for(beta: float, lam_delta: float, q: float, method: str, variant: bool):
    """(min depth, bound value at it), or None when no finite depth works."""
    # q == 1 means any depth is acceptable
    if q >= 1.0:
        return 1, math.nan
    p = MiningParams.from_split(beta, lam_delta, 1.0)
    try:
        res = min_depth(p, q, method=method, variant=variant)
        return res.k, float(res.report.value)
    except SearchExhaustedError:
        # fork numbers too close to the cap may need unbounded depth
        return None


def grid_rows(prob: ThroughputProblem) -> list[dict]:
    """One row per (fork number, block size) grid point.

    The required depth only depends on the fork number, so it is solved once
    per fork-grid column and reused across sizes.
    """
    cap = fork_cap(prob.beta)
    if prob.lam_delta_fixed is not None:
        fork_grid = [prob.lam_delta_fixed]
    else:
        fork_grid = _geomspace(cap * 1e-3, cap * (1.0 - 1e-6), prob.grid)
    sizes = _geomspace(prob.size_min, prob.size_max, prob.grid)

    rows = []
    for x in fork_grid:
        got = _depth_for(prob.beta, x, prob.q, prob.method, prob.variant)
        k, bound = got if got is not None else (None, math.nan)
        for size in sizes:
            delay = delay_of_block(size, prob.link_rate, prob.overhead)
            lam = x / delay
            growth = (1.0 - prob.beta) * lam / (1.0 + (1.0 - prob.beta) * x)
            feasible = k is not None and (
                not math.isfinite(prob.horizon) or k <= growth * prob.horizon
            )
            rows.append({
                "mining_rate": lam,
                "size": size,
                "delay": delay,
                "k": -1 if k is None else k,
                "bound": bound,
                "throughput": lam * size / (1.0 + x),
                "feasible": feasible,
                "lam_delta": x,
                "growth": growth,
            })
    return rows


def optimize(prob: ThroughputProblem) -> ThroughputSolution:
    """Best sustainable throughput meeting the safety and latency budgets.

    Ties between grid points are broken toward the lower mining rate, then
    the smaller block.
    """
    best: dict | None = None
    for row in grid_rows(prob):
        if not row["feasible"]:
            continue
        if (
            best is None
            or row["throughput"] > best["throughput"] + 1e-12 * best["throughput"]
            or (
                abs(row["throughput"] - best["throughput"]) <= 1e-12 * best["throughput"]
                and (row["mining_rate"], row["size"]) < (best["mining_rate"], best["size"])
            )
        ):
            best = row
    if best is None:
        raise InfeasibleError("no grid point satisfies the latency budget")
    growth = best["growth"]
    return ThroughputSolution(
        throughput=best["throughput"],
        mining_rate=best["mining_rate"],
        size=best["size"],
        delay=best["delay"],
        lam_delta=best["lam_delta"],
        k=best["k"],
        rate_cap=throughput_rate_cap(prob.beta, prob.link_rate),
        certificate={
            "q": prob.q,
            "beta": prob.beta,
            "depth_rule": prob.method,
            "bound_value": best["bound"],
            "expected_confirmation": (best["k"] / growth) if growth > 0 else math.inf,
            "horizon": prob.horizon,
            "fork_cap": fork_cap(prob.beta),
        },
    )


def horizon_sweep(prob: ThroughputProblem, horizons) -> list[dict]:
    """Throughput as a function of the expected-confirmation budget."""
    rows = []
    for dd in horizons:
        try:
            s = optimize(ThroughputProblem(
                beta=prob.beta, link_rate=prob.link_rate, overhead=prob.overhead,
                q=prob.q, horizon=float(dd), size_min=prob.size_min,
                size_max=prob.size_max, grid=prob.grid,
                lam_delta_fixed=prob.lam_delta_fixed, method=prob.method,
                variant=prob.variant,
            ))
            rows.append({"horizon": float(dd), "throughput": s.throughput,
                         "size": s.size, "mining_rate": s.mining_rate, "k": s.k,
                         "lam_delta": s.lam_delta})
        except InfeasibleError:
            rows.append({"horizon": float(dd), "throughput": 0.0, "size": math.nan,
                         "mining_rate": math.nan, "k": -1, "lam_delta": math.nan})
    return rows
