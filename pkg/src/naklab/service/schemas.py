"""Request and response bodies for the HTTP service.

Rates may be given either directly (adv_rate, hon_rate) or as a split
(total_rate, adv_fraction); exactly one style per request.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from ..renewal import MiningParams


class ParamsIn(BaseModel):
    adv_rate: Optional[float] = None
    hon_rate: Optional[float] = None
    total_rate: Optional[float] = None
    adv_fraction: Optional[float] = None
    delay: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _one_style(self):
        direct = self.adv_rate is not None or self.hon_rate is not None
        split = self.total_rate is not None or self.adv_fraction is not None
        if direct and split:
            raise ValueError("give either adv_rate/hon_rate or total_rate/adv_fraction, not both")
        if direct and (self.adv_rate is None or self.hon_rate is None):
            raise ValueError("adv_rate and hon_rate must be given together")
        if split and (self.total_rate is None or self.adv_fraction is None):
            raise ValueError("total_rate and adv_fraction must be given together")
        if not direct and not split:
            raise ValueError("missing mining rates")
        return self

    def to_params(self) -> MiningParams:
        if self.adv_rate is not None:
            return MiningParams(adv_rate=self.adv_rate, hon_rate=self.hon_rate, delay=self.delay)
        return MiningParams.from_split(self.adv_fraction, self.total_rate, self.delay)


class ToleranceRequest(BaseModel):
    params: ParamsIn


class ToleranceResponse(BaseModel):
    within: bool
    slack: Optional[float] = None   # None when the attack rate is zero (infinite slack)
    beta_star: float


class BalanceCdfRequest(BaseModel):
    params: ParamsIn
    n_max: int = Field(default=10, ge=0)
    depth: Optional[int] = Field(default=None, ge=0)  # bounded variant when set


class BalanceCdfResponse(BaseModel):
    eps: float
    absorb: float
    ratio: float
    n: list[int]
    cdf: list[float]
    tail: list[float]
    depth: Optional[int] = None


class ChainSimRequest(BaseModel):
    params: ParamsIn
    trials: int = Field(default=100_000, ge=1)
    seed: int = 0


class ChainSimResponse(BaseModel):
    counts: list[int]
    trials: int
    truncated_trials: int
    seed: int


class PeakLeadPmfRequest(BaseModel):
    params: ParamsIn
    n_max: Optional[int] = Field(default=None, ge=0)
    residual_target: float = Field(default=1e-10, gt=0)


class PeakLeadPmfResponse(BaseModel):
    pmf: list[float]
    residual: float
    used_extended: bool
    pole: Optional[float] = None   # None when the attack rate is zero (no pole)


class BoundRequest(BaseModel):
    params: ParamsIn
    k: Optional[int] = Field(default=None, ge=0)
    t: Optional[float] = Field(default=None, ge=0.0)
    variant: bool = False


class BoundResponse(BaseModel):
    kind: str
    value: float
    raw: float
    direction: Literal["upper", "lower"]
    n_star: Optional[int] = None
    truncation: float = 0.0
    clamped: bool = False


class MinDepthRequest(BaseModel):
    params: ParamsIn
    q: float = Field(gt=0.0, lt=1.0)
    method: Literal["finer", "chernoff", "lower"] = "finer"
    variant: bool = False
    k_cap: int = Field(default=5000, ge=1)


class MinDepthResponse(BaseModel):
    k: int
    method: str
    target: float
    report: BoundResponse


class MinTimeRequest(BaseModel):
    params: ParamsIn
    q: float = Field(gt=0.0, lt=1.0)
    method: Literal["upper", "lower"] = "upper"
    rel_tol: float = Field(default=1e-3, gt=0.0)


class MinTimeResponse(BaseModel):
    t: float
    method: str
    target: float
    report: BoundResponse


class DepthTableRequest(BaseModel):
    total_rate: float = Field(gt=0.0)
    delay: float = Field(ge=0.0)
    betas: list[float]
    q: float = Field(gt=0.0, lt=1.0)
    variant: bool = False


class DepthTableRow(BaseModel):
    beta: float
    q: float
    k_upper: Optional[int] = None
    k_lower: Optional[int] = None
    k_chernoff: Optional[int] = None


class ThroughputRequest(BaseModel):
    beta: float = Field(gt=0.0, lt=0.5)
    link_rate: float = Field(gt=0.0)
    overhead: float = Field(ge=0.0)
    q: float = Field(gt=0.0, le=1.0)
    horizon: Optional[float] = Field(default=None, gt=0.0)  # None means unbounded
    size_min: float = Field(default=1.0, gt=0.0)
    size_max: float = Field(default=16_000.0, gt=0.0)
    grid: int = Field(default=64, ge=2)
    lam_delta_fixed: Optional[float] = Field(default=None, gt=0.0)
    method: Literal["chernoff", "finer"] = "chernoff"
    variant: bool = False
    include_frontier: bool = False


class ThroughputResponse(BaseModel):
    throughput: float
    mining_rate: float
    size: float
    delay: float
    lam_delta: float
    k: int
    rate_cap: float
    certificate: dict
    frontier: Optional[list[dict]] = None


class SimCommon(BaseModel):
    params: ParamsIn
    trials: int = Field(default=10_000, ge=1)
    seed: int = 0
    horizon: float = Field(default=1e6, gt=0.0)       # seconds of simulated time
    warmup: Optional[float] = Field(default=None, ge=0.0)
    stop_margin: int = Field(default=60, ge=1)


class SimLeadRequest(SimCommon):
    pass


class AttackDepthRequest(SimCommon):
    k: int = Field(ge=1)
    lead: Union[int, Literal["warmup", "geometric"]] = "warmup"


class AttackTimeRequest(SimCommon):
    t: float = Field(ge=0.0)
    lead: Union[int, Literal["warmup", "geometric"]] = "warmup"


class SimEstimateResponse(BaseModel):
    successes: int
    trials: int
    p_hat: float
    ci95: list[float]
    truncated_trials: int
    seed: int


class HistogramResponse(BaseModel):
    counts: dict[str, int]
    trials: int
    truncated_trials: int
    seed: int


class InvariantsRequest(BaseModel):
    params: ParamsIn
    events: int = Field(default=1_000_000, ge=1)
    seed: int = 0


class InvariantsResponse(BaseModel):
    events: int
    jumpers: int
    pacers: int
    violations: int
    exact_match: Optional[bool] = None
    seed: int
