"""HTTP facade over the bounds engine and the simulators.

Bad arguments come back as 400 with {"error_type", "message"}; requests that
are well formed but outside a result's domain (outside tolerance, no pole,
search exhausted, infeasible budget) come back as 422 with the concrete
error class in error_type.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import balance, bounds, sim, throughput
from ..errors import DomainError, ParameterError
from ..renewal import peak_lead_pmf, pgf_pole
from . import schemas as S

API_VERSION = "v1"


def _bound_response(report) -> S.BoundResponse:
    return S.BoundResponse(**report.as_dict())


def _json_safe(value):
    """Swap non-finite floats for None so response bodies stay strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    return value


def create_app() -> FastAPI:
    app = FastAPI(title="naklab", version="0.1.0")

    @app.exception_handler(ParameterError)
    async def _param_error(request: Request, exc: ParameterError):
        return JSONResponse(
            status_code=400,
            content={"error_type": "ParameterError", "message": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error_type": "ValidationError", "message": str(exc.errors())},
        )

    @app.exception_handler(DomainError)
    async def _domain_error(request: Request, exc: DomainError):
        return JSONResponse(
            status_code=422,
            content={"error_type": type(exc).__name__, "message": str(exc)},
        )

    @app.get(f"/{API_VERSION}/health")
    async def health():
        return {"status": "ok", "version": app.version}

    @app.post(f"/{API_VERSION}/tolerance", response_model=S.ToleranceResponse)
    async def tolerance(req: S.ToleranceRequest):
        rep = bounds.tolerance_check(req.params.to_params())
        return S.ToleranceResponse(
            within=rep.within, slack=_json_safe(rep.slack), beta_star=rep.beta_star
        )

    @app.post(f"/{API_VERSION}/balance/cdf", response_model=S.BalanceCdfResponse)
    async def balance_cdf(req: S.BalanceCdfRequest):
        p = req.params.to_params()
        tp = balance.tie_params(p)
        ns = list(range(req.n_max + 1))
        if req.depth is None:
            cdf = [float(balance.tie_cdf(p, n)) for n in ns]
        else:
            cdf = [float(balance.tie_cdf_bounded(p, req.depth, n)) for n in ns]
        return S.BalanceCdfResponse(
            eps=tp.eps,
            absorb=tp.absorb,
            ratio=tp.ratio,
            n=ns,
            cdf=cdf,
            tail=[1.0 - c for c in cdf],
            depth=req.depth,
        )

    @app.post(f"/{API_VERSION}/balance/chain-sim", response_model=S.ChainSimResponse)
    async def balance_chain_sim(req: S.ChainSimRequest):
        res = balance.simulate_chain(req.params.to_params(), trials=req.trials, seed=req.seed)
        return S.ChainSimResponse(
            counts=[int(c) for c in res.counts],
            trials=res.trials,
            truncated_trials=res.truncated_trials,
            seed=res.seed,
        )

    @app.post(f"/{API_VERSION}/peak-lead/pmf", response_model=S.PeakLeadPmfResponse)
    async def peak_lead(req: S.PeakLeadPmfRequest):
        p = req.params.to_params()
        series = peak_lead_pmf(p, n_max=req.n_max, residual_target=req.residual_target)
        return S.PeakLeadPmfResponse(
            pmf=[float(c) for c in series.coeffs],
            residual=series.residual,
            used_extended=series.used_extended,
            pole=_json_safe(pgf_pole(p)),
        )

    def _need(value, name: str):
        if value is None:
            raise ParameterError(f"this bound requires '{name}'")
        return value

    @app.post(f"/{API_VERSION}/bound/depth-upper", response_model=S.BoundResponse)
    async def bound_depth_upper(req: S.BoundRequest):
        p = req.params.to_params()
        return _bound_response(bounds.depth_upper(p, _need(req.k, "k"), variant=req.variant))

    @app.post(f"/{API_VERSION}/bound/depth-lower", response_model=S.BoundResponse)
    async def bound_depth_lower(req: S.BoundRequest):
        p = req.params.to_params()
        return _bound_response(bounds.depth_lower(p, _need(req.k, "k")))

    @app.post(f"/{API_VERSION}/bound/depth-chernoff", response_model=S.BoundResponse)
    async def bound_depth_chernoff(req: S.BoundRequest):
        p = req.params.to_params()
        return _bound_response(
            bounds.chernoff_depth_bound(p, _need(req.k, "k"), variant=req.variant)
        )

    @app.post(f"/{API_VERSION}/bound/time-upper", response_model=S.BoundResponse)
    async def bound_time_upper(req: S.BoundRequest):
        p = req.params.to_params()
        return _bound_response(bounds.time_upper(p, _need(req.t, "t")))

    @app.post(f"/{API_VERSION}/bound/time-lower", response_model=S.BoundResponse)
    async def bound_time_lower(req: S.BoundRequest):
        p = req.params.to_params()
        return _bound_response(bounds.time_lower(p, _need(req.t, "t")))

    @app.post(f"/{API_VERSION}/min-depth", response_model=S.MinDepthResponse)
    async def min_depth(req: S.MinDepthRequest):
        p = req.params.to_params()
        res = bounds.min_depth(p, req.q, method=req.method, variant=req.variant, k_cap=req.k_cap)
        return S.MinDepthResponse(
            k=res.k, method=res.method, target=res.target, report=_bound_response(res.report)
        )

    @app.post(f"/{API_VERSION}/min-time", response_model=S.MinTimeResponse)
    async def min_time(req: S.MinTimeRequest):
        p = req.params.to_params()
        res = bounds.min_time(p, req.q, method=req.method, rel_tol=req.rel_tol)
        return S.MinTimeResponse(
            t=res.t, method=res.method, target=res.target, report=_bound_response(res.report)
        )

    @app.post(f"/{API_VERSION}/table/depth", response_model=list[S.DepthTableRow])
    async def table_depth(req: S.DepthTableRequest):
        rows = bounds.depth_table(
            req.total_rate, req.delay, req.betas, req.q, variant=req.variant
        )
        return [S.DepthTableRow(**row) for row in rows]

    @app.post(f"/{API_VERSION}/throughput/optimize", response_model=S.ThroughputResponse)
    async def throughput_optimize(req: S.ThroughputRequest):
        prob = throughput.ThroughputProblem(
            beta=req.beta,
            link_rate=req.link_rate,
            overhead=req.overhead,
            q=req.q,
            horizon=math.inf if req.horizon is None else req.horizon,
            size_min=req.size_min,
            size_max=req.size_max,
            grid=req.grid,
            lam_delta_fixed=req.lam_delta_fixed,
            method=req.method,
            variant=req.variant,
        )
        sol = throughput.optimize(prob)
        rows = None
        if req.include_frontier:
            rows = [_json_safe(r) for r in throughput.grid_rows(prob)]
        return S.ThroughputResponse(
            throughput=sol.throughput,
            mining_rate=sol.mining_rate,
            size=sol.size,
            delay=sol.delay,
            lam_delta=sol.lam_delta,
            k=sol.k,
            rate_cap=sol.rate_cap,
            certificate=_json_safe(sol.certificate),
            frontier=rows,
        )

    def _sim_config(req: S.SimCommon) -> sim.SimConfig:
        return sim.SimConfig(
            params=req.params.to_params(),
            trials=req.trials,
            seed=req.seed,
            horizon=req.horizon,
            warmup=req.warmup,
            stop_margin=req.stop_margin,
        )

    @app.post(f"/{API_VERSION}/simulate/max-diff", response_model=S.HistogramResponse)
    async def simulate_max_diff(req: S.SimCommon):
        return S.HistogramResponse(**sim.sim_max_diff(_sim_config(req)).as_dict())

    @app.post(f"/{API_VERSION}/simulate/lead", response_model=S.HistogramResponse)
    async def simulate_lead(req: S.SimLeadRequest):
        return S.HistogramResponse(**sim.sim_lead(_sim_config(req)).as_dict())

    @app.post(f"/{API_VERSION}/simulate/attack-depth", response_model=S.SimEstimateResponse)
    async def simulate_attack_depth(req: S.AttackDepthRequest):
        est = sim.sim_private_attack_depth(_sim_config(req), req.k, lead=req.lead)
        return S.SimEstimateResponse(**est.as_dict())

    @app.post(f"/{API_VERSION}/simulate/attack-time", response_model=S.SimEstimateResponse)
    async def simulate_attack_time(req: S.AttackTimeRequest):
        est = sim.sim_private_attack_time(_sim_config(req), req.t, lead=req.lead)
        return S.SimEstimateResponse(**est.as_dict())

    @app.post(f"/{API_VERSION}/simulate/invariants", response_model=S.InvariantsResponse)
    async def simulate_invariants(req: S.InvariantsRequest):
        out = sim.jumper_pacer_check(req.params.to_params(), events=req.events, seed=req.seed)
        return S.InvariantsResponse(**out)

    return app


app = create_app()
