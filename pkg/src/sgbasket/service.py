"""HTTP service exposing the pricing operations.

One POST endpoint per CLI command, strict request models, and a uniform
error envelope: config -> 400/422, feasibility -> 409, resource cap -> 413,
numerical -> 500.  The CLI talks to this app in-process by default, so the
service layer is also the single place where request blocks are turned
into engine calls.
"""

from __future__ import annotations

import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .engine import PricingConfig, PricingEngine
from .errors import SGBasketError
from .market import MarketParams, OptionSpec
from .oracles import Reduced1D, geometric_reduction, reference_price
from .schemas import (
    ConvergeRow,
    GridStatsRequest,
    GridStatsRow,
    PriceRecord,
    QuadCompareRow,
    ReduceRecord,
    ReferenceRecord,
    RunConfig,
)
from .sparse_grid import build_grid, full_tensor_inner_count

HTTP_STATUS = {
    "config": 400,
    "feasibility": 409,
    "resource": 413,
    "numerical": 500,
    "internal": 500,
}


def _reference_value(cfg: RunConfig) -> float | None:
    """Reference price for relative errors: explicit value if configured,
    else the 1-d oracle for geometric payoffs, else nothing."""
    if cfg.method.reference is not None:
        return cfg.method.reference
    if cfg.option.kind != "geometric_put":
        return None
    reduced = geometric_reduction(cfg.market.to_params(), cfg.option.to_spec())
    outcome = reference_price(
        reduced,
        tol=cfg.method.oracle_tol,
        node_level=cfg.method.oracle_node_level,
        quad_points=cfg.method.oracle_quad_points,
    )
    return outcome.price


def _price_once(
    market: MarketParams,
    option: OptionSpec,
    cfg: RunConfig,
    interp_level: int,
    quad_seed: int | None = None,
    retain_surfaces: bool = False,
) -> PricingEngine:
    method = cfg.method
    pricing = PricingConfig(
        interp_level=interp_level,
        quadrature=method.single_quadrature().to_config(seed_override=quad_seed),
        transform=method.transform_config(),
        threads=method.threads,
        chunk=method.chunk,
        memory_budget=method.memory_budget,
        point_cap=method.point_cap,
        pair_cap=method.pair_cap,
        retain_surfaces=retain_surfaces,
    )
    engine = PricingEngine(market, option, pricing)
    engine.price()
    return engine


def run_price(cfg: RunConfig) -> PriceRecord:
    market = cfg.market.to_params()
    option = cfg.option.to_spec()
    engine = _price_once(market, option, cfg, cfg.method.single_level())
    res = engine.result
    reference = _reference_value(cfg)
    rel_err = None if reference in (None, 0.0) else abs(res.price - reference) / abs(reference)
    d = res.to_dict()
    d.pop("bubble_floor")
    return PriceRecord(reference=reference, rel_err=rel_err, **d)


def run_converge(cfg: RunConfig) -> list[ConvergeRow]:
    market = cfg.market.to_params()
    option = cfg.option.to_spec()
    reference = _reference_value(cfg)
    rows = []
    for level in cfg.method.level_list():
        t0 = time.perf_counter()
        engine = _price_once(market, option, cfg, level)
        wall = time.perf_counter() - t0
        price = engine.result.price
        rel = None if reference in (None, 0.0) else abs(price - reference) / abs(reference)
        rows.append(
            ConvergeRow(
                interp_level=level,
                n_inner=engine.result.n_inner,
                price=price,
                reference=reference,
                rel_err=rel,
                wall_seconds=wall,
            )
        )
    return rows


def run_quad_compare(cfg: RunConfig) -> list[QuadCompareRow]:
    market = cfg.market.to_params()
    option = cfg.option.to_spec()
    reference = _reference_value(cfg)
    level = cfg.method.single_level()
    rows = []
    for block in cfg.method.quadrature_list():
        single = cfg.model_copy(deep=True)
        single.method.quadrature = block
        deterministic = block.kind in ("gh_tensor", "gh_sparse", "gk_sparse")
        replicates = 1 if deterministic else block.replicates
        note = ""
        if deterministic and block.replicates > 1:
            note = "deterministic rule: replicates ignored"
        prices = []
        m_points = 0
        for i in range(replicates):
            engine = _price_once(
                market, option, single, level,
                quad_seed=None if deterministic else block.seed + i,
            )
            prices.append(engine.result.price)
            m_points = engine.result.m_points
        prices = np.asarray(prices)
        mean = float(prices.mean())
        if reference not in (None, 0.0):
            rmse = float(np.sqrt(np.mean((prices - reference) ** 2)))
            rel = abs(mean - reference) / abs(reference)
        elif replicates > 1:
            rmse = float(prices.std(ddof=0))
            rel = None
        else:
            rmse, rel = None, None
        rows.append(
            QuadCompareRow(
                kind=block.kind,
                detail=engine.result.quad_detail,
                m_points=m_points,
                replicates=replicates,
                price_mean=mean,
                rmse=rmse,
                rel_err=rel,
                reference=reference,
                note=note,
            )
        )
    return rows


def run_grid_stats(req: GridStatsRequest) -> list[GridStatsRow]:
    rows = []
    for d in req.dims:
        grid = build_grid(d, req.interp_level, req.point_cap)
        rows.append(
            GridStatsRow(
                dim=d,
                interp_level=req.interp_level,
                n_cgl=grid.n_points,
                n_inner=grid.n_inner,
                n_full=full_tensor_inner_count(d, req.interp_level),
            )
        )
    return rows


def _reduce(cfg: RunConfig) -> Reduced1D:
    return geometric_reduction(cfg.market.to_params(), cfg.option.to_spec())


def run_reduce(cfg: RunConfig) -> ReduceRecord:
    return ReduceRecord(**_reduce(cfg).__dict__)


def run_reference(cfg: RunConfig) -> ReferenceRecord:
    outcome = reference_price(
        _reduce(cfg),
        tol=cfg.method.oracle_tol,
        node_level=cfg.method.oracle_node_level,
        quad_points=cfg.method.oracle_quad_points,
    )
    return ReferenceRecord(**outcome.__dict__)


def create_app() -> FastAPI:
    app = FastAPI(title="sgbasket", version="0.1.0")

    @app.exception_handler(SGBasketError)
    async def _sg_error(request: Request, exc: SGBasketError):
        return JSONResponse(
            status_code=HTTP_STATUS.get(exc.kind, 500),
            content={"error": {"kind": exc.kind, "message": str(exc)}},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"error": {"kind": "config", "message": str(exc.errors())}},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/price")
    def price_endpoint(cfg: RunConfig) -> PriceRecord:
        return run_price(cfg)

    @app.post("/converge")
    def converge_endpoint(cfg: RunConfig) -> list[ConvergeRow]:
        return run_converge(cfg)

    @app.post("/quad-compare")
    def quad_compare_endpoint(cfg: RunConfig) -> list[QuadCompareRow]:
        return run_quad_compare(cfg)

    @app.post("/grid-stats")
    def grid_stats_endpoint(req: GridStatsRequest) -> list[GridStatsRow]:
        return run_grid_stats(req)

    @app.post("/reduce")
    def reduce_endpoint(cfg: RunConfig) -> ReduceRecord:
        return run_reduce(cfg)

    @app.post("/reference")
    def reference_endpoint(cfg: RunConfig) -> ReferenceRecord:
        return run_reference(cfg)

    return app


app = create_app()

__all__ = [
    "app",
    "create_app",
    "run_price",
    "run_converge",
    "run_quad_compare",
    "run_grid_stats",
    "run_reduce",
    "run_reference",
    "HTTP_STATUS",
]
