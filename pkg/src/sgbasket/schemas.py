"""Request and record schemas shared by the service, the CLI, and tests.

Everything is strict: unknown keys are rejected so a typo in a config file
fails loudly before any computation starts.  The request models mirror the
config file blocks one-to-one; the record models define exactly what each
endpoint emits, so every CSV/JSON row can be re-validated against its
schema (a tested invariant).
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import ConfigError
from .market import MarketParams, OptionSpec
from .quadrature import QuadratureConfig
from .transform import TransformConfig


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MarketBlock(StrictModel):
    """Market inputs; scalar vol/dividend broadcast, scalar correlation expands
    to the equicorrelation matrix."""

    spot: list[float] = Field(min_length=1)
    rate: float
    vol: float | list[float]
    dividend: float | list[float] = 0.0
    correlation: float | list[list[float]] = 0.0

    def to_params(self) -> MarketParams:
        d = len(self.spot)
        corr = self.correlation
        if isinstance(corr, (int, float)):
            rho = float(corr)
            if d > 1 and not (-1.0 / (d - 1) < rho < 1.0):
                raise ConfigError(
                    f"scalar correlation must lie in (-1/(d-1), 1) = "
                    f"({-1.0 / (d - 1):.4f}, 1) for d={d}"
                )
            mat = np.full((d, d), rho)
            np.fill_diagonal(mat, 1.0)
        else:
            mat = np.asarray(corr, dtype=np.float64)
        return MarketParams(
            spot=np.asarray(self.spot, dtype=np.float64),
            rate=self.rate,
            dividend=self.dividend,
            vol=self.vol,
            corr=mat,
        )


class OptionBlock(StrictModel):
    kind: Literal["arithmetic_put", "geometric_put"]
    strike: float
    maturity: float
    exercise_count: int

    def to_spec(self) -> OptionSpec:
        return OptionSpec(
            kind=self.kind,
            strike=self.strike,
            maturity=self.maturity,
            exercise_count=self.exercise_count,
        )


class QuadratureBlock(StrictModel):
    kind: Literal["gh_tensor", "gh_sparse", "gk_sparse", "mc", "rqmc_sobol"]
    nodes: int | list[int] | None = None
    level: int | None = None
    samples: int | None = None
    seed: int = 0
    clamp: float = 6.0
    replicates: int = Field(default=1, ge=1)

    def to_config(self, seed_override: int | None = None) -> QuadratureConfig:
        nodes = tuple(self.nodes) if isinstance(self.nodes, list) else self.nodes
        return QuadratureConfig(
            kind=self.kind,
            nodes=nodes,
            level=self.level,
            samples=self.samples,
            seed=self.seed if seed_override is None else seed_override,
            clamp=self.clamp,
        )


class MethodBlock(StrictModel):
    """Numerical method settings.  ``interp_level`` may be a sweep list for the
    converge command; ``quadrature`` may be a list for quad-compare."""

    interp_level: int | list[int] = 5
    map_scale: float = 2.0
    bubble_exponent: float = 1.0
    safety_constant: float = 6.0
    bubble_floor: float | None = None
    quadrature: QuadratureBlock | list[QuadratureBlock] = Field(
        default_factory=lambda: QuadratureBlock(kind="gk_sparse", level=4)
    )
    threads: int = Field(default=1, ge=1)
    chunk: int = Field(default=65536, ge=1)
    memory_budget: int = Field(default=1_500_000_000, ge=1)
    point_cap: int = Field(default=5_000_000, ge=1)
    pair_cap: int = Field(default=60_000_000, ge=1)
    reference: float | None = None
    oracle_node_level: int = Field(default=9, ge=3)
    oracle_quad_points: int = Field(default=48, ge=2)
    oracle_tol: float = Field(default=1e-6, gt=0.0)

    def transform_config(self) -> TransformConfig:
        kwargs = dict(
            map_scale=self.map_scale,
            bubble_exponent=self.bubble_exponent,
            safety_constant=self.safety_constant,
        )
        if self.bubble_floor is not None:
            kwargs["bubble_floor"] = self.bubble_floor
        return TransformConfig(**kwargs)

    def single_level(self) -> int:
        if isinstance(self.interp_level, list):
            if len(self.interp_level) != 1:
                raise ConfigError("this command requires a single interp_level")
            return self.interp_level[0]
        return self.interp_level

    def level_list(self) -> list[int]:
        levels = (
            self.interp_level
            if isinstance(self.interp_level, list)
            else [self.interp_level]
        )
        if not levels:
            raise ConfigError("interp_level list must not be empty")
        return levels

    def single_quadrature(self) -> QuadratureBlock:
        if isinstance(self.quadrature, list):
            if len(self.quadrature) != 1:
                raise ConfigError("this command requires a single quadrature rule")
            return self.quadrature[0]
        return self.quadrature

    def quadrature_list(self) -> list[QuadratureBlock]:
        rules = (
            self.quadrature if isinstance(self.quadrature, list) else [self.quadrature]
        )
        if not rules:
            raise ConfigError("quadrature list must not be empty")
        return rules


class OutputBlock(StrictModel):
    format: Literal["csv", "json"] = "csv"
    path: str | None = None
    verbosity: int = Field(default=1, ge=0)


class RunConfig(StrictModel):
    market: MarketBlock
    option: OptionBlock
    method: MethodBlock = Field(default_factory=MethodBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)


class GridStatsRequest(StrictModel):
    dims: list[int] = Field(min_length=1)
    interp_level: int = 5
    point_cap: int = Field(default=5_000_000, ge=1)

    @field_validator("dims")
    @classmethod
    def _dims_positive(cls, v):
        if any(d < 1 for d in v):
            raise ValueError("dims must be >= 1")
        return v


# ---------------------------------------------------------------------------
# result records


class PriceRecord(StrictModel):
    price: float
    immediate_exercise: float
    continuation_origin: float
    reference: float | None = None
    rel_err: float | None = None
    dim: int
    interp_level: int
    exercise_count: int
    n_grid: int
    n_inner: int
    m_points: int
    quad_kind: str
    quad_detail: str
    seed: int | None = None
    node_bound: float
    clamped_count: int
    feasibility_margin: float
    min_bubble: float
    basis_cached: bool
    # timing fields default so records re-parse from verbosity-0 output,
    # which omits the wall-clock columns for byte-reproducible files
    setup_seconds: float = 0.0
    dp_seconds: float = 0.0
    step_seconds_mean: float = 0.0


class ConvergeRow(StrictModel):
    interp_level: int
    n_inner: int
    price: float
    reference: float | None = None
    rel_err: float | None = None
    wall_seconds: float = 0.0


class QuadCompareRow(StrictModel):
    kind: str
    detail: str
    m_points: int
    replicates: int
    price_mean: float
    rmse: float | None = None
    rel_err: float | None = None
    reference: float | None = None
    note: str = ""


class GridStatsRow(StrictModel):
    dim: int
    interp_level: int
    n_cgl: int
    n_inner: int
    n_full: int


class ReduceRecord(StrictModel):
    spot: float
    strike: float
    rate: float
    dividend: float
    vol: float
    maturity: float
    exercise_count: int


class ReferenceRecord(StrictModel):
    price: float
    delta: float
    node_level: int
    quad_points: int
    converged: bool


class ErrorBody(StrictModel):
    kind: Literal["config", "feasibility", "resource", "numerical", "internal"]
    message: str


class ErrorEnvelope(StrictModel):
    error: ErrorBody


RECORD_MODELS = {
    "price": PriceRecord,
    "converge": ConvergeRow,
    "quad-compare": QuadCompareRow,
    "grid-stats": GridStatsRow,
    "reduce": ReduceRecord,
    "reference": ReferenceRecord,
}
