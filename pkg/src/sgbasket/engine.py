"""Backward dynamic programming for Bermudan basket puts.

The recursion runs in rotated log-coordinates mapped onto (-1, 1)^d.  With
exercise dates t_k = k dt, dt = T / K, and V the exercise-date value on the
propagated point cloud, one step is

    u_k(z^n)   = e^{-r dt} * sum_m w_m V_{k+1}(z^{n,m}) * b(z^n)
    V_k(z^nm)  = max( H(z^nm), A(u_k)(z^nm) / b(z^nm) )        for k > 0
    V_0        = max( H(0), u_0(origin) )                      at the spot

where z^{n,m} = psi(psi^{-1}(z^n) + y^m) propagates every interior grid node
z^n by every quadrature increment y^m, A is the sparse-grid interpolation
operator, and b the boundary bubble.  The step is time homogeneous, so the
propagated cloud, payoffs H, bubbles b, and the interpolation plan are all
built once and reused across all K steps; only nodal values change.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FeasibilityError, NumericalError, ResourceCapError
from .market import (
    MarketParams,
    OptionSpec,
    RotatedModel,
    decorrelate,
    payoff,
    prices_from_rotated,
)
from .quadrature import GaussianStepSpec, QuadratureConfig, QuadratureRule, build_rule
from .sparse_grid import (
    DEFAULT_CHUNK,
    DEFAULT_MEMORY_BUDGET,
    DEFAULT_POINT_CAP,
    PointEvaluator,
    SmolyakGrid,
    build_grid,
)
from .transform import (
    FeasibilityResult,
    TransformConfig,
    bubble,
    feasibility_check,
    propagate,
    to_unbounded,
)

# cap on float64 elements of the propagated cloud (N_inner * M * d); the
# evaluator, payoff, and bubble arrays all scale with it
DEFAULT_PAIR_CAP = 60_000_000


@dataclass(frozen=True)
class PricingConfig:
    """Numerical settings for one pricing run."""

    interp_level: int
    quadrature: QuadratureConfig
    transform: TransformConfig = field(default_factory=TransformConfig)
    threads: int = 1
    chunk: int = DEFAULT_CHUNK
    memory_budget: int | float = DEFAULT_MEMORY_BUDGET
    point_cap: int = DEFAULT_POINT_CAP
    pair_cap: int = DEFAULT_PAIR_CAP
    retain_surfaces: bool = False

    def __post_init__(self):
        if self.interp_level < 1:
            raise ConfigError("interp_level must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


@dataclass
class PricingResult:
    """Price plus the diagnostics every run reports."""

    price: float
    immediate_exercise: float
    continuation_origin: float
    dim: int
    interp_level: int
    exercise_count: int
    n_grid: int
    n_inner: int
    m_points: int
    quad_kind: str
    quad_detail: str
    seed: int | None
    node_bound: float
    clamped_count: int
    feasibility_margin: float
    min_bubble: float
    bubble_floor: float
    basis_cached: bool
    setup_seconds: float
    dp_seconds: float
    step_seconds: list[float]

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["step_seconds_mean"] = (
            float(np.mean(self.step_seconds)) if self.step_seconds else 0.0
        )
        del out["step_seconds"]
        return out


class PricingEngine:
    """Prices one option under one market; holds retained surfaces afterwards."""

    def __init__(self, market: MarketParams, option: OptionSpec, config: PricingConfig):
        if not isinstance(market, MarketParams):
            market = MarketParams(**market) if isinstance(market, dict) else market
        self.market = market
        self.option = option
        self.config = config
        self.model: RotatedModel | None = None
        self.grid: SmolyakGrid | None = None
        self.rule: QuadratureRule | None = None
        self.feasibility: FeasibilityResult | None = None
        self.result: PricingResult | None = None
        self._surfaces: list[np.ndarray] | None = None

    def price(self) -> PricingResult:
        cfg = self.config
        option = self.option
        t_setup = time.perf_counter()

        model = decorrelate(self.market)
        d = model.dim
        n_steps = option.exercise_count
        dt = option.maturity / n_steps

        step = GaussianStepSpec(mean=model.drift * dt, variance=model.variances * dt)
        rule = build_rule(step, cfg.quadrature)

        feas = feasibility_check(
            cfg.interp_level,
            d,
            cfg.transform,
            model.variances,
            dt,
            node_bound=rule.node_bound,
        ).require()

        grid = build_grid(d, cfg.interp_level, cfg.point_cap)
        n_inner = grid.n_inner
        m_points = rule.size
        if n_inner * m_points * d > cfg.pair_cap:
            raise ResourceCapError(
                f"propagated cloud needs {n_inner * m_points * d} elements "
                f"({n_inner} nodes x {m_points} quadrature points x {d} dims), "
                f"cap is {cfg.pair_cap}"
            )

        scale = cfg.transform.map_scale
        beta = cfg.transform.bubble_exponent
        z_in = grid.inner_points
        x_in = to_unbounded(z_in, scale)

        # propagated cloud, shared by every backward step
        x_cloud = (x_in[:, None, :] + rule.points[None, :, :]).reshape(-1, d)
        z_cloud = propagate(z_in[:, None, :], rule.points[None, :, :], scale).reshape(-1, d)
        h_cloud = payoff(option, prices_from_rotated(model, x_cloud)).reshape(
            n_inner, m_points
        )
        b_cloud = bubble(z_cloud, beta).reshape(n_inner, m_points)
        min_bubble = float(b_cloud.min())
        if min_bubble <= cfg.transform.bubble_floor:
            raise FeasibilityError(
                f"propagated point drove the boundary weight to {min_bubble:.3e}, "
                f"at or below the floor {cfg.transform.bubble_floor:.3e}"
            )
        b_in = bubble(z_in, beta)

        evaluator = PointEvaluator(
            grid,
            z_cloud,
            chunk=cfg.chunk,
            memory_budget=cfg.memory_budget,
            threads=cfg.threads,
        )
        setup_seconds = time.perf_counter() - t_setup

        immediate = float(payoff(option, self.market.spot[None, :])[0])
        discount = float(np.exp(-self.market.rate * dt))
        origin_pos = grid.origin_inner_pos
        surfaces: list[np.ndarray] | None = (
            [None] * n_steps if cfg.retain_surfaces else None
        )

        values = h_cloud.copy()
        step_seconds: list[float] = []
        continuation_origin = np.nan
        t_dp = time.perf_counter()
        u_full = np.zeros(grid.n_points)
        for k in range(n_steps - 1, -1, -1):
            t_k = time.perf_counter()
            u_in = discount * rule.integrate(values) * b_in
            if surfaces is not None:
                buf = np.zeros(grid.n_points)
                buf[grid.inner_ids] = u_in
                surfaces[k] = buf
            if k == 0:
                # origin is a grid node with b = 1: exact lookup, no interpolation
                continuation_origin = float(u_in[origin_pos])
                step_seconds.append(time.perf_counter() - t_k)
                break
            u_full[:] = 0.0
            u_full[grid.inner_ids] = u_in
            interp = evaluator.evaluate(u_full).reshape(n_inner, m_points)
            values = np.maximum(h_cloud, interp / b_cloud)
            step_seconds.append(time.perf_counter() - t_k)
        dp_seconds = time.perf_counter() - t_dp

        price = max(immediate, continuation_origin)
        if not np.isfinite(price):
            raise NumericalError("pricing recursion produced a non-finite value")
        if price > option.strike * (1.0 + 1e-9):
            raise NumericalError(
                f"price {price:.6f} exceeds the strike {option.strike}, "
                "the recursion is numerically broken"
            )

        self.model = model
        self.grid = grid
        self.rule = rule
        self.feasibility = feas
        self._surfaces = surfaces
        self.result = PricingResult(
            price=float(price),
            immediate_exercise=immediate,
            continuation_origin=continuation_origin,
            dim=d,
            interp_level=cfg.interp_level,
            exercise_count=n_steps,
            n_grid=grid.n_points,
            n_inner=n_inner,
            m_points=m_points,
            quad_kind=rule.kind,
            quad_detail=rule.detail,
            seed=rule.seed,
            node_bound=rule.node_bound,
            clamped_count=rule.clamped_count,
            feasibility_margin=feas.margin,
            min_bubble=min_bubble,
            bubble_floor=cfg.transform.bubble_floor,
            basis_cached=evaluator.cache_enabled,
            setup_seconds=setup_seconds,
            dp_seconds=dp_seconds,
            step_seconds=step_seconds,
        )
        return self.result

    def continuation_surface(self, step: int, points: np.ndarray) -> np.ndarray:
        """Continuation value A(u_step)(z) / b(z) at interior probe points.

        Only available after a ``price()`` call with ``retain_surfaces=True``.
        ``step`` indexes exercise dates 0 .. K-1; probing the origin at any
        step returns the stored nodal value exactly.
        """
        if self._surfaces is None:
            raise ConfigError(
                "continuation surfaces were not retained; "
                "price with retain_surfaces=True first"
            )
        if not 0 <= step < self.option.exercise_count:
            raise ConfigError(
                f"step must be in [0, {self.option.exercise_count - 1}], got {step}"
            )
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[1] != self.grid.dim:
            raise ConfigError(f"points must have {self.grid.dim} columns")
        if points.size and np.max(np.abs(points)) >= 1.0:
            raise ConfigError("continuation probes must lie strictly inside the cube")
        ev = PointEvaluator(
            self.grid,
            points,
            chunk=self.config.chunk,
            memory_budget=self.config.memory_budget,
            threads=self.config.threads,
        )
        u = ev.evaluate(self._surfaces[step])
        b = bubble(points, self.config.transform.bubble_exponent)
        return u / b


def price(
    market: MarketParams, option: OptionSpec, config: PricingConfig
) -> PricingResult:
    """One-shot convenience wrapper around PricingEngine."""
    return PricingEngine(market, option, config).price()
