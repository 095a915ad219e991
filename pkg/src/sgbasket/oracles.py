"""Independent 1-d reference prices for geometric-basket options.

The geometric average of correlated GBMs is itself a GBM, so a geometric
basket put reduces exactly to a single-asset put with effective volatility
and dividend.  This module prices that reduced problem with machinery
deliberately different from the engine: a single dense Chebyshev grid
(no sparsity), and per-step Gauss-Legendre quadrature split exactly at the
integrand kinks (the terminal payoff kink and the located exercise
boundary), which converges spectrally where Gauss-Hermite stalls at
algebraic rates.  A binomial tree provides a second, cruder cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

from .errors import ConfigError
from .market import MarketParams, OptionSpec


@dataclass(frozen=True)
class Reduced1D:
    """Single-asset equivalent of a geometric basket put."""

    spot: float
    strike: float
    rate: float
    dividend: float
    vol: float
    maturity: float
    exercise_count: int


def geometric_reduction(market: MarketParams, option: OptionSpec) -> Reduced1D:
    """Exact 1-d reduction of a geometric basket put.

    The geometric mean G = (prod S_i)^(1/d) follows a GBM with

        vol^2   = mean of the covariance matrix entries,
        dividend = mean(delta_i + sigma_i^2 / 2) - vol^2 / 2,

    and spot (prod S_i(0))^(1/d); rate, strike, maturity, exercise dates
    carry over unchanged.
    """
    if option.kind != "geometric_put":
        raise ConfigError("geometric_reduction applies to geometric_put options only")
    cov = market.covariance()
    d = market.dim
    vol2 = float(cov.sum()) / (d * d)
    dividend = float(np.mean(market.dividend + 0.5 * market.vol**2)) - 0.5 * vol2
    spot = float(np.exp(np.mean(np.log(market.spot))))
    return Reduced1D(
        spot=spot,
        strike=option.strike,
        rate=market.rate,
        dividend=dividend,
        vol=float(np.sqrt(vol2)),
        maturity=option.maturity,
        exercise_count=option.exercise_count,
    )


def european_put_closed_form(
    spot: float,
    strike: float,
    rate: float,
    dividend: float,
    vol: float,
    maturity: float,
) -> float:
    """Black-Scholes put with continuous dividend yield."""
    if spot <= 0.0 or strike <= 0.0 or vol <= 0.0:
        raise ConfigError("spot, strike, and vol must be positive")
    if maturity < 0.0:
        raise ConfigError("maturity must be nonnegative")
    if maturity == 0.0:
        return max(strike - spot, 0.0)
    srt = vol * np.sqrt(maturity)
    d1 = (np.log(spot / strike) + (rate - dividend + 0.5 * vol * vol) * maturity) / srt
    d2 = d1 - srt
    return float(
        strike * np.exp(-rate * maturity) * ndtr(-d2)
        - spot * np.exp(-dividend * maturity) * ndtr(-d1)
    )


def _cgl_ascending(n: int) -> np.ndarray:
    half = n // 2
    j = np.arange(half)
    out = np.empty(n)
    out[:half] = -np.cos(np.pi * j / (n - 1))
    out[half] = 0.0
    out[half + 1 :] = np.cos(np.pi * j / (n - 1))[::-1]
    return out


def _interp_matrix_apply(
    u_nodes: np.ndarray, probes_z: np.ndarray, nodes_z: np.ndarray, bary: np.ndarray,
    chunk: int = 8192,
) -> np.ndarray:
    """Barycentric evaluation (t @ u) / sum(t), t = bary / (probe - node).

    The normalized basis matrix is never formed.  Probes that coincide with
    a node produce a non-finite entry and are patched with the exact nodal
    value afterwards; they are rare, so the fast path stays branch-free.
    """
    out = np.empty(probes_z.size)
    wu = bary * u_nodes
    for a in range(0, probes_z.size, chunk):
        seg = probes_z[a : a + chunk]
        diff = seg[:, None] - nodes_z[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / diff
            out[a : a + seg.size] = (inv @ wu) / (inv @ bary)
    bad = ~np.isfinite(out)
    if bad.any():
        idx = np.flatnonzero(bad)
        pos = np.searchsorted(nodes_z, probes_z[idx])
        pos = np.clip(pos, 0, nodes_z.size - 1)
        exact = nodes_z[pos] == probes_z[idx]
        if not exact.all():  # non-finite away from a node means broken inputs
            raise ConfigError("non-finite interpolation at a non-node probe")
        out[idx] = u_nodes[pos]
    return out


def bermudan_put_1d(
    reduced: Reduced1D,
    node_level: int = 10,
    quad_points: int = 64,
    tail_width: float = 8.5,
    map_scale: float = 2.0,
) -> float:
    """Reference Bermudan put price on the reduced 1-d model.

    Dense Chebyshev grid with 2^(node_level - 1) + 1 nodes (the same level
    convention as the sparse-grid node family) under the same tanh map and
    bubble weight as the engine; the one-step conditional expectation is
    composite Gauss-Legendre over mean +- tail_width standard deviations,
    with an extra split at the integrand kink: the payoff kink at the final
    step, the exercise boundary (located by bisection each step) before it.
    """
    if node_level < 3:
        raise ConfigError("node_level must be >= 3")
    if quad_points < 2:
        raise ConfigError("quad_points must be >= 2")
    s0, kappa = reduced.spot, reduced.strike
    r, q, sig = reduced.rate, reduced.dividend, reduced.vol
    n_steps = reduced.exercise_count
    dt = reduced.maturity / n_steps

    n = 2 ** (node_level - 1) + 1
    z = _cgl_ascending(n)
    z_in = z[1:-1]
    x_in = 0.5 * (np.log1p(z_in) - np.log1p(-z_in)) / map_scale
    b_in = (1.0 - z_in) * (1.0 + z_in)
    bary = np.ones(n)
    bary[0] = 0.5
    bary[-1] = 0.5
    bary *= (-1.0) ** np.arange(n)

    mu = (r - q - 0.5 * sig * sig) * dt
    sd = sig * np.sqrt(dt)
    gl_x, gl_w = leggauss(quad_points)
    discount = np.exp(-r * dt)
    u_full = np.zeros(n)
    n_in = x_in.size

    def payoff_x(x):
        return np.maximum(kappa - s0 * np.exp(x), 0.0)

    def continuation_at(x):
        zt = np.tanh(map_scale * x)
        f = _interp_matrix_apply(u_full, zt, z, bary) / ((1.0 - zt) * (1.0 + zt))
        return f

    payoff_kink_x = np.log(kappa / s0)
    exercise_bound_x: float | None = None
    lo, hi = mu - tail_width * sd, mu + tail_width * sd

    for k in range(n_steps - 1, -1, -1):
        terminal = k == n_steps - 1
        kink_x = payoff_kink_x if terminal else exercise_bound_x
        if kink_x is None:
            edges = np.tile(np.array([lo, hi]), (n_in, 1))
        else:
            mid = np.clip(kink_x - x_in, lo, hi)
            edges = np.column_stack([np.full(n_in, lo), mid, np.full(n_in, hi)])
        cont = np.zeros(n_in)
        for si in range(edges.shape[1] - 1):
            a = edges[:, si]
            bb = edges[:, si + 1]
            half = 0.5 * (bb - a)
            y = (0.5 * (bb + a))[:, None] + half[:, None] * gl_x[None, :]
            xt = x_in[:, None] + y
            if terminal:
                vals = payoff_x(xt)
            else:
                flat = xt.ravel()
                vals = np.maximum(payoff_x(flat), continuation_at(flat)).reshape(xt.shape)
            phi = np.exp(-0.5 * ((y - mu) / sd) ** 2) / (sd * np.sqrt(2.0 * np.pi))
            cont += half * ((gl_w[None, :] * vals * phi).sum(axis=1))
        u_in = discount * cont * b_in
        if k == 0:
            center = n_in // 2
            return float(max(payoff_x(0.0), u_in[center]))
        u_full[:] = 0.0
        u_full[1:-1] = u_in

        # locate the exercise boundary for the next step's split: the put is
        # exercised for low prices, so scan for the sign change of H - F
        h_nodes = payoff_x(x_in)
        diff = h_nodes - u_in / b_in
        exercise_bound_x = None
        sgn = np.sign(diff)
        for i in range(n_in - 1):
            if sgn[i] > 0 and sgn[i + 1] <= 0:
                a, bb = x_in[i], x_in[i + 1]
                for _ in range(80):
                    m = 0.5 * (a + bb)
                    fm = payoff_x(np.array([m]))[0] - continuation_at(np.array([m]))[0]
                    if fm > 0:
                        a = m
                    else:
                        bb = m
                exercise_bound_x = 0.5 * (a + bb)
                break
    raise ConfigError("exercise_count must be >= 1")  # pragma: no cover


@dataclass(frozen=True)
class ReferenceOutcome:
    """Converged oracle price with its refinement diagnostics."""

    price: float
    delta: float
    node_level: int
    quad_points: int
    converged: bool


def reference_price(
    reduced: Reduced1D,
    tol: float = 1e-6,
    node_level: int = 9,
    quad_points: int = 48,
    max_refinements: int = 3,
) -> ReferenceOutcome:
    """Refine the 1-d oracle until doubling changes the price by <= tol.

    Each refinement doubles both the node count (level + 1) and the
    quadrature density.  Returns the finest price and the last delta.
    """
    coarse = bermudan_put_1d(reduced, node_level, quad_points)
    level, npts = node_level, quad_points
    for _ in range(max_refinements):
        level += 1
        npts *= 2
        fine = bermudan_put_1d(reduced, level, npts)
        delta = abs(fine - coarse)
        if delta <= tol:
            return ReferenceOutcome(
                price=fine, delta=delta, node_level=level, quad_points=npts, converged=True
            )
        coarse = fine
    return ReferenceOutcome(
        price=coarse, delta=delta, node_level=level, quad_points=npts, converged=False
    )


def binomial_put_bermudan(reduced: Reduced1D, tree_steps: int = 20_000) -> float:
    """Cox-Ross-Rubinstein tree with exercise restricted to the Bermudan dates.

    ``tree_steps`` is rounded up to a multiple of the exercise count so every
    exercise date falls on a tree layer.  Deliberately independent of the
    integration-based oracle: first-order accurate, good to ~1e-3 here.
    """
    k_ex = reduced.exercise_count
    n = ((tree_steps + k_ex - 1) // k_ex) * k_ex
    dt = reduced.maturity / n
    up = np.exp(reduced.vol * np.sqrt(dt))
    down = 1.0 / up
    growth = np.exp((reduced.rate - reduced.dividend) * dt)
    p = (growth - down) / (up - down)
    if not 0.0 < p < 1.0:
        raise ConfigError("binomial step too coarse for these parameters")
    discount = np.exp(-reduced.rate * dt)
    stride = n // k_ex

    j = np.arange(n + 1)
    prices = reduced.spot * up ** (2.0 * j - n)
    values = np.maximum(reduced.strike - prices, 0.0)
    for m in range(n - 1, -1, -1):
        values = discount * (p * values[1 : m + 2] + (1.0 - p) * values[: m + 1])
        if m % stride == 0 and m > 0:
            prices = reduced.spot * up ** (2.0 * np.arange(m + 1) - m)
            values = np.maximum(values, reduced.strike - prices)
    return float(max(values[0], reduced.strike - reduced.spot))
