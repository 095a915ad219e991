"""Domain transform and boundary regularizer.

The pricing recursion lives on the open cube (-1, 1)^d.  Unbounded rotated
log-coordinates x map to the cube through a scaled tanh,

    z = psi(x) = tanh(L x),        x = psi^{-1}(z) = arctanh(z) / L,

and interpolated quantities are multiplied by a "bubble" weight

    b(z) = prod_j (1 - z_j^2)^beta

which vanishes at the boundary.  The recursion stores u = b * (discounted
expectation) so that u extends continuously by 0 to the closed cube; dividing
by b recovers the continuation value at interior points.

A cheap a-priori feasibility bound guards the division: the interpolation
error amplification caused by 1/b must stay below 1/eps.  In log form the
implemented condition is

    (L_I + d) ln 4  -  2 d ln pi  +  2 C L sqrt(dt) sum_j sqrt(lambda_j)
        <=  ln(1 / eps) / beta,

where C bounds quadrature nodes in standardized units (actual max for
deterministic rules, the configured clamp for sampling rules).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FeasibilityError

_EPS64 = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class TransformConfig:
    """Parameters of the cube map and regularizer.

    map_scale : L > 0 in z = tanh(L x).
    bubble_exponent : beta >= 1 in b(z) = prod (1 - z^2)^beta.
    safety_constant : standardized-node bound C used by feasibility when the
        quadrature rule cannot report its own (sampling rules clamp to it).
    bubble_floor : eps in the feasibility condition and the runtime floor
        asserted on every propagated point.
    """

    map_scale: float = 2.0
    bubble_exponent: float = 1.0
    safety_constant: float = 6.0
    bubble_floor: float = _EPS64

    def __post_init__(self):
        if not (np.isfinite(self.map_scale) and self.map_scale > 0.0):
            raise ConfigError("map_scale must be positive")
        if not (np.isfinite(self.bubble_exponent) and self.bubble_exponent >= 1.0):
            raise ConfigError("bubble_exponent must be >= 1")
        if not (np.isfinite(self.safety_constant) and self.safety_constant > 0.0):
            raise ConfigError("safety_constant must be positive")
        if not (0.0 < self.bubble_floor < 1.0):
            raise ConfigError("bubble_floor must lie in (0, 1)")


def to_bounded(x: np.ndarray, scale: float = 2.0) -> np.ndarray:
    """z = tanh(scale * x), elementwise."""
    return np.tanh(scale * np.asarray(x, dtype=np.float64))


def to_unbounded(z: np.ndarray, scale: float = 2.0) -> np.ndarray:
    """x = arctanh(z) / scale, elementwise.  Requires |z| < 1 strictly.

    Uses the log1p form 0.5*(log1p(z) - log1p(-z)) which is accurate both
    near 0 and near the boundary.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.size and np.max(np.abs(z)) >= 1.0:
        raise ConfigError("to_unbounded requires |z| < 1 strictly")
    return 0.5 * (np.log1p(z) - np.log1p(-z)) / scale


def bubble(z: np.ndarray, exponent: float = 1.0) -> np.ndarray:
    """Boundary weight prod_j (1 - z_j^2)^exponent over the last axis.

    Exactly 0 on the boundary, and (1-z^2) is computed as (1-z)(1+z) which
    is exact there in floating point.
    """
    z = np.asarray(z, dtype=np.float64)
    fac = (1.0 - z) * (1.0 + z)
    prod = np.prod(fac, axis=-1)
    if exponent != 1.0:
        prod = prod**exponent
    return prod


def propagate(z: np.ndarray, y: np.ndarray, scale: float = 2.0) -> np.ndarray:
    """One Gaussian step in cube coordinates: psi(psi^{-1}(z) + y).

    Closed form through the odds ratio eta = (1+z)/(1-z): the step multiplies
    eta by exp(2 L y), i.e. adds 2 L y to log(eta).  Implemented as

        t = log1p(z) - log1p(-z) + 2 L y,   z' = tanh(t / 2),

    which never forms the unbounded x explicitly and is stable for |z| near 1.
    Broadcasts over leading axes.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    t = np.log1p(z) - np.log1p(-z) + (2.0 * scale) * y
    return np.tanh(0.5 * t)


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of the a-priori regularizer bound, in log space."""

    ok: bool
    margin: float
    lhs_log: float
    rhs_log: float
    node_bound: float

    def require(self) -> "FeasibilityResult":
        if not self.ok:
            raise FeasibilityError(
                "transform/regularizer feasibility violated: "
                f"log-lhs {self.lhs_log:.3f} > log-rhs {self.rhs_log:.3f} "
                f"(margin {self.margin:.3f}, node bound C={self.node_bound:.3g}); "
                "reduce quadrature spread, time step, or interpolation level"
            )
        return self


def feasibility_check(
    interp_level: int,
    dim: int,
    config: TransformConfig,
    variances: np.ndarray,
    dt: float,
    node_bound: float | None = None,
) -> FeasibilityResult:
    """Evaluate the a-priori bound for one backward step.

    Parameters
    ----------
    interp_level, dim : sparse-grid resolution L_I and dimension d.
    variances : per-unit-time variances lambda_j of the rotated coordinates.
    dt : time step between exercise dates.
    node_bound : standardized quadrature-node bound C.  None uses
        config.safety_constant (the right choice for clamped sampling rules);
        deterministic rules should pass their actual max |y|/sqrt(lambda dt).
    """
    if interp_level < 1:
        raise ConfigError("interp_level must be >= 1")
    if dim < 1:
        raise ConfigError("dim must be >= 1")
    variances = np.asarray(variances, dtype=np.float64)
    if variances.size != dim or np.any(variances <= 0.0):
        raise ConfigError("variances must be positive with length dim")
    if not (np.isfinite(dt) and dt > 0.0):
        raise ConfigError("dt must be positive")
    c = config.safety_constant if node_bound is None else float(node_bound)
    if not (np.isfinite(c) and c > 0.0):
        raise ConfigError("node bound must be positive")

    lhs_log = (
        (interp_level + dim) * np.log(4.0)
        - 2.0 * dim * np.log(np.pi)
        + 2.0 * c * config.map_scale * np.sqrt(dt) * np.sum(np.sqrt(variances))
    )
    rhs_log = -np.log(config.bubble_floor) / config.bubble_exponent
    margin = float(rhs_log - lhs_log)
    return FeasibilityResult(
        ok=margin >= 0.0,
        margin=margin,
        lhs_log=float(lhs_log),
        rhs_log=float(rhs_log),
        node_bound=c,
    )
