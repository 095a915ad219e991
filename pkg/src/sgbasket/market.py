"""Market model: correlated GBM basket, rotation to independent coordinates.

The basket follows d correlated geometric Brownian motions under the
risk-neutral measure.  Pricing happens in rotated log-coordinates
``x = Q^T ln(S/S0)`` where the instantaneous covariance
``C = Sigma P Sigma^T`` is diagonalized as ``C = Q Lambda Q^T``.  In those
coordinates the components are independent with per-unit-time variances
``lambda_j`` (sorted descending) and drift ``mu = Q^T (r - delta - sigma^2/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError

# exp(709.8) overflows float64; anything past this is a misconfigured model,
# not a price.
_LOG_PRICE_LIMIT = 700.0

_PAYOFF_KINDS = ("arithmetic_put", "geometric_put")


def _as_vector(name: str, value, d: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be a scalar or 1-d array, got shape {arr.shape}")
    if d is not None:
        if arr.size == 1 and d > 1:
            arr = np.full(d, arr[0])
        elif arr.size != d:
            raise ConfigError(f"{name} has length {arr.size}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class MarketParams:
    """Risk-neutral parameters of a d-asset correlated GBM basket.

    Parameters
    ----------
    spot : array_like, shape (d,)
        Initial asset prices, all positive.
    rate : float
        Continuously compounded risk-free rate.
    dividend : array_like, shape (d,) or scalar
        Continuous dividend yields.
    vol : array_like, shape (d,)
        Volatilities, all positive.
    corr : array_like, shape (d, d)
        Instantaneous correlation matrix: symmetric, unit diagonal,
        positive definite.
    """

    spot: np.ndarray
    rate: float
    dividend: np.ndarray
    vol: np.ndarray
    corr: np.ndarray

    def __post_init__(self):
        spot = _as_vector("spot", self.spot)
        d = spot.size
        vol = _as_vector("vol", self.vol, d)
        div = _as_vector("dividend", self.dividend, d)
        corr = np.asarray(self.corr, dtype=np.float64)
        if corr.shape != (d, d):
            raise ConfigError(f"corr has shape {corr.shape}, expected ({d}, {d})")
        if not np.all(np.isfinite(corr)):
            raise ConfigError("corr contains non-finite entries")
        if np.max(np.abs(corr - corr.T)) > 1e-12:
            raise ConfigError("corr must be symmetric")
        if np.max(np.abs(np.diag(corr) - 1.0)) > 1e-12:
            raise ConfigError("corr must have unit diagonal")
        if np.max(np.abs(corr)) > 1.0 + 1e-12:
            raise ConfigError("corr entries must lie in [-1, 1]")
        if np.any(spot <= 0.0):
            raise ConfigError("spot prices must be positive")
        if np.any(vol <= 0.0):
            raise ConfigError("volatilities must be positive")
        rate = float(self.rate)
        if not np.isfinite(rate):
            raise ConfigError("rate must be finite")
        object.__setattr__(self, "spot", spot)
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "dividend", div)
        object.__setattr__(self, "vol", vol)
        object.__setattr__(self, "corr", corr)

    @property
    def dim(self) -> int:
        return self.spot.size

    def covariance(self) -> np.ndarray:
        """Instantaneous log-price covariance Sigma P Sigma^T."""
        s = self.vol
        return (s[:, None] * self.corr) * s[None, :]


@dataclass(frozen=True)
class OptionSpec:
    """Bermudan put on a basket average.

    ``exercise_count`` is the number K of exercise dates; the dates are
    t_k = k * T / K for k = 1..K (k = 0 is the valuation date, where the
    holder may also exercise by convention of the recursion's last step).
    """

    kind: str
    strike: float
    maturity: float
    exercise_count: int

    def __post_init__(self):
        if self.kind not in _PAYOFF_KINDS:
            raise ConfigError(f"kind must be one of {_PAYOFF_KINDS}, got {self.kind!r}")
        if not (np.isfinite(self.strike) and self.strike > 0.0):
            raise ConfigError("strike must be positive")
        if not (np.isfinite(self.maturity) and self.maturity > 0.0):
            raise ConfigError("maturity must be positive")
        if int(self.exercise_count) != self.exercise_count or self.exercise_count < 1:
            raise ConfigError("exercise_count must be an integer >= 1")
        object.__setattr__(self, "strike", float(self.strike))
        object.__setattr__(self, "maturity", float(self.maturity))
        object.__setattr__(self, "exercise_count", int(self.exercise_count))


@dataclass(frozen=True)
class RotatedModel:
    """Diagonalized coordinates for a MarketParams instance.

    Attributes
    ----------
    rotation : (d, d) orthogonal Q, columns are eigenvectors of the
        covariance, ordered by descending eigenvalue.
    variances : (d,) eigenvalues lambda (per unit time), descending.
    drift : (d,) rotated drift Q^T (r - delta - sigma^2 / 2) per unit time.
    """

    params: MarketParams
    rotation: np.ndarray
    variances: np.ndarray
    drift: np.ndarray
    covariance: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.variances.size


def decorrelate(params: MarketParams) -> RotatedModel:
    """Diagonalize the log-price covariance of ``params``.

    Returns a RotatedModel with eigenvalues sorted descending.  Raises
    ConfigError if the covariance is numerically singular (smallest
    eigenvalue <= 1e-12 of the largest), NumericalError if the
    reconstruction Q Lambda Q^T fails to match the input covariance.
    """
    cov = params.covariance()
    cov = 0.5 * (cov + cov.T)
    lam, q = np.linalg.eigh(cov)
    if lam[-1] <= 0.0 or lam[0] <= 1e-12 * lam[-1]:
        raise ConfigError(
            "correlation matrix is numerically singular "
            f"(eigenvalue range [{lam[0]:.3e}, {lam[-1]:.3e}])"
        )
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    q = q[:, order]
    # sign canonicalization: make each column's largest-|.| entry positive so
    # the rotation is reproducible across LAPACK builds
    anchor = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[anchor, np.arange(q.shape[1])])
    signs[signs == 0.0] = 1.0
    q = q * signs[None, :]

    recon = (q * lam[None, :]) @ q.T
    scale = max(np.max(np.abs(cov)), 1.0)
    if np.max(np.abs(recon - cov)) > 1e-10 * scale:
        raise NumericalError("eigendecomposition failed to reconstruct the covariance")

    drift_cart = params.rate - params.dividend - 0.5 * params.vol**2
    drift = q.T @ drift_cart
    return RotatedModel(params=params, rotation=q, variances=lam, drift=drift, covariance=cov)


def prices_from_rotated(model: RotatedModel, x: np.ndarray) -> np.ndarray:
    """Asset prices S = S0 * exp(Q x) for rotated log-coordinates x.

    ``x`` has shape (..., d).  Raises NumericalError if any Cartesian
    log-return exceeds the float64 overflow guard; points that far out are
    a configuration problem and saturating them would silently corrupt
    prices.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.dim:
        raise ConfigError(f"x has last dimension {x.shape[-1]}, expected {model.dim}")
    logret = x @ model.rotation.T
    amax = np.max(np.abs(logret)) if logret.size else 0.0
    if not np.isfinite(amax) or amax > _LOG_PRICE_LIMIT:
        raise NumericalError(
            f"log-return magnitude {amax:.3g} exceeds overflow guard {_LOG_PRICE_LIMIT}"
        )
    return model.params.spot * np.exp(logret)


def payoff(spec: OptionSpec, prices: np.ndarray) -> np.ndarray:
    """Put payoff on the basket average of ``prices`` (shape (..., d)).

    arithmetic_put: (kappa - mean(S))^+        geometric_put: (kappa - gmean(S))^+
    """
    prices = np.asarray(prices, dtype=np.float64)
    if prices.ndim == 0 or prices.shape[-1] < 1:
        raise ConfigError("prices must have shape (..., d)")
    if spec.kind == "arithmetic_put":
        avg = prices.mean(axis=-1)
    else:
        if np.any(prices <= 0.0):
            raise ConfigError("geometric payoff requires positive prices")
        avg = np.exp(np.log(prices).mean(axis=-1))
    return np.maximum(spec.strike - avg, 0.0)
