"""Quadrature rules for one Gaussian time step in rotated coordinates.

A step is N(mean, diag(variance)) in d independent coordinates.  Every rule
produces increment points y (M, d) and weights summing to 1; pricing only
ever sees (points, weights), so rules are interchangeable:

- ``gh_tensor``: tensor Gauss-Hermite, per-axis node counts may differ.
- ``gh_sparse``: telescoping combination of Gauss-Hermite rules with linear
  stage growth (stage i has i nodes).
- ``gk_sparse``: same combination over the embedded nested normal family
  (stages of 1/3/9/19/35 points, see gk_tables).
- ``mc``: plain Monte Carlo from a counter-based generator.
- ``rqmc_sobol``: scrambled Sobol points mapped through the inverse normal CDF.

Sampling rules clamp standardized draws to +-clamp and report how many
entries were clamped; deterministic rules report their true standardized
node bound.  Either bound feeds the transform feasibility check.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import special as _special
from scipy.stats import qmc as _qmc

from . import gk_tables
from .errors import ConfigError

KINDS = ("gh_tensor", "gh_sparse", "gk_sparse", "mc", "rqmc_sobol")

_GH_EXACT = {
    1: (np.array([0.0]), np.array([1.0])),
    2: (np.array([-1.0, 1.0]), np.array([0.5, 0.5])),
    3: (
        np.array([-np.sqrt(3.0), 0.0, np.sqrt(3.0)]),
        np.array([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]),
    ),
}


@dataclass(frozen=True)
class GaussianStepSpec:
    """One time step: independent normals with given means and variances."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        var = np.atleast_1d(np.asarray(self.variance, dtype=np.float64))
        if mean.ndim != 1 or var.shape != mean.shape:
            raise ConfigError("mean and variance must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(var))):
            raise ConfigError("mean and variance must be finite")
        if np.any(var <= 0.0):
            raise ConfigError("variances must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class QuadratureConfig:
    """Declarative rule selection; exactly the fields a config file exposes."""

    kind: str
    nodes: int | tuple[int, ...] | None = None
    level: int | None = None
    samples: int | None = None
    seed: int = 0
    clamp: float = 6.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"quadrature kind must be one of {KINDS}, got {self.kind!r}")
        if not (np.isfinite(self.clamp) and self.clamp > 0.0):
            raise ConfigError("clamp must be positive")
        if self.nodes is not None and not isinstance(self.nodes, int):
            object.__setattr__(self, "nodes", tuple(int(n) for n in self.nodes))


@dataclass(frozen=True)
class QuadratureRule:
    """Materialized rule: increment points in model coordinates plus weights."""

    kind: str
    points: np.ndarray
    weights: np.ndarray
    node_bound: float
    detail: str
    seed: int | None = None
    clamp: float | None = None
    clamped_count: int = 0

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Weighted sum over the rule axis (the last axis of ``values``).

        Plain elementwise-multiply-then-sum: the reduction order is fixed by
        the array layout, making results reproducible bit-for-bit.
        """
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != self.size:
            raise ConfigError(f"values last axis must be {self.size}")
        return (values * self.weights).sum(axis=-1)

    def to_table(self) -> tuple[list[str], np.ndarray]:
        """(header, rows) for CSV dumps: index, weight, y_1..y_d."""
        header = ["index", "weight"] + [f"y{i + 1}" for i in range(self.dim)]
        rows = np.column_stack(
            [np.arange(self.size, dtype=np.float64), self.weights, self.points]
        )
        return header, rows


def inverse_normal_cdf(u: np.ndarray) -> np.ndarray:
    """Quantile function of the standard normal.  Requires 0 < u < 1."""
    u = np.asarray(u, dtype=np.float64)
    if u.size and (np.min(u) <= 0.0 or np.max(u) >= 1.0):
        raise ConfigError("inverse_normal_cdf requires arguments strictly inside (0, 1)")
    return _special.ndtri(u)


def gauss_hermite_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the unit normal weight, weights summing to 1.

    n = 1, 2, 3 are returned exactly ({0}, {+-1}, {0, +-sqrt(3)}); larger n
    uses the probabilists' Hermite solver, which stays stable into the
    hundreds of thousands of nodes.  Weights that underflow to exactly 0
    are dropped together with their nodes: they cannot change any sum, but
    their far-out nodes would wreck the standardized node bound.
    """
    if n < 1:
        raise ConfigError("node count must be >= 1")
    if n in _GH_EXACT:
        x, w = _GH_EXACT[n]
        return x.copy(), w.copy()
    x, w = _special.roots_hermitenorm(n)
    w = w / w.sum()
    keep = w != 0.0
    return x[keep], w[keep]


def _stage_gh(stage: int) -> tuple[np.ndarray, np.ndarray]:
    return gauss_hermite_1d(stage)


def _stage_nested(stage: int) -> tuple[np.ndarray, np.ndarray]:
    return gk_tables.nodes_weights(stage)


def _sparse_standardized(
    dim: int, level: int, stage_fn, max_stage: int | None
) -> tuple[np.ndarray, np.ndarray]:
    """Telescoping combination over stage multi-indices with sum(l-1) <= level.

    Returns deduplicated standardized points and accumulated weights; points
    whose combined weight cancels to exactly 0 are dropped.
    """
    if level < 0:
        raise ConfigError("sparse level must be >= 0")
    hi = level + 1 if max_stage is None else min(max_stage, level + 1)
    if max_stage is not None and level + 1 > max_stage:
        raise ConfigError(
            f"nested normal family has {max_stage} stages; level must be <= {max_stage - 1}"
        )
    q = level + dim
    rows_list, wts_list = [], []
    for s in range(max(dim, q - dim + 1), q + 1):
        coef = (-1) ** (q - s) * comb(dim - 1, q - s)
        for ml in compositions_cached(s, dim, hi):
            axes = [stage_fn(li) for li in ml]
            mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
            rows = np.stack([m.ravel() for m in mesh], axis=1)
            wprod = np.ones(1)
            for a in axes:
                wprod = np.outer(wprod, a[1]).ravel()
            rows_list.append(rows)
            wts_list.append(coef * wprod)
    all_rows = np.concatenate(rows_list, axis=0)
    all_w = np.concatenate(wts_list)
    uniq, inv = np.unique(all_rows, axis=0, return_inverse=True)
    weights = np.zeros(uniq.shape[0])
    np.add.at(weights, inv.ravel(), all_w)
    keep = weights != 0.0
    return uniq[keep], weights[keep]


def compositions_cached(total: int, parts: int, hi: int):
    # tiny helper, kept separate from sparse_grid to avoid a circular import
    if parts == 1:
        if 1 <= total <= hi:
            yield (total,)
        return
    for first in range(1, min(hi, total - (parts - 1)) + 1):
        for rest in compositions_cached(total - first, parts - 1, hi):
            yield (first,) + rest


def _scale(step: GaussianStepSpec, std: np.ndarray) -> np.ndarray:
    return step.mean[None, :] + np.sqrt(step.variance)[None, :] * std


def _clamp_standardized(std: np.ndarray, clamp: float) -> tuple[np.ndarray, int]:
    clipped = np.clip(std, -clamp, clamp)
    return clipped, int(np.count_nonzero(clipped != std))


def gh_tensor_rule(step: GaussianStepSpec, nodes: int | tuple[int, ...]) -> QuadratureRule:
    """Tensor Gauss-Hermite; ``nodes`` is one count or one per dimension."""
    d = step.dim
    if isinstance(nodes, int):
        counts = (nodes,) * d
    else:
        counts = tuple(int(n) for n in nodes)
        if len(counts) != d:
            raise ConfigError(f"nodes must have {d} entries, got {len(counts)}")
    axes = [gauss_hermite_1d(n) for n in counts]
    mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    std = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.ones(1)
    for _, w in axes:
        weights = np.outer(weights, w).ravel()
    return QuadratureRule(
        kind="gh_tensor",
        points=_scale(step, std),
        weights=weights,
        node_bound=float(np.max(np.abs(std))) if std.size else 0.0,
        detail="nodes=" + "x".join(str(n) for n in counts),
    )


def gh_sparse_rule(step: GaussianStepSpec, level: int) -> QuadratureRule:
    std, weights = _sparse_standardized(step.dim, level, _stage_gh, None)
    return QuadratureRule(
        kind="gh_sparse",
        points=_scale(step, std),
        weights=weights,
        node_bound=float(np.max(np.abs(std))),
        detail=f"level={level}",
    )


def gk_sparse_rule(step: GaussianStepSpec, level: int) -> QuadratureRule:
    gk_tables.verify_checksum()
    std, weights = _sparse_standardized(
        step.dim, level, _stage_nested, len(gk_tables.STAGE_SIZES)
    )
    return QuadratureRule(
        kind="gk_sparse",
        points=_scale(step, std),
        weights=weights,
        node_bound=float(np.max(np.abs(std))),
        detail=f"level={level}",
    )


def mc_rule(step: GaussianStepSpec, samples: int, seed: int, clamp: float = 6.0) -> QuadratureRule:
    """Equal-weight Monte Carlo from a Philox counter-based stream.

    The stream depends only on (seed, samples, d), never on thread counts or
    prior draws, so reruns are reproducible by construction.
    """
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    std = rng.standard_normal((samples, step.dim))
    std, clamped = _clamp_standardized(std, clamp)
    return QuadratureRule(
        kind="mc",
        points=_scale(step, std),
        weights=np.full(samples, 1.0 / samples),
        node_bound=float(clamp),
        detail=f"samples={samples}",
        seed=int(seed),
        clamp=float(clamp),
        clamped_count=clamped,
    )


def rqmc_sobol_rule(
    step: GaussianStepSpec, samples: int, seed: int, clamp: float = 6.0
) -> QuadratureRule:
    """Scrambled Sobol points through the normal quantile, equal weights.

    ``samples`` must be a power of two; Sobol point sets only balance at
    those sizes.  The scramble is seeded, so a (seed, samples, d) triple
    pins the rule exactly.
    """
    if samples < 1 or samples & (samples - 1):
        raise ConfigError("rqmc_sobol requires samples to be a power of two")
    sob = _qmc.Sobol(d=step.dim, scramble=True, seed=seed)
    u = sob.random_base2(int(np.log2(samples)))
    # scrambling keeps u in (0,1) almost surely; guard the endpoints anyway
    tiny = np.finfo(np.float64).tiny
    u = np.clip(u, tiny, 1.0 - 2.2e-16)
    std = _special.ndtri(u)
    std, clamped = _clamp_standardized(std, clamp)
    return QuadratureRule(
        kind="rqmc_sobol",
        points=_scale(step, std),
        weights=np.full(samples, 1.0 / samples),
        node_bound=float(clamp),
        detail=f"samples={samples}",
        seed=int(seed),
        clamp=float(clamp),
        clamped_count=clamped,
    )


def build_rule(step: GaussianStepSpec, config: QuadratureConfig) -> QuadratureRule:
    """Materialize the rule described by ``config`` for one time step."""
    kind = config.kind
    if kind == "gh_tensor":
        if config.nodes is None:
            raise ConfigError("gh_tensor requires 'nodes'")
        return gh_tensor_rule(step, config.nodes)
    if kind == "gh_sparse":
        if config.level is None:
            raise ConfigError("gh_sparse requires 'level'")
        return gh_sparse_rule(step, config.level)
    if kind == "gk_sparse":
        if config.level is None:
            raise ConfigError("gk_sparse requires 'level'")
        return gk_sparse_rule(step, config.level)
    if kind == "mc":
        if config.samples is None:
            raise ConfigError("mc requires 'samples'")
        return mc_rule(step, config.samples, config.seed, config.clamp)
    if kind == "rqmc_sobol":
        if config.samples is None:
            raise ConfigError("rqmc_sobol requires 'samples'")
        return rqmc_sobol_rule(step, config.samples, config.seed, config.clamp)
    raise ConfigError(f"unknown quadrature kind {kind!r}")
