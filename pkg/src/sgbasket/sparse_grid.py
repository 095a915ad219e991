"""Sparse-grid polynomial interpolation on [-1, 1]^d.

Nested Chebyshev-Gauss-Lobatto node families combined by the standard
telescoping construction: for interpolation level L and dimension d the
grid keeps tensor terms with level multi-indices l in

    P = { l : q - d + 1 <= |l|_1 <= q },        q = L + d,

each weighted by the combination coefficient (-1)^(q-|l|) C(d-1, q-|l|).
Level l contributes N_l = 2^(l-1) + 1 nodes per axis (level 1 contributes
the single node 0), so consecutive levels nest bit-exactly and the union
grid is far smaller than the full tensor product.

Interpolation is barycentric Lagrange per axis, contracted one axis at a
time; evaluation at arbitrary point sets is chunked and optionally
threaded, with a memory budget deciding whether per-chunk basis factors are
cached across repeated evaluations (the pricing loop reuses the same
points every step).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .errors import ConfigError, ResourceCapError

DEFAULT_POINT_CAP = 5_000_000
DEFAULT_CHUNK = 65_536
DEFAULT_MEMORY_BUDGET = 1_500_000_000


def level_size(level: int) -> int:
    """Nodes per axis at a given level: 1, 3, 5, 9, 17, ..."""
    if level < 1:
        raise ConfigError("level must be >= 1")
    return 1 if level == 1 else 2 ** (level - 1) + 1


def _canonical_nodes(level: int) -> np.ndarray:
    """Ascending extrema-of-Chebyshev nodes, exactly sign-symmetric.

    Built half-and-mirror with the center forced to +0.0: cos(pi/2) in
    float64 is 6.1e-17, and the origin must be an exact grid node.  Because
    the node count minus one is a power of two, independently built levels
    are bit-exact subsets of finer ones.
    """
    n = level_size(level)
    if n == 1:
        return np.zeros(1)
    half = n // 2
    j = np.arange(half)
    left = -np.cos(np.pi * j / (n - 1))
    out = np.empty(n)
    out[:half] = left
    out[half] = 0.0
    out[half + 1 :] = -left[::-1]
    return out


@dataclass(frozen=True)
class NestedRule1D:
    """One level of the nested node family: ascending nodes on [-1, 1]."""

    level: int
    nodes: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size


def node_rule(level: int) -> NestedRule1D:
    return NestedRule1D(level=level, nodes=_canonical_nodes(level))


def barycentric_weights(n: int) -> np.ndarray:
    """Barycentric weights for extrema-of-Chebyshev nodes: (-1)^j, halved at the ends."""
    if n == 1:
        return np.ones(1)
    w = np.ones(n)
    w[0] = 0.5
    w[-1] = 0.5
    return w * (-1.0) ** np.arange(n)


def compositions(total: int, parts: int, lo: int, hi: int):
    """All tuples of length ``parts`` with entries in [lo, hi] summing to ``total``."""
    if parts == 1:
        if lo <= total <= hi:
            yield (total,)
        return
    for first in range(lo, min(hi, total - lo * (parts - 1)) + 1):
        for rest in compositions(total - first, parts - 1, lo, hi):
            yield (first,) + rest


def combination_terms(dim: int, interp_level: int) -> list[tuple[tuple[int, ...], int]]:
    """(level multi-index, combination coefficient) pairs of the telescoping sum."""
    q = interp_level + dim
    out = []
    for s in range(max(dim, q - dim + 1), q + 1):
        coef = (-1) ** (q - s) * comb(dim - 1, q - s)
        for ml in compositions(s, dim, 1, interp_level + 1):
            out.append((ml, coef))
    return out


def asymptotic_inner_count(dim: int, interp_level: int) -> float:
    """Leading-order interior point count 2^L d^L / L! for large d."""
    return 2.0**interp_level * float(dim) ** interp_level / factorial(interp_level)


def full_tensor_inner_count(dim: int, interp_level: int) -> int:
    """Interior points of the full tensor grid at the same level: (2^L - 1)^d."""
    return (2**interp_level - 1) ** dim


@dataclass(frozen=True)
class TensorTerm:
    """One tensor-product term of the combination: levels, coefficient, and the
    gather map from union-grid storage into the term's own tensor layout.

    ``gather`` is flattened C-order over ``shape``; axes with level 1 are
    squeezed out of both."""

    levels: tuple[int, ...]
    coef: int
    active_dims: tuple[int, ...]
    gather: np.ndarray
    shape: tuple[int, ...]


@dataclass(frozen=True)
class SmolyakGrid:
    dim: int
    interp_level: int
    max_level: int
    canonical: np.ndarray = field(repr=False)
    index_rows: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    inner_mask: np.ndarray = field(repr=False)
    terms: tuple[TensorTerm, ...] = field(repr=False)
    origin_id: int

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_inner(self) -> int:
        return int(self.inner_mask.sum())

    @property
    def inner_ids(self) -> np.ndarray:
        return np.flatnonzero(self.inner_mask)

    @property
    def inner_points(self) -> np.ndarray:
        return self.points[self.inner_mask]

    @property
    def origin_inner_pos(self) -> int:
        """Position of the origin within the interior subset."""
        return int(np.searchsorted(self.inner_ids, self.origin_id))

    def defining_levels(self) -> np.ndarray:
        """Per point and axis, the smallest level whose node set contains the
        coordinate.  Row sums never exceed q = interp_level + dim (tested
        invariant of the construction)."""
        idx = self.index_rows.astype(np.int64)
        lmax = self.max_level
        center = (self.canonical.size - 1) // 2
        low = idx & -idx
        tz = np.where(idx == 0, lmax - 1, np.log2(np.maximum(low, 1)).round().astype(np.int64))
        lev = np.maximum(2, lmax - tz)
        return np.where(idx == center, 1, lev)


def _level_indices(level: int, max_level: int, canon_size: int) -> np.ndarray:
    """Indices into the canonical array occupied by a level's nodes."""
    if level == 1:
        return np.array([(canon_size - 1) // 2])
    return np.arange(0, canon_size, 2 ** (max_level - level))


def build_grid(
    dim: int,
    interp_level: int,
    point_cap: int = DEFAULT_POINT_CAP,
) -> SmolyakGrid:
    """Assemble the sparse grid for ``dim`` assets at level ``interp_level``.

    Raises ResourceCapError before allocating if the generated point stream
    (sum over terms of the tensor sizes) would exceed ``point_cap``.
    """
    if dim < 1:
        raise ConfigError("dim must be >= 1")
    if interp_level < 1:
        raise ConfigError("interp_level must be >= 1")
    max_level = interp_level + 1
    canon = _canonical_nodes(max_level)
    canon_size = canon.size

    terms_raw = combination_terms(dim, interp_level)
    gen_count = 0
    for ml, _ in terms_raw:
        size = 1
        for li in ml:
            size *= level_size(li)
        gen_count += size
    if gen_count > point_cap:
        raise ResourceCapError(
            f"sparse grid generation for d={dim}, level={interp_level} needs "
            f"{gen_count} tensor points, cap is {point_cap}"
        )

    rows_list = []
    for ml, _ in terms_raw:
        axes = [_level_indices(li, max_level, canon_size) for li in ml]
        mesh = np.meshgrid(*axes, indexing="ij")
        rows_list.append(np.stack([m.ravel() for m in mesh], axis=1))
    all_rows = np.concatenate(rows_list, axis=0).astype(np.int32)
    uniq, inv = np.unique(all_rows, axis=0, return_inverse=True)
    inv = inv.ravel()

    points = canon[uniq]
    inner = ~((uniq == 0) | (uniq == canon_size - 1)).any(axis=1)

    terms = []
    offset = 0
    for (ml, coef), rows in zip(terms_raw, rows_list):
        n = rows.shape[0]
        gather = inv[offset : offset + n].astype(np.int64)
        offset += n
        active = tuple(i for i, li in enumerate(ml) if li > 1)
        # active axes sorted by descending node count: the first (cheapest
        # per output element) contraction then eliminates the largest axis
        active = tuple(sorted(active, key=lambda i: -level_size(ml[i])))
        full_shape = tuple(level_size(li) for li in ml)
        tensor = gather.reshape(full_shape)
        squeeze = tuple(i for i, li in enumerate(ml) if li == 1)
        tensor = np.squeeze(tensor, axis=squeeze) if squeeze else tensor
        if active:
            kept = [i for i, li in enumerate(ml) if li > 1]
            tensor = np.transpose(tensor, axes=[kept.index(i) for i in active])
        shape = tuple(level_size(ml[i]) for i in active)
        terms.append(
            TensorTerm(
                levels=tuple(ml),
                coef=coef,
                active_dims=active,
                gather=np.ascontiguousarray(tensor).ravel(),
                shape=shape,
            )
        )

    center = (canon_size - 1) // 2
    origin_rows = np.flatnonzero((uniq == center).all(axis=1))
    if origin_rows.size != 1:
        raise ConfigError("grid construction lost the origin node")

    return SmolyakGrid(
        dim=dim,
        interp_level=interp_level,
        max_level=max_level,
        canonical=canon,
        index_rows=uniq,
        points=points,
        inner_mask=inner,
        terms=tuple(terms),
        origin_id=int(origin_rows[0]),
    )


def _basis_block(
    coords: np.ndarray, level: int, max_level: int, canon: np.ndarray
) -> np.ndarray:
    """Barycentric Lagrange basis values: rows are probe coordinates, columns
    the level's nodes.  Probes that hit a node exactly get a one-hot row."""
    idx = _level_indices(level, max_level, canon.size)
    nodes = canon[idx]
    w = barycentric_weights(nodes.size)
    diff = coords[:, None] - nodes[None, :]
    hit = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = w / diff
        basis = t / t.sum(axis=1, keepdims=True)
    hit_rows = hit.any(axis=1)
    if hit_rows.any():
        basis[hit_rows] = hit[hit_rows].astype(np.float64)
    return basis


class PointEvaluator:
    """Evaluates grid interpolants at a fixed set of probe points.

    Probes are processed in fixed-size chunks; chunk boundaries depend only
    on ``chunk``, never on ``threads``, and each chunk is reduced with the
    same sequential contraction order, so results are bit-identical for any
    thread count.  When the estimated per-chunk basis storage fits
    ``memory_budget`` the factors are cached and reused across calls
    (repeated evaluation at the same points is the hot path of the pricing
    recursion); otherwise they are rebuilt per call.
    """

    def __init__(
        self,
        grid: SmolyakGrid,
        points: np.ndarray,
        chunk: int = DEFAULT_CHUNK,
        memory_budget: int | float = DEFAULT_MEMORY_BUDGET,
        threads: int = 1,
    ):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != grid.dim:
            raise ConfigError(f"points must have shape (n, {grid.dim})")
        if points.size and np.max(np.abs(points)) > 1.0:
            raise ConfigError("evaluation points must lie in [-1, 1]^d")
        if chunk < 1:
            raise ConfigError("chunk must be >= 1")
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        self.grid = grid
        self.points = points
        self.chunk = int(chunk)
        self.threads = int(threads)

        # (dim, level) pairs actually needed by the combination
        self._needed = sorted(
            {
                (i, term.levels[i])
                for term in grid.terms
                for i in term.active_dims
            }
        )
        per_point = 8 * sum(level_size(lv) for _, lv in self._needed)
        self.cache_enabled = per_point * points.shape[0] <= memory_budget
        self._starts = list(range(0, points.shape[0], self.chunk))
        self._cache = (
            [self._build_basis(a) for a in self._starts] if self.cache_enabled else None
        )

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def _build_basis(self, start: int) -> dict:
        seg = self.points[start : start + self.chunk]
        return {
            (i, lv): _basis_block(seg[:, i], lv, self.grid.max_level, self.grid.canonical)
            for i, lv in self._needed
        }

    def _eval_chunk(self, ci: int, values: np.ndarray, out: np.ndarray) -> None:
        start = self._starts[ci]
        stop = min(start + self.chunk, self.n_points)
        n = stop - start
        basis = self._cache[ci] if self.cache_enabled else self._build_basis(start)
        acc = np.zeros(n)
        for term in self.grid.terms:
            if not term.active_dims:
                acc += term.coef * values[term.gather[0]]
                continue
            nodal = values[term.gather].reshape(term.shape)
            first = term.active_dims[0]
            cur = np.tensordot(basis[(first, term.levels[first])], nodal, axes=([1], [0]))
            for i in term.active_dims[1:]:
                cur = np.einsum("pj,pj...->p...", basis[(i, term.levels[i])], cur)
            acc += term.coef * cur
        out[start:stop] = acc

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        """Interpolant values at the probe points, given nodal values on the
        full union grid (length grid.n_points)."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.grid.n_points,):
            raise ConfigError(
                f"values must have shape ({self.grid.n_points},), got {values.shape}"
            )
        out = np.empty(self.n_points)
        n_chunks = len(self._starts)
        if self.threads == 1 or n_chunks == 1:
            for ci in range(n_chunks):
                self._eval_chunk(ci, values, out)
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                list(pool.map(lambda ci: self._eval_chunk(ci, values, out), range(n_chunks)))
        return out


@dataclass(frozen=True)
class Interpolant:
    """Nodal values bound to a grid; callable at arbitrary interior points."""

    grid: SmolyakGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.n_points,):
            raise ConfigError("values length must match grid point count")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_inner(cls, grid: SmolyakGrid, inner_values: np.ndarray) -> "Interpolant":
        """Bind interior nodal values, pinning boundary nodes to exactly 0."""
        inner_values = np.asarray(inner_values, dtype=np.float64)
        if inner_values.shape != (grid.n_inner,):
            raise ConfigError("inner_values length must match grid inner count")
        full = np.zeros(grid.n_points)
        full[grid.inner_ids] = inner_values
        return cls(grid=grid, values=full)

    def __call__(
        self,
        points: np.ndarray,
        chunk: int = DEFAULT_CHUNK,
        memory_budget: int | float = DEFAULT_MEMORY_BUDGET,
        threads: int = 1,
    ) -> np.ndarray:
        ev = PointEvaluator(
            self.grid, points, chunk=chunk, memory_budget=memory_budget, threads=threads
        )
        return ev.evaluate(self.values)
