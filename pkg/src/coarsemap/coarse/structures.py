"""Finite-scale containers: sites, decay matrices, relations, metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import (
    AsymmetricInput,
    NegativeEntry,
    NonFinite,
    NonPositiveEpsilon,
    SiteSetMismatch,
)

UNREACHABLE = -1
ASYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class SiteSet:
    ids: tuple[str, ...]
    coords: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)
        if len(ids) < 1:
            raise ValueError("a site set needs at least one site")
        if len(set(ids)) != len(ids):
            raise ValueError("site ids must be unique")
        if self.coords is not None:
            coords = tuple(tuple(int(c) for c in xy) for xy in self.coords)
            if len(coords) != len(ids):
                raise ValueError("coords length must match number of sites")
            object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return len(self.ids)

    @classmethod
    def range(cls, n: int) -> "SiteSet":
        return cls(tuple(str(i) for i in range(n)), tuple((i,) for i in range(n)))

    @classmethod
    def grid(cls, rows: int, cols: int) -> "SiteSet":
        coords = tuple((r, c) for r in range(rows) for c in range(cols))
        return cls(tuple(f"{r}_{c}" for r, c in coords), coords)

    def canonical_order(self) -> list[int]:
        """Positions sorted by id, numerals numerically; equal for any relabelling of one set."""
        def key(i):
            s = self.ids[i]
            return (0, int(s), s) if s.isdigit() else (1, 0, s)

        return sorted(range(self.n), key=key)

    def permuted(self, perm: Sequence[int]) -> "SiteSet":
        """Site set whose i-th site is ``self``'s ``perm[i]``-th site."""
        perm = list(perm)
        coords = None if self.coords is None else tuple(self.coords[p] for p in perm)
        return SiteSet(tuple(self.ids[p] for p in perm), coords)


def _check_same(a: SiteSet, b: SiteSet):
    if a != b:
        raise SiteSetMismatch("operands live on different site sets")


@dataclass(frozen=True, eq=False)
class DecayMatrix:
    """Symmetric nonnegative table of a decay function on a finite site set.

    The diagonal is stored but never read by downstream operations.
    """

    sites: SiteSet
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.sites.n

    def off_diagonal(self) -> np.ndarray:
        return self.values[~np.eye(self.n, dtype=bool)]

    def thresholds(self) -> np.ndarray:
        vals = np.unique(self.off_diagonal())
        return vals[vals > 0][::-1]

    def sup_distance(self, other: "DecayMatrix") -> float:
        """Off-diagonal sup norm of ``self - other``."""
        _check_same(self.sites, other.sites)
        if self.n == 1:
            return 0.0
        return float(np.max(np.abs(self.values - other.values)[~np.eye(self.n, dtype=bool)]))

    def permuted(self, perm: Sequence[int]) -> "DecayMatrix":
        p = np.asarray(perm)
        return DecayMatrix(self.sites.permuted(perm), self.values[np.ix_(p, p)].copy())

    def __eq__(self, other):
        return (
            isinstance(other, DecayMatrix)
            and self.sites == other.sites
            and np.array_equal(self.values, other.values)
        )


def build_decay_matrix(raw, sites: Optional[SiteSet] = None, symmetrize: bool = True) -> DecayMatrix:
    raw = np.array(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise ValueError(f"decay matrix must be square, got shape {raw.shape}")
    if sites is None:
        sites = SiteSet.range(raw.shape[0])
    if sites.n != raw.shape[0]:
        raise SiteSetMismatch(f"{sites.n} sites but a {raw.shape[0]}x{raw.shape[0]} matrix")
    if not np.all(np.isfinite(raw)):
        raise NonFinite("decay matrix has non-finite entries")
    if np.any(raw < 0):
        i, j = np.argwhere(raw < 0)[0]
        raise NegativeEntry(f"negative entry {raw[i, j]} at ({i}, {j})")
    if symmetrize:
        values = np.maximum(raw, raw.T)
    else:
        gap = np.abs(raw - raw.T)
        if np.any(gap > ASYMMETRY_TOL):
            i, j = np.argwhere(gap > ASYMMETRY_TOL)[0]
            raise AsymmetricInput(f"entries ({i}, {j}) and ({j}, {i}) differ by {gap[i, j]:.3g}")
        # exact symmetry from here on
        values = np.maximum(raw, raw.T)
    values.setflags(write=False)
    return DecayMatrix(sites, values)


@dataclass(frozen=True, eq=False)
class Relation:
    """Boolean relation on a site set; the diagonal is always included."""

    sites: SiteSet
    adj: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool)
        if adj.shape != (self.sites.n, self.sites.n):
            raise SiteSetMismatch("adjacency shape does not match the site set")
        np.fill_diagonal(adj, True)
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)

    @property
    def n(self) -> int:
        return self.sites.n

    @classmethod
    def diagonal(cls, sites: SiteSet) -> "Relation":
        return cls(sites, np.eye(sites.n, dtype=bool))

    def edges(self) -> list[tuple[int, int]]:
        """Undirected off-diagonal edges ``(i, j)`` with ``i < j``."""
        sym = self.adj | self.adj.T
        i, j = np.nonzero(np.triu(sym, 1))
        return list(zip(i.tolist(), j.tolist()))

    def issubset(self, other: "Relation") -> bool:
        _check_same(self.sites, other.sites)
        return not np.any(self.adj & ~other.adj)

    def neighbourhood(self, i: int) -> np.ndarray:
        """Indices of ``E[x] = {y : (x, y) in E}``."""
        return np.flatnonzero(self.adj[i])

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.adj, self.adj.T))

    def permuted(self, perm: Sequence[int]) -> "Relation":
        p = np.asarray(perm)
        return Relation(self.sites.permuted(perm), self.adj[np.ix_(p, p)])

    def __eq__(self, other):
        return (
            isinstance(other, Relation)
            and self.sites == other.sites
            and np.array_equal(self.adj, other.adj)
        )

    __hash__ = None


def compose(e: Relation, f: Relation) -> Relation:
    """``E o F = {(x, z) : exists y, (x, y) in E and (y, z) in F}``."""
    _check_same(e.sites, f.sites)
    prod = e.adj.astype(np.int64) @ f.adj.astype(np.int64)
    return Relation(e.sites, prod > 0)


def inverse(e: Relation) -> Relation:
    return Relation(e.sites, e.adj.T)


def union(e: Relation, f: Relation) -> Relation:
    _check_same(e.sites, f.sites)
    return Relation(e.sites, e.adj | f.adj)


def epsilon_graph(f: DecayMatrix, eps: float) -> Relation:
    """Pairs with ``f(x, y) >= eps`` (non-strict), plus the diagonal."""
    if not eps > 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {eps}")
    return Relation(f.sites, f.values >= eps)


@dataclass(frozen=True)
class Filtration:
    matrix: DecayMatrix
    thresholds: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.matrix.thresholds()))

    def graphs(self):
        for eps in self.thresholds:
            yield eps, epsilon_graph(self.matrix, eps)


@dataclass(frozen=True, eq=False)
class PathMetric:
    """All-pairs hop distances, ``UNREACHABLE`` across components."""

    sites: SiteSet
    dist: np.ndarray

    @property
    def n(self) -> int:
        return self.sites.n

    def finite(self) -> np.ndarray:
        return self.dist != UNREACHABLE

    def diameter(self) -> int:
        """Largest finite distance (over all components)."""
        return int(self.dist[self.finite()].max())

    def is_connected(self) -> bool:
        return bool(np.all(self.finite()))

    def eccentricities(self) -> np.ndarray:
        d = np.where(self.finite(), self.dist, 0)
        return d.max(axis=1)

    def radius(self) -> int:
        """Smallest eccentricity among sites of the largest component."""
        sizes = self.finite().sum(axis=1)
        ecc = self.eccentricities()
        return int(ecc[sizes == sizes.max()].min())

    def ball(self, i: int, r: int) -> np.ndarray:
        row = self.dist[i]
        return np.flatnonzero((row != UNREACHABLE) & (row <= r))

    def scaled(self, factor: int, shift: int = 0) -> "PathMetric":
        """Affine reparameterisation ``d -> factor * d + shift`` off the diagonal."""
        d = self.dist.copy()
        off = self.finite() & ~np.eye(self.n, dtype=bool)
        d[off] = factor * d[off] + shift
        return PathMetric(self.sites, d)

    def permuted(self, perm: Sequence[int]) -> "PathMetric":
        p = np.asarray(perm)
        return PathMetric(self.sites.permuted(perm), self.dist[np.ix_(p, p)].copy())

    def __eq__(self, other):
        return (
            isinstance(other, PathMetric)
            and self.sites == other.sites
            and np.array_equal(self.dist, other.dist)
        )

    __hash__ = None


@dataclass(frozen=True)
class GrowthCurve:
    radii: tuple[int, ...]
    gamma: tuple[int, ...]

    @property
    def r_max(self) -> int:
        return self.radii[-1]
