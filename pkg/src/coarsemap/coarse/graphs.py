"""Path metrics, generated structures, growth curves and per-scale profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from ..errors import InsufficientData, SiteSetMismatch
from .structures import (
    UNREACHABLE,
    DecayMatrix,
    GrowthCurve,
    PathMetric,
    Relation,
    epsilon_graph,
)

UNDETERMINED = "UNDETERMINED"

DEFAULT_WINDOW = (0.2, 0.6)
DEFAULT_MARGIN = 0.25
DEFAULT_MAX_STDERR = 0.5
# lattice balls of radius r cover cells out to r + 1/2
DEFAULT_RADIUS_OFFSET = 0.5
MIN_GROWTH_RADIUS = 10


def path_metric(e: Relation) -> PathMetric:
    """Hop distances of the undirected graph underlying ``e``."""
    sym = e.adj | e.adj.T
    np.fill_diagonal(sym, False)
    d = shortest_path(csr_matrix(sym), method="D", unweighted=True, directed=False)
    out = np.full(d.shape, UNREACHABLE, dtype=np.int64)
    fin = np.isfinite(d)
    out[fin] = d[fin].astype(np.int64)
    out.setflags(write=False)
    return PathMetric(e.sites, out)


def saturate(generators: Sequence[Relation]) -> Relation:
    """Diagonal plus every generator and its inverse."""
    if not generators:
        raise ValueError("at least one generator is required")
    adj = np.eye(generators[0].n, dtype=bool)
    for g in generators:
        if g.sites != generators[0].sites:
            raise SiteSetMismatch("generators live on different site sets")
        adj |= g.adj | g.adj.T
    return Relation(generators[0].sites, adj)


def word_powers(generators: Sequence[Relation], max_words: int):
    """Yield ``(k, S^k)`` for the saturated generator ``S`` until a fixpoint."""
    s = saturate(generators).adj.astype(np.int64)
    cur = s > 0
    for k in range(1, max_words + 1):
        yield k, cur
        nxt = (cur.astype(np.int64) @ s) > 0
        if np.array_equal(nxt, cur):
            return
        cur = nxt


def in_generated(e: Relation, generators: Sequence[Relation], max_words: int) -> bool:
    """Whether ``e`` lies under some composition of at most ``max_words`` generators."""
    if max_words < 1:
        raise ValueError("max_words must be at least 1")
    target = e.adj
    for _, power in word_powers(generators, max_words):
        if not np.any(target & ~power):
            return True
    return False


def generated_closure(generators: Sequence[Relation]) -> Relation:
    """Largest controlled set of the generated structure on a finite set.

    On a finite set the compositions of a symmetric reflexive generator stabilise
    at the equivalence relation "same connected component".
    """
    sat = saturate(generators)
    _, labels = connected_components(csr_matrix(sat.adj), directed=False)
    return Relation(sat.sites, labels[:, None] == labels[None, :])


def growth_curve(d: PathMetric, r_max: Optional[int] = None) -> GrowthCurve:
    """``gamma(r) = max_x |B_r(x)|`` for ``r = 0..r_max``.

    ``r_max`` defaults to the radius of the largest component, floored at
    ``MIN_GROWTH_RADIUS`` so bounded spaces still show their flat tail.
    """
    if r_max is None:
        r_max = max(d.radius(), MIN_GROWTH_RADIUS)
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    fin = d.finite()
    dist = np.where(fin, d.dist, np.iinfo(np.int64).max)
    radii = tuple(range(r_max + 1))
    gamma = tuple(int((dist <= r).sum(axis=1).max()) for r in radii)
    return GrowthCurve(radii, gamma)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    stderr: float
    r2: float
    n: int


def linear_fit(x, y) -> LinearFit:
    """Ordinary least squares ``y = slope * x + intercept`` with slope stderr."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    xm = math.fsum(x) / n
    ym = math.fsum(y) / n
    dx = x - xm
    dy = y - ym
    sxx = math.fsum(dx * dx)
    sxy = math.fsum(dx * dy)
    syy = math.fsum(dy * dy)
    if sxx == 0:
        raise InsufficientData("regression abscissae are all equal")
    slope = sxy / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    sse = math.fsum(resid * resid)
    stderr = math.sqrt(sse / (n - 2) / sxx) if n > 2 else math.inf
    r2 = 1.0 - sse / syy if syy > 0 else 1.0
    return LinearFit(slope, intercept, stderr, r2, n)


@dataclass(frozen=True)
class AsdimEstimate:
    slope: float
    stderr: float
    k_hat: Union[int, str]
    radii: tuple[int, ...]


def _window_radii(g: GrowthCurve, window) -> list[int]:
    lo, hi = window
    if not 0 < lo < hi < 1:
        raise ValueError(f"window must satisfy 0 < lo < hi < 1, got {window}")
    return [r for r in g.radii if r >= 1 and lo * g.r_max <= r <= hi * g.r_max]


def growth_slope(g: GrowthCurve, window=DEFAULT_WINDOW, offset: float = DEFAULT_RADIUS_OFFSET) -> LinearFit:
    radii = _window_radii(g, window)
    if len(radii) < 4:
        raise InsufficientData(
            f"only {len(radii)} radii inside window {window} of r_max={g.r_max}; need 4"
        )
    x = [math.log(r + offset) for r in radii]
    y = [math.log(g.gamma[r]) for r in radii]
    return linear_fit(x, y)


def asdim_bound(
    g: GrowthCurve,
    window=DEFAULT_WINDOW,
    margin: float = DEFAULT_MARGIN,
    offset: float = DEFAULT_RADIUS_OFFSET,
    max_stderr: float = DEFAULT_MAX_STDERR,
) -> AsdimEstimate:
    """Log-log growth exponent and the smallest k with slope < k + 1 - margin."""
    fit = growth_slope(g, window, offset)
    if fit.stderr > max_stderr:
        k_hat: Union[int, str] = UNDETERMINED
    else:
        k_hat = max(0, math.floor(fit.slope - 1 + margin) + 1)
    return AsdimEstimate(fit.slope, fit.stderr, k_hat, tuple(_window_radii(g, window)))


def growth_obstruction(
    g_x: GrowthCurve,
    g_y: GrowthCurve,
    window=DEFAULT_WINDOW,
    margin: float = DEFAULT_MARGIN,
    offset: float = DEFAULT_RADIUS_OFFSET,
) -> bool:
    """True when ``g_y`` outgrows ``g_x`` beyond noise, so Y cannot sit inside X."""
    fx = growth_slope(g_x, window, offset)
    fy = growth_slope(g_y, window, offset)
    return fy.slope - fx.slope > math.hypot(fx.stderr, fy.stderr) + margin


def dust_cutoff(n: int) -> float:
    return max(2.0, 0.02 * n)


@dataclass(frozen=True)
class ComponentPartition:
    labels: tuple[int, ...]
    sizes: tuple[int, ...]
    dust: tuple[int, ...]
    cutoff: float

    @property
    def component_sizes(self) -> tuple[int, ...]:
        return tuple(sorted(self.sizes, reverse=True))


def connected_profile(e: Relation, cutoff: Optional[float] = None) -> ComponentPartition:
    """Component partition plus the small components treated as finite dust.

    Components are labelled by order of their smallest site index.
    """
    if cutoff is None:
        cutoff = dust_cutoff(e.n)
    _, raw = connected_components(csr_matrix(e.adj | e.adj.T), directed=False)
    relabel: dict[int, int] = {}
    labels = []
    for lab in raw.tolist():
        labels.append(relabel.setdefault(lab, len(relabel)))
    sizes = np.bincount(labels)
    dust = tuple(i for i, lab in enumerate(labels) if sizes[lab] <= cutoff)
    return ComponentPartition(tuple(labels), tuple(int(s) for s in sizes), dust, float(cutoff))


@dataclass(frozen=True)
class CoarseProfile:
    epsilon: float
    component_sizes: tuple[int, ...]
    diameter: Optional[int]
    growth_slope: Optional[float]
    growth_stderr: Optional[float]
    asdim_bound: Union[int, str]
    dust: tuple[int, ...] = field(default=())
    n_edges: int = 0

    def as_dict(self, sites=None) -> dict:
        return {
            "epsilon": self.epsilon,
            "component_sizes": list(self.component_sizes),
            "diameter": self.diameter,
            "growth_slope": self.growth_slope,
            "growth_stderr": self.growth_stderr,
            "asdim_bound": self.asdim_bound,
            "dust": [sites.ids[i] for i in self.dust] if sites is not None else list(self.dust),
            "dust_is_proxy": True,
            "n_edges": self.n_edges,
        }


def coarse_profile(
    f: DecayMatrix,
    eps: float,
    window=DEFAULT_WINDOW,
    margin: float = DEFAULT_MARGIN,
    cutoff: Optional[float] = None,
) -> CoarseProfile:
    e = epsilon_graph(f, eps)
    d = path_metric(e)
    parts = connected_profile(e, cutoff)
    try:
        est = asdim_bound(growth_curve(d), window, margin)
        slope, stderr, k_hat = est.slope, est.stderr, est.k_hat
    except InsufficientData:
        slope, stderr, k_hat = None, None, UNDETERMINED
    return CoarseProfile(
        epsilon=float(eps),
        component_sizes=parts.component_sizes,
        diameter=d.diameter() if d.is_connected() else None,
        growth_slope=slope,
        growth_stderr=stderr,
        asdim_bound=k_hat,
        dust=parts.dust,
        n_edges=len(e.edges()),
    )
