"""Comparing coarse structures on the same site set."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import (
    EmptyGrid,
    EpsilonTooSmall,
    NoPairsBeyondR0,
    NonPositiveEpsilon,
    SiteSetMismatch,
)
from .graphs import generated_closure, in_generated, path_metric
from .structures import DecayMatrix, PathMetric, Relation, epsilon_graph

_U = np.finfo(float).eps


def lower_guard(x: float, scale: float) -> float:
    """``x`` nudged down by a few ulps of ``scale`` to absorb rounding in sums."""
    return x - 4 * _U * scale


def upper_guard(x: float, scale: float) -> float:
    return x + 4 * _U * scale


def _pairs(n: int):
    return np.triu_indices(n, 1)


def monotone_domination(d1: PathMetric, d2: PathMetric) -> dict[int, int]:
    """``rho(t) = max{d2(x, y) : d1(x, y) <= t}`` on realised finite values of ``d1``.

    Pairs unreachable in ``d2`` but reachable in ``d1`` make ``rho`` infinite
    from that scale on; they are reported as ``math.inf``.
    """
    if d1.sites != d2.sites:
        raise SiteSetMismatch("metrics live on different site sets")
    i, j = _pairs(d1.n)
    a = d1.dist[i, j]
    b = d2.dist[i, j]
    keep = a != -1
    a, b = a[keep], b[keep]
    rho: dict[int, int] = {0: 0}
    if a.size == 0:
        return rho
    b = np.where(b == -1, np.iinfo(np.int64).max, b)
    order = np.argsort(a, kind="stable")
    a, b = a[order], b[order]
    running = np.maximum.accumulate(b)
    last = np.r_[np.flatnonzero(np.diff(a)), a.size - 1]
    for t, m in zip(a[last].tolist(), running[last].tolist()):
        rho[int(t)] = math.inf if m == np.iinfo(np.int64).max else int(m)
    return rho


@dataclass(frozen=True)
class QuasiIsometryReport:
    L: float
    C: float
    violation_fraction: float
    direction: str
    n_pairs: int

    def as_dict(self) -> dict:
        return {
            "L": self.L,
            "C": self.C,
            "violation_fraction": self.violation_fraction,
            "direction": self.direction,
            "n_pairs": self.n_pairs,
        }


def _direction(f1: np.ndarray, f2: np.ndarray) -> str:
    if np.array_equal(f1, f2):
        return "both"
    if not np.any(f1 & ~f2):
        return "forward-only"
    return "none"


def quasi_isometry_fit(
    d1: PathMetric,
    d2: PathMetric,
    r0: int = 1,
    L: Optional[float] = None,
    C: Optional[float] = None,
) -> QuasiIsometryReport:
    """Fit ``L^-1 d1 - C <= d2 <= L d1 + C`` over pairs finite in both metrics.

    The multiplicative constant comes from pairs with ``d1 >= r0``; the additive
    constant is the least shift that covers every finite pair. When ``L`` and
    ``C`` are supplied, the violation fraction is measured against them instead.
    """
    if d1.sites != d2.sites:
        raise SiteSetMismatch("metrics live on different site sets")
    i, j = _pairs(d1.n)
    a = d1.dist[i, j]
    b = d2.dist[i, j]
    f1, f2 = a != -1, b != -1
    both = f1 & f2
    a = a[both].astype(float)
    b = b[both].astype(float)
    far = a >= r0
    if not np.any(far):
        raise NoPairsBeyondR0(f"no pair with d1 >= {r0}")
    with np.errstate(divide="ignore"):
        ratios = np.maximum(b[far] / a[far], a[far] / b[far])
    L_fit = float(ratios.max())
    C_fit = max(0.0, float(np.max(b - L_fit * a)), float(np.max(a / L_fit - b)))
    L_use = L_fit if L is None else float(L)
    C_use = C_fit if C is None else float(C)
    if L is None and C is None:
        viol = 0.0
    else:
        bad = (b > L_use * a + C_use) | (b < a / L_use - C_use)
        viol = float(bad.mean()) if bad.size else 0.0
    return QuasiIsometryReport(L_fit, C_fit, viol, _direction(f1, f2), int(both.sum()))


@dataclass(frozen=True)
class StableInterval:
    eps_hi: float
    eps_lo: float
    indices: tuple[int, ...]


def _comparable(d1: PathMetric, d2: PathMetric, L_tol: float) -> bool:
    if d1 == d2:
        return True
    if not np.array_equal(d1.finite(), d2.finite()):
        return False
    try:
        rep = quasi_isometry_fit(d1, d2, r0=1)
    except NoPairsBeyondR0:
        return True
    return rep.L <= L_tol and rep.violation_fraction == 0.0


def stable_range(f: DecayMatrix, eps_grid: Sequence[float], L_tol: float = 3.0) -> list[StableInterval]:
    """Maximal runs of the grid whose consecutive scale metrics are bi-Lipschitz.

    A finite-scale proxy for the range where a single scale already generates
    the whole structure; it is not a proof of monogenicity.
    """
    grid = [float(e) for e in eps_grid]
    if not grid:
        raise EmptyGrid("epsilon grid is empty")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("epsilon grid must be strictly decreasing")
    top = f.thresholds()
    if grid[-1] <= 0 or (top.size and grid[0] > top[0]):
        raise ValueError("epsilon grid must lie in (0, max threshold]")
    metrics = [path_metric(epsilon_graph(f, e)) for e in grid]
    intervals: list[StableInterval] = []
    run = [0]
    for k in range(1, len(grid)):
        if _comparable(metrics[k - 1], metrics[k], L_tol):
            run.append(k)
        else:
            intervals.append(StableInterval(grid[run[0]], grid[run[-1]], tuple(run)))
            run = [k]
    intervals.append(StableInterval(grid[run[0]], grid[run[-1]], tuple(run)))
    return intervals


def semicontinuity_check(f: DecayMatrix, g: DecayMatrix, eps: float) -> bool:
    """``E_{f,eps}`` sits inside ``E_{g,eps-delta}`` for ``delta = ||f - g||``."""
    delta = f.sup_distance(g)
    if not eps > delta:
        raise EpsilonTooSmall(f"epsilon {eps} must exceed ||f-g|| = {delta}")
    lo = lower_guard(eps - delta, eps + delta)
    upper = epsilon_graph(f, eps)
    lower = Relation(g.sites, g.values >= lo)
    return upper.issubset(lower)


@dataclass(frozen=True)
class ClosureResult:
    relation: Relation
    iterations: int
    converged: bool


SetFunction = Callable[[np.ndarray, np.ndarray], float]


def max_oracle(f: DecayMatrix) -> SetFunction:
    """Set extension ``(F, G) -> max f`` over ``F x G``; overlapping sets are controlled."""
    vals = f.values

    def ftilde(F, G):
        if np.intersect1d(F, G).size:
            return math.inf
        return float(vals[np.ix_(F, G)].max())

    return ftilde


def higher_order_closure(
    ftilde: SetFunction,
    E0: Relation,
    eps: float,
    max_iter: int = 100,
) -> ClosureResult:
    """Iterate ``E -> closure(E u {(x, y) : ftilde(E[x], E[y]) >= eps})`` to a fixpoint.

    Relations are kept saturated, i.e. as the largest controlled set of the
    structure they generate.
    """
    if not eps > 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {eps}")
    current = generated_closure([E0])
    n = current.n
    for it in range(max_iter):
        hoods = [current.neighbourhood(x) for x in range(n)]
        adj = np.array(current.adj)
        for x in range(n):
            for y in range(x + 1, n):
                if adj[x, y]:
                    continue
                if ftilde(hoods[x], hoods[y]) >= eps:
                    adj[x, y] = adj[y, x] = True
        nxt = generated_closure([Relation(current.sites, adj)])
        if nxt == current:
            return ClosureResult(current, it, True)
        current = nxt
    warnings.warn(f"higher-order closure did not settle within {max_iter} iterations")
    return ClosureResult(current, max_iter, False)


def sandwich_inclusions(
    f: DecayMatrix,
    g: DecayMatrix,
    eps: float,
    width: float,
    max_words: int,
) -> tuple[bool, bool]:
    """Check ``E_{f,eps+w} in <E_{g,eps}>`` and ``<E_{g,eps}> in <E_{f,eps-w}>``."""
    if f.sites != g.sites:
        raise SiteSetMismatch("matrices live on different site sets")
    if not eps > width:
        raise EpsilonTooSmall(f"epsilon {eps} must exceed the sandwich width {width}")
    scale = eps + width
    hi = upper_guard(eps + width, scale)
    lo = lower_guard(eps - width, scale)
    top = Relation(f.sites, f.values >= hi)
    mid = epsilon_graph(g, eps)
    bottom = Relation(f.sites, f.values >= lo)
    return in_generated(top, [mid], max_words), in_generated(mid, [bottom], max_words)
