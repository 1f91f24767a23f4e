"""Decay-rate analysis of decay matrices against a path metric.

Length classes, algebraic exponents, commensurability of test functions,
persistence sweeps of growth slopes and stability sandwiches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage, optimize, stats

from .coarse.compare import sandwich_inclusions
from .coarse.graphs import (
    DEFAULT_WINDOW,
    connected_profile,
    growth_curve,
    growth_slope,
    linear_fit,
    path_metric,
)
from .coarse.structures import DecayMatrix, PathMetric, epsilon_graph
from .errors import (
    EmptyGrid,
    EpsilonTooSmall,
    InsufficientData,
    InsufficientPairs,
    NonPositiveFunction,
    SiteSetMismatch,
    UsageError,
    ZeroValuesInWindow,
)

ZERO = "ZERO"
FINITE = "FINITE"
INFINITE = "INFINITE"
INCONCLUSIVE = "INCONCLUSIVE"

DEFAULT_ZERO_TOL = 1e-10
MIN_PAIRS = 10
MIN_DISTANCE = 2
R2_MIN = 0.9
CURVATURE_MIN = 0.05
ZERO_JUMP = 1e6
COMMENSURATE_BAND = 10.0
PLATEAU_RANGE = 0.3
PLATEAU_STDERR = 0.2
SANDWICH_FACTORS = {"correlation": 3.0, "dynamical": 2.0}


def _pairs(f: DecayMatrix, d: PathMetric):
    if f.sites != d.sites:
        raise SiteSetMismatch("matrix and metric live on different site sets")
    i, j = np.triu_indices(f.n, 1)
    return d.dist[i, j], f.values[i, j]


def _absolute_window(d: PathMetric, window) -> tuple[float, float]:
    lo, hi = window
    if not 0 <= lo < hi <= 1:
        raise ValueError(f"window must satisfy 0 <= lo < hi <= 1, got {window}")
    dmax = d.diameter() if d.finite().sum() > d.n else 0
    return lo * dmax, hi * dmax


@dataclass(frozen=True)
class LengthClassification:
    verdict: str
    R: Optional[int] = None
    A: Optional[float] = None
    B: Optional[float] = None
    fit_r2: Optional[float] = None
    window: Optional[tuple[float, float]] = None
    curvature: Optional[float] = None
    loglog_r2: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "R": self.R,
            "A": self.A,
            "B": self.B,
            "fit_r2": self.fit_r2,
            "window": list(self.window) if self.window is not None else None,
            "curvature": self.curvature,
            "loglog_r2": self.loglog_r2,
            "infinite_is_proxy": True,
        }


def _envelope(dist: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Largest value at each distance; ``f <= A exp(-B d)`` is a statement about it."""
    ds = np.unique(dist)
    return ds, np.array([vals[dist == k].max() for k in ds])


def _curvature(x: np.ndarray, y: np.ndarray, slope: float) -> tuple[float, bool]:
    """Relative quadratic bending of ``y(x)`` and whether it is significant and upward."""
    if x.size < 4:
        return 0.0, False
    xc = x - x.mean()
    design = np.column_stack([np.ones_like(xc), xc, xc * xc])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        return 0.0, False
    resid = y - design @ coef
    dof = x.size - 3
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(design.T @ design)
    se = math.sqrt(max(cov[2, 2], 0.0))
    width = float(x.max() - x.min())
    drop = abs(slope) * width
    rel = coef[2] * width * width / drop if drop > 0 else math.inf * np.sign(coef[2])
    upward = coef[2] > 2 * se and rel > CURVATURE_MIN
    return float(rel), bool(upward)


def classify_length(
    f: DecayMatrix,
    d: PathMetric,
    window=DEFAULT_WINDOW,
    zero_tol: float = DEFAULT_ZERO_TOL,
    min_pairs: int = MIN_PAIRS,
    zero_jump: float = ZERO_JUMP,
) -> LengthClassification:
    """Sort ``f`` into length zero, finite length, infinite length, or inconclusive.

    Length zero needs the support to end before the regression window, or to end
    with a cliff of at least ``zero_jump * zero_tol`` rather than an exponential
    slide under the tolerance.  Infinite length is a proxy: upward bending of
    ``log f`` against ``d`` together with a straight log-log profile.
    """
    if not zero_tol > 0:
        raise UsageError("zero tolerance must be positive")
    dist, vals = _pairs(f, d)
    lo, hi = _absolute_window(d, window)
    alive = vals > zero_tol
    if not alive.any():
        return LengthClassification(ZERO, R=0, window=(lo, hi))
    fin = dist >= 0
    if (alive & ~fin).any():
        R = None
    else:
        R = int(dist[alive].max())
    if np.count_nonzero(fin & (dist >= lo)) < min_pairs:
        raise InsufficientPairs(f"fewer than {min_pairs} finite pairs beyond distance {lo:g}")
    if R is not None and R < int(dist[fin].max()):
        edge = vals[alive & (dist == R)].max()
        if R < lo or edge >= zero_jump * zero_tol:
            return LengthClassification(ZERO, R=R, window=(lo, hi))
    use = fin & alive & (dist >= max(lo, MIN_DISTANCE)) & (dist <= hi)
    ds, env = _envelope(dist[use], vals[use])
    if ds.size < 3:
        return LengthClassification(INCONCLUSIVE, R=R, window=(lo, hi))
    x = ds.astype(float)
    y = np.log(env)
    lin = linear_fit(x, y)
    rel, upward = _curvature(x, y, lin.slope)
    loglog = linear_fit(np.log(x), y)
    common = dict(window=(lo, hi), fit_r2=lin.r2, curvature=rel, loglog_r2=loglog.r2)
    if lin.slope < 0 and lin.r2 >= R2_MIN and not upward:
        return LengthClassification(FINITE, A=math.exp(lin.intercept), B=-lin.slope, **common)
    if upward and loglog.slope < 0 and loglog.r2 >= R2_MIN:
        return LengthClassification(INFINITE, **common)
    return LengthClassification(INCONCLUSIVE, **common)


@dataclass(frozen=True)
class ExponentFit:
    gamma: float
    stderr: float
    window: tuple[float, float]
    n_pairs: int
    r2: float = 1.0
    shift: float = 0.0

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "stderr": self.stderr,
            "window": list(self.window),
            "n_pairs": self.n_pairs,
            "r2": self.r2,
            "shift": self.shift,
        }


def _shifted_fit(x: np.ndarray, y: np.ndarray, c: float):
    return linear_fit(np.log(x + c), y)


def _profile_shift(x: np.ndarray, y: np.ndarray) -> float:
    """Offset ``c`` minimising the residual of ``log f`` against ``log(d + c)``."""
    lo, hi = -0.5 * x.min(), x.min()

    def sse(c):
        fit = _shifted_fit(x, y, c)
        r = y - (fit.slope * np.log(x + c) + fit.intercept)
        return float(r @ r)

    def grad(c):
        # envelope theorem: only the explicit c-dependence survives
        fit = _shifted_fit(x, y, c)
        r = y - (fit.slope * np.log(x + c) + fit.intercept)
        return float(np.sum(r * fit.slope / (x + c)))

    c0 = optimize.minimize_scalar(sse, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}).x
    span = 1e-3 * (hi - lo)
    a, b = max(lo, c0 - span), min(hi, c0 + span)
    ga, gb = grad(a), grad(b)
    if ga * gb < 0:
        c0 = optimize.brentq(grad, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return float(c0)


def fit_exponent(
    f: DecayMatrix,
    d: PathMetric,
    window=DEFAULT_WINDOW,
    zero_tol: float = DEFAULT_ZERO_TOL,
    min_pairs: int = MIN_PAIRS,
    alpha: float = 0.01,
) -> ExponentFit:
    """Algebraic exponent ``gamma`` from least squares of ``log f`` on ``log d``.

    A distance offset ``c`` (``log(d + c)``) is profiled and kept only when an
    F-test at level ``alpha`` says it improves the fit; an affine change of metric
    ``d -> L d + C`` then leaves ``gamma`` unchanged on exact power laws.
    """
    dist, vals = _pairs(f, d)
    lo, hi = _absolute_window(d, window)
    use = (dist >= 0) & (dist >= max(lo, MIN_DISTANCE)) & (dist <= hi)
    n = int(use.sum())
    if n < min_pairs:
        raise InsufficientPairs(f"{n} finite pairs in window [{lo:g}, {hi:g}], need {min_pairs}")
    if np.any(vals[use] <= zero_tol):
        raise ZeroValuesInWindow(f"values at or below {zero_tol:g} inside the window")
    x = dist[use].astype(float)
    y = np.log(vals[use])
    if np.unique(x).size < 2:
        raise InsufficientPairs("window holds a single distance")
    base = linear_fit(np.log(x), y)
    fit, shift = base, 0.0
    if np.unique(x).size >= 4:
        c = _profile_shift(x, y)
        alt = _shifted_fit(x, y, c)
        sse0 = (1 - base.r2) * float(np.sum((y - y.mean()) ** 2))
        sse1 = (1 - alt.r2) * float(np.sum((y - y.mean()) ** 2))
        if sse1 < sse0:
            dof = n - 3
            if sse1 <= 0:
                keep = True
            else:
                keep = (sse0 - sse1) / (sse1 / dof) > stats.f.ppf(1 - alpha, 1, dof)
            if keep:
                fit, shift = alt, c
    return ExponentFit(-fit.slope, fit.stderr, (lo, hi), n, fit.r2, shift)


@dataclass(frozen=True)
class DecayForm:
    """A positive test function with an exact logarithm (no underflow in tails)."""

    name: str
    log: Callable[[np.ndarray], np.ndarray]

    def __call__(self, t):
        return np.exp(self.log(np.asarray(t, dtype=float)))


def power_form(gamma: float) -> DecayForm:
    return DecayForm(f"pow:{gamma:g}", lambda t: -gamma * np.log(t))


def exp_form(A: float, B: float) -> DecayForm:
    if not A > 0:
        raise NonPositiveFunction("exp form needs A > 0")
    return DecayForm(f"exp:{A:g},{B:g}", lambda t: math.log(A) - B * t)


def log_form() -> DecayForm:
    """``1 / log(1 + t)``: slowly decaying and coarsely invariant."""
    return DecayForm("log", lambda t: -np.log(np.log1p(t)))


def parse_form(spec: str) -> DecayForm:
    """``pow:gamma``, ``exp:A,B`` or ``log``."""
    kind, _, args = spec.strip().partition(":")
    try:
        if kind == "pow":
            return power_form(float(args))
        if kind == "exp":
            a, b = (float(v) for v in args.split(","))
            return exp_form(a, b)
    except ValueError:
        raise UsageError(f"malformed function spec {spec!r}") from None
    if kind == "log" and not args:
        return log_form()
    raise UsageError(f"unknown function spec {spec!r}; use pow:gamma, exp:A,B or log")


def _log_eval(g, t: np.ndarray) -> np.ndarray:
    if isinstance(g, DecayForm):
        out = g.log(t)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.asarray(g(t), dtype=float)
            if np.any(~np.isfinite(raw)) or np.any(raw <= 0):
                raise NonPositiveFunction("function is not positive on the sampled range")
            out = np.log(raw)
    if np.any(~np.isfinite(out)):
        raise NonPositiveFunction("function is not positive on the sampled range")
    return out


@dataclass(frozen=True)
class CommensurateResult:
    per_pair: dict
    commensurate: bool
    band: float

    def as_dict(self) -> dict:
        return {
            "commensurate": self.commensurate,
            "band": self.band,
            "pairs": [
                {"L": L, "C": C, **v} for (L, C), v in sorted(self.per_pair.items())
            ],
        }


def commensurate_check(
    g,
    h,
    L_set: Sequence[float] = (1, 2, 3),
    C_set: Sequence[float] = (0, 5),
    t_range: tuple[float, float] = (1.0, 1e6),
    band: float = COMMENSURATE_BAND,
    samples: int = 400,
) -> CommensurateResult:
    """Whether ``g(L t + C) / h(t)`` stays within a bounded band for every ``(L, C)``.

    The ratio is sampled on the upper half of ``t_range`` in logarithmic scale,
    ``[sqrt(t0 t1), t1]``; a pair passes when the ratio of its extremes there is
    at most ``band``.  Both functions may be ``DecayForm`` (evaluated in logs)
    or plain callables.
    """
    t0, t1 = (float(v) for v in t_range)
    if not 0 < t0 < t1:
        raise UsageError("t_range must satisfy 0 < t0 < t1")
    t = np.geomspace(math.sqrt(t0 * t1), t1, samples)
    log_h = _log_eval(h, t)
    per_pair = {}
    for L in L_set:
        for C in C_set:
            s = L * t + C
            if not L > 0 or np.any(s <= 0):
                raise UsageError(f"L t + C must stay positive on the range (L={L}, C={C})")
            log_ratio = _log_eval(g, s) - log_h
            spread = float(log_ratio.max() - log_ratio.min())
            per_pair[(float(L), float(C))] = {
                "log_sup": float(log_ratio.max()),
                "log_inf": float(log_ratio.min()),
                "extreme_ratio": math.exp(spread) if spread < 700 else math.inf,
                "commensurate": spread <= math.log(band),
            }
    ok = all(v["commensurate"] for v in per_pair.values())
    return CommensurateResult(per_pair, ok, band)


@dataclass(frozen=True)
class Plateau:
    cells: tuple[tuple[int, int], ...]
    eps_values: tuple[float, ...]
    slope: float
    slope_range: float

    def as_dict(self) -> dict:
        return {
            "cells": [list(c) for c in self.cells],
            "eps_values": list(self.eps_values),
            "slope": self.slope,
            "slope_range": self.slope_range,
        }


@dataclass(frozen=True)
class PersistenceGrid:
    eps_values: tuple[float, ...]
    r_windows: tuple[tuple[float, float], ...]
    slope: np.ndarray
    stderr: np.ndarray
    plateau: Optional[Plateau]

    def rows(self):
        """CSV rows ``epsilon, r_lo, r_hi, slope, stderr``."""
        for a, eps in enumerate(self.eps_values):
            for b, (lo, hi) in enumerate(self.r_windows):
                yield eps, lo, hi, float(self.slope[a, b]), float(self.stderr[a, b])


DEFAULT_R_WINDOWS = ((0.1, 0.4), (0.2, 0.6), (0.3, 0.8))


def _largest_plateau(slope: np.ndarray, stderr: np.ndarray, value_range: float, max_stderr: float):
    ok = np.isfinite(slope) & np.isfinite(stderr) & (stderr <= max_stderr)
    best = None
    for s0 in np.unique(slope[ok]):
        mask = ok & (slope >= s0) & (slope <= s0 + value_range)
        labels, count = ndimage.label(mask)
        for lab in range(1, count + 1):
            cells = np.argwhere(labels == lab)
            if best is None or len(cells) > len(best):
                best = cells
    return best


def persistence_sweep(
    f: DecayMatrix,
    eps_grid: Sequence[float],
    r_window_grid: Sequence[tuple[float, float]] = DEFAULT_R_WINDOWS,
    value_range: float = PLATEAU_RANGE,
    max_stderr: float = PLATEAU_STDERR,
) -> PersistenceGrid:
    """Growth slope for every (epsilon, radius window) cell and the widest flat region.

    A cell is NaN when its window holds fewer than four radii.  The plateau is
    the largest 4-connected set of cells with ``stderr <= max_stderr`` whose
    slopes span at most ``value_range``.
    """
    eps_grid = tuple(float(e) for e in eps_grid)
    r_window_grid = tuple((float(a), float(b)) for a, b in r_window_grid)
    if not eps_grid or not r_window_grid:
        raise EmptyGrid("persistence sweep needs nonempty epsilon and window grids")
    slope = np.full((len(eps_grid), len(r_window_grid)), np.nan)
    stderr = np.full_like(slope, np.nan)
    for a, eps in enumerate(eps_grid):
        curve = growth_curve(path_metric(epsilon_graph(f, eps)))
        for b, win in enumerate(r_window_grid):
            try:
                fit = growth_slope(curve, win)
            except InsufficientData:
                continue
            slope[a, b], stderr[a, b] = fit.slope, fit.stderr
    cells = _largest_plateau(slope, stderr, value_range, max_stderr)
    plateau = None
    if cells is not None:
        vals = slope[cells[:, 0], cells[:, 1]]
        plateau = Plateau(
            tuple((int(i), int(j)) for i, j in cells),
            tuple(eps_grid[i] for i in sorted({int(i) for i in cells[:, 0]})),
            float(np.mean(vals)),
            float(vals.max() - vals.min()),
        )
    return PersistenceGrid(eps_grid, r_window_grid, slope, stderr, plateau)


@dataclass(frozen=True)
class SandwichVerdict:
    kind: str
    eps: float
    delta: float
    width: float
    sup_distance: float
    upper_holds: bool
    lower_holds: bool
    max_words: int
    delta_inferred: bool = field(default=True)

    @property
    def passed(self) -> bool:
        return self.upper_holds and self.lower_holds

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "eps": self.eps,
            "delta": self.delta,
            "width": self.width,
            "sup_distance": self.sup_distance,
            "delta_inferred": self.delta_inferred,
            "upper_holds": self.upper_holds,
            "lower_holds": self.lower_holds,
            "max_words": self.max_words,
            "verdict": "PASS" if self.passed else "FAIL",
        }


def sandwich_check(
    f: DecayMatrix,
    g: DecayMatrix,
    eps: float,
    kind: str = "correlation",
    max_words: int = 4,
    delta: Optional[float] = None,
) -> SandwichVerdict:
    """Check ``E_{f,eps+c delta} in <E_{g,eps}> in <E_{f,eps-c delta}>``.

    ``c`` is 3 for correlation matrices and 2 for commutator tails.  Without an
    explicit ``delta`` it is inferred as ``||f - g|| / c``, so the width is the
    measured sup distance.
    """
    try:
        c = SANDWICH_FACTORS[kind]
    except KeyError:
        raise UsageError(f"kind must be 'correlation' or 'dynamical', got {kind!r}") from None
    if f.sites != g.sites:
        raise SiteSetMismatch("matrices live on different site sets")
    sup = f.sup_distance(g)
    inferred = delta is None
    if inferred:
        delta = sup / c
    width = c * delta
    if not eps > width:
        raise EpsilonTooSmall(f"epsilon {eps:g} must exceed c * delta = {width:g}")
    upper, lower = sandwich_inclusions(f, g, eps, width, max_words)
    return SandwichVerdict(kind, float(eps), float(delta), float(width), sup, upper, lower, max_words, inferred)


OUTSIDE_TOL = 1e-10


def _partition(labels: Sequence[int], keep: np.ndarray) -> frozenset:
    groups: dict[int, set[int]] = {}
    for i in np.flatnonzero(keep):
        groups.setdefault(labels[i], set()).add(int(i))
    return frozenset(frozenset(g) for g in groups.values())


@dataclass(frozen=True)
class PerturbationReport:
    region: tuple[int, ...]
    outside_max_change: float
    outside_equal: bool
    profile_equal: bool
    eps: float
    sandwich: Optional[SandwichVerdict]
    sandwich_note: str = ""
    profile_eps: float = 0.0
    profile_equal_at_eps: Optional[bool] = None

    @property
    def passed(self) -> bool:
        return self.outside_equal and self.profile_equal and (self.sandwich is None or self.sandwich.passed)

    def as_dict(self) -> dict:
        return {
            "region": list(self.region),
            "outside_max_change": self.outside_max_change,
            "outside_equal": self.outside_equal,
            "profile_equal": self.profile_equal,
            "eps": self.eps,
            "profile_eps": self.profile_eps,
            "profile_equal_at_eps": self.profile_equal_at_eps,
            "sandwich": self.sandwich.as_dict() if self.sandwich is not None else None,
            "sandwich_note": self.sandwich_note,
            "verdict": "PASS" if self.passed else "FAIL",
        }


def _same_outside_profile(before: DecayMatrix, after: DecayMatrix, region, outside, eps: float) -> bool:
    keep = outside.copy()
    parts = [connected_profile(epsilon_graph(m, eps)) for m in (before, after)]
    for p in parts:
        touched = {p.labels[r] for r in region}
        for i in p.dust:
            if p.labels[i] in touched:
                keep[i] = False
    return _partition(parts[0].labels, keep) == _partition(parts[1].labels, keep)


def perturbation_report(
    before: DecayMatrix,
    after: DecayMatrix,
    region: Sequence[int],
    eps: Optional[float] = None,
    kind: str = "correlation",
    tol: float = OUTSIDE_TOL,
    max_words: int = 4,
    zero_tol: float = DEFAULT_ZERO_TOL,
) -> PerturbationReport:
    """Locality of a perturbation on ``region`` as seen by two decay matrices.

    Entries between sites outside the region must agree within ``tol``.  The
    component partition must agree on sites outside the region once dust
    components touching the region are set aside.  That comparison is made at
    the universal scale, the smallest entry above ``zero_tol``, whose graph
    carries the whole coarse structure; a single intermediate scale can be cut
    by region edges crossing it, and that outcome is reported separately.
    ``eps`` is the sandwich scale and defaults to the midpoint between the
    measured sup distance and the largest entry; the sandwich is skipped when
    no admissible ``eps`` exists.
    """
    if before.sites != after.sites:
        raise SiteSetMismatch("matrices live on different site sets")
    region = tuple(sorted({int(r) for r in region}))
    outside = np.ones(before.n, dtype=bool)
    outside[list(region)] = False
    block = np.ix_(outside, outside)
    diff = np.abs(before.values[block] - after.values[block])
    change = float(diff.max()) if diff.size else 0.0
    sup = before.sup_distance(after)
    top = max(float(before.values.max()), float(after.values.max()))
    note = ""
    if eps is None:
        eps = 0.5 * (sup + top) if top > sup else top
    verdict = None
    try:
        verdict = sandwich_check(before, after, eps, kind, max_words)
    except EpsilonTooSmall as exc:
        note = str(exc)
    alive = [t for m in (before, after) for t in m.thresholds() if t > zero_tol]
    profile_eps = float(min(alive)) if alive else math.inf
    same = _same_outside_profile(before, after, region, outside, profile_eps)
    same_eps = _same_outside_profile(before, after, region, outside, eps) if eps > 0 else None
    return PerturbationReport(
        region, change, change <= tol, same, float(eps), verdict, note, profile_eps, same_eps
    )
