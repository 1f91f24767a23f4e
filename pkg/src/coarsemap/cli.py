"""``coarsemap`` command line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .coarse import (
    asdim_bound,
    coarse_profile,
    connected_profile,
    epsilon_graph,
    growth_curve,
    growth_obstruction,
    growth_slope,
    path_metric,
    quasi_isometry_fit,
    stable_range,
)
from .coarse.graphs import DEFAULT_MARGIN, DEFAULT_WINDOW
from .decay import (
    DEFAULT_R_WINDOWS,
    DEFAULT_ZERO_TOL,
    classify_length,
    commensurate_check,
    fit_exponent,
    parse_form,
    persistence_sweep,
    perturbation_report,
    sandwich_check,
)
from .errors import CoarseMapError, NoPairsBeyondR0, NonConvergence, UsageError
from .io import (
    dumps_matrix,
    read_json,
    read_matrix,
    relation_dot,
    report,
    write_growth,
    write_json,
    write_persistence,
)
from .spin import (
    apply_localized_perturbation,
    circuit_from_spec,
    commutator_matrix,
    corr_matrix,
    is_circuit_spec,
    state_from_spec,
)
from .spin.correlation import DEFAULT_RESTARTS, DEFAULT_SUBSET_CAP
from .spin.linalg import haar_unitary
from .spin.specs import _matrix
from .spin.state import DEFAULT_SITE_CAP

log = logging.getLogger("coarsemap")

AUTO_GRID_MAX = 20


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_pair(text: str, name: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"{name} must look like lo:hi, got {text!r}") from None
    return lo, hi


def parse_eps_grid(text: str, f=None, zero_tol: float = 0.0) -> list[float]:
    """``a:b:steps`` (geometric, descending) or ``auto`` (distinct thresholds above ``zero_tol``)."""
    if text == "auto":
        if f is None:
            raise UsageError("auto grid needs a matrix")
        th = f.thresholds()
        th = th[th > zero_tol]
        if th.size == 0:
            return [1.0]
        if th.size <= AUTO_GRID_MAX:
            return th.tolist()
        return np.geomspace(th[0], th[-1], AUTO_GRID_MAX).tolist()
    parts = text.split(":")
    try:
        a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise UsageError(f"--eps-grid must be a:b:steps or auto, got {text!r}") from None
    if len(parts) != 3 or not (a > 0 and b > 0 and steps >= 1):
        raise UsageError("--eps-grid needs positive a, b and steps >= 1")
    grid = np.geomspace(a, b, steps) if steps > 1 else np.array([a])
    # round off geomspace noise so that nominal values like 0.25 hit thresholds exactly
    return sorted({float(f"{x:.12g}") for x in grid}, reverse=True)


def parse_region(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--region must be comma separated indices, got {text!r}") from None


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, name: str, obj: dict) -> None:
    if args.out:
        write_json(obj, _out(args) / name)
    print(json.dumps(obj, indent=2))


def _top_eps(f) -> float:
    th = f.thresholds()
    if th.size == 0:
        raise UsageError("matrix has no positive off-diagonal entries; pass --eps")
    return float(th[0])


def _metric(args, f):
    eps = args.eps if args.eps is not None else _top_eps(f)
    return eps, path_metric(epsilon_graph(f, eps))


def cmd_profile(args) -> int:
    f = read_matrix(args.matrix)
    grid = parse_eps_grid(args.eps_grid, f, args.zero_tol)
    window = parse_pair(args.window, "--window")
    profiles = []
    out = _out(args) if args.out else None
    for k, eps in enumerate(grid):
        prof = coarse_profile(f, eps, window, args.margin)
        parts = connected_profile(epsilon_graph(f, eps))
        entry = prof.as_dict(f.sites)
        entry["components"] = list(parts.labels)
        profiles.append(entry)
        if out is not None:
            (out / f"eps_{k:03d}.dot").write_text(relation_dot(epsilon_graph(f, eps), f"eps={eps:.6g}"))
    top = f.thresholds()
    admissible = [e for e in grid if top.size and e <= top[0]]
    intervals = stable_range(f, admissible) if admissible else []
    body = {
        "sites": list(f.sites.ids),
        "eps_grid": grid,
        "profiles": profiles,
        "stable_range": [
            {"eps_hi": iv.eps_hi, "eps_lo": iv.eps_lo, "n_scales": len(iv.indices)} for iv in intervals
        ],
    }
    _emit(args, "profile.json", report("profile", body))
    return 0


def _load_spec(path):
    spec = read_json(path)
    if is_circuit_spec(spec):
        return "circuit", circuit_from_spec(spec)
    return "state", state_from_spec(spec, DEFAULT_SITE_CAP)


def _simulate(kind, obj, args):
    if kind == "circuit":
        if args.radius:
            raise UsageError("--radius applies to state correlations only")
        return commutator_matrix(obj, args.mode, args.restarts, args.tol, args.seed)
    return corr_matrix(obj, args.mode, args.radius, None, args.restarts, args.tol, args.seed, args.subset_cap)


def _check_convergence(res) -> None:
    bad = [k for k, est in res.brackets.items() if not est.converged]
    if bad:
        raise NonConvergence(f"alternating maximisation did not converge on {len(bad)} pairs, e.g. {bad[0]}")


def cmd_simulate(args) -> int:
    kind, obj = _load_spec(args.spec)
    if kind == "state" and obj.n > args.cap:
        raise UsageError(f"state has {obj.n} sites, above --cap {args.cap}")
    res = _simulate(kind, obj, args)
    text = dumps_matrix(res.matrix)
    sidecar = report("brackets", {"mode": args.mode, "kind": kind, "seed": args.seed, "pairs": res.sidecar()})
    if args.out:
        out = _out(args)
        (out / "matrix.csv").write_text(text)
        write_json(sidecar, out / "brackets.json")
    else:
        sys.stdout.write(text)
    if args.strict:
        _check_convergence(res)
    return 0


def cmd_asdim(args) -> int:
    f = read_matrix(args.matrix)
    eps, d = _metric(args, f)
    window = parse_pair(args.window, "--window")
    g = growth_curve(d, args.r_max)
    est = asdim_bound(g, window, args.margin)
    if args.out:
        write_growth(g, _out(args) / "growth.csv")
    body = {
        "eps": eps,
        "slope": est.slope,
        "stderr": est.stderr,
        "k_hat": est.k_hat,
        "radii": list(est.radii),
        "r_max": g.r_max,
    }
    _emit(args, "asdim.json", report("asdim", body))
    return 0


def cmd_corrlen(args) -> int:
    f = read_matrix(args.matrix)
    eps, d = _metric(args, f)
    res = classify_length(f, d, parse_pair(args.window, "--window"), args.zero_tol)
    _emit(args, "corrlen.json", report("corrlen", {"eps": eps, **res.as_dict()}))
    return 0


def cmd_exponent(args) -> int:
    f = read_matrix(args.matrix)
    eps, d = _metric(args, f)
    res = fit_exponent(f, d, parse_pair(args.window, "--window"), args.zero_tol)
    _emit(args, "exponent.json", report("exponent", {"eps": eps, **res.as_dict()}))
    return 0


def cmd_compare(args) -> int:
    fa, fb = read_matrix(args.a), read_matrix(args.b)
    window = parse_pair(args.window, "--window")
    eps_a = args.eps_a if args.eps_a is not None else _top_eps(fa)
    eps_b = args.eps_b if args.eps_b is not None else _top_eps(fb)
    da, db = path_metric(epsilon_graph(fa, eps_a)), path_metric(epsilon_graph(fb, eps_b))
    ga, gb = growth_curve(da), growth_curve(db)
    sa, sb = growth_slope(ga, window), growth_slope(gb, window)
    body = {
        "eps_a": eps_a,
        "eps_b": eps_b,
        "slope_a": sa.slope,
        "stderr_a": sa.stderr,
        "slope_b": sb.slope,
        "stderr_b": sb.stderr,
        # b outgrows a, so b admits no coarse embedding into a
        "obstruction": growth_obstruction(ga, gb, window, args.margin),
        "obstruction_reverse": growth_obstruction(gb, ga, window, args.margin),
    }
    if fa.sites == fb.sites:
        try:
            qi = quasi_isometry_fit(da, db, args.r0)
            body["quasi_isometry"] = {
                "L": qi.L,
                "C": qi.C,
                "violation_fraction": qi.violation_fraction,
                "direction": qi.direction,
                "n_pairs": qi.n_pairs,
            }
        except NoPairsBeyondR0:
            body["quasi_isometry"] = None
    _emit(args, "compare.json", report("compare", body))
    return 0


def cmd_sweep(args) -> int:
    f = read_matrix(args.matrix)
    grid = parse_eps_grid(args.eps_grid, f, args.zero_tol)
    windows = [parse_pair(w, "--windows") for w in args.windows.split(",")] if args.windows else DEFAULT_R_WINDOWS
    res = persistence_sweep(f, grid, windows)
    if args.out:
        write_persistence(res, _out(args) / "sweep.csv")
    body = {
        "eps_values": list(res.eps_values),
        "r_windows": [list(w) for w in res.r_windows],
        "slope": res.slope,
        "stderr": res.stderr,
        "plateau": res.plateau.as_dict() if res.plateau is not None else None,
    }
    _emit(args, "sweep.json", report("sweep", body))
    return 0


def cmd_sandwich(args) -> int:
    f, g = read_matrix(args.f), read_matrix(args.g)
    res = sandwich_check(f, g, args.eps, args.kind, args.max_words, args.delta)
    _emit(args, "sandwich.json", report("sandwich", res.as_dict()))
    return 0 if res.passed else 2


def cmd_commensurate(args) -> int:
    g, h = parse_form(args.g), parse_form(args.h)
    Ls = [float(v) for v in args.L.split(",")]
    Cs = [float(v) for v in args.C.split(",")]
    res = commensurate_check(g, h, Ls, Cs, parse_pair(args.t_range, "--t-range"), args.band)
    _emit(args, "commensurate.json", report("commensurate", {"g": g.name, "h": h.name, **res.as_dict()}))
    return 0


def _unitary(args, dim: int) -> np.ndarray:
    if args.unitary == "random":
        return haar_unitary(dim, np.random.default_rng([args.seed, 7919]))
    if args.unitary == "identity":
        return np.eye(dim, dtype=complex)
    raw = read_json(args.unitary)
    return _matrix(raw["matrix"] if isinstance(raw, dict) else raw)


def cmd_perturb(args) -> int:
    kind, obj = _load_spec(args.spec)
    region = parse_region(args.region)
    u = _unitary(args, 2 ** len(region))
    after_obj = apply_localized_perturbation(obj, region, u)
    before, after = _simulate(kind, obj, args), _simulate(kind, after_obj, args)
    rep = perturbation_report(
        before.matrix,
        after.matrix,
        region,
        args.eps,
        "dynamical" if kind == "circuit" else "correlation",
        args.tol_outside,
        args.max_words,
        args.zero_tol,
    )
    if args.out:
        out = _out(args)
        (out / "before.csv").write_text(dumps_matrix(before.matrix))
        (out / "after.csv").write_text(dumps_matrix(after.matrix))
    _emit(args, "perturb.json", report("perturb", {"kind": kind, "seed": args.seed, **rep.as_dict()}))
    return 0 if rep.passed else 2


def _common(p, window=True):
    p.add_argument("--out", help="output directory (reports are also printed)")
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    p.add_argument("--zero-tol", type=float, default=DEFAULT_ZERO_TOL)
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    if window:
        p.add_argument("--window", default=f"{DEFAULT_WINDOW[0]}:{DEFAULT_WINDOW[1]}", help="lo:hi fractions")


def _sim_flags(p):
    p.add_argument("--mode", choices=("pauli", "exact"), default="pauli")
    p.add_argument("--radius", type=int, default=0)
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--cap", type=int, default=DEFAULT_SITE_CAP, help="site cap for state vectors")
    p.add_argument("--subset-cap", type=int, default=DEFAULT_SUBSET_CAP)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="coarsemap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("profile", help="coarse profiles over an epsilon grid")
    p.add_argument("matrix")
    p.add_argument("--eps-grid", default="auto")
    _common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("simulate", help="decay matrix of a state or circuit spec")
    p.add_argument("spec")
    p.add_argument("--strict", action="store_true", help="exit 3 when any optimisation fails to converge")
    _sim_flags(p)
    _common(p, window=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("asdim", help="growth slope and dimension bound")
    p.add_argument("matrix")
    p.add_argument("--eps", type=float)
    p.add_argument("--r-max", type=int)
    _common(p)
    p.set_defaults(func=cmd_asdim)

    for name, func, hlp in (
        ("corrlen", cmd_corrlen, "length class: zero, finite or infinite"),
        ("exponent", cmd_exponent, "algebraic decay exponent"),
    ):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("matrix")
        p.add_argument("--eps", type=float, help="metric scale (default: largest entry)")
        _common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("compare", help="growth obstruction and quasi-isometry between two matrices")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--eps-a", type=float)
    p.add_argument("--eps-b", type=float)
    p.add_argument("--r0", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="persistence sweep of growth slopes")
    p.add_argument("matrix")
    p.add_argument("--eps-grid", default="auto")
    p.add_argument("--windows", help="comma separated lo:hi windows")
    _common(p, window=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sandwich", help="stability sandwich between two matrices")
    p.add_argument("f")
    p.add_argument("g")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--kind", choices=("correlation", "dynamical"), default="correlation")
    p.add_argument("--delta", type=float)
    p.add_argument("--max-words", type=int, default=4)
    _common(p, window=False)
    p.set_defaults(func=cmd_sandwich)

    p = sub.add_parser("commensurate", help="coarse commensurability of two named decay forms")
    p.add_argument("g", help="pow:gamma, exp:A,B or log")
    p.add_argument("h")
    p.add_argument("--L", default="1,2,3")
    p.add_argument("--C", default="0,5")
    p.add_argument("--t-range", default="1:1e6")
    p.add_argument("--band", type=float, default=10.0)
    _common(p, window=False)
    p.set_defaults(func=cmd_commensurate)

    p = sub.add_parser("perturb", help="localized unitary perturbation experiment")
    p.add_argument("spec")
    p.add_argument("--region", required=True, help="comma separated site indices")
    p.add_argument("--unitary", default="random", help="random, identity, or a JSON matrix file")
    p.add_argument("--eps", type=float)
    p.add_argument("--max-words", type=int, default=4)
    p.add_argument("--tol-outside", type=float, default=1e-10)
    _sim_flags(p)
    _common(p, window=False)
    p.set_defaults(func=cmd_perturb)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"coarsemap: usage error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except CoarseMapError as exc:
        print(f"coarsemap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"coarsemap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
