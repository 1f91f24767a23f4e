"""JSON descriptions of circuits and states.

Circuit: ``{"n": 4, "layers": [[{"sites": [0, 1], "gate": "CZ"}], ...]}`` where a
gate is a name or ``{"matrix": [[[re, im], ...], ...]}``; alternatively
``{"n": 12, "brickwork": {"depth": 2, "gate": "haar", "seed": 0}}``.

State: ``{"builder": "product" | "ghz" | "bell_pairs" | "cluster" | "ising" | "circuit", ...}``.
"""
from __future__ import annotations

from typing import Any

import numpy as np

from ..coarse.structures import SiteSet
from ..errors import CoarseMapError, SpecError
from .circuit import Circuit, Gate, brickwork, circuit_state
from .state import DEFAULT_SITE_CAP, SpinState, bell_pairs, cluster, ghz, ising_state, product


def _int(spec: dict, key: str) -> int:
    try:
        v = spec[key]
    except KeyError:
        raise SpecError(f"missing key {key!r}") from None
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise SpecError(f"{key!r} must be a positive integer")
    return v


def _matrix(raw) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise SpecError("gate matrix must be a nested list of [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise SpecError("gate matrix must be a nested list of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _gate(raw: dict, k: int) -> Gate:
    if not isinstance(raw, dict) or "sites" not in raw or "gate" not in raw:
        raise SpecError(f"layer {k}: each gate needs 'sites' and 'gate'")
    sites = raw["sites"]
    if not isinstance(sites, list) or not 1 <= len(sites) <= 2:
        raise SpecError(f"layer {k}: gate sites must list one or two indices")
    g = raw["gate"]
    if isinstance(g, str):
        gate = Gate.named(g, sites)
    elif isinstance(g, dict) and "matrix" in g:
        gate = Gate(tuple(sites), _matrix(g["matrix"]), g.get("name", "U"))
    else:
        raise SpecError(f"layer {k}: gate must be a name or {{'matrix': ...}}")
    if len(gate.support) != len(sites):
        raise SpecError(f"layer {k}: gate does not match its sites")
    return gate


def circuit_from_spec(spec: dict[str, Any], cap: int = DEFAULT_SITE_CAP) -> Circuit:
    if not isinstance(spec, dict):
        raise SpecError("circuit spec must be a JSON object")
    n = _int(spec, "n")
    if "brickwork" in spec:
        bw = spec["brickwork"]
        if not isinstance(bw, dict):
            raise SpecError("'brickwork' must be an object")
        return brickwork(n, _int(bw, "depth"), bw.get("gate", "haar"), int(bw.get("seed", 0)))
    layers = spec.get("layers")
    if not isinstance(layers, list):
        raise SpecError("circuit spec needs a 'layers' list or a 'brickwork' block")
    built = []
    for k, layer in enumerate(layers):
        if not isinstance(layer, list):
            raise SpecError(f"layer {k} must be a list of gates")
        built.append(tuple(_gate(g, k) for g in layer))
    return Circuit(SiteSet.range(n), tuple(built))


def state_from_spec(spec: dict[str, Any], cap: int = DEFAULT_SITE_CAP) -> SpinState:
    if not isinstance(spec, dict):
        raise SpecError("state spec must be a JSON object")
    kind = spec.get("builder")
    try:
        if kind == "product":
            local = spec.get("local")
            if not isinstance(local, list) or not local:
                raise SpecError("product builder needs a nonempty 'local' list")
            return product([tuple(s) if isinstance(s, list) else s for s in local], cap=cap)
        if kind == "ghz":
            return ghz(_int(spec, "n"), cap=cap)
        if kind == "bell_pairs":
            return bell_pairs(_int(spec, "n"), spec.get("pairing"), cap=cap)
        if kind == "cluster":
            return cluster(_int(spec, "n"), spec.get("edges"), cap=cap)
        if kind == "ising":
            return ising_state(_int(spec, "n"), float(spec.get("beta_j", 0.5)), cap=cap)
        if kind == "circuit":
            base = state_from_spec(spec.get("base"), cap)
            return circuit_state(base, circuit_from_spec(spec.get("circuit"), cap))
    except CoarseMapError:
        raise
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{kind} builder: {exc}") from None
    raise SpecError(f"unknown state builder {kind!r}")


def is_circuit_spec(spec: dict) -> bool:
    return isinstance(spec, dict) and "builder" not in spec and ("layers" in spec or "brickwork" in spec)
