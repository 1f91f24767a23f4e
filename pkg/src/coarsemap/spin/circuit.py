"""Layered local-unitary circuits and Heisenberg-picture evolution.

Convention: a circuit with layers ``L_1, ..., L_m`` is the unitary
``U = L_m ... L_1`` acting on states (layer 1 first).  Its automorphism on
observables is ``alpha(a) = U^dag a U``, so ``<U psi| a |U psi> = <psi| alpha(a) |psi>``
and the correlations of ``circuit_state(psi, circ)`` are those of ``psi o alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..coarse.structures import Relation, SiteSet
from ..errors import DimensionMismatch, SpecError, SupportOutOfRange
from .linalg import (
    PAULIS,
    apply_left,
    conditional_residual,
    conjugate,
    embed,
    haar_unitary,
    is_unitary,
    partial_trace_keep,
)
from .state import SpinState, _normalised

_S2 = 1 / math.sqrt(2)
GATES = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "X": PAULIS["X"],
    "Y": PAULIS["Y"],
    "Z": PAULIS["Z"],
    "S": np.diag([1, 1j]).astype(complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": np.eye(4, dtype=complex)[[0, 1, 3, 2]],
}


@dataclass(frozen=True, eq=False)
class Gate:
    support: tuple[int, ...]
    matrix: np.ndarray
    name: str = "U"

    def __post_init__(self):
        support = tuple(int(s) for s in self.support)
        if not 1 <= len(support) or len(set(support)) != len(support):
            raise SpecError(f"gate support {support} must be distinct sites")
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2 ** len(support),) * 2:
            raise DimensionMismatch(f"gate matrix {m.shape} does not fit support {support}")
        if not is_unitary(m):
            raise SpecError(f"gate on {support} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def named(cls, name: str, support: Sequence[int]) -> "Gate":
        try:
            m = GATES[name]
        except KeyError:
            raise SpecError(f"unknown gate {name!r}") from None
        return cls(tuple(support), m, name)

    def relabel(self, new_index: Sequence[int]) -> "Gate":
        return Gate(tuple(new_index[s] for s in self.support), self.matrix, self.name)


@dataclass(frozen=True)
class Circuit:
    sites: SiteSet
    layers: tuple[tuple[Gate, ...], ...] = field(default=())

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        for k, layer in enumerate(layers):
            seen: set[int] = set()
            for g in layer:
                if any(not 0 <= s < self.sites.n for s in g.support):
                    raise SupportOutOfRange(f"gate on {g.support} outside {self.sites.n} sites")
                if seen & set(g.support):
                    raise SpecError(f"layer {k} not depth-one: overlapping supports")
                seen |= set(g.support)
        object.__setattr__(self, "layers", layers)

    @property
    def n(self) -> int:
        return self.sites.n

    @property
    def depth(self) -> int:
        return len(self.layers)

    @classmethod
    def identity(cls, n: int) -> "Circuit":
        return cls(SiteSet.range(n), ())

    def then(self, other: "Circuit") -> "Circuit":
        """``self`` followed by ``other``."""
        if other.sites != self.sites:
            raise SpecError("circuits act on different site sets")
        return Circuit(self.sites, self.layers + other.layers)

    def with_layer(self, gates: Sequence[Gate]) -> "Circuit":
        return Circuit(self.sites, self.layers + (tuple(gates),))

    def permuted(self, perm: Sequence[int]) -> "Circuit":
        """Relabel so new site ``i`` is old site ``perm[i]``."""
        inv = np.argsort(perm).tolist()
        layers = tuple(tuple(g.relabel(inv) for g in layer) for layer in self.layers)
        return Circuit(self.sites.permuted(perm), layers)

    def unitary(self) -> np.ndarray:
        """Dense ``U``; only sensible for small ``n``."""
        d = 2**self.n
        u = np.eye(d, dtype=complex).reshape((2,) * self.n + (d,))
        for layer in self.layers:
            for g in layer:
                u = apply_left(g.matrix, u, g.support, self.n)
        return u.reshape(d, d)


def brickwork(
    n: int,
    depth: int,
    gate: str = "haar",
    seed: int = 0,
    sites: Optional[SiteSet] = None,
) -> Circuit:
    """Nearest-neighbour brickwork on a path.

    One unit of depth is an even layer ``(0,1),(2,3),...`` followed by an odd layer
    ``(1,2),(3,4),...``, so ``depth`` units give ``2*depth`` layers and a light cone
    of radius at most ``2*depth``.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for _ in range(depth):
        for start in (0, 1):
            layer = []
            for i in range(start, n - 1, 2):
                if gate == "haar":
                    layer.append(Gate((i, i + 1), haar_unitary(4, rng), "haar"))
                else:
                    layer.append(Gate.named(gate, (i, i + 1)))
            layers.append(tuple(layer))
    return Circuit(sites or SiteSet.range(n), tuple(layers))


def circuit_state(base: SpinState, circ: Circuit) -> SpinState:
    """``U |base>``; its correlations are those of ``base o alpha``."""
    if circ.sites.n != base.n:
        raise DimensionMismatch("circuit and state have different site counts")
    t = base.tensor()
    for layer in circ.layers:
        for g in layer:
            t = apply_left(g.matrix, t, g.support, base.n)
    return _normalised(t.reshape(-1), base.sites)


def light_cone(circ: Circuit, sites: Sequence[int]) -> tuple[list[int], list[Gate]]:
    """Support of ``alpha(a)`` for ``a`` on ``sites`` and the gates that shape it.

    Gates are returned in processing order, i.e. from the last layer backwards.
    """
    cone = set(sites)
    used: list[Gate] = []
    for layer in reversed(circ.layers):
        for g in layer:
            if cone & set(g.support):
                cone |= set(g.support)
                used.append(g)
    return sorted(cone), used


def light_cone_relation(circ: Circuit) -> Relation:
    """Pairs ``(x, y)`` with ``y`` inside the light cone of site ``x``."""
    adj = np.zeros((circ.n, circ.n), dtype=bool)
    for x in range(circ.n):
        adj[x, light_cone(circ, [x])[0]] = True
    return Relation(circ.sites, adj)


@dataclass(eq=False)
class EvolvedOperator:
    """An observable on an ordered site subset, stored densely (``matrix``).

    ``support`` lists sites with the first one most significant in ``matrix``.
    """

    support: tuple[int, ...]
    matrix: np.ndarray

    def dense(self) -> np.ndarray:
        return self.matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def position(self, site: int) -> int:
        return self.support.index(site)

    def trimmed(self, tol: float = 1e-12) -> "EvolvedOperator":
        """Drop support sites on which the operator acts as the identity."""
        support = list(self.support)
        op = self.matrix
        for s in list(support):
            if len(support) == 1:
                break
            k = len(support)
            keep = [i for i, t in enumerate(support) if t != s]
            if np.max(np.abs(conditional_residual(op, keep, k))) <= tol:
                op = partial_trace_keep(op, keep, k) / 2
                support.remove(s)
        return EvolvedOperator(tuple(support), op)

    @classmethod
    def local(cls, site: int, op) -> "EvolvedOperator":
        mat = PAULIS[op] if isinstance(op, str) else np.asarray(op, dtype=complex)
        return cls((site,), mat)


def heisenberg(circ: Circuit, site: int, pauli) -> EvolvedOperator:
    """``alpha(a) = U^dag a U`` for a single-site operator, on its exact tracked cone."""
    if not 0 <= site < circ.n:
        raise SupportOutOfRange(f"site {site} outside {circ.n} sites")
    support, gates = light_cone(circ, [site])
    k = len(support)
    pos = {s: i for i, s in enumerate(support)}
    a = PAULIS[pauli] if isinstance(pauli, str) else np.asarray(pauli, dtype=complex)
    op = embed(a, [pos[site]], k)
    for g in gates:
        op = conjugate(op, g.matrix, [pos[s] for s in g.support], k)
    return EvolvedOperator(tuple(support), op)
