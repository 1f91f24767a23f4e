"""Commutator tails and spread profiles of circuit automorphisms."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ..coarse.structures import PathMetric, build_decay_matrix
from ..errors import CapExceeded
from .circuit import Circuit, EvolvedOperator, heisenberg, light_cone
from .correlation import DEFAULT_RESTARTS, DEFAULT_TOL, MAX_ALTERNATIONS, CorrEstimate, CorrMatrixResult
from .linalg import (
    PAULIS,
    apply_left,
    conditional_residual,
    haar_unitary,
    hermitian_norm,
    partial_trace_keep,
    trace_norm_argmax,
)

PAULI_LABELS = ("X", "Y", "Z")
DEFAULT_DENSE_CAP = 12


def _evolved(circ: Circuit, x: int, cache: Optional[dict], dense_cap: int) -> dict[str, EvolvedOperator]:
    if cache is not None and x in cache:
        return cache[x]
    support, _ = light_cone(circ, [x])
    if len(support) > dense_cap:
        raise CapExceeded(f"light cone of site {x} has {len(support)} sites, dense cap is {dense_cap}")
    ops = {p: heisenberg(circ, x, p) for p in PAULI_LABELS}
    if cache is not None:
        cache[x] = ops
    return ops


def _commutator(A: np.ndarray, b: np.ndarray, pos: int, k: int) -> np.ndarray:
    d = 2**k
    bA = apply_left(b, A.reshape((2,) * k + (d,)), [pos], k).reshape(d, d)
    Ab = apply_left(b.T, A.T.reshape((2,) * k + (d,)), [pos], k).reshape(d, d).T
    return Ab - bA


def commutator_pauli(
    circ: Circuit,
    x: int,
    y: int,
    cache: Optional[dict] = None,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> float:
    """``max ||[alpha(a), b]||`` over single-site Paulis ``a`` at ``x`` and ``b`` at ``y``.

    Exactly zero when ``y`` lies outside the light cone of ``x``.
    """
    if x == y:
        raise ValueError("x and y must differ")
    support, _ = light_cone(circ, [x])
    if y not in support:
        return 0.0
    ops = _evolved(circ, x, cache, dense_cap)
    best = 0.0
    for p in PAULI_LABELS:
        A = ops[p]
        pos, k = A.position(y), len(A.support)
        for q in PAULI_LABELS:
            # [A, b] is anti-Hermitian for Hermitian A, b
            best = max(best, hermitian_norm(1j * _commutator(A.matrix, PAULIS[q], pos, k)))
    return best


def _half_pauli_expansion(coeffs: dict[str, complex]) -> np.ndarray:
    return 0.5 * sum(c * PAULIS[p] for p, c in coeffs.items())


def commutator_exact(
    circ: Circuit,
    x: int,
    y: int,
    restarts: int = DEFAULT_RESTARTS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    pair_index: int = 0,
    cache: Optional[dict] = None,
    dense_cap: int = 8,
) -> CorrEstimate:
    """Alternating maximisation of ``|<u, [alpha(a), b] v>|`` over ``u, v, a, b``.

    Each block is solved exactly: top singular pair for ``(u, v)``, trace-norm
    argmax for ``a`` and for ``b``.  The bracket is ``[pauli, 9 * pauli]``.
    """
    pauli = commutator_pauli(circ, x, y, cache, max(dense_cap, DEFAULT_DENSE_CAP))
    if pauli == 0.0:
        return CorrEstimate(0.0, 0.0, 0.0, 0, True)
    ops = _evolved(circ, x, cache, dense_cap)
    k = len(ops["X"].support)
    pos = ops["X"].position(y)
    keep_y = [pos]
    best = 0.0
    all_converged = True
    for r in range(restarts):
        if r == 0:
            table = {
                (p, q): hermitian_norm(1j * _commutator(ops[p].matrix, PAULIS[q], pos, k))
                for p in PAULI_LABELS
                for q in PAULI_LABELS
            }
            p0, q0 = max(table, key=table.get)
            a, b = PAULIS[p0], PAULIS[q0]
        else:
            rng = np.random.default_rng([seed, pair_index, r])
            a, b = haar_unitary(2, rng), haar_unitary(2, rng)
        prev = -math.inf
        converged = False
        value = 0.0
        for _ in range(MAX_ALTERNATIONS):
            A = 0.5 * sum(np.trace(PAULIS[p] @ a) * ops[p].matrix for p in PAULI_LABELS)
            M = _commutator(A, b, pos, k)
            uu, s, vh = np.linalg.svd(M)
            u, v = uu[:, 0], vh[0].conj()
            # a-step: <u, [alpha(a), b] v> = tr(K a)
            coeffs = {
                p: u.conj() @ (_commutator(ops[p].matrix, b, pos, k) @ v) for p in PAULI_LABELS
            }
            _, a = trace_norm_argmax(_half_pauli_expansion(coeffs))
            A = 0.5 * sum(np.trace(PAULIS[p] @ a) * ops[p].matrix for p in PAULI_LABELS)
            # b-step: <u, [A, b] v> = tr(b * ptr(v u^dag A - A v u^dag))
            vu = np.outer(v, u.conj())
            value, b = trace_norm_argmax(partial_trace_keep(vu @ A - A @ vu, keep_y, k))
            if value - prev <= tol:
                converged = True
                break
            prev = value
        all_converged &= converged
        best = max(best, value)
    value = max(best, pauli)
    return CorrEstimate(value, pauli, 9 * pauli, restarts, all_converged)


def commutator_matrix(
    circ: Circuit,
    mode: str = "pauli",
    restarts: int = DEFAULT_RESTARTS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> CorrMatrixResult:
    """Symmetric table ``max(Q(x, y), Q(y, x))`` of commutator tails.

    The two orders genuinely differ: ``Q(x, y)`` probes the backward cone of
    ``x`` while ``Q(y, x)`` probes that of ``y``. The max keeps the table
    symmetric as a decay matrix requires.
    """
    if mode not in ("pauli", "exact"):
        raise ValueError(f"mode must be 'pauli' or 'exact', got {mode!r}")
    order = circ.sites.canonical_order()
    if order != list(range(circ.n)):
        can = commutator_matrix(circ.permuted(order), mode, restarts, tol, seed, dense_cap)
        back = np.argsort(order).tolist()
        brackets = {(order[x], order[y]): est for (x, y), est in can.brackets.items()}
        return CorrMatrixResult(can.matrix.permuted(back), brackets)
    n = circ.n
    vals = np.zeros((n, n))
    cache: dict = {}
    brackets: dict = {}
    k = 0
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            if mode == "pauli":
                vals[x, y] = commutator_pauli(circ, x, y, cache, dense_cap)
            else:
                est = commutator_exact(circ, x, y, restarts, tol, seed, k, cache, dense_cap)
                brackets[(x, y)] = est
                vals[x, y] = est.value
            k += 1
    return CorrMatrixResult(build_decay_matrix(vals, circ.sites, symmetrize=True), brackets)


def spread_profile(
    circ: Circuit,
    x: int,
    radii: Sequence[int],
    metric: PathMetric,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> list[float]:
    """``max_a ||alpha(a) - E_{B_r(x)}(alpha(a))||`` for each radius.

    ``E`` is the normalised partial trace onto the ball; the value is exactly
    zero once the ball contains the light cone.
    """
    if metric.n != circ.n:
        raise ValueError("metric and circuit live on different site sets")
    support, _ = light_cone(circ, [x])
    ops = None
    out = []
    for r in radii:
        ball = set(metric.ball(x, r).tolist())
        if set(support) <= ball:
            out.append(0.0)
            continue
        if ops is None:
            ops = _evolved(circ, x, None, dense_cap)
        keep = [i for i, s in enumerate(support) if s in ball]
        k = len(support)
        out.append(
            max(hermitian_norm(conditional_residual(ops[p].matrix, keep, k)) for p in PAULI_LABELS)
        )
    return out
