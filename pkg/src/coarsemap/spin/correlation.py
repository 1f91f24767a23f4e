"""Two-point correlation functions of pure states.

``corr_pauli`` restricts the supremum to Pauli words (a rigorous lower bound);
``corr_exact`` runs an alternating maximisation whose inner steps are exact
trace-norm maximisations, and brackets the result between the Pauli value
and the Pauli-coefficient upper bound ``(4^|F| - 1)(4^|G| - 1) * pauli``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..coarse.structures import DecayMatrix, PathMetric, SiteSet, build_decay_matrix
from ..errors import OverlappingSupports, SubsetTooLarge
from .linalg import haar_unitary, pauli_words, trace_norm_argmax
from .state import SpinState, reduced_density

DEFAULT_SUBSET_CAP = 3
DEFAULT_RESTARTS = 8
DEFAULT_TOL = 1e-9
MAX_ALTERNATIONS = 1000


@dataclass(frozen=True)
class CorrEstimate:
    value: float
    lower: float
    upper: float
    restarts_used: int
    converged: bool

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
        }


def _check_subsets(F, G, cap):
    F, G = list(F), list(G)
    if set(F) & set(G):
        raise OverlappingSupports(f"subsets {F} and {G} overlap")
    if len(F) > cap or len(G) > cap:
        raise SubsetTooLarge(f"subsets of size {len(F)}, {len(G)} exceed the cap of {cap}")
    if not F or not G:
        raise ValueError("subsets must be nonempty")
    return F, G


class _Bipartite:
    """Reduced state on ``F u G`` reshaped for covariance contractions."""

    def __init__(self, psi: SpinState, F, G):
        self.dF, self.dG = 2 ** len(F), 2 ** len(G)
        rho = reduced_density(psi, list(F) + list(G))
        self.rho4 = rho.reshape(self.dF, self.dG, self.dF, self.dG)
        self.rhoF = np.einsum("ijkj->ik", self.rho4)
        self.rhoG = np.einsum("ijil->jl", self.rho4)

    def cov_operator_F(self, b: np.ndarray) -> np.ndarray:
        """``K`` with ``cov(a, b) = tr(K a)`` for every ``a`` on ``F``."""
        phi_b = np.einsum("jl,lj->", self.rhoG, b)
        return np.einsum("ijkl,lj->ik", self.rho4, b) - phi_b * self.rhoF

    def cov_operator_G(self, a: np.ndarray) -> np.ndarray:
        """``K`` with ``cov(a, b) = tr(K b)`` for every ``b`` on ``G``."""
        phi_a = np.einsum("ik,ki->", self.rhoF, a)
        return np.einsum("ijkl,ki->jl", self.rho4, a) - phi_a * self.rhoG

    def pauli_table(self):
        _, P = pauli_words(int(math.log2(self.dF)))
        _, Q = pauli_words(int(math.log2(self.dG)))
        joint = np.einsum("ijkl,pki,qlj->pq", self.rho4, P, Q)
        eP = np.einsum("ik,pki->p", self.rhoF, P)
        eQ = np.einsum("jl,qlj->q", self.rhoG, Q)
        return np.abs(joint - np.outer(eP, eQ)), P, Q


def reduced_covariance_operator(psi: SpinState, x_set: Sequence[int], b) -> np.ndarray:
    """Matrix ``K`` on ``x_set`` with ``phi(ab) - phi(a)phi(b) = tr(K a)``.

    ``b`` is anything with ``support`` and ``dense()``/``matrix`` (e.g. an
    ``EvolvedOperator``).
    """
    y_set = list(b.support)
    if set(x_set) & set(y_set):
        raise OverlappingSupports(f"{list(x_set)} and {y_set} overlap")
    mat = b.dense() if hasattr(b, "dense") else b.matrix
    return _Bipartite(psi, x_set, y_set).cov_operator_F(mat)


def corr_pauli(psi: SpinState, F, G, cap: int = DEFAULT_SUBSET_CAP) -> float:
    F, G = _check_subsets(F, G, cap)
    table, _, _ = _Bipartite(psi, F, G).pauli_table()
    return float(table.max())


def corr_exact(
    psi: SpinState,
    F,
    G,
    restarts: int = DEFAULT_RESTARTS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    pair_index: int = 0,
    cap: int = DEFAULT_SUBSET_CAP,
) -> CorrEstimate:
    """Alternating maximisation of ``|cov(a, b)|`` over the operator-norm unit balls.

    Restart 0 starts from the best Pauli pair; the others from Haar-random
    ``b`` drawn with seed ``(seed, pair_index, restart)``.
    """
    F, G = _check_subsets(F, G, cap)
    bp = _Bipartite(psi, F, G)
    table, P, Q = bp.pauli_table()
    pauli = float(table.max())
    upper = (4 ** len(F) - 1) * (4 ** len(G) - 1) * pauli
    best = 0.0
    all_converged = True
    for r in range(restarts):
        if r == 0:
            b = Q[np.unravel_index(np.argmax(table), table.shape)[1]]
        else:
            b = haar_unitary(bp.dG, np.random.default_rng([seed, pair_index, r]))
        prev = -math.inf
        converged = False
        for _ in range(MAX_ALTERNATIONS):
            _, a = trace_norm_argmax(bp.cov_operator_F(b))
            value, b = trace_norm_argmax(bp.cov_operator_G(a))
            if value - prev <= tol:
                converged = True
                break
            prev = value
        all_converged &= converged
        best = max(best, value)
    value = max(best, pauli)
    return CorrEstimate(value, pauli, upper, restarts, all_converged)


def balls(sites: SiteSet, radius: int, metric: Optional[PathMetric] = None) -> list[list[int]]:
    """Closed balls ``B_r(x)`` in ``metric``, else in the L1 distance of ``sites.coords``."""
    if radius == 0:
        return [[x] for x in range(sites.n)]
    if metric is not None:
        return [metric.ball(x, radius).tolist() for x in range(sites.n)]
    if sites.coords is None:
        raise ValueError("balls of positive radius need a metric or site coordinates")
    c = np.asarray(sites.coords)
    d = np.abs(c[:, None, :] - c[None, :, :]).sum(-1)
    return [np.flatnonzero(d[x] <= radius).tolist() for x in range(sites.n)]


@dataclass
class CorrMatrixResult:
    matrix: DecayMatrix
    brackets: dict

    def sidecar(self) -> dict:
        return {f"{i},{j}": est.as_dict() for (i, j), est in sorted(self.brackets.items())}


def corr_matrix(
    psi: SpinState,
    mode: str = "pauli",
    radius: int = 0,
    metric: Optional[PathMetric] = None,
    restarts: int = DEFAULT_RESTARTS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    cap: int = DEFAULT_SUBSET_CAP,
) -> CorrMatrixResult:
    """Correlations between all point pairs (``radius=0``) or ball pairs.

    Overlapping balls are controlled by construction and receive the largest
    value observed on disjoint pairs.
    """
    if mode not in ("pauli", "exact"):
        raise ValueError(f"mode must be 'pauli' or 'exact', got {mode!r}")
    order = psi.sites.canonical_order()
    if order != list(range(psi.n)):
        # run in canonical site order so relabelled inputs see identical arithmetic
        can = corr_matrix(
            psi.permuted(order), mode, radius, None if metric is None else metric.permuted(order),
            restarts, tol, seed, cap,
        )
        back = np.argsort(order).tolist()
        brackets = {tuple(sorted((order[i], order[j]))): est for (i, j), est in can.brackets.items()}
        return CorrMatrixResult(can.matrix.permuted(back), brackets)
    n = psi.n
    bs = balls(psi.sites, radius, metric)
    vals = np.zeros((n, n))
    overlap = np.zeros((n, n), dtype=bool)
    brackets: dict = {}
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if set(bs[i]) & set(bs[j]):
                overlap[i, j] = overlap[j, i] = True
                continue
            if mode == "pauli":
                v = corr_pauli(psi, bs[i], bs[j], cap)
            else:
                est = corr_exact(psi, bs[i], bs[j], restarts, tol, seed, k, cap)
                brackets[(i, j)] = est
                v = est.value
            vals[i, j] = vals[j, i] = v
            k += 1
    if overlap.any():
        vals[overlap] = vals[~overlap].max() if (~overlap).any() else 0.0
    np.fill_diagonal(vals, 0.0)
    return CorrMatrixResult(build_decay_matrix(vals, psi.sites), brackets)
