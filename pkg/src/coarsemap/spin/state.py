"""Pure qubit states as dense state vectors, plus standard builders."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ..coarse.structures import SiteSet
from ..errors import CapExceeded, DimensionMismatch, SupportOutOfRange
from .linalg import apply_left

DEFAULT_SITE_CAP = 20
NORM_TOL = 1e-12

_LOCAL = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / math.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / math.sqrt(2),
    "+i": np.array([1, 1j], dtype=complex) / math.sqrt(2),
    "-i": np.array([1, -1j], dtype=complex) / math.sqrt(2),
}


@dataclass(frozen=True, eq=False)
class SpinState:
    sites: SiteSet
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amp.size != 2**self.sites.n:
            raise DimensionMismatch(f"{amp.size} amplitudes for {self.sites.n} qubits")
        norm = np.linalg.norm(amp)
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"state is not normalised (norm {norm})")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n(self) -> int:
        return self.sites.n

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)

    def permuted(self, perm: Sequence[int]) -> "SpinState":
        """Relabel so new qubit ``i`` is old qubit ``perm[i]``."""
        return SpinState(self.sites.permuted(perm), self.tensor().transpose(list(perm)).reshape(-1))


def _check_cap(n: int, cap: int):
    if n > cap:
        raise CapExceeded(f"{n} qubits exceeds the cap of {cap}")


def _sites(n: int, sites: Optional[SiteSet]) -> SiteSet:
    if sites is None:
        return SiteSet.range(n)
    if sites.n != n:
        raise DimensionMismatch(f"{sites.n} sites for an {n}-qubit state")
    return sites


def _normalised(vec: np.ndarray, sites: SiteSet) -> SpinState:
    return SpinState(sites, vec / np.linalg.norm(vec))


def apply_unitary(psi: SpinState, u: np.ndarray, region: Sequence[int]) -> SpinState:
    region = list(region)
    if any(not 0 <= q < psi.n for q in region):
        raise SupportOutOfRange(f"region {region} outside {psi.n} qubits")
    if u.shape != (2 ** len(region), 2 ** len(region)):
        raise DimensionMismatch(f"unitary of shape {u.shape} on {len(region)} qubits")
    out = apply_left(u, psi.tensor(), region, psi.n)
    return _normalised(out.reshape(-1), psi.sites)


LocalSpec = Union[str, Sequence[float]]


def local_vector(spec: LocalSpec) -> np.ndarray:
    """Single-qubit vector from a label (``0 1 + - +i -i``) or Bloch angles ``(theta, phi)``."""
    if isinstance(spec, str):
        try:
            return _LOCAL[spec]
        except KeyError:
            raise ValueError(f"unknown local state {spec!r}") from None
    spec = list(spec)
    if len(spec) == 2:
        theta, phi = float(spec[0]), float(spec[1])
        return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)], dtype=complex)
    vec = np.asarray(spec, dtype=complex)
    if vec.shape != (2,):
        raise ValueError("local state must be a label, Bloch angles, or a 2-vector")
    return vec / np.linalg.norm(vec)


def product(specs: Sequence[LocalSpec], sites: Optional[SiteSet] = None, cap: int = DEFAULT_SITE_CAP) -> SpinState:
    _check_cap(len(specs), cap)
    vec = np.array([1.0 + 0j])
    for s in specs:
        vec = np.kron(vec, local_vector(s))
    return _normalised(vec, _sites(len(specs), sites))


def random_product(n: int, rng: np.random.Generator, cap: int = DEFAULT_SITE_CAP) -> SpinState:
    specs = [(math.acos(1 - 2 * rng.random()), 2 * math.pi * rng.random()) for _ in range(n)]
    return product(specs, cap=cap)


def ghz(n: int, sites: Optional[SiteSet] = None, cap: int = DEFAULT_SITE_CAP) -> SpinState:
    _check_cap(n, cap)
    vec = np.zeros(2**n, dtype=complex)
    vec[0] = vec[-1] = 1
    return _normalised(vec, _sites(n, sites))


def bell_pairs(
    n: int,
    pairing: Optional[Sequence[Sequence[int]]] = None,
    sites: Optional[SiteSet] = None,
    cap: int = DEFAULT_SITE_CAP,
) -> SpinState:
    """``(|00> + |11>)/sqrt2`` on each pair, ``|0>`` on unpaired sites.

    The default pairing is ``(0,1), (2,3), ...``.
    """
    _check_cap(n, cap)
    if pairing is None:
        pairing = [(2 * i, 2 * i + 1) for i in range(n // 2)]
    used = [q for p in pairing for q in p]
    if len(set(used)) != len(used) or any(len(p) != 2 for p in pairing):
        raise ValueError("pairing must consist of disjoint pairs")
    if any(not 0 <= q < n for q in used):
        raise SupportOutOfRange("pairing refers to missing sites")
    t = np.zeros((2,) * n, dtype=complex)
    t[(0,) * n] = 1
    psi = SpinState(_sites(n, sites), t.reshape(-1))
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    cnot = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
    for i, j in pairing:
        psi = apply_unitary(psi, h, [i])
        psi = apply_unitary(psi, cnot, [i, j])
    return psi


def cluster(
    n: int,
    edges: Optional[Sequence[Sequence[int]]] = None,
    sites: Optional[SiteSet] = None,
    cap: int = DEFAULT_SITE_CAP,
) -> SpinState:
    """Graph state: ``|+>`` everywhere then CZ on each edge (default: the path)."""
    if edges is None:
        edges = [(i, i + 1) for i in range(n - 1)]
    psi = product(["+"] * n, _sites(n, sites), cap)
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    for i, j in edges:
        psi = apply_unitary(psi, cz, [i, j])
    return psi


def reduced_density(psi: SpinState, subset: Sequence[int]) -> np.ndarray:
    """Density matrix of the ordered ``subset`` (first listed qubit most significant)."""
    subset = list(subset)
    if any(not 0 <= q < psi.n for q in subset):
        raise SupportOutOfRange(f"subset {subset} outside {psi.n} qubits")
    if len(set(subset)) != len(subset):
        raise ValueError("subset has repeated sites")
    rest = [q for q in range(psi.n) if q not in subset]
    m = psi.tensor().transpose(subset + rest).reshape(2 ** len(subset), -1)
    rho = m @ m.conj().T
    # unit trace exactly, so e.g. GHZ correlations come out as exactly 1
    return rho / np.trace(rho).real


def expectation(psi: SpinState, op) -> complex:
    """``<psi| a |psi>`` for an operator with ``support`` and ``dense()`` (or ``matrix``)."""
    support = list(op.support)
    mat = op.dense() if hasattr(op, "dense") else op.matrix
    rho = reduced_density(psi, support)
    return complex(np.trace(rho @ mat))


def ising_state(n: int, beta_j: float, sites: Optional[SiteSet] = None, cap: int = DEFAULT_SITE_CAP) -> SpinState:
    """Coherent encoding ``sum_s sqrt(p(s)) |s>`` of the open-chain Gibbs weights.

    ``p(s)`` is proportional to ``exp(beta_j * sum_i s_i s_{i+1})`` with ``s_i = +-1``
    (``|0> -> +1``), so ``<Z_i Z_j>`` reproduces the classical spin correlations.
    """
    _check_cap(n, cap)
    spins = 1 - 2 * ((np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1)
    energy = (spins[:, :-1] * spins[:, 1:]).sum(axis=1) if n > 1 else np.zeros(2**n)
    logw = beta_j * energy
    w = np.exp(0.5 * (logw - logw.max()))
    return _normalised(w.astype(complex), _sites(n, sites))
