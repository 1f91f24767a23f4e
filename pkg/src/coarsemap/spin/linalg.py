"""Small dense linear-algebra helpers for qubit tensors."""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import eigsh
from scipy.stats import unitary_group

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}

DENSE_EIG_MAX_DIM = 256


@lru_cache(maxsize=None)
def pauli_words(k: int) -> tuple[tuple[str, ...], np.ndarray]:
    """All non-identity Pauli words on ``k`` qubits, as labels and a stacked array."""
    labels, mats = [], []
    for word in itertools.product("IXYZ", repeat=k):
        if set(word) == {"I"}:
            continue
        m = np.array([[1.0 + 0j]])
        for p in word:
            m = np.kron(m, PAULIS[p])
        labels.append("".join(word))
        mats.append(m)
    arr = np.stack(mats)
    arr.setflags(write=False)
    return tuple(labels), arr


def apply_left(op: np.ndarray, tensor: np.ndarray, positions, k: int) -> np.ndarray:
    """Apply ``op`` to the given qubit axes of a ``(2,)*k + batch`` tensor."""
    m = len(positions)
    opt = op.reshape((2,) * (2 * m))
    out = np.tensordot(opt, tensor, axes=(list(range(m, 2 * m)), list(positions)))
    # tensordot puts the op's output axes first; move them back into place
    return np.moveaxis(out, list(range(m)), list(positions))


def conjugate(op_dense: np.ndarray, gate: np.ndarray, positions, k: int) -> np.ndarray:
    """``g^dag O g`` for a dense ``O`` on ``k`` qubits and a gate on ``positions``."""
    d = 2**k
    t = op_dense.reshape((2,) * k + (d,))
    t = apply_left(gate.conj().T, t, positions, k).reshape(d, d)
    # right multiplication via the transpose
    t = apply_left(gate.T, t.T.reshape((2,) * k + (d,)), positions, k).reshape(d, d).T
    return np.ascontiguousarray(t)


def embed(op: np.ndarray, positions, k: int) -> np.ndarray:
    """Dense ``op`` on ``positions`` tensored with identity on the other of ``k`` qubits."""
    d = 2**k
    eye = np.eye(d, dtype=complex).reshape((2,) * k + (d,))
    return apply_left(op, eye, positions, k).reshape(d, d)


def partial_trace_keep(op: np.ndarray, keep, k: int) -> np.ndarray:
    """Partial trace of a dense ``k``-qubit operator onto the ordered ``keep`` qubits."""
    keep = list(keep)
    rest = [q for q in range(k) if q not in keep]
    t = op.reshape((2,) * (2 * k))
    perm = keep + rest + [k + q for q in keep] + [k + q for q in rest]
    t = t.transpose(perm)
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("iaja->ij", t)


def conditional_residual(op: np.ndarray, keep, k: int) -> np.ndarray:
    """``O - E(O)`` with ``E`` the normalised partial trace onto ``keep`` (re-embedded).

    Returned in the basis with ``keep`` qubits first; norms are basis independent.
    """
    keep = list(keep)
    rest = [q for q in range(k) if q not in keep]
    t = op.reshape((2,) * (2 * k))
    perm = keep + rest + [k + q for q in keep] + [k + q for q in rest]
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    t = t.transpose(perm).reshape(dk, dr, dk, dr)
    red = np.einsum("iaja->ij", t) / dr
    diff = t - red[:, None, :, None] * np.eye(dr)[None, :, None, :]
    return diff.reshape(dk * dr, dk * dr)


def trace_norm_argmax(k: np.ndarray) -> tuple[float, np.ndarray]:
    """``max |tr(K a)|`` over the operator-norm unit ball and a maximiser.

    For ``K = U S W^dag`` the unitary ``a = W U^dag`` gives ``tr(K a) = sum S``.
    """
    u, s, vh = np.linalg.svd(k)
    return float(s.sum()), vh.conj().T @ u.conj().T


def hermitian_norm(h: np.ndarray, tol: float = 1e-12) -> float:
    """Operator norm of a Hermitian matrix: dense for small sizes, Lanczos above."""
    d = h.shape[0]
    if d <= DENSE_EIG_MAX_DIM:
        w = np.linalg.eigvalsh(h)
        return float(max(abs(w[0]), abs(w[-1])))
    w = eigsh(h, k=1, which="LM", tol=tol, return_eigenvectors=False, v0=np.ones(d, dtype=h.dtype))
    return float(abs(w[0]))


def operator_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    return m.shape[0] == m.shape[1] and np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0)
