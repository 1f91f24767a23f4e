import numpy as np
import pytest
from conftest import path_d
from oracles import PX, PZ, circuit_full, commutator_full, embed_full

from coarsemap.coarse import SiteSet
from coarsemap.errors import CapExceeded
from coarsemap.spin import (
    Circuit,
    Gate,
    brickwork,
    commutator_exact,
    commutator_matrix,
    commutator_pauli,
    heisenberg,
    light_cone,
    spread_profile,
)
from coarsemap.spin.linalg import haar_unitary, operator_norm


def cz_circuit():
    return Circuit(SiteSet.range(2), ((Gate.named("CZ", (0, 1)),),))


class TestHeisenberg:
    def test_empty(self):
        op = heisenberg(Circuit.identity(3), 1, "X")
        assert op.support == (1,) and np.allclose(op.matrix, PX)

    def test_cz_z_commutes(self):
        op = heisenberg(cz_circuit(), 0, "Z").trimmed()
        assert op.support == (0,) and np.allclose(op.matrix, PZ)

    def test_cz_x_spreads(self):
        op = heisenberg(cz_circuit(), 0, "X")
        assert op.support == (0, 1) and np.allclose(op.matrix, np.kron(PX, PZ))

    def test_against_full_conjugation(self):
        circ = brickwork(5, 2, seed=4)
        U = circuit_full(circ)
        for site in range(5):
            op = heisenberg(circ, site, "Y")
            full = U.conj().T @ embed_full(np.array([[0, -1j], [1j, 0]]), site, 5) @ U
            # lift the tracked operator into the full space
            rest = [q for q in range(5) if q not in op.support]
            lifted = np.kron(op.matrix, np.eye(2 ** len(rest)))
            order = list(op.support) + rest
            inv = np.argsort(order)
            lifted = lifted.reshape((2,) * 10).transpose(list(inv) + [5 + i for i in inv]).reshape(32, 32)
            assert np.allclose(lifted, full, atol=1e-12)

    def test_norm_preserved(self):
        circ = brickwork(8, 2, seed=1)
        for site in range(8):
            assert operator_norm(heisenberg(circ, site, "X").matrix) == pytest.approx(1, abs=1e-10)

    def test_light_cone_radius(self):
        for D in (1, 2, 3):
            circ = brickwork(12, D, seed=0)
            for x in range(12):
                cone, _ = light_cone(circ, [x])
                assert max(abs(y - x) for y in cone) <= 2 * D


class TestCommutator:
    def test_empty(self):
        assert commutator_pauli(Circuit.identity(3), 0, 2) == 0.0

    def test_cz(self):
        assert commutator_pauli(cz_circuit(), 0, 1) == pytest.approx(2)

    def test_against_full_space(self):
        circ = brickwork(6, 1, seed=2)
        for x in range(6):
            for y in range(6):
                if x != y:
                    assert commutator_pauli(circ, x, y) == pytest.approx(commutator_full(circ, x, y), abs=1e-10)

    def test_identity_circuit_matrix(self):
        assert commutator_matrix(Circuit.identity(5)).matrix.off_diagonal().max() == 0

    def test_one_cz_layer(self):
        circ = brickwork(6, 1, gate="CZ").with_layer([])
        circ = Circuit(circ.sites, circ.layers[:1])
        q = commutator_matrix(circ).matrix.values
        expect = np.zeros((6, 6), dtype=bool)
        for i in (0, 2, 4):
            expect[i, i + 1] = expect[i + 1, i] = True
        assert np.array_equal(q > 0, expect)

    def test_exact_bracket_and_cz(self):
        est = commutator_exact(cz_circuit(), 0, 1)
        assert est.lower == pytest.approx(2)
        assert est.lower <= est.value <= est.upper
        assert est.value == pytest.approx(2, abs=1e-9)

    def test_exact_matrix_brackets(self):
        res = commutator_matrix(brickwork(4, 1, seed=5), mode="exact", restarts=3)
        for est in res.brackets.values():
            assert est.lower - 1e-12 <= est.value <= est.upper + 1e-12
            assert est.upper == pytest.approx(9 * est.lower)
            # a commutator of norm-one operators never exceeds 2
            assert est.value <= 2 + 1e-9

    def test_cap(self):
        with pytest.raises(CapExceeded):
            commutator_pauli(brickwork(12, 3, seed=0), 5, 6, dense_cap=8)

    def test_deterministic(self):
        circ = brickwork(4, 1, seed=7)
        a = commutator_matrix(circ, mode="exact", restarts=3, seed=11)
        b = commutator_matrix(circ, mode="exact", restarts=3, seed=11)
        assert a.matrix == b.matrix and a.brackets == b.brackets

    def test_composition_cone(self):
        c1, c2 = brickwork(10, 1, seed=1), brickwork(10, 1, seed=2)
        comp = c1.then(c2)
        q = commutator_matrix(comp).matrix.values

        def allowed(x):
            out = set()
            for y in light_cone(c2, [x])[0]:
                out |= set(light_cone(c1, [y])[0])
            return out

        for x in range(10):
            assert set(light_cone(comp, [x])[0]) <= allowed(x)
            for y in range(10):
                if y not in allowed(x) and x not in allowed(y):
                    assert q[x, y] == 0.0

    def test_single_gate_change_bound(self):
        """Q moves by at most 2 ||U - V|| when one gate changes (n = 6)."""
        for seed in range(6):
            rng = np.random.default_rng(seed)
            circ = brickwork(6, 1, seed=seed)
            layers = [list(l) for l in circ.layers]
            li = int(rng.integers(len(layers)))
            gi = int(rng.integers(len(layers[li])))
            g = layers[li][gi]
            layers[li][gi] = Gate(g.support, haar_unitary(4, rng))
            other = Circuit(circ.sites, tuple(tuple(l) for l in layers))
            gap = np.linalg.norm(circ.unitary() - other.unitary(), 2)
            dq = commutator_matrix(circ).matrix.sup_distance(commutator_matrix(other).matrix)
            assert dq <= 2 * gap + 1e-10
            assert dq <= 4 * gap + 1e-10


class TestSpread:
    def test_empty(self):
        assert spread_profile(Circuit.identity(4), 1, [0, 1, 2], path_d(4)) == [0.0, 0.0, 0.0]

    def test_cz_r0(self):
        prof = spread_profile(cz_circuit(), 0, [0, 1], path_d(2))
        assert prof[0] == pytest.approx(1) and prof[1] == 0.0

    def test_brickwork_zero_beyond_cone(self):
        for D in (1, 2):
            circ = brickwork(12, D, seed=D)
            d = path_d(12)
            for x in range(12):
                prof = spread_profile(circ, x, list(range(2 * D, 2 * D + 2)), d)
                assert prof == [0.0, 0.0]

    def test_commutator_spread_compatibility(self):
        circ = brickwork(8, 1, seed=9)
        d = path_d(8)
        for x in range(8):
            radii = [0, 1]
            prof = spread_profile(circ, x, radii, d)
            for r, s in zip(radii, prof):
                for y in range(8):
                    if d.dist[x, y] > r:
                        assert commutator_pauli(circ, x, y) <= 2 * s + 1e-10
