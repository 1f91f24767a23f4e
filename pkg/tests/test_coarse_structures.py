import numpy as np
import pytest
from conftest import halving, path_d
from oracles import bfs_distances

from coarsemap.coarse import (
    UNREACHABLE,
    Filtration,
    Relation,
    SiteSet,
    build_decay_matrix,
    compose,
    epsilon_graph,
    inverse,
    path_metric,
    union,
)
from coarsemap.errors import (
    AsymmetricInput,
    NegativeEntry,
    NonFinite,
    NonPositiveEpsilon,
    SiteSetMismatch,
)


class TestSiteSet:
    def test_unique_ids(self):
        with pytest.raises(ValueError):
            SiteSet(("a", "a"))

    def test_grid_ids_and_coords(self):
        s = SiteSet.grid(2, 3)
        assert s.n == 6
        assert s.ids[4] == "1_1"
        assert s.coords[4] == (1, 1)

    def test_permuted(self):
        s = SiteSet.range(3).permuted([2, 0, 1])
        assert s.ids == ("2", "0", "1")


class TestDecayMatrix:
    def test_zero_matrix_has_no_thresholds(self):
        assert build_decay_matrix(np.zeros((2, 2))).thresholds().size == 0

    def test_max_symmetrisation(self):
        f = build_decay_matrix([[0, 0.3], [0.1, 0]])
        assert f.values[0, 1] == f.values[1, 0] == 0.3

    def test_filtration_thresholds(self):
        raw = np.array([[0, 0.9, 0.1], [0.9, 0, 0.5], [0.1, 0.5, 0]])
        assert Filtration(build_decay_matrix(raw)).thresholds == (0.9, 0.5, 0.1)

    def test_rejects_negative(self):
        with pytest.raises(NegativeEntry):
            build_decay_matrix([[0, -1], [-1, 0]])

    def test_rejects_nonfinite(self):
        with pytest.raises(NonFinite):
            build_decay_matrix([[0, np.nan], [0, 0]])

    def test_strict_symmetry(self):
        with pytest.raises(AsymmetricInput):
            build_decay_matrix([[0, 0.3], [0.1, 0]], symmetrize=False)
        f = build_decay_matrix([[0, 0.3], [0.3 + 1e-13, 0]], symmetrize=False)
        assert f.values[0, 1] == f.values[1, 0]

    def test_values_read_only(self):
        f = halving(4)
        with pytest.raises(ValueError):
            f.values[0, 1] = 3

    def test_sup_distance_ignores_diagonal(self):
        a = build_decay_matrix([[5, 0.2], [0.2, 5]])
        b = build_decay_matrix([[0, 0.5], [0.5, 0]])
        assert b.sup_distance(a) == pytest.approx(0.3)


class TestEpsilonGraph:
    def test_product_state_diagonal_only(self):
        e = epsilon_graph(build_decay_matrix(np.zeros((5, 5))), 1e-3)
        assert e == Relation.diagonal(SiteSet.range(5))

    def test_ghz_like_complete(self):
        e = epsilon_graph(build_decay_matrix(np.ones((6, 6))), 1.0)
        assert e.adj.all()

    def test_halving_path(self):
        e = epsilon_graph(halving(8), 0.5)
        assert e.edges() == [(i, i + 1) for i in range(7)]

    def test_non_strict_threshold(self):
        e = epsilon_graph(build_decay_matrix([[0, 0.25], [0.25, 0]]), 0.25)
        assert e.adj[0, 1]

    def test_nonpositive_eps(self):
        with pytest.raises(NonPositiveEpsilon):
            epsilon_graph(halving(3), 0.0)

    def test_nesting(self):
        f = halving(10)
        for hi, lo in [(0.5, 0.25), (0.25, 0.01)]:
            assert epsilon_graph(f, hi).issubset(epsilon_graph(f, lo))
            dh, dl = path_metric(epsilon_graph(f, hi)).dist, path_metric(epsilon_graph(f, lo)).dist
            assert np.all(dl <= dh)


class TestRelationAlgebra:
    def setup_method(self):
        self.E = epsilon_graph(halving(6), 0.5)
        self.D = Relation.diagonal(self.E.sites)

    def test_square_reaches_two(self):
        e2 = compose(self.E, self.E)
        assert e2.adj[0, 2] and not e2.adj[0, 3]

    def test_inverse_symmetric(self):
        assert inverse(self.E) == self.E

    def test_diagonal_identity(self):
        assert compose(self.E, self.D) == self.E == compose(self.D, self.E)

    def test_inverse_of_composition(self, rng):
        s = SiteSet.range(7)
        A = Relation(s, rng.random((7, 7)) < 0.2)
        B = Relation(s, rng.random((7, 7)) < 0.2)
        C = Relation(s, rng.random((7, 7)) < 0.2)
        assert inverse(compose(A, B)) == compose(inverse(B), inverse(A))
        assert compose(compose(A, B), C) == compose(A, compose(B, C))
        assert union(A, B) == union(B, A)
        assert union(A, A) == A

    def test_mismatched_sites(self):
        with pytest.raises(SiteSetMismatch):
            compose(self.E, Relation.diagonal(SiteSet.range(3)))


class TestPathMetric:
    def test_path(self):
        assert path_d(5).dist[0, 4] == 4

    def test_complete(self):
        d = path_metric(epsilon_graph(build_decay_matrix(np.ones((4, 4))), 1))
        assert np.all(d.dist[~np.eye(4, dtype=bool)] == 1)

    def test_disjoint_edges(self):
        raw = np.zeros((4, 4))
        raw[0, 1] = raw[2, 3] = 1
        d = path_metric(epsilon_graph(build_decay_matrix(raw), 1))
        assert d.dist[0, 2] == UNREACHABLE
        assert not d.is_connected()

    def test_matches_networkx(self, rng):
        for _ in range(5):
            raw = (rng.random((20, 20)) < 0.12).astype(float)
            e = epsilon_graph(build_decay_matrix(raw), 1)
            assert np.array_equal(path_metric(e).dist, bfs_distances(e.adj))

    def test_metric_axioms(self, rng):
        raw = (rng.random((30, 30)) < 0.08).astype(float)
        e = epsilon_graph(build_decay_matrix(raw), 1)
        d = path_metric(e).dist
        assert np.all(np.diag(d) == 0)
        assert np.array_equal(d, d.T)
        assert np.array_equal(d == 1, e.adj & ~np.eye(30, dtype=bool) | (e.adj.T & ~np.eye(30, dtype=bool)))
        fin = np.where(d >= 0, d, 10**6)
        for k in range(30):
            via = fin[:, [k]] + fin[[k], :]
            ok = (d >= 0)
            assert np.all(fin[ok] <= via[ok])
