"""Randomised invariants over small decay matrices."""
import networkx as nx
import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from oracles import bfs_distances

from coarsemap.coarse import (
    build_decay_matrix,
    epsilon_graph,
    generated_closure,
    growth_curve,
    in_generated,
    path_metric,
    semicontinuity_check,
)
from coarsemap.coarse.structures import compose
from coarsemap.decay import sandwich_check
from coarsemap.io import dumps_matrix, loads_matrix

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def matrices(draw, min_n=2, max_n=9):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    power = draw(st.sampled_from([1, 3, 8]))
    raw = np.random.default_rng(seed).random((n, n)) ** power
    return build_decay_matrix(raw)


eps_values = st.floats(0.05, 0.95)


@SETTINGS
@given(matrices(), eps_values)
def test_metric_matches_bfs(f, eps):
    e = epsilon_graph(f, eps)
    assert np.array_equal(path_metric(e).dist, bfs_distances(e.adj))


@SETTINGS
@given(matrices(), eps_values, eps_values)
def test_graphs_nested(f, a, b):
    hi, lo = max(a, b), min(a, b)
    assert epsilon_graph(f, hi).issubset(epsilon_graph(f, lo))


@SETTINGS
@given(matrices(), eps_values)
def test_closure_is_components(f, eps):
    e = epsilon_graph(f, eps)
    g = nx.from_numpy_array(e.adj.astype(int))
    comp = np.zeros_like(e.adj)
    for c in nx.connected_components(g):
        idx = np.array(sorted(c))
        comp[np.ix_(idx, idx)] = True
    assert np.array_equal(generated_closure([e]).adj, comp)


@SETTINGS
@given(matrices(), eps_values, st.integers(1, 4))
def test_powers_are_generated(f, eps, k):
    e = epsilon_graph(f, eps)
    p = e
    for _ in range(k - 1):
        p = compose(p, e)
    assert in_generated(p, [e], k)


@SETTINGS
@given(matrices(), eps_values)
def test_growth_bounded_and_monotone(f, eps):
    g = growth_curve(path_metric(epsilon_graph(f, eps)), 6)
    assert g.gamma[0] == 1 and max(g.gamma) <= f.n
    assert all(b >= a for a, b in zip(g.gamma, g.gamma[1:]))


@SETTINGS
@given(matrices(), st.integers(0, 2**32 - 1), st.floats(0.0, 0.1), eps_values)
def test_sandwich_never_fails(f, seed, noise, eps):
    rng = np.random.default_rng(seed)
    g = build_decay_matrix(np.clip(f.values + rng.uniform(-noise, noise, (f.n, f.n)), 0, None))
    width = f.sup_distance(g)
    if eps > width:
        assert sandwich_check(f, g, eps, max_words=2).passed
        assert semicontinuity_check(f, g, eps)


@SETTINGS
@given(matrices(), st.integers(0, 2**32 - 1), eps_values)
def test_permutation_equivariance(f, seed, eps):
    perm = np.random.default_rng(seed).permutation(f.n)
    a = path_metric(epsilon_graph(f, eps)).permuted(perm)
    b = path_metric(epsilon_graph(f.permuted(perm), eps))
    assert np.array_equal(a.dist, b.dist)
    assert growth_curve(path_metric(epsilon_graph(f, eps)), 4) == growth_curve(b, 4)


@SETTINGS
@given(matrices())
def test_csv_round_trip(f):
    assert np.array_equal(loads_matrix(dumps_matrix(f)).values, f.values)
