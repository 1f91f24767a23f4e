import numpy as np
import pytest

from coarsemap.coarse import SiteSet, build_decay_matrix, epsilon_graph, path_metric


def dist_matrix(n):
    idx = np.arange(n)
    return np.abs(idx[:, None] - idx[None, :])


def halving(n):
    """``f(i, j) = 2^-|i-j|``: its 0.5-graph is the path."""
    return build_decay_matrix(2.0 ** -dist_matrix(n).astype(float))


def path_d(n):
    return path_metric(epsilon_graph(halving(n), 0.5))


def grid_matrix(rows, cols):
    sites = SiteSet.grid(rows, cols)
    c = np.array(sites.coords)
    d = np.abs(c[:, None, :] - c[None, :, :]).sum(-1)
    return build_decay_matrix(np.where(d == 1, 1.0, 0.0), sites)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, whatever the verbosity
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        _CRITERIA[number] = (title, rep.passed, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, secs = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({secs:.1f} s)")
