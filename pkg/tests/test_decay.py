import math

import numpy as np
import pytest
from conftest import dist_matrix, halving, path_d

from coarsemap.coarse import build_decay_matrix, epsilon_graph, path_metric
from coarsemap.decay import (
    FINITE,
    INCONCLUSIVE,
    INFINITE,
    ZERO,
    classify_length,
    commensurate_check,
    exp_form,
    fit_exponent,
    log_form,
    parse_form,
    persistence_sweep,
    perturbation_report,
    power_form,
    sandwich_check,
)
from coarsemap.errors import (
    EmptyGrid,
    EpsilonTooSmall,
    InsufficientPairs,
    NonPositiveFunction,
    SiteSetMismatch,
    UsageError,
    ZeroValuesInWindow,
)
from coarsemap.spin import apply_localized_perturbation, bell_pairs, corr_matrix, ghz, ising_1d_corr, ising_state
from coarsemap.spin.linalg import haar_unitary


def radial(n, fn):
    d = dist_matrix(n).astype(float)
    raw = np.where(d > 0, fn(np.maximum(d, 1)), 1.0)
    return build_decay_matrix(raw)


class TestClassifyLength:
    def test_exponential_recovers_rate(self):
        n = 60
        f = radial(n, lambda d: 3.0 * np.exp(-0.4 * d))
        res = classify_length(f, path_d(n), zero_tol=1e-300)
        assert res.verdict == FINITE
        assert res.B == pytest.approx(0.4, rel=1e-9)
        assert res.A == pytest.approx(3.0, rel=1e-9)

    def test_ising_rate(self):
        bj = 0.5
        res = classify_length(ising_1d_corr(64, bj), path_d(64), zero_tol=1e-300)
        assert res.verdict == FINITE
        assert res.B == pytest.approx(-math.log(math.tanh(bj)), rel=1e-9)

    def test_power_law_is_infinite(self):
        n = 80
        res = classify_length(radial(n, lambda d: d**-1.5), path_d(n))
        assert res.verdict == INFINITE
        assert res.as_dict()["infinite_is_proxy"] is True

    def test_slow_power_law_not_zero(self):
        res = classify_length(radial(40, lambda d: 1 / (1 + d)), path_d(40))
        assert res.verdict != ZERO

    def test_all_zero(self):
        f = build_decay_matrix(np.eye(12))
        res = classify_length(f, path_d(12))
        assert res.verdict == ZERO and res.R == 0

    def test_finite_support_cliff(self):
        n = 40
        f = radial(n, lambda d: np.where(d <= 20, 0.5, 0.0))
        res = classify_length(f, path_d(n))
        assert res.verdict == ZERO and res.R == 20

    def test_short_support_before_window(self):
        f = radial(40, lambda d: np.where(d <= 3, 2.0**-d, 0.0))
        res = classify_length(f, path_d(40))
        assert res.verdict == ZERO and res.R == 3

    def test_scaling_the_metric_scales_rate(self):
        n = 40
        f = halving(n)
        b1 = classify_length(f, path_d(n), zero_tol=1e-300).B
        b2 = classify_length(f, path_d(n).scaled(2), zero_tol=1e-300).B
        assert b2 == pytest.approx(b1 / 2, rel=1e-9)

    def test_noise_is_inconclusive(self, rng):
        n = 40
        raw = rng.uniform(0.1, 1.0, (n, n))
        res = classify_length(build_decay_matrix(raw), path_d(n))
        assert res.verdict == INCONCLUSIVE

    def test_insufficient_pairs(self):
        with pytest.raises(InsufficientPairs):
            classify_length(halving(4), path_d(4))

    def test_zero_tol_positive(self):
        with pytest.raises(UsageError):
            classify_length(halving(20), path_d(20), zero_tol=0)

    def test_mismatch(self):
        with pytest.raises(SiteSetMismatch):
            classify_length(halving(20), path_d(21))


class TestFitExponent:
    @pytest.mark.parametrize("gamma", [0.5, 1.0, 2.5])
    def test_exact_power_law(self, gamma):
        n = 60
        fit = fit_exponent(radial(n, lambda d: d**-gamma), path_d(n))
        assert fit.gamma == pytest.approx(gamma, abs=1e-9)
        assert fit.n_pairs >= 10

    def test_affine_metric_invariance(self):
        n = 60
        f = radial(n, lambda d: d**-1.5)
        d = path_d(n)
        base = fit_exponent(f, d).gamma
        for L in (1, 2, 3):
            for C in (0, 5):
                dist = np.where(d.dist > 0, L * d.dist + C, d.dist)
                from coarsemap.coarse import PathMetric

                g = fit_exponent(f, PathMetric(d.sites, dist)).gamma
                assert abs(g - base) <= 1e-9

    def test_noise(self, rng):
        n = 80
        d = dist_matrix(n).astype(float)
        raw = np.where(d > 0, np.maximum(d, 1) ** -0.5 * np.exp(rng.normal(0, 0.05, (n, n))), 1.0)
        fit = fit_exponent(build_decay_matrix(raw), path_d(n))
        assert abs(fit.gamma - 0.5) <= 0.05

    def test_zero_in_window(self):
        f = radial(40, lambda d: np.where(d <= 10, d**-1.0, 0.0))
        with pytest.raises(ZeroValuesInWindow):
            fit_exponent(f, path_d(40))

    def test_too_few_pairs(self):
        with pytest.raises(InsufficientPairs):
            fit_exponent(halving(5), path_d(5))


class TestCommensurate:
    def test_power_vs_power(self):
        assert commensurate_check(power_form(1.0), power_form(1.0)).commensurate

    def test_power_vs_other_exponent(self):
        assert not commensurate_check(power_form(1.0), power_form(2.0)).commensurate

    def test_exp_fails(self):
        res = commensurate_check(exp_form(1, 1), exp_form(1, 1))
        assert not res.commensurate
        assert res.per_pair[(1.0, 0.0)]["commensurate"]
        assert not res.per_pair[(2.0, 0.0)]["commensurate"]

    def test_log_passes(self):
        assert commensurate_check(log_form(), log_form()).commensurate

    def test_plain_callable(self):
        res = commensurate_check(lambda t: 1 / t, lambda t: 1 / t)
        assert res.commensurate

    def test_non_positive(self):
        with pytest.raises(NonPositiveFunction):
            commensurate_check(lambda t: -t, power_form(1))

    def test_parse(self):
        assert parse_form("pow:2").name == "pow:2"
        assert parse_form("exp:1,0.5")(0.0) == pytest.approx(1)
        assert parse_form("log")(math.e - 1) == pytest.approx(1)
        for bad in ("pow", "exp:1", "sin:1", "log:2"):
            with pytest.raises(UsageError):
                parse_form(bad)

    def test_bad_range(self):
        with pytest.raises(UsageError):
            commensurate_check(log_form(), log_form(), t_range=(5, 1))


class TestPersistence:
    def test_path_plateau(self):
        f = halving(128)
        grid = persistence_sweep(f, [0.5, 0.3])
        assert grid.plateau is not None
        assert abs(grid.plateau.slope - 1) <= 0.1
        assert len(list(grid.rows())) == 6

    def test_ghz_flat(self):
        grid = persistence_sweep(corr_matrix(ghz(10)).matrix, [1.0, 0.5])
        assert grid.plateau.slope == pytest.approx(0, abs=1e-12)

    def test_nan_cells(self):
        grid = persistence_sweep(halving(6), [0.5], [(0.1, 0.2)])
        assert np.isnan(grid.slope[0, 0]) and grid.plateau is None

    def test_empty(self):
        with pytest.raises(EmptyGrid):
            persistence_sweep(halving(6), [])


class TestSandwich:
    def test_identity(self):
        v = sandwich_check(halving(16), halving(16), 0.3)
        assert v.passed and v.width == 0

    def test_small_shift(self, rng):
        f = halving(16)
        g = build_decay_matrix(np.clip(f.values + rng.uniform(-0.02, 0.02, (16, 16)), 0, None))
        v = sandwich_check(f, g, 0.3)
        assert v.passed and v.width == pytest.approx(f.sup_distance(g))

    def test_factors(self):
        f = halving(8)
        assert sandwich_check(f, f, 0.4, "dynamical", delta=0.1).width == pytest.approx(0.2)
        assert sandwich_check(f, f, 0.4, "correlation", delta=0.1).width == pytest.approx(0.3)

    def test_too_small(self):
        f = halving(8)
        with pytest.raises(EpsilonTooSmall):
            sandwich_check(f, f, 0.2, delta=0.1)

    def test_kind(self):
        with pytest.raises(UsageError):
            sandwich_check(halving(4), halving(4), 0.5, kind="other")


class TestPerturbationReport:
    def test_ghz_unchanged(self):
        m = corr_matrix(ghz(6)).matrix
        rep = perturbation_report(m, m, [2])
        assert rep.passed and rep.outside_max_change == 0

    def test_bell_local_break(self):
        before = corr_matrix(bell_pairs(8)).matrix
        raw = before.values.copy()
        raw[0, 1] = raw[1, 0] = 0
        rep = perturbation_report(before, build_decay_matrix(raw), [0, 1])
        assert rep.outside_equal and rep.profile_equal

    def test_outside_change_detected(self):
        before = corr_matrix(bell_pairs(8)).matrix
        raw = before.values.copy()
        raw[4, 5] = raw[5, 4] = 0
        rep = perturbation_report(before, build_decay_matrix(raw), [0, 1])
        assert not rep.outside_equal and not rep.passed
        assert rep.as_dict()["verdict"] == "FAIL"

    def test_fixed_scale_can_split_while_structure_holds(self):
        psi = ising_state(8, 0.5)
        before = corr_matrix(psi).matrix
        u = haar_unitary(4, np.random.default_rng([0, 5]))
        after = corr_matrix(apply_localized_perturbation(psi, [3, 4], u)).matrix
        rep = perturbation_report(before, after, [3, 4])
        assert rep.profile_equal and rep.profile_eps < 0.01
        assert rep.profile_equal_at_eps is False
