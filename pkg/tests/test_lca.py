import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcavarsel import lca as lca_mod
from lcavarsel.data import from_codes
from lcavarsel.lca import (
    FitConfig,
    FitFailure,
    LcaModel,
    best_lca_over_g,
    classify,
    compress_rows,
    fit_lca,
    max_identifiable_g,
    n_free_params,
)
from lcavarsel.simgen import ScenarioSpec, generate

from conftest import random_dataset
from oracles import independence_bic, oracle_lca_loglik


class TestIdentifiability:
    @pytest.mark.parametrize(
        "cats, g_max, expected",
        [
            ((2, 3, 3, 4), 10, 7),
            ((2,) * 11, 200, 170),
            ((2,), 5, 1),
            ((2, 2, 2), 5, 1),  # 8 > 4G fails at G = 2
            ((2, 2, 2, 2), 5, 3),
            ((2, 3, 3, 4), 5, 5),
        ],
    )
    def test_bound(self, cats, g_max, expected):
        assert max_identifiable_g(cats, g_max) == expected

    def test_uncapped(self):
        assert max_identifiable_g((2, 3, 3, 4)) == 7

    def test_empty(self):
        with pytest.raises(ValueError):
            max_identifiable_g([])

    def test_parameter_count(self):
        assert n_free_params((2, 3, 3, 4), 3) == 2 + 3 * 8


class TestFitLca:
    def test_one_binary_variable_closed_form(self):
        codes = np.array([[0]] * 13 + [[1]] * 27)
        m = fit_lca(from_codes(codes), [0], 1)
        assert m.loglik == pytest.approx(13 * math.log(13 / 40) + 27 * math.log(27 / 40), abs=1e-10)
        np.testing.assert_allclose(m.theta[0][0], [13 / 40, 27 / 40], atol=1e-10)
        assert m.n_params == 1
        assert m.bic == pytest.approx(2 * m.loglik - math.log(40))

    def test_g1_matches_independence_bic(self, rng):
        d = random_dataset(rng, 150, [2, 3, 4, 2])
        m = fit_lca(d, range(4), 1)
        assert m.bic == pytest.approx(independence_bic(d.codes, d.n_categories), abs=1e-8)

    def test_reported_loglik_matches_oracle(self, rng, fast_fit):
        d = random_dataset(rng, 120, [2, 3, 3, 2, 2])
        m = fit_lca(d, range(5), 2, fast_fit)
        tau = m.tau.tolist()
        assert oracle_lca_loglik(d, tau, [t.tolist() for t in m.theta]) == pytest.approx(m.loglik, abs=1e-8)

    def test_parameters_are_distributions(self, rng, fast_fit):
        d = random_dataset(rng, 100, [3, 3, 2, 4])
        m = fit_lca(d, range(4), 3, fast_fit)
        assert m.tau.sum() == pytest.approx(1.0)
        for t in m.theta:
            assert t.shape[0] == 3
            np.testing.assert_allclose(t.sum(axis=1), 1.0)
        np.testing.assert_allclose(m.posterior.sum(axis=1), 1.0)
        assert m.posterior.shape == (100, 3)

    def test_scenario1_mixing_recovery(self):
        sim = generate(ScenarioSpec(1, 1000, seed=17))
        m = fit_lca(sim.dataset, range(4), 3)
        np.testing.assert_allclose(np.sort(m.tau), [0.2, 0.3, 0.5], atol=0.05)

    def test_identical_rows_prefer_one_class(self):
        d = from_codes(np.zeros((50, 4), int), [2, 2, 2, 2])
        one = fit_lca(d, range(4), 1)
        two = fit_lca(d, range(4), 2)
        assert one.bic > two.bic

    def test_bound_enforced(self, rng):
        d = random_dataset(rng, 30, [2, 2, 2])
        with pytest.raises(ValueError, match="identifiability"):
            fit_lca(d, range(3), 2)
        m = fit_lca(d, range(3), 2, enforce_bound=False)
        assert m.g == 2

    def test_invalid_arguments(self, rng):
        d = random_dataset(rng, 30, [2, 2])
        with pytest.raises(ValueError):
            fit_lca(d, [], 1)
        with pytest.raises(ValueError):
            fit_lca(d, [0], 0)

    def test_all_restarts_degenerate(self, rng, monkeypatch):
        d = random_dataset(rng, 60, [2, 2, 2, 2])
        real = lca_mod._backend.run_em

        def vanishing(*args):
            tau, theta, post, lls, conv = real(*args)
            tau = np.r_[1e-6, np.ones(tau.size - 1)]
            return tau / tau.sum(), theta, post, lls, conv

        monkeypatch.setattr(lca_mod._backend, "run_em", vanishing)
        with pytest.raises(FitFailure):
            fit_lca(d, range(4), 2, FitConfig(n_restarts=3))
        # one class never counts as degenerate
        assert fit_lca(d, range(4), 1).g == 1

    def test_deterministic(self, rng, fast_fit):
        d = random_dataset(rng, 80, [3, 2, 3, 2])
        a = fit_lca(d, range(4), 2, fast_fit)
        b = fit_lca(d, range(4), 2, fast_fit)
        assert a.loglik == b.loglik
        np.testing.assert_array_equal(a.posterior, b.posterior)

    def test_restart_dominance(self, rng):
        for seed in range(5):
            d = random_dataset(rng, 100, [3, 3, 2, 2])
            one = fit_lca(d, range(4), 3, FitConfig(n_restarts=1, seed=seed))
            many = fit_lca(d, range(4), 3, FitConfig(n_restarts=8, seed=seed))
            assert many.loglik >= one.loglik - 1e-12
            assert many.restart_logliks[0] == one.loglik

    def test_category_permutation_invariance(self, rng, fast_fit):
        d = random_dataset(rng, 90, [3, 2, 4, 2])
        m = fit_lca(d, range(4), 2, fast_fit)
        codes = d.codes.copy()
        perm = np.array([2, 3, 0, 1])
        codes[:, 2] = perm[codes[:, 2]]
        m2 = fit_lca(from_codes(codes, d.n_categories), range(4), 2, fast_fit)
        assert m2.loglik == pytest.approx(m.loglik, abs=1e-6)
        assert m2.bic == pytest.approx(m.bic, abs=1e-6)

    def test_to_dict(self, rng):
        d = random_dataset(rng, 40, [2, 3])
        out = fit_lca(d, [1, 0], 1).to_dict(d.var_names)
        assert out["vars"] == ["X2", "X1"]
        assert out["g"] == 1 and len(out["theta"]) == 1


class TestEmMonotonicity:
    @settings(max_examples=40, deadline=None)
    @given(
        seed=st.integers(0, 2**31),
        n=st.integers(5, 200),
        cats=st.lists(st.integers(2, 4), min_size=2, max_size=5),
        g=st.integers(1, 4),
    )
    def test_loglik_never_decreases(self, seed, n, cats, g):
        d = random_dataset(np.random.default_rng(seed), max(n, 4), cats)
        m = fit_lca(d, range(len(cats)), g, FitConfig(n_restarts=1, seed=seed), enforce_bound=False)
        assert np.all(np.diff(m.loglik_trace) >= -1e-8)
        assert m.loglik == m.loglik_trace[-1]


class TestBestOverG:
    def test_single_binary_variable(self, rng):
        d = random_dataset(rng, 50, [2])
        assert best_lca_over_g(d, [0], 5).g == 1

    def test_selects_max_bic(self, rng, fast_fit):
        d = random_dataset(rng, 80, [3, 3, 3])
        best = best_lca_over_g(d, range(3), 5, fast_fit)
        for g in range(1, max_identifiable_g([3, 3, 3], 5) + 1):
            assert best.bic >= fit_lca(d, range(3), g, fast_fit).bic

    def test_scenario1_chooses_three_classes(self, scenario1_1000):
        assert best_lca_over_g(scenario1_1000.dataset, range(4), 5).g == 3

    def test_cache_reuse(self, rng, fast_fit):
        d = random_dataset(rng, 80, [3, 3, 3])
        cache = {}
        a = best_lca_over_g(d, [2, 0, 1], 4, fast_fit, cache=cache)
        assert ((0, 1, 2), 1) in cache
        b = best_lca_over_g(d, [0, 1, 2], 4, fast_fit, cache=cache)
        assert a is b

    def test_g_min(self, rng, fast_fit):
        d = random_dataset(rng, 80, [3, 3, 3])
        assert best_lca_over_g(d, range(3), 4, fast_fit, g_min=2).g >= 2


def _model_with_posterior(post):
    post = np.asarray(post, float)
    g = post.shape[1]
    return LcaModel((0,), g, np.full(g, 1 / g), (np.full((g, 2), 0.5),), 0.0, 1, post.shape[0], post)


class TestClassify:
    def test_argmax(self):
        assert classify(_model_with_posterior([[0.2, 0.7, 0.1]]))[0] == 1

    def test_tie_goes_to_first_class(self):
        assert classify(_model_with_posterior([[0.5, 0.5]]))[0] == 0

    def test_one_class(self, rng):
        d = random_dataset(rng, 20, [2, 2])
        assert set(classify(fit_lca(d, range(2), 1)).tolist()) == {0}


def test_compress_rows():
    codes = np.array([[0, 1], [1, 0], [0, 1], [1, 1], [1, 0]])
    patterns, counts, inverse = compress_rows(codes, [2, 2])
    np.testing.assert_array_equal(patterns[inverse], codes)
    assert counts.sum() == 5
    assert sorted(counts.tolist()) == [1, 2, 2]
