"""Attention statistics, LIME surrogates, and Shapley attributions.

The surrogate and attribution oracles are closed forms: linear models
have phi_i = w_i (x_i - b_i), the two-dim product model enumerates by
hand to (0.5, 0.5), and full-budget kernel regression must reproduce the
brute-force enumeration.
"""

import math

import numpy as np
import pytest

from warspeech.errors import ConfigError, DataError
from warspeech.interpret import (
    attention_summary,
    exact_shapley,
    extract_attention,
    global_shap_summary,
    kernel_shap,
    lime_explain,
)
from warspeech.nn.params import init_params
from warspeech.nn.spec import ModelSpec

# class-0 doc means {0.1, 0.2}, class-1 {0.5, 0.6}: |diff|=0.4 over
# pooled sd sqrt(0.005)
SEPARATION_ORACLE = 5.656854249492381


def _linear(w, c=0.0):
    w = np.asarray(w, dtype=np.float64)
    return lambda rows: rows @ w + c


def _quadratic(m, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=m)
    Q = rng.normal(size=(m, m))
    Q = (Q + Q.T) / 2.0
    return lambda rows: rows @ a + np.einsum("ni,ij,nj->n", rows, Q, rows)


class TestExtractAttention:
    def _spec(self, timesteps=3, input_dim=12):
        return ModelSpec(
            kind="lstm_attention",
            input_dim=input_dim,
            timesteps=timesteps,
            lstm_units=5,
            dense_units=4,
            seed=0,
        )

    def test_rows_are_distributions(self):
        spec = self._spec()
        params = init_params(spec, seed=0)
        X = np.random.default_rng(0).normal(size=(7, 12))
        att = extract_attention(spec, params, X, batch_size=2)
        assert att.shape == (7, 3)
        np.testing.assert_allclose(att.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(att >= 0)

    def test_single_timestep_is_all_ones(self):
        spec = self._spec(timesteps=1, input_dim=4)
        params = init_params(spec, seed=1)
        X = np.random.default_rng(1).normal(size=(5, 4))
        att = extract_attention(spec, params, X)
        np.testing.assert_array_equal(att, np.ones((5, 1)))

    def test_batching_does_not_change_rows(self):
        spec = self._spec()
        params = init_params(spec, seed=2)
        X = np.random.default_rng(2).normal(size=(9, 12))
        np.testing.assert_array_equal(
            extract_attention(spec, params, X, batch_size=4),
            extract_attention(spec, params, X, batch_size=256),
        )

    def test_wrong_kind_rejected(self):
        spec = ModelSpec(kind="lstm", input_dim=12, timesteps=3, lstm_units=5, seed=0)
        with pytest.raises(ConfigError, match="lstm_attention"):
            extract_attention(spec, init_params(spec, seed=0), np.zeros((1, 12)))

    def test_empty_input(self):
        spec = self._spec()
        params = init_params(spec, seed=0)
        assert extract_attention(spec, params, np.zeros((0, 12))).shape == (0, 3)


class TestAttentionSummary:
    def test_hand_worked_effect_size(self):
        means = np.array([0.1, 0.2, 0.5, 0.6])
        labels = np.array([0, 0, 1, 1])
        s = attention_summary(means, labels)
        assert s.separation == pytest.approx(SEPARATION_ORACLE, abs=1e-12)
        assert s.class_means[0] == pytest.approx(0.15)
        assert s.class_means[1] == pytest.approx(0.55)

    def test_uniform_attention_separates_nothing(self):
        att = np.full((10, 4), 0.25)
        labels = np.array([0, 1] * 5)
        s = attention_summary(att, labels)
        assert s.separation == 0.0
        # constant doc means fall back to widened bin edges
        assert s.bin_edges[0] < 0.25 < s.bin_edges[-1]

    def test_histogram_mass_per_class(self):
        # note full attention rows always average to 1/T; realistic inputs
        # here are means over a column slice, i.e. a 1-D vector
        rng = np.random.default_rng(3)
        means = rng.random(30)
        labels = rng.integers(0, 2, size=30)
        labels[:2] = [0, 1]
        s = attention_summary(means, labels, n_bins=7)
        assert len(s.bin_edges) == 8
        for cls in (0, 1):
            assert s.counts[cls].sum() == int(np.sum(labels == cls))
        assert s.bin_edges[0] == s.doc_means.min()
        assert s.bin_edges[-1] == s.doc_means.max()

    def test_separation_is_scale_invariant(self):
        rng = np.random.default_rng(4)
        means = rng.random(20)
        labels = rng.integers(0, 2, size=20)
        labels[:2] = [0, 1]
        a = attention_summary(means, labels).separation
        b = attention_summary(means * 37.5, labels).separation
        assert a == pytest.approx(b, rel=1e-12)

    def test_empty_class_rejected(self):
        with pytest.raises(DataError, match="class 0 has no documents"):
            attention_summary(np.array([0.1, 0.2]), np.array([1, 1]))

    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError):
            attention_summary(np.zeros((3, 2)), np.array([0, 1]))


class TestLime:
    def test_recovers_linear_weights_exactly(self):
        w = np.array([2.0, -1.0, 0.5, 3.0])
        x = np.array([1.0, 2.0, -1.0, 0.5])
        b = np.zeros(4)
        exp = lime_explain(_linear(w, c=0.3), x, b, enumerate_all=True, ridge=1e-10)
        np.testing.assert_allclose(exp.weights, w * x, atol=1e-6)
        assert exp.intercept == pytest.approx(0.3, abs=1e-6)
        assert exp.fidelity > 0.999999

    def test_nonzero_background_shifts_the_closed_form(self):
        w = np.array([1.5, -2.0, 0.25])
        x = np.array([2.0, 1.0, -3.0])
        b = np.array([0.5, -0.5, 1.0])
        exp = lime_explain(_linear(w), x, b, enumerate_all=True, ridge=1e-10)
        np.testing.assert_allclose(exp.weights, w * (x - b), atol=1e-6)

    def test_selected_ranked_by_absolute_weight(self):
        w = np.array([0.1, -5.0, 2.0, 7.0])
        x = np.ones(4)
        b = np.array([0.0, 0.0, 0.0, 1.0])  # dim 3 dead despite its big w
        exp = lime_explain(_linear(w), x, b, enumerate_all=True, ridge=1e-10)
        assert [i for i, _ in exp.selected] == [1, 2, 0]

    def test_background_valued_dim_gets_zero(self):
        w = np.array([1.0, 1.0, 1.0])
        x = np.array([1.0, 0.5, 2.0])
        b = np.array([0.0, 0.5, 0.0])  # dim 1 is dead
        exp = lime_explain(_linear(w), x, b, enumerate_all=True)
        assert exp.weights[1] == 0.0
        assert all(i != 1 for i, _ in exp.selected)

    def test_constant_function(self):
        exp = lime_explain(lambda rows: np.full(rows.shape[0], 0.7),
                           np.ones(3), np.zeros(3), enumerate_all=True)
        np.testing.assert_allclose(exp.weights, 0.0, atol=1e-9)
        assert exp.intercept == pytest.approx(0.7, abs=1e-9)
        assert exp.fidelity == 1.0

    def test_sampled_masks_are_deterministic(self):
        f = _linear(np.array([1.0, -2.0]))
        x, b = np.ones(2), np.zeros(2)
        a = lime_explain(f, x, b, n_samples=64, seed=5)
        c = lime_explain(f, x, b, n_samples=64, seed=5)
        np.testing.assert_array_equal(a.weights, c.weights)
        assert a.params["n_samples"] == 64

    def test_degenerate_sampling_detected(self):
        # rng(45).integers(0, 2, (10, 1)) draws ten identical masks
        f = _linear(np.array([1.0]))
        with pytest.raises(DataError, match="degenerate sampling"):
            lime_explain(f, np.ones(1), np.zeros(1), n_samples=10, seed=45)

    def test_guards(self):
        f = _linear(np.ones(13))
        with pytest.raises(ConfigError, match="full enumeration"):
            lime_explain(f, np.ones(13), np.zeros(13), enumerate_all=True)
        with pytest.raises(ConfigError, match="n_samples"):
            lime_explain(_linear(np.ones(2)), np.ones(2), np.zeros(2), n_samples=5)
        with pytest.raises(ConfigError):
            lime_explain(_linear(np.ones(2)), np.ones(2), np.zeros(3))

    def test_kernel_width_default_recorded(self):
        exp = lime_explain(_linear(np.ones(4)), np.ones(4), np.zeros(4), enumerate_all=True)
        assert exp.params["kernel_width"] == pytest.approx(0.75 * math.sqrt(4))


class TestExactShapley:
    def test_two_dim_product_by_hand(self):
        # f(v) = v0*v1 with x=(1,1), b=(0,0): both orders give one player
        # the full credit, so each averages to 0.5
        f = lambda rows: rows[:, 0] * rows[:, 1]
        phi = exact_shapley(f, np.ones(2), np.zeros(2))
        np.testing.assert_allclose(phi, [0.5, 0.5], atol=1e-12)

    def test_linear_closed_form(self):
        rng = np.random.default_rng(7)
        for m in (2, 5, 9):
            w, x, b = rng.normal(size=m), rng.normal(size=m), rng.normal(size=m)
            phi = exact_shapley(_linear(w, c=1.2), x, b)
            np.testing.assert_allclose(phi, w * (x - b), atol=1e-9)

    def test_single_dim_is_the_score_difference(self):
        f = lambda rows: np.sin(rows[:, 0])
        phi = exact_shapley(f, np.array([2.0]), np.array([0.5]))
        assert phi[0] == pytest.approx(math.sin(2.0) - math.sin(0.5), abs=1e-12)

    def test_efficiency_on_random_quadratics(self):
        rng = np.random.default_rng(8)
        for m in (3, 6):
            f = _quadratic(m, seed=m)
            x, b = rng.normal(size=m), rng.normal(size=m)
            phi = exact_shapley(f, x, b)
            fx = float(f(x[None, :])[0])
            fb = float(f(b[None, :])[0])
            assert phi.sum() == pytest.approx(fx - fb, abs=1e-9)

    def test_dimension_cap(self):
        with pytest.raises(ConfigError, match="12"):
            exact_shapley(_linear(np.ones(13)), np.ones(13), np.zeros(13))


class TestKernelShap:
    def test_linear_closed_form(self):
        w = np.array([2.0, -3.0, 0.5, 1.0])
        x = np.array([1.0, 0.5, -2.0, 3.0])
        b = np.array([0.0, 1.0, 0.0, -1.0])
        phi, base = kernel_shap(_linear(w, c=0.1), x, b)
        np.testing.assert_allclose(phi, w * (x - b), atol=1e-9)
        assert base == pytest.approx(float(w @ b) + 0.1, abs=1e-12)

    def test_full_budget_matches_enumeration(self):
        rng = np.random.default_rng(9)
        for case in range(8):
            m = int(rng.integers(3, 9))
            f = _quadratic(m, seed=100 + case)
            x, b = rng.normal(size=m), rng.normal(size=m)
            exact = exact_shapley(f, x, b)
            approx, _ = kernel_shap(f, x, b, n_coalitions=2**m)
            np.testing.assert_allclose(approx, exact, atol=1e-6)

    def test_symmetric_players_get_equal_credit(self):
        f = lambda rows: rows[:, 0] + rows[:, 1] + 0.5 * rows[:, 2]
        phi, _ = kernel_shap(f, np.array([1.0, 1.0, 2.0]), np.zeros(3))
        assert phi[0] == pytest.approx(phi[1], abs=1e-9)

    def test_efficiency_holds_on_the_sampled_path(self):
        m = 12
        f = _quadratic(m, seed=11)
        rng = np.random.default_rng(12)
        x, b = rng.normal(size=m), rng.normal(size=m)
        phi, base = kernel_shap(f, x, b, n_coalitions=200, seed=0)
        fx = float(f(x[None, :])[0])
        assert base + phi.sum() == pytest.approx(fx, abs=1e-9)

    def test_dummy_dims_get_exact_zero(self):
        w = np.array([1.0, 2.0, 3.0])
        x = np.array([1.0, 0.5, 1.0])
        b = np.array([0.0, 0.5, 0.0])
        phi, _ = kernel_shap(_linear(w), x, b)
        assert phi[1] == 0.0

    def test_single_live_dim_gets_the_whole_delta(self):
        w = np.array([2.0, 1.0])
        x = np.array([3.0, 0.5])
        b = np.array([1.0, 0.5])
        phi, base = kernel_shap(_linear(w), x, b)
        assert phi[0] == pytest.approx(2.0 * 2.0, abs=1e-12)
        assert phi[1] == 0.0

    def test_guards(self):
        with pytest.raises(ConfigError, match="at least 2"):
            kernel_shap(_linear(np.ones(1)), np.ones(1), np.zeros(1))
        with pytest.raises(ConfigError, match="n_coalitions"):
            kernel_shap(_linear(np.ones(4)), np.ones(4), np.zeros(4), n_coalitions=5)


class TestGlobalSummary:
    def test_ranking_uses_only_label_one_rows(self):
        phi = np.array([
            [9.0, 0.0, 0.0],   # label 0: would dominate if counted
            [0.1, 0.5, 0.2],   # label 1
            [0.3, 0.5, 0.4],   # label 1
        ])
        g = global_shap_summary(phi, [0, 1, 1])
        np.testing.assert_allclose(g.mean_abs_phi, [0.2, 0.5, 0.3])
        assert g.ranking == [1, 2, 0]

    def test_ties_break_toward_lower_dim(self):
        phi = np.array([[0.5, 0.5, 0.1]])
        g = global_shap_summary(phi, [1])
        assert g.ranking == [0, 1, 2]

    def test_no_positive_rows_rejected(self):
        with pytest.raises(DataError, match="label-1"):
            global_shap_summary(np.ones((2, 3)), [0, 0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError):
            global_shap_summary(np.ones((2, 3)), [1])
