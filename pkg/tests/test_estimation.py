import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from narx_mss.data import Dataset
from narx_mss.dictionary import (DictionaryConfig, build_dictionary, build_regression_matrix,
                                 parse_term, target)
from narx_mss.estimation import (CandidateModel, estimate, free_run_simulation, least_squares,
                                 one_step_ahead, prune_insignificant, refine_to_fixpoint,
                                 residual_variance, rms_error, rrse, significance,
                                 standard_errors, t_critical, t_test)
from narx_mss.exceptions import DegenerateTarget, Diverged, EmptyModel, SingularModel
from narx_mss.systems import SYSTEMS, generate, simulate

S1_TERMS = ["y(k-1)", "y(k-2)", "x1(k-1)", "x1(k-2)"]
S2_TERMS = ["y(k-1)", "x1(k-1)", "x1(k-1)^2", "x1(k-1)^3"]
S5_TERMS = ["y(k-1)*x1(k-1)", "y(k-2)", "x1(k-2)^2", "y(k-2)*x1(k-2)^2"]


@pytest.fixture
def linear_dictionary():
    return build_dictionary(DictionaryConfig(n_y=2, n_x=(2,), degree=1))


def mask_of(dictionary, names):
    return dictionary.mask_for(parse_term(name) for name in names)


def noise_free_s1(rng, n=500):
    x = rng.uniform(-2.0, 2.0, n)
    return Dataset(x[:, None], simulate(SYSTEMS["S1"], x, np.zeros(n)))


class TestLeastSquares:
    def test_identity(self):
        assert_allclose(least_squares(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_against_pseudo_inverse(self, rng):
        psi = rng.normal(size=(50, 4))
        y = rng.normal(size=50)
        assert_allclose(least_squares(psi, y), np.linalg.pinv(psi) @ y, rtol=1e-8)

    def test_residuals_are_orthogonal_to_the_columns(self, rng):
        psi = rng.normal(size=(80, 5))
        y = rng.normal(size=80)
        theta = least_squares(psi, y)
        assert np.max(np.abs(psi.T @ (y - psi @ theta))) < 1e-6 * np.linalg.norm(y)

    def test_recovers_s1_from_noise_free_data(self, rng, linear_dictionary):
        dataset = noise_free_s1(rng)
        model = estimate(mask_of(linear_dictionary, S1_TERMS), linear_dictionary, dataset)
        assert_allclose(model.theta, [-1.7, -0.8, 1.0, 0.81], atol=1e-6)

    def test_rank_deficient(self, rng):
        column = rng.normal(size=30)
        with pytest.raises(SingularModel):
            least_squares(np.column_stack([column, 2 * column]), rng.normal(size=30))

    def test_square_system_is_solved_exactly(self, rng):
        psi = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        theta = np.array([1.0, -2.0, 0.5, 3.0])
        assert_allclose(least_squares(psi, psi @ theta), theta, rtol=1e-10)

    def test_too_few_rows(self):
        with pytest.raises(SingularModel):
            least_squares(np.ones((2, 3)), [1.0, 2.0])


def test_candidate_checks_parameter_count():
    with pytest.raises(ValueError):
        CandidateModel(mask=[True, False, True], theta=[1.0])


class TestFreeRun:
    def test_pure_input_model_shifts_the_input(self, rng):
        dictionary = build_dictionary(DictionaryConfig(n_y=1, n_x=(1,), degree=1))
        x = rng.normal(size=50)
        dataset = Dataset(x[:, None], rng.normal(size=50))
        model = CandidateModel(mask=mask_of(dictionary, ["x1(k-1)"]), theta=[1.0])
        assert_array_equal(free_run_simulation(model, dictionary, dataset), x[:-1])

    def test_true_s1_model_reproduces_noise_free_output(self, rng, linear_dictionary):
        dataset = noise_free_s1(rng)
        model = CandidateModel(mask=mask_of(linear_dictionary, S1_TERMS),
                               theta=SYSTEMS["S1"].true_theta)
        y_hat = free_run_simulation(model, linear_dictionary, dataset)
        assert rrse(target(dataset, linear_dictionary), y_hat) < 1e-3

    def test_uses_simulated_not_measured_outputs(self, linear_dictionary):
        dataset = Dataset(np.zeros((6, 1)), [1.0, 1.0, 5.0, 5.0, 5.0, 5.0])
        model = CandidateModel(mask=mask_of(linear_dictionary, ["y(k-1)"]), theta=[0.5])
        assert_allclose(free_run_simulation(model, linear_dictionary, dataset),
                        [0.5, 0.25, 0.125, 0.0625])
        assert_allclose(one_step_ahead(model, linear_dictionary, dataset),
                        [0.5, 2.5, 2.5, 2.5])

    def test_unstable_model_diverges(self, linear_dictionary):
        dataset = Dataset(np.zeros((100, 1)), np.ones(100))
        model = CandidateModel(mask=mask_of(linear_dictionary, ["y(k-1)"]), theta=[2.0])
        with pytest.raises(Diverged):
            free_run_simulation(model, linear_dictionary, dataset)

    def test_empty_model(self, linear_dictionary, tiny_dataset):
        model = CandidateModel(mask=np.zeros(len(linear_dictionary), dtype=bool), theta=[])
        with pytest.raises(EmptyModel):
            free_run_simulation(model, linear_dictionary, tiny_dataset)


class TestMetrics:
    def test_rrse_values(self):
        y = np.array([1.0, 2.0, 3.0, 4.0])
        assert rrse(y, y) == 0.0
        assert rrse(y, np.full(4, y.mean())) == pytest.approx(1.0)
        assert rrse(y, [1.0, 2.0, 3.0, 5.0]) == pytest.approx(1 / np.sqrt(5))

    def test_rrse_is_scale_invariant(self, rng):
        y, y_hat = rng.normal(size=20), rng.normal(size=20)
        assert rrse(-3.5 * y, -3.5 * y_hat) == pytest.approx(rrse(y, y_hat))

    def test_rrse_constant_target(self):
        with pytest.raises(DegenerateTarget):
            rrse(np.ones(5), np.zeros(5))

    def test_rms_error(self, rng):
        assert rms_error([0.0, 0.0], [1.0, 1.0]) == 1.0
        y, y_hat = rng.normal(size=30), rng.normal(size=30)
        total = 0.0
        for a, b in zip(y, y_hat):
            total += (a - b) ** 2
        assert rms_error(y, y_hat) == pytest.approx(np.sqrt(total / 30), rel=1e-12)

    def test_residual_variance(self):
        psi = np.ones((4, 1))
        assert residual_variance(psi, np.array([1.0, -1.0, 1.0, -1.0]), np.zeros(1)) == pytest.approx(4 / 3)
        assert residual_variance(psi, np.full(4, 2.0), np.array([2.0])) == 0.0

    def test_residual_variance_matches_s1_noise(self, s1_data, linear_dictionary):
        mask = mask_of(linear_dictionary, S1_TERMS)
        model = estimate(mask, linear_dictionary, s1_data)
        psi = build_regression_matrix(s1_data, linear_dictionary, mask)
        sigma2 = residual_variance(psi, target(s1_data, linear_dictionary), model.theta)
        assert 1e-4 / 1.5 < sigma2 < 1e-4 * 1.5


class TestStandardErrors:
    def test_identity(self):
        assert_allclose(standard_errors(np.eye(3), 4.0), [2.0, 2.0, 2.0])

    def test_orthogonal_columns(self, rng):
        q, _ = np.linalg.qr(rng.normal(size=(20, 3)))
        assert_allclose(standard_errors(np.sqrt(10) * q, 1.0), np.full(3, 1 / np.sqrt(10)))

    def test_against_full_inverse(self, rng):
        psi = rng.normal(size=(40, 5))
        expected = np.sqrt(0.3 * np.diag(np.linalg.inv(psi.T @ psi)))
        assert_allclose(standard_errors(psi, 0.3), expected, rtol=1e-10)

    def test_singular(self, rng):
        column = rng.normal(size=10)
        with pytest.raises(SingularModel):
            standard_errors(np.column_stack([column, column]), 1.0)


class TestTTest:
    def test_critical_value_from_tables(self):
        assert t_critical(0.05, 10) == pytest.approx(2.2281, abs=1e-3)
        assert t_critical(0.05, 100) == pytest.approx(1.984, abs=1e-3)

    @pytest.mark.parametrize("alpha", [0.01, 0.05, 0.2])
    @pytest.mark.parametrize("dof", [1, 3, 30, 495])
    def test_critical_value_against_scipy(self, alpha, dof):
        assert t_critical(alpha, dof) == pytest.approx(stats.t.ppf(1 - alpha / 2, dof), abs=1e-6)

    def test_critical_value_monotonicity(self):
        by_dof = [t_critical(0.05, dof) for dof in (1, 2, 5, 20, 200)]
        assert all(a > b for a, b in zip(by_dof, by_dof[1:]))
        by_alpha = [t_critical(alpha, 20) for alpha in (0.2, 0.1, 0.05, 0.01)]
        assert all(a < b for a, b in zip(by_alpha, by_alpha[1:]))

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            t_critical(0.0, 10)
        with pytest.raises(ValueError):
            t_critical(0.05, 0)

    def test_zero_parameters_are_never_rejected(self, rng):
        report = t_test(np.zeros(4), rng.uniform(0.1, 1.0, 4), 0.05, 10)
        assert not report.reject_null.any()

    def test_large_t_value_is_rejected(self):
        report = t_test(np.array([5.0]), np.array([1.0]), 0.05, 100)
        assert report.t0[0] == 5.0
        assert report.reject_null[0]

    def test_zero_standard_error(self):
        report = t_test(np.array([1.0, 0.0]), np.zeros(2), 0.05, 10)
        assert_array_equal(report.reject_null, [True, False])

    def test_significance_of_true_s1_terms(self, s1_data, linear_dictionary):
        mask = mask_of(linear_dictionary, S1_TERMS)
        model = estimate(mask, linear_dictionary, s1_data)
        psi = build_regression_matrix(s1_data, linear_dictionary, mask)
        report = significance(psi, target(s1_data, linear_dictionary), model.theta, 0.05)
        assert report.reject_null.all()


class TestPruning:
    def test_all_significant_model_is_unchanged(self, s1_data, linear_dictionary):
        model = estimate(mask_of(linear_dictionary, S1_TERMS), linear_dictionary, s1_data)
        pruned, n_redundant = prune_insignificant(model, linear_dictionary, s1_data)
        assert n_redundant == 0
        assert_array_equal(pruned.mask, model.mask)
        assert_allclose(pruned.theta, model.theta)

    def test_spurious_regressor_is_usually_removed(self):
        dictionary = build_dictionary(DictionaryConfig(n_y=1, n_x=(3,), degree=3))
        spurious = parse_term("x1(k-3)")
        mask = mask_of(dictionary, S2_TERMS + ["x1(k-3)"])
        true_mask = mask_of(dictionary, S2_TERMS)
        removed = 0
        for seed in range(40):
            dataset = generate("S2", n_samples=500, seed=seed)
            model = estimate(mask, dictionary, dataset)
            pruned, n_redundant = prune_insignificant(model, dictionary, dataset)
            assert pruned.theta.size == pruned.n_terms
            assert pruned.n_terms == 5 - n_redundant
            assert np.all(pruned.mask[true_mask])
            if not pruned.mask[dictionary.index(spurious)]:
                removed += 1
        assert removed >= 34

    def test_s5_process_terms_survive_random_extras(self):
        dictionary = build_dictionary(DictionaryConfig(n_y=2, n_x=(2,), degree=3))
        true_mask = mask_of(dictionary, S5_TERMS)
        picker = np.random.default_rng(2024)
        for seed in range(5):
            extras = picker.choice(np.flatnonzero(~true_mask), size=4, replace=False)
            mask = true_mask.copy()
            mask[extras] = True
            dataset = generate("S5", seed=seed)
            refined, removed = refine_to_fixpoint(estimate(mask, dictionary, dataset), dictionary, dataset)
            assert np.all(refined.mask[true_mask])
            assert refined.n_terms + removed == 8

    def test_irrelevant_only_model_is_empty(self, rng):
        dictionary = build_dictionary(DictionaryConfig(n_y=1, n_x=(1,), degree=1))
        x = rng.normal(size=100)
        y = rng.normal(size=100)
        column = x[:-1]
        y[1:] -= (column @ y[1:]) / (column @ column) * column
        dataset = Dataset(x[:, None], y)
        model = estimate(mask_of(dictionary, ["x1(k-1)"]), dictionary, dataset)
        with pytest.raises(EmptyModel):
            prune_insignificant(model, dictionary, dataset)

    def test_refinement_keeps_a_significant_model(self, s1_data, linear_dictionary):
        model = estimate(mask_of(linear_dictionary, S1_TERMS), linear_dictionary, s1_data)
        refined, removed = refine_to_fixpoint(model, linear_dictionary, s1_data)
        assert removed == 0
        assert refined.n_terms == 4

    def test_refinement_ends_with_every_term_significant(self, s2_data):
        dictionary = build_dictionary(DictionaryConfig(n_y=2, n_x=(2,), degree=2))
        model = estimate(np.ones(len(dictionary), dtype=bool), dictionary, s2_data)
        refined, removed = refine_to_fixpoint(model, dictionary, s2_data)
        assert refined.n_terms + removed == len(dictionary)
        _, again = prune_insignificant(refined, dictionary, s2_data)
        assert again == 0

    def test_refinement_flags_a_model_it_cannot_empty(self, rng):
        dictionary = build_dictionary(DictionaryConfig(n_y=1, n_x=(1,), degree=1))
        x = rng.normal(size=100)
        y = rng.normal(size=100)
        column = x[:-1]
        y[1:] -= (column @ y[1:]) / (column @ column) * column
        dataset = Dataset(x[:, None], y)
        model = estimate(mask_of(dictionary, ["x1(k-1)"]), dictionary, dataset)
        refined, removed = refine_to_fixpoint(model, dictionary, dataset)
        assert removed == 0
        assert refined.n_terms == 1
        assert refined.extras["n_insignificant"] == 1

    def test_significant_refinement_sets_no_flag(self, s1_data, linear_dictionary):
        model = estimate(mask_of(linear_dictionary, S1_TERMS), linear_dictionary, s1_data)
        refined, _ = refine_to_fixpoint(model, linear_dictionary, s1_data)
        assert "n_insignificant" not in refined.extras
