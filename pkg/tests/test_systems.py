from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from narx_mss.dictionary import DictionaryConfig, build_dictionary, build_regression_matrix, target
from narx_mss.exceptions import ConfigError, Diverged
from narx_mss.systems import (SYSTEMS, SimulatedSystem, generate, generate_classification,
                              get_system, simulate)


def recurse(step, x):
    y = [0.0] * len(x)
    for k in range(len(x)):
        def y_past(lag, k=k):
            return y[k - lag] if k >= lag else 0.0

        def x_past(lag, k=k):
            return x[k - lag] if k >= lag else 0.0

        y[k] = step(y_past, x_past)
    return np.array(y)


SCALAR_STEPS = {
    "S1": lambda y, x: -1.7 * y(1) - 0.8 * y(2) + x(1) + 0.81 * x(2),
    "S2": lambda y, x: 0.8 * y(1) + 0.4 * x(1) + 0.4 * x(1) ** 2 + 0.4 * x(1) ** 3,
    "S3": lambda y, x: (0.2 * y(1) ** 3 + 0.7 * y(1) * x(1) + 0.6 * x(2) ** 2
                        - 0.7 * y(2) * x(2) ** 2 - 0.5 * y(2)),
    "S4": lambda y, x: 0.7 * y(1) * x(1) - 0.5 * y(2) + 0.6 * x(2) ** 2 - 0.7 * y(2) * x(2) ** 2,
    "S5": lambda y, x: 0.7 * y(1) * x(1) - 0.5 * y(2) + 0.6 * x(2) ** 2 - 0.7 * y(2) * x(2) ** 2,
    "S6": lambda y, x: 0.75 * y(2) + 0.25 * x(2) - 0.2 * y(2) * x(2),
}


def test_s1_impulse_response():
    x = np.zeros(6)
    x[0] = 1.0
    y = simulate(get_system("S1"), x, np.zeros(6))
    assert_allclose(y[:5], [0.0, 1.0, -0.89, 0.713, -0.5001])


def test_impulse_responses_by_hand():
    impulse = np.zeros(10)
    impulse[0] = 1.0
    s2 = simulate(get_system("S2"), impulse, np.zeros(10))
    assert_allclose(s2[1:], 1.2 * 0.8 ** np.arange(9))
    s3 = simulate(get_system("S3"), impulse, np.zeros(10))
    assert_allclose(s3[:4], [0.0, 0.0, 0.6, 0.2 * 0.6 ** 3])
    s6 = simulate(get_system("S6"), impulse, np.zeros(10))
    assert_allclose(s6[:6], [0.0, 0.0, 0.25, 0.0, 0.1875, 0.0])


@pytest.mark.parametrize("system_id", sorted(SCALAR_STEPS))
@pytest.mark.parametrize("drive", ["impulse", "wave"])
def test_ten_steps_match_the_scalar_recursion(system_id, drive):
    if drive == "impulse":
        x = np.zeros(10)
        x[0] = 1.0
    else:
        x = 0.8 * np.sin(1.3 * np.arange(10)) + 0.1
    y = simulate(get_system(system_id), x, np.zeros(10))
    assert_allclose(y, recurse(SCALAR_STEPS[system_id], x.tolist()), rtol=1e-12, atol=1e-15)


INPUT_VARIANCE = {"S1": 4.0 / 3.0, "S2": 0.3 ** 2, "S3": 1.0 / 3.0, "S4": 1.0 / 3.0, "S5": 1.0 / 3.0,
                  "S6": 0.25 ** 2}


@pytest.mark.parametrize("system_id", sorted(INPUT_VARIANCE))
def test_input_and_noise_moments(system_id):
    system = get_system(system_id)
    dataset = generate(system_id, n_samples=10_000, seed=11)
    x = dataset.inputs[:, 0]
    assert x.var() == pytest.approx(INPUT_VARIANCE[system_id], rel=0.2)
    assert abs(x.mean()) < 0.05 * np.sqrt(INPUT_VARIANCE[system_id]) + 0.02
    assert np.all(np.isfinite(dataset.output))
    if system.moving_average is None:
        dictionary = build_dictionary(DictionaryConfig(n_y=2, n_x=(2,), degree=3))
        indices = [dictionary.index(term) for term in system.true_terms]
        mask = np.zeros(len(dictionary), dtype=bool)
        mask[indices] = True
        psi = build_regression_matrix(dataset, dictionary, mask)
        residual = target(dataset, dictionary) - psi @ system.true_theta[np.argsort(indices)]
        assert residual.std() == pytest.approx(system.noise_std, rel=0.05)


def test_true_structures():
    s2 = get_system("S2")
    assert [str(t) for t in s2.true_terms] == ["y(k-1)", "x1(k-1)", "x1(k-1)^2", "x1(k-1)^3"]
    assert_array_equal(s2.true_theta, [0.8, 0.4, 0.4, 0.4])
    assert get_system("S6").max_lag == 2
    assert set(SYSTEMS) == {"S1", "S2", "S3", "S4", "S5", "S6"}


def test_unknown_system():
    with pytest.raises(ConfigError):
        get_system("S9")
    with pytest.raises(ConfigError):
        generate_classification("C3")


def test_generate_discards_the_warmup():
    dataset = generate("S1", n_samples=100, seed=5, warmup=50)
    rng = np.random.default_rng(5)
    x = rng.uniform(-2.0, 2.0, 150)
    e = rng.normal(0.0, 0.01, 150)
    y = simulate(get_system("S1"), x, e)
    assert dataset.n_samples == 100
    assert_array_equal(dataset.inputs[:, 0], x[50:])
    assert_array_equal(dataset.output, y[50:])


def test_generate_is_seeded():
    assert_array_equal(generate("S3", 200, seed=1).output, generate("S3", 200, seed=1).output)
    assert not np.array_equal(generate("S3", 200, seed=1).output, generate("S3", 200, seed=2).output)


def test_input_laws():
    s1 = generate("S1", 2000, seed=0)
    assert s1.inputs.min() >= -2.0 and s1.inputs.max() <= 2.0
    s2 = generate("S2", 2000, seed=0)
    assert s2.inputs.std() == pytest.approx(0.3, abs=0.03)


def test_s5_moving_average_noise(rng):
    s5 = get_system("S5")
    x = rng.uniform(-1, 1, 50)
    e = rng.normal(0, 0.02, 50)
    with_noise_model = simulate(s5, x, e)
    without = simulate(replace(s5, moving_average=None), x, e)
    assert with_noise_model[0] == without[0]
    assert with_noise_model[1] - without[1] == pytest.approx(0.2 * e[0])
    assert not np.allclose(with_noise_model[2:], without[2:])


def test_unstable_system_is_reported(monkeypatch):
    unstable = SimulatedSystem("U", (("y(k-1)", 3.0), ("x1(k-1)", 1.0)), ("uniform", -1.0, 1.0), 0.01)
    monkeypatch.setitem(SYSTEMS, "U", unstable)
    with pytest.raises(Diverged):
        generate("U", n_samples=800, seed=0)


def test_simulate_checks_lengths():
    with pytest.raises(ValueError):
        simulate(get_system("S1"), np.zeros(5), np.zeros(4))


class TestClassificationSystems:
    def test_c1_follows_its_rule(self):
        dataset = generate_classification("C1", n_samples=500, seed=4)
        x = dataset.inputs[:, 0]
        expected = (4 * x[1:-1] - 3 * x[:-2] ** 2 > 0).astype(float)
        assert_array_equal(dataset.output[2:], expected)
        assert 0.2 < dataset.output.mean() < 0.8

    def test_c1_noise_flips_some_labels(self):
        clean = generate_classification("C1", n_samples=500, seed=4)
        noisy = generate_classification("C1", n_samples=500, seed=4, noise_scale=0.5)
        assert_array_equal(clean.inputs, noisy.inputs)
        assert not np.array_equal(clean.output, noisy.output)

    def test_c2_has_two_inputs_and_both_classes(self):
        dataset = generate_classification("C2", n_samples=1000, seed=4)
        assert dataset.n_inputs == 2
        assert set(np.unique(dataset.output)) == {0.0, 1.0}
        assert np.all(np.abs(dataset.inputs) <= 1.0)

    def test_generate_dispatches_classification(self):
        assert_array_equal(generate("C1", 300, seed=6).output,
                           generate_classification("C1", 300, seed=6).output)
