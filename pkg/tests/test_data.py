import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from narx_mss.data import Dataset, load_csv, save_csv
from narx_mss.exceptions import DataError


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_dataset_is_read_only():
    dataset = Dataset([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert dataset.inputs.shape == (3, 1)
    with pytest.raises(ValueError):
        dataset.output[0] = 0.0


def test_dataset_copies_its_arrays():
    y = np.arange(5.0)
    dataset = Dataset(np.zeros((5, 1)), y)
    y[0] = 99.0
    assert dataset.output[0] == 0.0


def test_length_mismatch():
    with pytest.raises(DataError):
        Dataset(np.zeros((4, 1)), np.zeros(5))


def test_split_keeps_time_order():
    dataset = Dataset(np.arange(10.0)[:, None], np.arange(10.0) * 2)
    train, test = dataset.split(0.8)
    assert train.n_samples == 8
    assert test.n_samples == 2
    assert_array_equal(test.output, [16.0, 18.0])
    with pytest.raises(DataError):
        dataset.split(1.0)


def test_load_csv(tmp_path):
    path = write(tmp_path, "u1,u2,y\n1,10,0.5\n2,20,1.5\n3,30,2.5\n")
    dataset = load_csv(path)
    assert dataset.n_inputs == 2
    assert_array_equal(dataset.inputs[:, 1], [10.0, 20.0, 30.0])
    assert_array_equal(dataset.output, [0.5, 1.5, 2.5])


def test_missing_cells_take_the_column_mean(tmp_path):
    path = write(tmp_path, "u1,y\n1,1\n,2\n5,3\n")
    dataset = load_csv(path)
    assert_array_equal(dataset.inputs[:, 0], [1.0, 3.0, 5.0])


def test_standardize_scales_inputs_only(tmp_path):
    path = write(tmp_path, "u1,y\n1,0\n2,1\n3,0\n4,1\n")
    dataset = load_csv(path, standardize=True)
    assert_allclose(dataset.inputs.mean(axis=0), 0.0, atol=1e-12)
    assert_allclose(dataset.inputs.std(axis=0), 1.0)
    assert_array_equal(dataset.output, [0.0, 1.0, 0.0, 1.0])


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(str(tmp_path / "absent.csv"))


@pytest.mark.parametrize("text", [
    "u1,u2\n1,2\n",
    "u1,y\n1,a\n2,3\n",
    "u1,y\n,1\n,2\n",
])
def test_bad_content(tmp_path, text):
    with pytest.raises(DataError):
        load_csv(write(tmp_path, text))


def test_saved_file_loads_back(tmp_path, rng):
    dataset = Dataset(rng.normal(size=(20, 2)), rng.normal(size=20))
    path = str(tmp_path / "nested" / "out.csv")
    save_csv(dataset, path)
    loaded = load_csv(path)
    assert_array_equal(loaded.inputs, dataset.inputs)
    assert_array_equal(loaded.output, dataset.output)


def test_awkward_floats_survive_the_file(tmp_path):
    values = np.array([0.1 + 0.2, 2.0 / 3.0, 1e-300, -123456.789012345678, np.nextafter(1.0, 2.0)])
    dataset = Dataset(values[:, None], values[::-1].copy())
    path = str(tmp_path / "awkward.csv")
    save_csv(dataset, path)
    loaded = load_csv(path)
    assert_array_equal(loaded.inputs, dataset.inputs)
    assert_array_equal(loaded.output, dataset.output)
