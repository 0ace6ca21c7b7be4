import os

import numpy as np
import pytest

from elmc.data import (AffineTransform, FieldDataset, fit_normalizer,
                       load_dataset, save_dataset, split)
from elmc.optim import make_rng


def make_ds(m=5, l=3, grid=(2, 4), seed=0):
    rng = make_rng(seed)
    return FieldDataset(inputs=rng.random((m, l)),
                        fields=rng.random((m, grid[0] * grid[1])),
                        grid_shape=grid)


class TestFieldDataset:
    def test_shape_passthrough(self):
        ds = FieldDataset(inputs=np.zeros((2, 3)), fields=np.zeros((2, 4)),
                          grid_shape=(2, 2))
        assert (ds.m, ds.l, ds.d) == (2, 3, 4)

    def test_row_count_mismatch(self):
        with pytest.raises(ValueError, match="row-count mismatch"):
            FieldDataset(inputs=np.zeros((2, 3)), fields=np.zeros((3, 4)),
                         grid_shape=(2, 2))

    def test_grid_dim_mismatch(self):
        with pytest.raises(ValueError, match="grid"):
            FieldDataset(inputs=np.zeros((2, 3)), fields=np.zeros((2, 5)),
                         grid_shape=(2, 2))

    def test_non_finite_rejected(self):
        fields = np.zeros((2, 4))
        fields[1, 2] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            FieldDataset(inputs=np.zeros((2, 3)), fields=fields, grid_shape=(2, 2))


class TestSaveLoad:
    def test_round_trip_bit_exact(self, tmp_path):
        ds = make_ds(m=5, grid=(2, 4), seed=42)
        save_dataset(ds, tmp_path)
        back = load_dataset(tmp_path)
        assert np.array_equal(back.inputs, ds.inputs)
        assert np.array_equal(back.fields, ds.fields)
        assert back.grid_shape == ds.grid_shape

    def test_empty_dataset(self, tmp_path):
        ds = FieldDataset(inputs=np.zeros((0, 3)), fields=np.zeros((0, 4)),
                          grid_shape=(2, 2))
        save_dataset(ds, tmp_path)
        back = load_dataset(tmp_path)
        assert back.m == 0 and back.l == 3 and back.d == 4

    def test_single_value_file_text(self, tmp_path):
        ds = FieldDataset(inputs=np.array([[0.25]]), fields=np.array([[0.5]]),
                          grid_shape=(1, 1))
        save_dataset(ds, tmp_path)
        assert (tmp_path / "fields.csv").read_text() == "0.5\n"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValueError, match="missing file"):
            load_dataset(tmp_path)

    def test_non_numeric_cell_reports_location(self, tmp_path):
        save_dataset(make_ds(m=3), tmp_path)
        path = tmp_path / "fields.csv"
        lines = path.read_text().splitlines()
        lines[1] = lines[1].replace(lines[1].split(",")[0], "oops", 1)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match=r"fields\.csv, line 2"):
            load_dataset(tmp_path)


class TestSplit:
    def test_full_train_forbidden(self):
        ds = make_ds(m=10)
        with pytest.raises(ValueError, match="n_train"):
            split(ds, 10, seed=0)

    def test_determinism(self):
        ds = make_ds(m=20)
        a = split(ds, 12, seed=5)
        b = split(ds, 12, seed=5)
        assert np.array_equal(a[0].inputs, b[0].inputs)
        assert np.array_equal(a[1].fields, b[1].fields)

    def test_golden_permutation(self):
        # make_rng(7).permutation(5) == [2, 0, 4, 1, 3], frozen once
        ds = make_ds(m=5)
        train, test = split(ds, 3, seed=7)
        assert np.array_equal(train.inputs, ds.inputs[[2, 0, 4]])
        assert np.array_equal(test.inputs, ds.inputs[[1, 3]])

    def test_partition_property(self):
        ds = make_ds(m=17)
        for seed in range(5):
            train, test = split(ds, 9, seed=seed)
            assert train.m + test.m == ds.m
            joined = np.vstack([train.inputs, test.inputs])
            assert np.array_equal(np.sort(joined, axis=0), np.sort(ds.inputs, axis=0))


class TestNormalizer:
    def test_constant_fields(self):
        ds = FieldDataset(inputs=np.zeros((2, 1)), fields=np.full((2, 4), 5.0),
                          grid_shape=(2, 2))
        tf = fit_normalizer(ds)
        assert tf.scale == 1.0 and tf.offset == -5.0

    def test_range_two_four(self):
        ds = FieldDataset(inputs=np.zeros((1, 1)), fields=np.array([[2.0, 4.0, 3.0, 2.5]]),
                          grid_shape=(2, 2))
        tf = fit_normalizer(ds)
        assert tf.scale == 0.5 and tf.offset == -1.0
        assert tf.apply(3.0) == 0.5

    def test_identity_on_unit_range(self):
        ds = FieldDataset(inputs=np.zeros((1, 1)), fields=np.array([[0.0, 1.0, 0.4, 0.7]]),
                          grid_shape=(2, 2))
        tf = fit_normalizer(ds)
        assert tf.scale == 1.0 and tf.offset == 0.0

    def test_endpoints_exact_and_inverse(self):
        for seed in range(5):
            ds = make_ds(seed=seed)
            tf = fit_normalizer(ds)
            mapped = tf.apply(ds.fields)
            assert mapped.min() == pytest.approx(0.0, abs=1e-12)
            assert mapped.max() == pytest.approx(1.0, abs=1e-12)
            back = tf.invert(mapped)
            assert np.allclose(back, ds.fields, rtol=1e-12, atol=1e-12)
