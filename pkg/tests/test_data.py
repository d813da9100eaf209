"""Unit tests for the synthetic generator, CSV ingestion, and windowing."""

import math

import numpy as np
import pytest

from hdfl.data import (
    NOMINAL,
    OVER,
    UNDER,
    CsvDataSource,
    SampleSet,
    SyntheticDataSource,
    SyntheticSpec,
    export_csv,
    ingest_csv,
    label_from_zscore,
    window,
)
from hdfl.errors import CsvParseError, DataContractError


def small_spec(**overrides):
    defaults = dict(channels=6, window=10, classes=3, seed=11)
    defaults.update(overrides)
    return SyntheticSpec(**defaults)


class TestZscoreLabel:
    def test_center_is_nominal(self):
        assert label_from_zscore(0.0) == NOMINAL

    def test_boundaries_inclusive_to_nominal(self):
        assert label_from_zscore(-1.0) == NOMINAL
        assert label_from_zscore(1.0) == NOMINAL
        assert label_from_zscore(-1.0001) == UNDER
        assert label_from_zscore(1.0001) == OVER

    def test_tails(self):
        assert label_from_zscore(2.5) == OVER
        assert label_from_zscore(-3.0) == UNDER

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            label_from_zscore(bad)

    def test_partitions_the_line(self):
        rng = np.random.default_rng(0)
        for z in rng.normal(0, 3, 1000):
            assert label_from_zscore(float(z)) in (UNDER, NOMINAL, OVER)


class TestWindow:
    def test_two_windows_non_overlapping(self):
        signal = np.arange(2 * 20, dtype=float).reshape(2, 20)
        out = window(signal, 10)
        assert out.shape == (2, 20)

    def test_identity_window(self):
        signal = np.arange(30, dtype=float).reshape(3, 10)
        out = window(signal, 10)
        assert out.shape == (1, 30)
        np.testing.assert_array_equal(out[0], signal.reshape(-1))

    def test_strided_matches_enumeration_oracle(self):
        rng = np.random.default_rng(1)
        signal = rng.normal(0, 1, (4, 25))
        out = window(signal, 10, stride=5)
        assert out.shape[0] == 4
        for i in range(4):
            start = i * 5
            expected = signal[:, start : start + 10].reshape(-1)
            np.testing.assert_array_equal(out[i], expected)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            window(np.zeros((2, 9)), 10)


class TestSyntheticDataSource:
    def test_deterministic_streams(self):
        a = SyntheticDataSource(small_spec(), clients=3, samples_per_round=12, rounds=2)
        b = SyntheticDataSource(small_spec(), clients=3, samples_per_round=12, rounds=2)
        batch_a = a.round_batch(1, 2)
        batch_b = b.round_batch(1, 2)
        np.testing.assert_array_equal(batch_a.features, batch_b.features)
        np.testing.assert_array_equal(batch_a.labels, batch_b.labels)
        np.testing.assert_array_equal(a.test_set().features, b.test_set().features)

    def test_balanced_label_histogram(self):
        source = SyntheticDataSource(small_spec(), clients=2, samples_per_round=12, rounds=3)
        for k in range(2):
            for r in range(1, 4):
                labels = source.round_batch(k, r).labels
                np.testing.assert_array_equal(np.bincount(labels, minlength=3), [4, 4, 4])

    def test_unbalanced_requires_no_divisibility(self):
        source = SyntheticDataSource(
            small_spec(), clients=2, samples_per_round=11, rounds=1, balance=False
        )
        assert len(source.round_batch(0, 1)) == 11

    def test_balance_divisibility_enforced(self):
        with pytest.raises(ValueError):
            SyntheticDataSource(small_spec(), clients=2, samples_per_round=11, rounds=1)

    def test_zero_shift_gives_zero_offsets(self):
        source = SyntheticDataSource(
            small_spec(client_shift=0.0), clients=3, samples_per_round=6, rounds=1
        )
        np.testing.assert_array_equal(source.client_offsets, 0.0)

    def test_distinct_rounds_are_distinct_samples(self):
        source = SyntheticDataSource(small_spec(), clients=2, samples_per_round=6, rounds=2)
        r1 = source.round_batch(0, 1).features
        r2 = source.round_batch(0, 2).features
        assert not np.array_equal(r1, r2)
        test = source.test_set().features
        assert not any(np.array_equal(test[0], row) for row in r1)

    def test_nearest_centroid_oracle_separates_classes(self):
        """With separation far above the noise floor a plain centroid
        classifier on raw features is near-perfect."""
        spec = small_spec(class_separation=2.0, noise_std=0.02)
        source = SyntheticDataSource(spec, clients=2, samples_per_round=30, rounds=1)
        train = source.round_batch(0, 1)
        test = source.test_set()
        centroids = np.stack(
            [train.features[train.labels == s].mean(axis=0) for s in range(3)]
        )
        distances = np.linalg.norm(
            test.features[:, None, :] - centroids[None, :, :], axis=2
        )
        predicted = np.argmin(distances, axis=1)
        assert (predicted == test.labels).mean() > 0.95

    def test_test_set_is_balanced_and_sized(self):
        source = SyntheticDataSource(
            small_spec(), clients=2, samples_per_round=12, rounds=5, test_fraction=0.2
        )
        test = source.test_set()
        # ceil(0.2 * 12 * 5) = 12 per client, rounded to a classes multiple.
        assert len(test) == 24
        counts = np.bincount(test.labels, minlength=3)
        assert counts.min() == counts.max()

    def test_feature_width(self):
        source = SyntheticDataSource(small_spec(), clients=2, samples_per_round=6, rounds=1)
        assert source.feature_width == 60
        assert source.round_batch(0, 1).feature_width == 60

    def test_out_of_range_requests_rejected(self):
        source = SyntheticDataSource(small_spec(), clients=2, samples_per_round=6, rounds=2)
        with pytest.raises(ValueError):
            source.round_batch(2, 1)
        with pytest.raises(ValueError):
            source.round_batch(0, 3)


class TestSampleSet:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            SampleSet(np.array([[1.0, math.nan]]), np.array([0]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            SampleSet(np.zeros((2, 3)), np.array([0]))


class TestCsvRoundTrip:
    def test_export_ingest_identity(self, tmp_path):
        source = SyntheticDataSource(small_spec(), clients=2, samples_per_round=12, rounds=1)
        batch = source.round_batch(0, 1)
        path = tmp_path / "batch.csv"
        export_csv(batch, path)
        loaded = ingest_csv(path)
        np.testing.assert_array_equal(loaded.features, batch.features)
        np.testing.assert_array_equal(loaded.labels, batch.labels)

    def test_header_only_is_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("f0,f1,label\n")
        loaded = ingest_csv(path)
        assert len(loaded) == 0
        assert loaded.feature_width == 2

    def test_text_row_names_row_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,f1,label\n1.0,2.0,0\n1.0,oops,1\n")
        with pytest.raises(CsvParseError, match="row 3"):
            ingest_csv(path)

    def test_non_finite_row_rejected(self, tmp_path):
        path = tmp_path / "nan.csv"
        path.write_text("f0,f1,label\nnan,2.0,0\n")
        with pytest.raises(CsvParseError, match="row 2"):
            ingest_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ingest_csv(tmp_path / "nope.csv")

    def test_label_out_of_range(self, tmp_path):
        path = tmp_path / "lab.csv"
        path.write_text("f0,f1,label\n1.0,2.0,5\n")
        with pytest.raises(ValueError, match="out of range"):
            ingest_csv(path, num_classes=3)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "head.csv"
        path.write_text("a,b,label\n")
        with pytest.raises(CsvParseError):
            ingest_csv(path)


class TestCsvDataSource:
    def _materialize(self, tmp_path, clients=2, samples=6, rounds=2):
        source = SyntheticDataSource(
            small_spec(), clients=clients, samples_per_round=samples, rounds=rounds
        )
        for k in range(clients):
            batches = [source.round_batch(k, r) for r in range(1, rounds + 1)]
            merged = SampleSet(
                np.vstack([b.features for b in batches]),
                np.concatenate([b.labels for b in batches]),
            )
            export_csv(merged, tmp_path / f"client_{k}.csv")
        export_csv(source.test_set(), tmp_path / "test.csv")
        return source

    def test_batches_match_generator(self, tmp_path):
        source = self._materialize(tmp_path)
        csv_source = CsvDataSource(tmp_path, clients=2, samples_per_round=6, rounds=2)
        assert csv_source.feature_width == source.feature_width
        for k in range(2):
            for r in (1, 2):
                a = source.round_batch(k, r)
                b = csv_source.round_batch(k, r)
                np.testing.assert_array_equal(a.features, b.features)
                np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(
            csv_source.test_set().features, source.test_set().features
        )

    def test_exhaustion_detected_up_front(self, tmp_path):
        self._materialize(tmp_path, rounds=2)
        with pytest.raises(DataContractError):
            CsvDataSource(tmp_path, clients=2, samples_per_round=6, rounds=5)

    def test_round_past_end_rejected(self, tmp_path):
        self._materialize(tmp_path)
        csv_source = CsvDataSource(tmp_path, clients=2, samples_per_round=6, rounds=2)
        with pytest.raises(DataContractError):
            csv_source.round_batch(0, 3)
