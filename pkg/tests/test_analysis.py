"""Unit tests for accuracy, similarity reports, PSNR, and reconstruction."""

import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from hdfl.analysis import (
    accuracy,
    psnr,
    reconstruction_study,
    similarity_distance,
    smooth_signals,
    write_psnr_csv,
    write_similarity_report,
)
from hdfl.data import SampleSet, SyntheticDataSource, SyntheticSpec
from hdfl.errors import DimensionError
from hdfl.hd import ClassModel, encode_batch, make_basis, train


def corpus_source(samples=30, clients=2, seed=11):
    spec = SyntheticSpec(channels=6, window=10, classes=3, seed=seed)
    return SyntheticDataSource(spec, clients=clients, samples_per_round=samples, rounds=1)


class TestAccuracy:
    def test_memorization_sanity(self):
        """A model trained on the evaluation set itself scores near 1."""
        source = corpus_source()
        basis = make_basis(2048, source.feature_width, 1)
        batch = source.round_batch(0, 1)
        model = train(encode_batch(basis, batch.features), batch.labels, 3)
        assert accuracy(model, batch, basis) >= 0.95

    def test_random_model_is_chance_level(self):
        """Against labels drawn independently of the features, any fixed
        model scores 1/3 on a large test set (Monte-Carlo over models)."""
        basis = make_basis(1024, 20, 2)
        rng = np.random.default_rng(3)
        samples = SampleSet(rng.normal(0.0, 0.3, (900, 20)), rng.integers(0, 3, 900))
        values = []
        for _ in range(5):
            model = ClassModel(
                classes=rng.choice([-1.0, 1.0], (3, 1024)),
                sample_counts=np.ones(3, dtype=np.int64),
            )
            values.append(accuracy(model, samples, basis))
        assert np.mean(values) == pytest.approx(1.0 / 3.0, abs=0.05)

    def test_single_correct_sample(self):
        source = corpus_source()
        basis = make_basis(1024, source.feature_width, 4)
        batch = source.round_batch(0, 1)
        model = train(encode_batch(basis, batch.features), batch.labels, 3)
        one = SampleSet(batch.features[:1], batch.labels[:1])
        assert accuracy(model, one, basis) == 1.0

    def test_invariant_under_class_rescaling(self):
        source = corpus_source()
        basis = make_basis(1024, source.feature_width, 5)
        batch = source.round_batch(0, 1)
        model = train(encode_batch(basis, batch.features), batch.labels, 3)
        scaled = ClassModel(model.classes * 37.5, model.sample_counts)
        assert accuracy(model, batch, basis) == accuracy(scaled, batch, basis)

    def test_empty_rejected(self):
        source = corpus_source()
        basis = make_basis(256, source.feature_width, 6)
        batch = source.round_batch(0, 1)
        model = train(encode_batch(basis, batch.features), batch.labels, 3)
        empty = SampleSet(np.empty((0, source.feature_width)), np.empty(0, dtype=int))
        with pytest.raises(ValueError):
            accuracy(model, empty, basis)


class TestSimilarityDistance:
    def test_duplicate_pair_anchors_the_cloud(self):
        basis = make_basis(4096, 5, 7)
        x = np.array([0.1, -0.2, 0.3, 0.0, 0.05])
        report = similarity_distance([np.stack([x, x]), np.stack([x, -x])], basis)
        distance, similarity = report.clouds[0][0]
        assert distance == 0.0
        assert similarity == 1.0

    def test_similarity_trends_down_with_distance(self):
        """Within a client, hypervector similarity falls as raw distance
        grows: strongly negative Spearman rank correlation."""
        source = corpus_source(samples=45)
        basis = make_basis(10000, source.feature_width, 8)
        corpora = [source.round_batch(k, 1).features for k in range(2)]
        report = similarity_distance(corpora, basis)
        for cloud in report.clouds:
            rho = spearmanr(cloud[:, 0], cloud[:, 1]).statistic
            assert rho < -0.5

    def test_pair_counts(self):
        source = corpus_source(samples=12)
        basis = make_basis(512, source.feature_width, 9)
        corpora = [source.round_batch(k, 1).features for k in range(2)]
        report = similarity_distance(corpora, basis)
        for cloud in report.clouds:
            assert cloud.shape == (12 * 11 // 2, 2)
        assert set(report.similarity_hists) == {(0, 1)}
        assert set(report.distance_hists) == {(0, 1)}

    def test_histograms_are_normalized(self):
        source = corpus_source(samples=15, clients=3)
        basis = make_basis(512, source.feature_width, 10)
        corpora = [source.round_batch(k, 1).features for k in range(3)]
        report = similarity_distance(corpora, basis)
        for edges, masses in list(report.similarity_hists.values()) + list(
            report.distance_hists.values()
        ):
            assert masses.sum() == pytest.approx(1.0, abs=1e-9)
            assert len(edges) == len(masses) + 1

    def test_too_few_inputs_rejected(self):
        basis = make_basis(64, 5, 11)
        rng = np.random.default_rng(0)
        good = rng.normal(0, 1, (4, 5))
        with pytest.raises(ValueError):
            similarity_distance([good], basis)
        with pytest.raises(ValueError):
            similarity_distance([good, good[:1]], basis)

    def test_report_files(self, tmp_path):
        source = corpus_source(samples=9)
        basis = make_basis(256, source.feature_width, 12)
        corpora = [source.round_batch(k, 1).features for k in range(2)]
        report = similarity_distance(corpora, basis)
        paths = write_similarity_report(report, tmp_path)
        names = sorted(p.name for p in paths)
        assert names == [
            "cloud_client0.csv",
            "cloud_client1.csv",
            "distance_hist_c0_c1.csv",
            "similarity_hist_c0_c1.csv",
        ]


class TestPsnr:
    def test_identical_signals_hit_the_sentinel(self):
        x = np.sin(np.linspace(0, 6, 50))
        assert psnr(x, x.copy()) == math.inf

    def test_constant_offset_hand_value(self):
        """Amplitude-1 reference with a constant 0.1 error: exactly
        10 * log10(1 / 0.01) = 20 dB."""
        t = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
        reference = np.sin(t)
        reference[100] = 1.0  # pin the peak to exactly 1
        assert psnr(reference, reference + 0.1) == pytest.approx(20.0, rel=1e-12)

    def test_doubling_error_costs_six_db(self):
        t = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
        reference = np.sin(t)
        drop = psnr(reference, reference + 0.1) - psnr(reference, reference + 0.2)
        assert drop == pytest.approx(20.0 * math.log10(2.0), rel=1e-12)

    def test_translation_soundness(self):
        """A constant offset contributes only through its magnitude."""
        t = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
        reference = np.sin(t)
        assert psnr(reference, reference + 0.07) == psnr(reference, reference - 0.07)
        peak = np.max(np.abs(reference))
        expected = 10.0 * math.log10(peak**2 / 0.07**2)
        assert psnr(reference, reference + 0.07) == pytest.approx(expected, rel=1e-12)

    def test_width_mismatch(self):
        with pytest.raises(DimensionError):
            psnr(np.ones(4), np.ones(5))

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            psnr(np.zeros(4), np.ones(4))


class TestReconstructionStudy:
    def test_ladder_ordering_and_negative_floor(self):
        """Mean PSNR falls strictly along the noise ladder and the heavy
        noise rung lands below 0 dB."""
        width = 100
        basis = make_basis(10 * width, width, 123)
        signals = smooth_signals(50, width, seed=1, target_norm=0.35, waves=1)
        study = reconstruction_study(basis, signals, [0.0, 0.25, 100.0], seed=2)
        assert study.psnr_db[0] == max(study.psnr_db)
        assert study.psnr_db[0] > study.psnr_db[1] > study.psnr_db[2]
        assert study.psnr_db[2] < 0.0

    def test_ladder_validation(self):
        basis = make_basis(100, 10, 1)
        signals = smooth_signals(3, 10, seed=0)
        with pytest.raises(ValueError):
            reconstruction_study(basis, signals, [0.25, 1.0])
        with pytest.raises(ValueError):
            reconstruction_study(basis, signals, [0.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            reconstruction_study(basis, signals, [])

    def test_reference_peak_recorded(self):
        width = 40
        basis = make_basis(400, width, 3)
        signals = smooth_signals(5, width, seed=4, target_norm=0.5)
        study = reconstruction_study(basis, signals, [0.0], seed=5)
        assert study.reference_peak == pytest.approx(np.max(np.abs(signals)))

    def test_csv_export(self, tmp_path):
        width = 40
        basis = make_basis(400, width, 6)
        signals = smooth_signals(5, width, seed=7, target_norm=0.5)
        study = reconstruction_study(basis, signals, [0.0, 1.0], seed=8)
        path = tmp_path / "psnr.csv"
        write_psnr_csv(study, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "noise_variance,mean_psnr_db"
        assert len(lines) == 3


class TestSmoothSignals:
    def test_norm_and_determinism(self):
        a = smooth_signals(4, 64, seed=9, target_norm=0.7)
        b = smooth_signals(4, 64, seed=9, target_norm=0.7)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_allclose(np.linalg.norm(a, axis=1), 0.7, rtol=1e-12)

    def test_smoothness(self):
        """Adjacent-sample increments stay small relative to the signal."""
        signals = smooth_signals(10, 128, seed=10, target_norm=1.0)
        steps = np.abs(np.diff(signals, axis=1)).max()
        assert steps < 0.1 * np.abs(signals).max() * 3
