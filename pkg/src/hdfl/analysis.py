"""Metrics and report computations: accuracy, similarity structure, PSNR.

These routines back the experiment reports: accuracy curves for the
federation, per-client distance/similarity point clouds with
cross-client histograms, and the encode/decode reconstruction study
that sweeps noise levels and tracks mean PSNR.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .hd import ClassModel, EncoderBasis, decode, encode, encode_batch, infer_batch

__all__ = [
    "SimilarityReport",
    "PsnrStudy",
    "accuracy",
    "similarity_distance",
    "psnr",
    "reconstruction_study",
    "smooth_signals",
    "write_psnr_csv",
    "write_similarity_report",
]


def accuracy(model: ClassModel, samples, basis: EncoderBasis) -> float:
    """Fraction of samples whose inferred class matches the label.

    Raises:
        ValueError: on an empty sample set.
    """
    if len(samples) == 0:
        raise ValueError("cannot compute accuracy on an empty sample set")
    hvs = encode_batch(basis, samples.features)
    predicted, _ = infer_batch(model, hvs)
    return float(np.mean(predicted == samples.labels))


@dataclass(frozen=True)
class SimilarityReport:
    """Distance/similarity structure of a multi-client corpus.

    clouds[k] is an (n_pairs, 2) array of (raw Euclidean distance,
    hypervector cosine similarity) over all within-client pairs of
    client k.  For each client pair i < j, ``similarity_hists[(i, j)]``
    histograms the cross-client hypervector similarities and
    ``distance_hists[(i, j)]`` the cross-client raw distances; both are
    (edges, masses) with masses summing to 1.
    """

    clouds: list[np.ndarray]
    similarity_hists: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]]
    distance_hists: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]]


def _mass_histogram(values: np.ndarray, bins: int, value_range=None):
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    return edges, counts / counts.sum()


def similarity_distance(client_samples, basis: EncoderBasis, bins: int = 24) -> SimilarityReport:
    """Build the similarity/distance report for a list of client corpora.

    Args:
        client_samples: one (N_k, F) raw-feature array per client,
            at least 2 clients with at least 2 samples each.
        basis: shared encoder basis.
        bins: histogram resolution for the cross-client panels.

    Raises:
        ValueError: with fewer than 2 clients or fewer than 2 samples
            for any client.
    """
    arrays = [np.asarray(c, dtype=float) for c in client_samples]
    if len(arrays) < 2:
        raise ValueError(f"need at least 2 clients, got {len(arrays)}")
    for k, arr in enumerate(arrays):
        if arr.ndim != 2 or arr.shape[0] < 2:
            raise ValueError(f"client {k} needs at least 2 samples")

    encoded = [encode_batch(basis, arr) for arr in arrays]
    dimensions = basis.dimensions

    clouds = []
    for arr, hvs in zip(arrays, encoded):
        iu = np.triu_indices(arr.shape[0], k=1)
        dists = np.linalg.norm(arr[:, None, :] - arr[None, :, :], axis=2)[iu]
        sims = (hvs @ hvs.T / dimensions)[iu]
        clouds.append(np.column_stack([dists, sims]))

    similarity_hists = {}
    distance_hists = {}
    for i in range(len(arrays)):
        for j in range(i + 1, len(arrays)):
            cross_sims = (encoded[i] @ encoded[j].T / dimensions).ravel()
            similarity_hists[(i, j)] = _mass_histogram(cross_sims, bins, (-1.0, 1.0))
            cross_dists = np.linalg.norm(
                arrays[i][:, None, :] - arrays[j][None, :, :], axis=2
            ).ravel()
            distance_hists[(i, j)] = _mass_histogram(cross_dists, bins)
    return SimilarityReport(clouds, similarity_hists, distance_hists)


def psnr(reference: np.ndarray, candidate: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB.

    10 * log10(peak^2 / MSE) with peak the maximum absolute reference
    component (the signals are not confined to a fixed display range).
    A zero MSE returns the +inf sentinel.

    Raises:
        DimensionError: on mismatched widths.
        ValueError: if the reference is identically zero.
    """
    reference = np.asarray(reference, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    if reference.shape != candidate.shape:
        raise DimensionError(
            f"reference shape {reference.shape} does not match candidate {candidate.shape}"
        )
    peak = float(np.max(np.abs(reference)))
    if peak == 0.0:
        raise ValueError("reference signal is identically zero")
    mse = float(np.mean((reference - candidate) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


@dataclass(frozen=True)
class PsnrStudy:
    """Mean reconstruction PSNR per noise level; same-length lists."""

    noise_levels: list[float]
    psnr_db: list[float]
    reference_peak: float


def smooth_signals(
    count: int,
    width: int,
    seed: int,
    target_norm: float = 0.85,
    waves: int = 3,
) -> np.ndarray:
    """Generate smooth test signals as sums of low-frequency sinusoids.

    Each signal mixes ``waves`` random sinusoids (1 to 5 cycles across
    the width) and is rescaled to the requested Euclidean norm.  The
    norm matters: the encoder's random projection has unit bandwidth,
    so signals of norm around 1 sit in its sensitive range.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(width) / width
    signals = np.zeros((count, width))
    for i in range(count):
        for _ in range(waves):
            signals[i] += rng.uniform(0.5, 1.0) * np.sin(
                2.0 * np.pi * rng.uniform(1.0, 5.0) * t + rng.uniform(0.0, 2.0 * np.pi)
            )
        signals[i] *= target_norm / np.linalg.norm(signals[i])
    return signals


def reconstruction_study(
    basis: EncoderBasis,
    signals: np.ndarray,
    noise_variances,
    seed: int = 0,
) -> PsnrStudy:
    """Sweep noise levels over encode -> perturb -> decode round trips.

    For each variance, every signal is encoded, real-valued Gaussian
    noise of that variance is added to the bipolar hypervector, the
    result is decoded, and the PSNR against the original is averaged
    over the corpus.

    Args:
        noise_variances: ascending variances, the first exactly 0
            (the clean reference rung of the ladder).

    Raises:
        ValueError: if the ladder is not ascending from 0.
    """
    variances = [float(v) for v in noise_variances]
    if not variances or variances[0] != 0.0:
        raise ValueError("noise_variances must start at exactly 0")
    if any(b <= a for a, b in zip(variances, variances[1:])):
        raise ValueError("noise_variances must be strictly ascending")
    signals = np.asarray(signals, dtype=float)
    rng = np.random.default_rng(seed)

    means = []
    for variance in variances:
        values = []
        for signal in signals:
            hv = encode(basis, signal)
            if variance > 0:
                hv = hv + rng.normal(0.0, math.sqrt(variance), basis.dimensions)
            values.append(psnr(signal, decode(basis, hv)))
        means.append(float(np.mean(values)))
    peak = float(np.max(np.abs(signals)))
    return PsnrStudy(noise_levels=variances, psnr_db=means, reference_peak=peak)


def write_psnr_csv(study: PsnrStudy, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["noise_variance", "mean_psnr_db"])
        for variance, value in zip(study.noise_levels, study.psnr_db):
            writer.writerow([variance, value])


def write_similarity_report(report: SimilarityReport, out_dir: str | Path) -> list[Path]:
    """Dump a similarity report as one CSV per panel; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, cloud in enumerate(report.clouds):
        path = out_dir / f"cloud_client{k}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["distance", "similarity"])
            writer.writerows(cloud.tolist())
        paths.append(path)
    for name, hists in (
        ("similarity_hist", report.similarity_hists),
        ("distance_hist", report.distance_hists),
    ):
        for (i, j), (edges, masses) in sorted(hists.items()):
            path = out_dir / f"{name}_c{i}_c{j}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["bin_left", "bin_right", "mass"])
                for left, right, mass in zip(edges[:-1], edges[1:], masses):
                    writer.writerow([left, right, mass])
            paths.append(path)
    return paths
