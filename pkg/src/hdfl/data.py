"""Synthetic multi-channel signal datasets, CSV ingestion, and windowing.

The synthetic generator stands in for a real machining dataset: each
class has a smooth sinusoid template per channel plus a class-specific
mean offset, each client adds a fixed offset of configurable magnitude
(the non-IID knob), and samples are the template plus white noise.
Feature vectors are flattened channel-major (C channels of W points).

Per-round batches are balanced (L / S samples per class) and fully
deterministic in the generator seed; distinct (client, round) pairs
draw from independent substreams, so no sample is ever served twice.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CsvParseError, DataContractError

__all__ = [
    "UNDER",
    "NOMINAL",
    "OVER",
    "SampleSet",
    "SyntheticSpec",
    "SyntheticDataSource",
    "CsvDataSource",
    "label_from_zscore",
    "window",
    "ingest_csv",
    "export_csv",
]

# Z-score classes for drilled-hole quality.
UNDER = 0
NOMINAL = 1
OVER = 2

_TEMPLATE_AMPLITUDE = 0.1


@dataclass(frozen=True)
class SampleSet:
    """A batch of labeled samples: (N, F) features and (N,) int labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {features.shape}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise ValueError(
                f"labels shape {labels.shape} does not match {features.shape[0]} samples"
            )
        if features.size and not np.isfinite(features).all():
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def feature_width(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape and difficulty knobs for the synthetic generator.

    Defaults mirror the machining setup: 90 channels windowed to length
    10 (F = 900) and three z-score classes.  ``class_separation`` is the
    expected distance between class mean offsets, ``noise_std`` the
    within-class standard deviation per feature, and ``client_shift``
    the magnitude of each client's fixed offset.
    """

    channels: int = 90
    window: int = 10
    classes: int = 3
    client_shift: float = 0.3
    class_separation: float = 1.0
    noise_std: float = 0.02
    seed: int = 0

    def __post_init__(self) -> None:
        if self.channels < 1 or self.window < 1:
            raise ValueError("channels and window must be >= 1")
        if self.classes < 2:
            raise ValueError(f"classes must be >= 2, got {self.classes}")
        if not self.class_separation > 0:
            raise ValueError("class_separation must be > 0")
        if not self.noise_std > 0:
            raise ValueError("noise_std must be > 0")
        if self.client_shift < 0:
            raise ValueError("client_shift must be >= 0")

    @property
    def feature_width(self) -> int:
        return self.channels * self.window


def label_from_zscore(z: float) -> int:
    """Map a hole-diameter z-score to a quality class.

    Scores in [-1, 1] (boundaries inclusive) are NOMINAL; below -1 is
    UNDER, above 1 is OVER.

    Raises:
        ValueError: for NaN or infinite input.
    """
    if not math.isfinite(z):
        raise ValueError(f"z-score must be finite, got {z}")
    if z < -1.0:
        return UNDER
    if z > 1.0:
        return OVER
    return NOMINAL


def window(signal_matrix: np.ndarray, width: int, stride: int | None = None) -> np.ndarray:
    """Cut a (C, T) signal recording into flattened (C * width) windows.

    Windows are taken at offsets 0, stride, 2*stride, ... and flattened
    channel-major.  The default stride equals the window width, i.e.
    non-overlapping windows.

    Returns:
        Array of shape (floor((T - width) / stride) + 1, C * width).

    Raises:
        ValueError: if T < width or stride < 1.
    """
    signal_matrix = np.asarray(signal_matrix, dtype=float)
    if signal_matrix.ndim != 2:
        raise ValueError(f"expected a (C, T) signal matrix, got shape {signal_matrix.shape}")
    if stride is None:
        stride = width
    if width < 1 or stride < 1:
        raise ValueError("width and stride must be >= 1")
    channels, length = signal_matrix.shape
    if length < width:
        raise ValueError(f"signal length {length} is shorter than window width {width}")
    count = (length - width) // stride + 1
    out = np.empty((count, channels * width))
    for i in range(count):
        start = i * stride
        out[i] = signal_matrix[:, start : start + width].reshape(-1)
    return out


class SyntheticDataSource:
    """Deterministic per-client, per-round sample streams plus a test set.

    Implements the data-source protocol consumed by the federation
    driver: ``feature_width``, ``round_batch(client, round_index)`` and
    ``test_set()``.
    """

    def __init__(
        self,
        spec: SyntheticSpec,
        clients: int,
        samples_per_round: int,
        rounds: int,
        balance: bool = True,
        test_fraction: float = 0.2,
    ):
        if clients < 1:
            raise ValueError(f"clients must be >= 1, got {clients}")
        if samples_per_round < 1 or rounds < 1:
            raise ValueError("samples_per_round and rounds must be >= 1")
        if balance and samples_per_round % spec.classes != 0:
            raise ValueError(
                f"balanced batches need samples_per_round divisible by {spec.classes} classes, "
                f"got {samples_per_round}"
            )
        if not 0.0 < test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
        self.spec = spec
        self.clients = clients
        self.samples_per_round = samples_per_round
        self.rounds = rounds
        self.balance = balance
        self.test_fraction = test_fraction

        rng = np.random.default_rng((spec.seed, 0))
        self.templates = self._make_templates(rng)
        self.client_offsets = self._make_offsets(rng)
        self._test: SampleSet | None = None

    @property
    def feature_width(self) -> int:
        return self.spec.feature_width

    def _make_templates(self, rng: np.random.Generator) -> np.ndarray:
        spec = self.spec
        t = (np.arange(spec.window) + 1.0) / spec.window
        templates = np.zeros((spec.classes, spec.feature_width))
        for s in range(spec.classes):
            phases = rng.uniform(0.0, 2.0 * np.pi, spec.channels)
            # Class s oscillates at s + 1 cycles per window.
            waves = _TEMPLATE_AMPLITUDE * np.sin(
                2.0 * np.pi * (s + 1) * t[None, :] + phases[:, None]
            )
            offset = rng.normal(
                0.0, spec.class_separation / math.sqrt(2.0 * spec.feature_width), spec.feature_width
            )
            templates[s] = waves.reshape(-1) + offset
        return templates

    def _make_offsets(self, rng: np.random.Generator) -> np.ndarray:
        offsets = np.zeros((self.clients, self.spec.feature_width))
        if self.spec.client_shift > 0:
            for k in range(self.clients):
                direction = rng.standard_normal(self.spec.feature_width)
                offsets[k] = self.spec.client_shift * direction / np.linalg.norm(direction)
        return offsets

    def _draw(self, rng: np.random.Generator, client: int, count: int) -> SampleSet:
        spec = self.spec
        per_class = count // spec.classes
        features = np.empty((per_class * spec.classes, spec.feature_width))
        labels = np.empty(per_class * spec.classes, dtype=int)
        row = 0
        for s in range(spec.classes):
            features[row : row + per_class] = (
                self.templates[s]
                + self.client_offsets[client]
                + rng.normal(0.0, spec.noise_std, (per_class, spec.feature_width))
            )
            labels[row : row + per_class] = s
            row += per_class
        order = rng.permutation(len(labels))
        return SampleSet(features[order], labels[order])

    def round_batch(self, client: int, round_index: int) -> SampleSet:
        """The L samples client ``client`` generates in a given round."""
        if not 0 <= client < self.clients:
            raise ValueError(f"client must lie in [0, {self.clients}), got {client}")
        if not 1 <= round_index <= self.rounds:
            raise ValueError(f"round_index must lie in [1, {self.rounds}], got {round_index}")
        rng = np.random.default_rng((self.spec.seed, 1, client, round_index))
        if self.balance:
            return self._draw(rng, client, self.samples_per_round)
        # Unbalanced mode draws class labels uniformly.
        labels = rng.integers(0, self.spec.classes, self.samples_per_round)
        features = (
            self.templates[labels]
            + self.client_offsets[client]
            + rng.normal(0.0, self.spec.noise_std, (self.samples_per_round, self.spec.feature_width))
        )
        return SampleSet(features, labels)

    def test_set(self) -> SampleSet:
        """Held-out balanced samples pooled from every client's stream."""
        if self._test is None:
            volume = self.test_fraction * self.samples_per_round * self.rounds
            per_client = math.ceil(round(volume, 9))
            per_client += (-per_client) % self.spec.classes
            parts = []
            for k in range(self.clients):
                rng = np.random.default_rng((self.spec.seed, 2, k))
                parts.append(self._draw(rng, k, per_client))
            self._test = SampleSet(
                np.vstack([p.features for p in parts]),
                np.concatenate([p.labels for p in parts]),
            )
        return self._test


_HEADER_RE = re.compile(r"f(\d+)")


def ingest_csv(
    path: str | Path,
    feature_width: int | None = None,
    num_classes: int | None = None,
) -> SampleSet:
    """Load a labeled sample set from CSV.

    The expected header is ``f0,...,f{F-1},label``.  Rows containing
    non-numeric text, NaN or infinities are rejected with the offending
    row number; a header-only file yields an empty set.

    Args:
        path: file to read.
        feature_width: if given, the header must declare exactly this F.
        num_classes: if given, labels must lie in [0, num_classes).

    Raises:
        FileNotFoundError: if the file does not exist.
        CsvParseError: on a malformed header or row.
        ValueError: on width mismatch or out-of-range labels.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file, expected a header row") from None
        if len(header) < 2 or header[-1] != "label":
            raise CsvParseError(f"{path}: header must be f0,...,f{{F-1}},label")
        width = len(header) - 1
        for i, name in enumerate(header[:-1]):
            m = _HEADER_RE.fullmatch(name)
            if m is None or int(m.group(1)) != i:
                raise CsvParseError(f"{path}: unexpected header column {name!r} at position {i}")
        if feature_width is not None and width != feature_width:
            raise ValueError(f"{path}: expected {feature_width} features, header declares {width}")

        features: list[list[float]] = []
        labels: list[int] = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise CsvParseError(
                    f"{path}: row {row_number} has {len(row)} fields, expected {width + 1}"
                )
            try:
                values = [float(v) for v in row[:-1]]
                label = int(row[-1])
            except ValueError:
                raise CsvParseError(f"{path}: row {row_number} is not numeric") from None
            if not all(math.isfinite(v) for v in values):
                raise CsvParseError(f"{path}: row {row_number} contains NaN or infinity")
            if label < 0 or (num_classes is not None and label >= num_classes):
                raise ValueError(
                    f"{path}: row {row_number} label {label} out of range"
                )
            features.append(values)
            labels.append(label)

    if not features:
        return SampleSet(np.empty((0, width)), np.empty(0, dtype=int))
    return SampleSet(np.asarray(features), np.asarray(labels))


def export_csv(samples: SampleSet, path: str | Path) -> None:
    """Write a sample set as CSV; floats round-trip exactly through repr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(samples.feature_width)] + ["label"])
        for row, label in zip(samples.features, samples.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


class CsvDataSource:
    """Round-indexed streams backed by one CSV file per client.

    Expects ``client_0.csv`` .. ``client_{K-1}.csv`` plus ``test.csv``
    in the given directory; rows (r - 1) * L .. r * L - 1 of a client
    file form its round-r batch, mirroring the order gen-data writes.
    """

    def __init__(
        self,
        directory: str | Path,
        clients: int,
        samples_per_round: int,
        rounds: int,
        num_classes: int | None = None,
    ):
        self.directory = Path(directory)
        self.clients = clients
        self.samples_per_round = samples_per_round
        self.rounds = rounds
        self._streams: list[SampleSet] = []
        width: int | None = None
        for k in range(clients):
            batch = ingest_csv(
                self.directory / f"client_{k}.csv",
                feature_width=width,
                num_classes=num_classes,
            )
            width = batch.feature_width
            needed = samples_per_round * rounds
            if len(batch) < needed:
                raise DataContractError(
                    f"client_{k}.csv holds {len(batch)} samples but "
                    f"{rounds} rounds of {samples_per_round} need {needed}"
                )
            self._streams.append(batch)
        self._test = ingest_csv(
            self.directory / "test.csv", feature_width=width, num_classes=num_classes
        )
        self.feature_width = width if width is not None else 0

    def round_batch(self, client: int, round_index: int) -> SampleSet:
        if not 0 <= client < self.clients:
            raise ValueError(f"client must lie in [0, {self.clients}), got {client}")
        if not 1 <= round_index <= self.rounds:
            raise DataContractError(
                f"round_index {round_index} outside the available [1, {self.rounds}]"
            )
        start = (round_index - 1) * self.samples_per_round
        stop = start + self.samples_per_round
        stream = self._streams[client]
        return SampleSet(stream.features[start:stop], stream.labels[start:stop])

    def test_set(self) -> SampleSet:
        return self._test
