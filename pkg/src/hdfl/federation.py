"""Multi-round federated driver for clean and privacy-preserving runs.

Each round, every client either trains a local model from scratch
(round 1) or retrains the downloaded global model on its fresh batch
(rounds >= 2), discarding its previous local model.  In privacy mode
each client then adds the ledger's incremental Gaussian noise to every
class vector before upload; the server only averages.  The server never
injects noise: the averaged client noise always exceeds what the global
model requires (gamma > 1 each round).

Clients are mutually independent within a round; this driver executes
them sequentially, which is an admissible schedule of the parallel
fan-out and keeps runs bit-reproducible.  Models passed between phases
are immutable snapshots.

A data source must expose ``feature_width``, ``round_batch(client,
round_index)`` and ``test_set()``; see the data module for the
synthetic and CSV implementations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import privacy
from .errors import DataContractError, DimensionError
from .hd import ClassModel, EncoderBasis, encode_batch, infer_batch, make_basis, retrain, train
from .privacy import NoiseLedgerEntry, PrivacyParams, sample_noise

__all__ = [
    "RoundConfig",
    "RoundMetrics",
    "RunResult",
    "client_noise_stream",
    "first_round",
    "local_update",
    "secure_client",
    "aggregate",
    "run",
    "write_metrics_csv",
    "save_model",
    "load_model",
]

METRICS_COLUMNS = (
    "round",
    "mode",
    "epsilon",
    "test_accuracy",
    "required_var",
    "cumulative_var",
    "incremental_var",
    "gamma",
)


@dataclass(frozen=True)
class RoundConfig:
    """Everything a federated run depends on besides the data itself.

    ``epsilon`` absent (None) selects the clean mode with no noise
    anywhere; present, it selects privacy mode and must satisfy the
    ledger preconditions together with clients and samples_per_round.
    """

    clients: int
    samples_per_round: int
    classes: int
    dimensions: int
    rounds: int
    epsilon: float | None = None
    basis_seed: int = 0
    noise_seed: int = 1
    retrain_epochs: int = 1

    def __post_init__(self) -> None:
        if self.clients < 2:
            raise ValueError(f"clients must be >= 2, got {self.clients}")
        if self.samples_per_round < 2:
            raise ValueError(f"samples_per_round must be >= 2, got {self.samples_per_round}")
        if self.classes < 2:
            raise ValueError(f"classes must be >= 2, got {self.classes}")
        if self.dimensions < 1:
            raise ValueError(f"dimensions must be >= 1, got {self.dimensions}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.retrain_epochs < 1:
            raise ValueError(f"retrain_epochs must be >= 1, got {self.retrain_epochs}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0 when present, got {self.epsilon}")

    @property
    def mode(self) -> str:
        return "fedhd" if self.epsilon is None else "fedhdprivacy"

    def privacy_params(self) -> PrivacyParams | None:
        if self.epsilon is None:
            return None
        return PrivacyParams(
            epsilon=self.epsilon,
            dimensions=self.dimensions,
            clients=self.clients,
            samples_per_round=self.samples_per_round,
        )


@dataclass(frozen=True)
class RoundMetrics:
    """One metrics row; noise fields are None in clean mode."""

    round_index: int
    mode: str
    epsilon: float | None
    test_accuracy: float
    required_var: float | None
    cumulative_var: float | None
    incremental_var: float | None
    gamma: float | None


@dataclass(frozen=True)
class RunResult:
    global_model: ClassModel
    ledger: list[NoiseLedgerEntry]
    metrics: list[RoundMetrics]


def client_noise_stream(noise_seed: int, client: int, round_index: int) -> np.random.Generator:
    """Independent noise substream for one (client, round) pair."""
    return np.random.default_rng((noise_seed, client, round_index))


def _check_batch(config: RoundConfig, client: int, batch) -> None:
    if len(batch) != config.samples_per_round:
        raise DataContractError(
            f"client {client} supplied {len(batch)} samples, "
            f"expected exactly {config.samples_per_round}"
        )


def first_round(config: RoundConfig, basis: EncoderBasis, client_batches) -> list[ClassModel]:
    """Round-1 local models: encode each client's batch and train from scratch."""
    if len(client_batches) != config.clients:
        raise DataContractError(
            f"expected batches for {config.clients} clients, got {len(client_batches)}"
        )
    models = []
    for client, batch in enumerate(client_batches):
        _check_batch(config, client, batch)
        hvs = encode_batch(basis, batch.features)
        models.append(train(hvs, batch.labels, config.classes))
    return models


def local_update(config: RoundConfig, basis: EncoderBasis, global_model: ClassModel, batch) -> ClassModel:
    """One client's update for rounds >= 2: retrain the downloaded global model.

    The client starts from the global model (noised in privacy mode),
    not from its own previous local model, and makes
    ``config.retrain_epochs`` in-order correction passes over the
    freshly encoded batch.
    """
    hvs = encode_batch(basis, batch.features)
    model = global_model
    for _ in range(config.retrain_epochs):
        model = retrain(model, hvs, batch.labels)
    return model


def secure_client(model: ClassModel, incremental_var: float, rng: np.random.Generator) -> ClassModel:
    """Add fresh N(0, incremental_var) noise to every class vector.

    Each class receives an independent D-vector drawn from ``rng``; the
    result is flagged noised.  Sample counts keep tracking the clean
    bookkeeping and are never treated as a private output.

    Raises:
        ValueError: if incremental_var is negative.
    """
    if incremental_var < 0:
        raise ValueError(f"incremental_var must be >= 0, got {incremental_var}")
    classes = model.classes.copy()
    for s in range(model.num_classes):
        classes[s] += sample_noise(incremental_var, model.dimensions, rng)
    return replace(model, classes=classes, noised=True)


def aggregate(local_models: list[ClassModel]) -> ClassModel:
    """Elementwise average of the clients' class vectors.

    Sample counts are summed; the result is flagged noised when any
    input is.

    Raises:
        ValueError: on an empty list.
        DimensionError: if the models disagree on (S, D).
    """
    if not local_models:
        raise ValueError("cannot aggregate an empty list of models")
    shape = local_models[0].classes.shape
    for m in local_models[1:]:
        if m.classes.shape != shape:
            raise DimensionError(
                f"model shape {m.classes.shape} does not match {shape}"
            )
    classes = np.mean([m.classes for m in local_models], axis=0)
    counts = np.sum([m.sample_counts for m in local_models], axis=0)
    return ClassModel(
        classes=classes,
        sample_counts=counts,
        noised=any(m.noised for m in local_models),
    )


def run(config: RoundConfig, data_source) -> RunResult:
    """Drive the full federation for ``config.rounds`` rounds.

    Per round: local update for every client, client-side noising in
    privacy mode, aggregation, then evaluation of the (possibly noised)
    global model on the held-out test set.  Fully deterministic in the
    config seeds and the data source.

    Returns:
        RunResult with the final global model, the noise ledger
        (empty in clean mode), and one metrics row per round.
    """
    basis = make_basis(config.dimensions, data_source.feature_width, config.basis_seed)
    params = config.privacy_params()

    test = data_source.test_set()
    test_hvs = encode_batch(basis, test.features)

    global_model: ClassModel | None = None
    ledger: list[NoiseLedgerEntry] = []
    metrics: list[RoundMetrics] = []

    for round_index in range(1, config.rounds + 1):
        if round_index == 1:
            batches = [data_source.round_batch(k, 1) for k in range(config.clients)]
            local_models = first_round(config, basis, batches)
        else:
            local_models = []
            for k in range(config.clients):
                batch = data_source.round_batch(k, round_index)
                _check_batch(config, k, batch)
                local_models.append(local_update(config, basis, global_model, batch))

        entry: NoiseLedgerEntry | None = None
        if params is not None:
            entry = NoiseLedgerEntry(
                round_index=round_index,
                required_var=privacy.client_required_var(params, round_index),
                cumulative_var=privacy.client_cumulative_var(params, round_index - 1),
                incremental_var=privacy.client_incremental_var(params, round_index),
                gamma=privacy.gamma(params, round_index),
            )
            ledger.append(entry)
            local_models = [
                secure_client(
                    model,
                    entry.incremental_var,
                    client_noise_stream(config.noise_seed, k, round_index),
                )
                for k, model in enumerate(local_models)
            ]

        global_model = aggregate(local_models)

        predicted, _ = infer_batch(global_model, test_hvs)
        accuracy = float(np.mean(predicted == test.labels))
        metrics.append(
            RoundMetrics(
                round_index=round_index,
                mode=config.mode,
                epsilon=config.epsilon,
                test_accuracy=accuracy,
                required_var=entry.required_var if entry else None,
                cumulative_var=entry.cumulative_var if entry else None,
                incremental_var=entry.incremental_var if entry else None,
                gamma=entry.gamma if entry else None,
            )
        )

    assert global_model is not None
    return RunResult(global_model=global_model, ledger=ledger, metrics=metrics)


def _cell(value) -> str:
    return "" if value is None else str(value)


def write_metrics_csv(metrics: list[RoundMetrics], path: str | Path) -> None:
    """Write per-round metrics as CSV; clean-mode noise cells are empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for m in metrics:
            writer.writerow(
                [
                    m.round_index,
                    m.mode,
                    _cell(m.epsilon),
                    m.test_accuracy,
                    _cell(m.required_var),
                    _cell(m.cumulative_var),
                    _cell(m.incremental_var),
                    _cell(m.gamma),
                ]
            )


def save_model(
    model: ClassModel,
    path: str | Path,
    *,
    clients: int,
    round_index: int,
    basis_seed: int,
    noise_seed: int,
) -> None:
    """Dump a class model as text: a key=value header, then S rows of D floats.

    The float columns use repr and reload exactly.
    """
    with open(path, "w") as fh:
        fh.write("hdfl-model v1\n")
        fh.write(f"dimensions={model.dimensions}\n")
        fh.write(f"classes={model.num_classes}\n")
        fh.write(f"clients={clients}\n")
        fh.write(f"round={round_index}\n")
        fh.write(f"noised={'true' if model.noised else 'false'}\n")
        fh.write(f"basis_seed={basis_seed}\n")
        fh.write(f"noise_seed={noise_seed}\n")
        fh.write("sample_counts=" + ",".join(str(int(c)) for c in model.sample_counts) + "\n")
        for row in model.classes:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_model(path: str | Path) -> tuple[ClassModel, dict]:
    """Reload a model snapshot; returns the model and its header fields."""
    with open(path) as fh:
        magic = fh.readline().strip()
        if magic != "hdfl-model v1":
            raise ValueError(f"{path}: not a model snapshot (leading line {magic!r})")
        header: dict[str, str] = {}
        for _ in range(8):
            key, _, value = fh.readline().strip().partition("=")
            header[key] = value
        dimensions = int(header["dimensions"])
        num_classes = int(header["classes"])
        counts = np.asarray([int(v) for v in header["sample_counts"].split(",")], dtype=np.int64)
        rows = [
            np.array(fh.readline().split(), dtype=float) for _ in range(num_classes)
        ]
    classes = np.vstack(rows)
    if classes.shape != (num_classes, dimensions):
        raise ValueError(f"{path}: expected {(num_classes, dimensions)} values, got {classes.shape}")
    model = ClassModel(
        classes=classes,
        sample_counts=counts,
        noised=header["noised"] == "true",
    )
    meta = {
        "dimensions": dimensions,
        "classes": num_classes,
        "clients": int(header["clients"]),
        "round": int(header["round"]),
        "noised": header["noised"] == "true",
        "basis_seed": int(header["basis_seed"]),
        "noise_seed": int(header["noise_seed"]),
    }
    return model, meta
