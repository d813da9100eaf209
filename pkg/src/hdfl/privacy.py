"""Gaussian-mechanism calibration and the incremental noise ledger.

Every quantity here is a *variance* of zero-mean Gaussian noise, in
squared hypervector-component units.  The ledger tracks three values
per communication round r:

* required_var:    total noise variance a local model must carry before
                   upload to protect every sample that has contributed
                   to it (clients retrain the downloaded global model,
                   so prior rounds' samples count too).
* cumulative_var:  noise variance already present in the downloaded
                   global model, i.e. the K-fold average of the noise
                   the clients uploaded the round before.
* incremental_var: the fresh noise actually added this round,
                   required_var(r) - cumulative_var(r - 1).

On the server side, the same averaging argument shows the aggregated
model always carries *more* noise than it needs: the ratio
``gamma = cumulative / required`` stays above 1 for all K, L >= 2, so
the server never injects noise of its own.

The closed forms embed a sensitivity of sqrt(D) for client models (a
single sample changes a class accumulator by one bipolar hypervector)
and sqrt(D)/K after server averaging, with the privacy loss threshold
delta set to the inverse of the number of protected samples.

Round indices may be given as ints or integer arrays; array inputs
evaluate the closed forms elementwise, which keeps large parameter
sweeps cheap.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "PrivacyParams",
    "NoiseLedgerEntry",
    "gaussian_variance",
    "client_required_var",
    "client_cumulative_var",
    "client_incremental_var",
    "server_required_var",
    "server_cumulative_var",
    "gamma",
    "sample_noise",
    "build_ledger",
    "write_ledger_csv",
]

LEDGER_COLUMNS = ("round", "required_var", "cumulative_var", "incremental_var", "gamma")


@dataclass(frozen=True)
class PrivacyParams:
    """Federation-wide privacy constants.

    Attributes:
        epsilon: privacy budget, > 0 (smaller means more noise).
        dimensions: hypervector width D.
        clients: number of clients K, >= 2.
        samples_per_round: samples per client per round L, >= 2.

    The closed forms are only proved for K >= 2 and L >= 2; smaller
    federations are rejected at construction.
    """

    epsilon: float
    dimensions: int
    clients: int
    samples_per_round: int

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.dimensions < 1:
            raise ValueError(f"dimensions must be >= 1, got {self.dimensions}")
        if self.clients < 2:
            raise ValueError(f"clients must be >= 2, got {self.clients}")
        if self.samples_per_round < 2:
            raise ValueError(
                f"samples_per_round must be >= 2, got {self.samples_per_round}"
            )


@dataclass(frozen=True)
class NoiseLedgerEntry:
    """One round's noise accounting; all variances, see module docstring."""

    round_index: int
    required_var: float
    cumulative_var: float
    incremental_var: float
    gamma: float


def _validate_rounds(r, minimum: int, name: str) -> np.ndarray:
    arr = np.asarray(r)
    if arr.dtype.kind not in "iu":
        raise ValueError(f"{name} must be an integer or integer array, got {arr.dtype}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if int(arr.min()) < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {int(arr.min())}")
    return arr.astype(float)


def _match_input(value: np.ndarray, reference) -> float | np.ndarray:
    if np.isscalar(reference) or getattr(reference, "ndim", 0) == 0:
        return float(value)
    return value


def gaussian_variance(sensitivity: float, epsilon: float, delta: float) -> float:
    """Noise variance calibrating the Gaussian mechanism to (epsilon, delta).

    Returns 2 * ln(1.25 / delta) * sensitivity**2 / epsilon**2.  The
    textbook condition is a strict lower bound; this module calibrates
    at equality everywhere.

    Raises:
        ValueError: if delta is outside (0, 1), or sensitivity or
            epsilon is not positive.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not sensitivity > 0:
        raise ValueError(f"sensitivity must be > 0, got {sensitivity}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    return 2.0 * np.log(1.25 / delta) * sensitivity**2 / epsilon**2


def client_required_var(params: PrivacyParams, r) -> float | np.ndarray:
    """Total noise variance a local model needs at round r (>= 1).

    Equals (2D / eps^2) * ln(1.25 * ((r - 1) * K * L + L)): the model
    protects the L fresh samples plus the (r - 1) * K * L samples
    already baked into the downloaded global model, and delta is the
    inverse of that count.
    """
    rr = _validate_rounds(r, 1, "round")
    protected = (rr - 1.0) * params.clients * params.samples_per_round + params.samples_per_round
    value = 2.0 * params.dimensions / params.epsilon**2 * np.log(1.25 * protected)
    return _match_input(value, r)


def client_cumulative_var(params: PrivacyParams, r_minus_1) -> float | np.ndarray:
    """Noise variance already inside the global model after round r - 1.

    Zero before the first round; afterwards the K-fold average of the
    previous round's required noise, (2D / (K eps^2)) * ln(1.25 *
    ((r - 2) * K * L + L)) with r = r_minus_1 + 1.
    """
    rr = _validate_rounds(r_minus_1, 0, "r_minus_1")
    protected = (rr - 1.0) * params.clients * params.samples_per_round + params.samples_per_round
    with np.errstate(invalid="ignore", divide="ignore"):
        carried = (
            2.0 * params.dimensions / (params.clients * params.epsilon**2)
            * np.log(1.25 * protected)
        )
    value = np.where(rr == 0.0, 0.0, carried)
    return _match_input(value, r_minus_1)


def client_incremental_var(params: PrivacyParams, r) -> float | np.ndarray:
    """Fresh noise variance a client adds at round r (>= 1).

    Computed as client_required_var(r) - client_cumulative_var(r - 1);
    strictly positive for all valid parameters.  Realized by sampling
    fresh independent Gaussian noise of this variance, relying on
    independence for variances to add.
    """
    rr = _validate_rounds(r, 1, "round")
    value = client_required_var(params, rr.astype(int)) - client_cumulative_var(
        params, rr.astype(int) - 1
    )
    return _match_input(np.asarray(value), r)


def server_required_var(params: PrivacyParams, r) -> float | np.ndarray:
    """Noise variance the aggregated global model needs at round r.

    Equals (2D / (K^2 eps^2)) * ln(1.25 * K * L * r): averaging divides
    the sensitivity by K, and the server must protect all K * L * r
    samples seen so far.
    """
    rr = _validate_rounds(r, 1, "round")
    value = (
        2.0 * params.dimensions / (params.clients**2 * params.epsilon**2)
        * np.log(1.25 * params.clients * params.samples_per_round * rr)
    )
    return _match_input(value, r)


def server_cumulative_var(params: PrivacyParams, r) -> float | np.ndarray:
    """Noise variance actually present in the global model at round r.

    The average of K independent client uploads:
    (2D / (K eps^2)) * ln(1.25 * ((r - 1) * K * L + L)), i.e.
    client_required_var(r) / K.
    """
    rr = _validate_rounds(r, 1, "round")
    value = client_required_var(params, rr.astype(int)) / params.clients
    return _match_input(np.asarray(value), r)


def gamma(params: PrivacyParams, r) -> float | np.ndarray:
    """Cumulative-to-required server noise ratio at round r.

    gamma = K * ln(1.25 * ((r - 1) * K * L + L)) / ln(1.25 * K * L * r).
    Under the type invariants (K, L >= 2) this is always > 1, which is
    exactly why the server never adds noise of its own.
    """
    rr = _validate_rounds(r, 1, "round")
    K = float(params.clients)
    L = float(params.samples_per_round)
    value = K * np.log(1.25 * ((rr - 1.0) * K * L + L)) / np.log(1.25 * K * L * rr)
    return _match_input(value, r)


def sample_noise(variance: float, dimensions: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one D-vector of i.i.d. N(0, variance) noise from ``rng``.

    A variance of exactly 0 returns the zero vector without consuming
    RNG state.  Streams must never be shared between concurrent
    clients; the orchestrator derives one per (client, round).

    Raises:
        ValueError: if variance is negative.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    if variance == 0:
        return np.zeros(dimensions)
    return rng.normal(0.0, np.sqrt(variance), dimensions)


def build_ledger(params: PrivacyParams, rounds: int) -> list[NoiseLedgerEntry]:
    """Evaluate the full ledger for rounds 1..rounds."""
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    entries = []
    for r in range(1, rounds + 1):
        entries.append(
            NoiseLedgerEntry(
                round_index=r,
                required_var=client_required_var(params, r),
                cumulative_var=client_cumulative_var(params, r - 1),
                incremental_var=client_incremental_var(params, r),
                gamma=gamma(params, r),
            )
        )
    return entries


def write_ledger_csv(entries: list[NoiseLedgerEntry], path: str | Path) -> None:
    """Write ledger entries as CSV with a header row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEDGER_COLUMNS)
        for e in entries:
            writer.writerow(
                [e.round_index, e.required_var, e.cumulative_var, e.incremental_var, e.gamma]
            )
