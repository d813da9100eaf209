"""Federated hyperdimensional classification with an incremental noise ledger.

The package simulates a multi-round federation of hyperdimensional
classifiers.  Clients encode raw signals into bipolar hypervectors,
bundle them into class models, and retrain the downloaded global model
each round; a noise ledger calibrates the Gaussian mechanism so each
client adds only the increment between the noise its model must carry
and the noise already inside the global model, and the server never
adds noise at all.
"""

from .analysis import (
    PsnrStudy,
    SimilarityReport,
    accuracy,
    psnr,
    reconstruction_study,
    similarity_distance,
    smooth_signals,
)
from .data import (
    CsvDataSource,
    SampleSet,
    SyntheticDataSource,
    SyntheticSpec,
    ingest_csv,
    label_from_zscore,
    window,
)
from .errors import (
    CsvParseError,
    DataContractError,
    DimensionError,
    ManifestError,
    UnderdeterminedError,
)
from .federation import (
    RoundConfig,
    RoundMetrics,
    RunResult,
    aggregate,
    first_round,
    local_update,
    run,
    secure_client,
)
from .hd import (
    ClassModel,
    EncoderBasis,
    decode,
    encode,
    encode_batch,
    infer,
    infer_batch,
    make_basis,
    retrain,
    train,
)
from .manifest import Manifest, build_data_source, parse_manifest
from .privacy import (
    NoiseLedgerEntry,
    PrivacyParams,
    build_ledger,
    client_cumulative_var,
    client_incremental_var,
    client_required_var,
    gamma,
    gaussian_variance,
    sample_noise,
    server_cumulative_var,
    server_required_var,
)

__version__ = "0.1.0"
