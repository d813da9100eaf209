"""Core hyperdimensional primitives: encode, bundle, classify, decode.

Raw feature vectors are pushed through a fixed random projection,
a cosine nonlinearity, and a sign binarization, yielding bipolar
(+1/-1) hypervectors.  A class model holds one real-valued accumulator
vector per class; training bundles (sums) the hypervectors of each
class, inference ranks classes by cosine similarity, and retraining
moves misclassified hypervectors from the wrong accumulator to the
right one.  A least-squares decoder maps hypervectors back to feature
space for reconstruction experiments.

All operations are pure: models and bases are immutable values, and
every update returns a fresh object.  This makes them safe to share
across concurrently simulated clients.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, UnderdeterminedError

__all__ = [
    "EncoderBasis",
    "ClassModel",
    "make_basis",
    "encode",
    "encode_batch",
    "train",
    "infer",
    "infer_batch",
    "retrain",
    "decode",
]


@dataclass(frozen=True)
class EncoderBasis:
    """Random projection basis shared by every client of a federation.

    Attributes:
        dimensions: hypervector width D.
        input_width: raw feature width F.
        projection: (D, F) matrix with i.i.d. standard normal entries.
        phase: (D,) vector with entries uniform on [0, 2*pi).
        seed: the seed the basis was generated from; regenerating with
            the same seed reproduces the matrices bit for bit.
    """

    dimensions: int
    input_width: int
    projection: np.ndarray
    phase: np.ndarray
    seed: int


@dataclass(frozen=True)
class ClassModel:
    """Per-class accumulator vectors plus bookkeeping.

    ``classes`` has shape (S, D) and stays real-valued throughout; clean
    models hold integer component sums of bipolar hypervectors, secured
    models additionally carry Gaussian noise (``noised`` is True).
    ``sample_counts`` tracks how many hypervectors were bundled or
    corrected into each class.
    """

    classes: np.ndarray
    sample_counts: np.ndarray
    noised: bool = False

    @property
    def num_classes(self) -> int:
        return self.classes.shape[0]

    @property
    def dimensions(self) -> int:
        return self.classes.shape[1]


def make_basis(dimensions: int, input_width: int, seed: int) -> EncoderBasis:
    """Build the shared encoder basis for a given seed.

    Args:
        dimensions: hypervector width D, at least 1.
        input_width: raw feature width F, at least 1.
        seed: non-negative RNG seed; the basis is a pure function of
            (dimensions, input_width, seed).

    Returns:
        An EncoderBasis with N(0, 1) projection entries and uniform
        [0, 2*pi) phases.

    Raises:
        ValueError: if dimensions or input_width is not positive.
    """
    if dimensions < 1:
        raise ValueError(f"dimensions must be >= 1, got {dimensions}")
    if input_width < 1:
        raise ValueError(f"input_width must be >= 1, got {input_width}")
    rng = np.random.default_rng(seed)
    projection = rng.standard_normal((dimensions, input_width))
    phase = rng.uniform(0.0, 2.0 * np.pi, dimensions)
    return EncoderBasis(dimensions, input_width, projection, phase, seed)


def encode(basis: EncoderBasis, x: np.ndarray) -> np.ndarray:
    """Encode one feature vector into a bipolar hypervector.

    Component d is sign(cos(<projection_d, x> + phase_d)), with
    sign(0) mapped to +1 so the output never contains zeros.

    Raises:
        DimensionError: if ``x`` does not have width F.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != basis.input_width:
        raise DimensionError(
            f"expected a feature vector of width {basis.input_width}, got shape {x.shape}"
        )
    pre = np.cos(basis.projection @ x + basis.phase)
    return np.where(pre >= 0.0, 1.0, -1.0)


def encode_batch(basis: EncoderBasis, xs: np.ndarray) -> np.ndarray:
    """Encode a batch of feature vectors; rows map to hypervectors."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != basis.input_width:
        raise DimensionError(
            f"expected an (N, {basis.input_width}) feature array, got shape {xs.shape}"
        )
    pre = np.cos(xs @ basis.projection.T + basis.phase)
    return np.where(pre >= 0.0, 1.0, -1.0)


def _as_hypervector_matrix(hypervectors) -> np.ndarray:
    hvs = np.asarray(hypervectors, dtype=float)
    if hvs.ndim == 1:
        hvs = hvs[None, :]
    if hvs.ndim != 2:
        raise DimensionError(f"expected (N, D) hypervectors, got shape {hvs.shape}")
    return hvs


def train(hypervectors, labels, num_classes: int) -> ClassModel:
    """Bundle labeled hypervectors into a fresh class model.

    Class vector s is the elementwise sum of all hypervectors whose
    label is s; ``sample_counts[s]`` is the number of such vectors.

    Args:
        hypervectors: (N, D) array or sequence of (D,) hypervectors.
        labels: N class indices in [0, num_classes).
        num_classes: number of classes S, at least 2.

    Raises:
        ValueError: on an empty input or an out-of-range label.
    """
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    hvs = _as_hypervector_matrix(hypervectors)
    labels = np.asarray(labels, dtype=int)
    if hvs.shape[0] == 0 or labels.shape[0] == 0:
        raise ValueError("cannot train on an empty sample set")
    if hvs.shape[0] != labels.shape[0]:
        raise ValueError(
            f"{hvs.shape[0]} hypervectors but {labels.shape[0]} labels"
        )
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValueError(f"labels must lie in [0, {num_classes})")
    classes = np.zeros((num_classes, hvs.shape[1]))
    np.add.at(classes, labels, hvs)
    counts = np.bincount(labels, minlength=num_classes).astype(np.int64)
    return ClassModel(classes=classes, sample_counts=counts, noised=False)


def _similarities(classes: np.ndarray, class_norms: np.ndarray, query: np.ndarray) -> np.ndarray:
    # All-zero class vectors score exactly 0 rather than NaN.
    qnorm = np.linalg.norm(query)
    if qnorm == 0.0:
        return np.zeros(classes.shape[0])
    safe = np.where(class_norms == 0.0, np.inf, class_norms)
    return (classes @ query) / (safe * qnorm)


def infer(model: ClassModel, query: np.ndarray) -> tuple[int, np.ndarray]:
    """Classify one query hypervector by cosine similarity.

    Returns:
        (predicted class index, per-class similarity vector).  Ties are
        broken toward the lowest class index.

    Raises:
        DimensionError: if the query width does not match the model.
    """
    query = np.asarray(query, dtype=float)
    if query.ndim != 1 or query.shape[0] != model.dimensions:
        raise DimensionError(
            f"query width {query.shape} does not match model dimension {model.dimensions}"
        )
    sims = _similarities(model.classes, np.linalg.norm(model.classes, axis=1), query)
    return int(np.argmax(sims)), sims


def infer_batch(model: ClassModel, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Classify a batch of query hypervectors.

    Returns:
        (predicted labels (N,), similarity matrix (N, S)); semantics per
        row are identical to :func:`infer`.
    """
    queries = np.asarray(queries, dtype=float)
    if queries.ndim != 2 or queries.shape[1] != model.dimensions:
        raise DimensionError(
            f"expected (N, {model.dimensions}) queries, got shape {queries.shape}"
        )
    class_norms = np.linalg.norm(model.classes, axis=1)
    safe = np.where(class_norms == 0.0, np.inf, class_norms)
    qnorms = np.linalg.norm(queries, axis=1)
    qsafe = np.where(qnorms == 0.0, np.inf, qnorms)
    sims = (queries @ model.classes.T) / (qsafe[:, None] * safe[None, :])
    return np.argmax(sims, axis=1), sims


def retrain(model: ClassModel, hypervectors, labels) -> ClassModel:
    """Correct mispredictions with a single in-order pass.

    Each sample is classified against the progressively updated model.
    On a misprediction of true class s as s', the hypervector is added
    to class s and subtracted from class s', and ``sample_counts[s]``
    is incremented.  Correctly classified samples leave the model
    untouched.  Works on clean and noised models alike; the ``noised``
    flag is preserved.

    Raises:
        DimensionError: if hypervector width does not match the model.
        ValueError: on an out-of-range label or length mismatch.
    """
    hvs = _as_hypervector_matrix(hypervectors)
    labels = np.asarray(labels, dtype=int)
    if hvs.shape[0] != labels.shape[0]:
        raise ValueError(
            f"{hvs.shape[0]} hypervectors but {labels.shape[0]} labels"
        )
    if hvs.shape[0] and hvs.shape[1] != model.dimensions:
        raise DimensionError(
            f"hypervector width {hvs.shape[1]} does not match model dimension {model.dimensions}"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= model.num_classes):
        raise ValueError(f"labels must lie in [0, {model.num_classes})")

    classes = model.classes.copy()
    counts = model.sample_counts.copy()
    norms = np.linalg.norm(classes, axis=1)
    for hv, label in zip(hvs, labels):
        predicted = int(np.argmax(_similarities(classes, norms, hv)))
        if predicted != label:
            classes[label] += hv
            classes[predicted] -= hv
            counts[label] += 1
            norms[label] = np.linalg.norm(classes[label])
            norms[predicted] = np.linalg.norm(classes[predicted])
    return replace(model, classes=classes, sample_counts=counts)


def decode(basis: EncoderBasis, h: np.ndarray) -> np.ndarray:
    """Invert the encoder in the least-squares sense.

    The cosine is linearized through arccos: each component contributes
    one equation <projection_d, x> = wrap(arccos(clamp(h_d)) - phase_d)
    with the right-hand side wrapped into [-pi, pi), and the
    overdetermined system is solved by least squares.  Accepts bipolar
    hypervectors or arbitrary real D-vectors (e.g. noised ones);
    components are clamped to [-1, 1] before the arccos.

    Raises:
        UnderdeterminedError: if D < F (fewer equations than unknowns).
        DimensionError: if ``h`` does not have width D.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 1 or h.shape[0] != basis.dimensions:
        raise DimensionError(
            f"expected a D-vector of width {basis.dimensions}, got shape {h.shape}"
        )
    if basis.dimensions < basis.input_width:
        raise UnderdeterminedError(
            f"cannot decode with D={basis.dimensions} < F={basis.input_width}"
        )
    target = np.arccos(np.clip(h, -1.0, 1.0)) - basis.phase
    target = (target + np.pi) % (2.0 * np.pi) - np.pi
    solution, *_ = np.linalg.lstsq(basis.projection, target, rcond=None)
    return solution
