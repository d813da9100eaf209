"""Run-manifest parsing: flat key = value text with one section per module.

A manifest has a required ``[federation]`` section holding the round
configuration and an optional ``[data]`` section selecting either the
synthetic generator or a directory of CSV files.  Errors carry the
offending line number so the CLI can report them precisely.

Example::

    [federation]
    clients = 8
    samples_per_round = 120
    classes = 3
    dimensions = 4096
    rounds = 10
    epsilon = 10.0
    basis_seed = 42
    noise_seed = 43

    [data]
    source = synthetic
    channels = 12
    window = 10
    noise_std = 0.02
    seed = 7
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .data import CsvDataSource, SyntheticDataSource, SyntheticSpec
from .errors import ManifestError
from .federation import RoundConfig

__all__ = ["Manifest", "DataConfig", "parse_manifest", "build_data_source"]


@dataclass(frozen=True)
class DataConfig:
    source: str
    spec: SyntheticSpec | None
    directory: Path | None
    test_fraction: float
    balance: bool


@dataclass(frozen=True)
class Manifest:
    round_config: RoundConfig
    data: DataConfig


_FEDERATION_KEYS = {
    "clients": int,
    "samples_per_round": int,
    "classes": int,
    "dimensions": int,
    "rounds": int,
    "epsilon": float,
    "basis_seed": int,
    "noise_seed": int,
    "retrain_epochs": int,
}
_REQUIRED_FEDERATION = ("clients", "samples_per_round", "classes", "dimensions", "rounds")

_DATA_KEYS = {
    "source": str,
    "channels": int,
    "window": int,
    "client_shift": float,
    "class_separation": float,
    "noise_std": float,
    "seed": int,
    "test_fraction": float,
    "balance": bool,
    "directory": str,
}


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _scan(path: Path) -> dict[str, dict[str, tuple[str, int]]]:
    """Collect raw (value, line number) per section/key."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in ("federation", "data"):
                raise ManifestError(f"{path}:{lineno}: unknown section [{current}]")
            if current in sections:
                raise ManifestError(f"{path}:{lineno}: duplicate section [{current}]")
            sections[current] = {}
            continue
        if "=" not in line:
            raise ManifestError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        if current is None:
            raise ManifestError(f"{path}:{lineno}: key outside any section")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in sections[current]:
            raise ManifestError(f"{path}:{lineno}: duplicate key {key!r}")
        sections[current][key] = (value, lineno)
    return sections


def _convert(path: Path, section: str, entries: dict[str, tuple[str, int]], schema: dict) -> dict:
    values: dict[str, object] = {}
    for key, (raw, lineno) in entries.items():
        if key not in schema:
            raise ManifestError(f"{path}:{lineno}: unknown key {key!r} in [{section}]")
        kind = schema[key]
        try:
            values[key] = _parse_bool(raw) if kind is bool else kind(raw)
        except ValueError:
            raise ManifestError(
                f"{path}:{lineno}: cannot parse {key} = {raw!r} as {kind.__name__}"
            ) from None
    return values


def parse_manifest(path: str | Path) -> Manifest:
    """Parse and validate a run manifest.

    Raises:
        FileNotFoundError: missing manifest file.
        ManifestError: syntax errors, unknown keys, missing required
            keys, or values rejected by the domain types; messages name
            the offending line where one exists.
    """
    path = Path(path)
    sections = _scan(path)
    if "federation" not in sections:
        raise ManifestError(f"{path}: missing required [federation] section")

    federation_raw = sections["federation"]
    federation = _convert(path, "federation", federation_raw, _FEDERATION_KEYS)
    for key in _REQUIRED_FEDERATION:
        if key not in federation:
            raise ManifestError(f"{path}: [federation] is missing required key {key!r}")

    def lineno(section: str, key: str) -> int:
        return sections[section][key][1]

    try:
        round_config = RoundConfig(
            clients=federation["clients"],
            samples_per_round=federation["samples_per_round"],
            classes=federation["classes"],
            dimensions=federation["dimensions"],
            rounds=federation["rounds"],
            epsilon=federation.get("epsilon"),
            basis_seed=federation.get("basis_seed", 0),
            noise_seed=federation.get("noise_seed", 1),
            retrain_epochs=federation.get("retrain_epochs", 1),
        )
    except ValueError as exc:
        # Point at the first offending federation key named in the message.
        for key in federation_raw:
            if str(exc).startswith(key):
                raise ManifestError(f"{path}:{lineno('federation', key)}: {exc}") from None
        raise ManifestError(f"{path}: [federation]: {exc}") from None

    data_entries = sections.get("data", {})
    data = _convert(path, "data", data_entries, _DATA_KEYS)
    source = data.get("source", "synthetic")
    if source not in ("synthetic", "csv"):
        raise ManifestError(
            f"{path}:{lineno('data', 'source')}: source must be synthetic or csv, got {source!r}"
        )
    test_fraction = data.get("test_fraction", 0.2)
    balance = data.get("balance", True)

    if source == "csv":
        if "directory" not in data:
            raise ManifestError(f"{path}: [data] source = csv requires a directory key")
        return Manifest(
            round_config=round_config,
            data=DataConfig(
                source="csv",
                spec=None,
                directory=Path(str(data["directory"])),
                test_fraction=test_fraction,
                balance=balance,
            ),
        )

    try:
        spec = SyntheticSpec(
            channels=data.get("channels", 90),
            window=data.get("window", 10),
            classes=round_config.classes,
            client_shift=data.get("client_shift", 0.3),
            class_separation=data.get("class_separation", 1.0),
            noise_std=data.get("noise_std", 0.02),
            seed=data.get("seed", 0),
        )
    except ValueError as exc:
        for key in data_entries:
            if str(exc).startswith(key):
                raise ManifestError(f"{path}:{lineno('data', key)}: {exc}") from None
        raise ManifestError(f"{path}: [data]: {exc}") from None
    return Manifest(
        round_config=round_config,
        data=DataConfig(
            source="synthetic",
            spec=spec,
            directory=None,
            test_fraction=test_fraction,
            balance=balance,
        ),
    )


def build_data_source(manifest: Manifest):
    """Instantiate the data source a manifest describes."""
    config = manifest.round_config
    if manifest.data.source == "csv":
        return CsvDataSource(
            manifest.data.directory,
            clients=config.clients,
            samples_per_round=config.samples_per_round,
            rounds=config.rounds,
            num_classes=config.classes,
        )
    return SyntheticDataSource(
        manifest.data.spec,
        clients=config.clients,
        samples_per_round=config.samples_per_round,
        rounds=config.rounds,
        balance=manifest.data.balance,
        test_fraction=manifest.data.test_fraction,
    )
