"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes or widths."""


class UnderdeterminedError(ValueError):
    """Decoding requested with fewer equations than unknowns (D < F)."""


class DataContractError(ValueError):
    """A data source violated the per-round delivery contract."""


class CsvParseError(ValueError):
    """A delimited input file could not be parsed; message names the row."""


class ManifestError(ValueError):
    """A run manifest is syntactically or semantically invalid."""
