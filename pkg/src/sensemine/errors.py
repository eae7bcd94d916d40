"""Exception hierarchy shared across the pipeline.

Exit-code mapping used by the CLI: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class SenseMineError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(SenseMineError):
    """Invalid or unreadable configuration."""


class DataError(SenseMineError):
    """Malformed, inconsistent, or insufficient input data."""


class CorpusFormatError(DataError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class InventoryFormatError(DataError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class SoreFormatError(DataError):
    """Corrupt or unsupported embedding file."""


class AlignmentError(DataError):
    """Corpus and embedding matrix do not cover the same instance ids."""


class MissingEmbeddingError(AlignmentError):
    def __init__(self, ids):
        self.ids = sorted(ids)
        super().__init__(f"corpus instances without embeddings: {self.ids}")


class OrphanEmbeddingError(AlignmentError):
    def __init__(self, ids):
        self.ids = sorted(ids)
        super().__init__(f"embeddings without corpus instances: {self.ids}")


class InsufficientSensesError(DataError):
    """Too few eligible senses to assemble a training batch."""


class NumericalError(SenseMineError):
    """Numerical failure (non-finite values, degenerate geometry)."""


class ZeroNormError(NumericalError):
    """A vector with zero norm was used where a direction is required."""


class NonFiniteLossError(NumericalError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite loss at training step {step}")
