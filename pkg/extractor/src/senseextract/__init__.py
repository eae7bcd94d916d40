"""senseextract: contextual target-token embeddings from a transformer,
written in the SORE binary format the sensemine pipeline consumes."""

__version__ = "0.1.0"

from .config import ExtractConfig  # noqa: F401
from .corpusio import TargetedPassage, read_targets  # noqa: F401
from .extract import ExtractError, extract  # noqa: F401
from .sore import write_sore  # noqa: F401
