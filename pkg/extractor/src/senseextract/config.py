from dataclasses import dataclass

POOLINGS = ("MEAN", "FIRST")


@dataclass
class ExtractConfig:
    model: str
    layer: int = -1            # index into hidden_states; -1 = last hidden layer
    pooling: str = "MEAN"
    max_length: int = 128      # includes special tokens
    batch_size: int = 8

    def __post_init__(self):
        self.pooling = self.pooling.upper()
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.max_length < 8:
            raise ValueError(f"max_length too small: {self.max_length}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive: {self.batch_size}")
