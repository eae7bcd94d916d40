"""Contrastive training of a projection head over frozen embeddings.

Batches hold N/2 positive pairs, one pair per word sense; every other member
of the batch acts as an in-batch negative for an anchor. The objective for an
anchor with positive partner p is

    -log  exp(sim(v, v_p)/t) / sum_{j != anchor} exp(sim(v, v_j)/t)

with cosine similarity and temperature t, computed in log space with
max-subtraction. Senses labeled METAPHORICAL never enter a batch.

All randomness flows from one seed through numpy's PCG64 generator; training
is single-threaded and bit-reproducible on a given platform.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import MetaphorLabel, SenseInventory
from .embedstore import AlignedDataset, EmbeddingMatrix
from .errors import (
    ConfigError,
    InsufficientSensesError,
    NonFiniteLossError,
    ZeroNormError,
)


class AnchorMode(Enum):
    ALL_ANCHORS = "ALL_ANCHORS"
    SINGLE_ANCHOR = "SINGLE_ANCHOR"


class NegativeSampling(Enum):
    UNIFORM_OTHER_SENSE = "UNIFORM_OTHER_SENSE"
    SAME_LEMMA_BIASED = "SAME_LEMMA_BIASED"


@dataclass
class TrainConfig:
    batch_size: int = 64
    steps: int = 900
    temperature: float = 0.05
    output_dim: int = 256
    hidden_layers: int = 0
    hidden_dim: int | None = None
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    anchor_mode: AnchorMode = AnchorMode.ALL_ANCHORS
    negative_sampling: NegativeSampling = NegativeSampling.UNIFORM_OTHER_SENSE

    def __post_init__(self):
        if isinstance(self.anchor_mode, str):
            self.anchor_mode = AnchorMode(self.anchor_mode.upper())
        if isinstance(self.negative_sampling, str):
            self.negative_sampling = NegativeSampling(self.negative_sampling.upper())
        if self.batch_size % 2 or self.batch_size < 4:
            raise ConfigError(f"batch_size must be even and >= 4, got {self.batch_size}")
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if self.output_dim < 1:
            raise ConfigError(f"output_dim must be positive, got {self.output_dim}")
        if self.hidden_layers not in (0, 1):
            raise ConfigError(f"hidden_layers must be 0 or 1, got {self.hidden_layers}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass(frozen=True)
class Batch:
    """N member rows, interleaved as pairs: members 2i and 2i+1 share a sense."""

    member_rows: tuple[int, ...]
    pair_of: tuple[int, ...]      # positional index of each member's partner
    sense_of: tuple[str, ...]

    def __post_init__(self):
        n = len(self.member_rows)
        if n % 2 or n < 4:
            raise ValueError(f"batch size must be even and >= 4, got {n}")
        for i, p in enumerate(self.pair_of):
            if self.pair_of[p] != i or self.sense_of[p] != self.sense_of[i]:
                raise ValueError("pair mapping is not a sense-homogeneous involution")
        if len({self.sense_of[2 * i] for i in range(n // 2)}) != n // 2:
            raise ValueError("batch senses are not pairwise distinct")


@dataclass
class ProjectionHead:
    """Affine map (optionally with one tanh hidden layer) producing SOR vectors."""

    layers: list[tuple[np.ndarray, np.ndarray]]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("head needs at least one layer")
        prev = None
        cleaned = []
        for W, b in self.layers:
            W = np.asarray(W, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ValueError(f"layer shapes do not compose: W{W.shape} b{b.shape}")
            if prev is not None and W.shape[1] != prev:
                raise ValueError(f"layer input {W.shape[1]} != previous output {prev}")
            if not (np.isfinite(W).all() and np.isfinite(b).all()):
                raise ValueError("non-finite head parameter")
            prev = W.shape[0]
            cleaned.append((W, b))
        self.layers = cleaned

    @property
    def input_dim(self) -> int:
        return int(self.layers[0][0].shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.layers[-1][0].shape[0])

    @classmethod
    def initialize(cls, input_dim: int, cfg: TrainConfig, rng: np.random.Generator) -> "ProjectionHead":
        """Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases."""
        hidden = cfg.hidden_dim if cfg.hidden_dim is not None else cfg.output_dim
        if cfg.hidden_layers == 0:
            shapes = [(cfg.output_dim, input_dim)]
        else:
            shapes = [(hidden, input_dim), (cfg.output_dim, hidden)]
        layers = []
        for out_d, in_d in shapes:
            bound = 1.0 / math.sqrt(in_d)
            W = rng.uniform(-bound, bound, size=(out_d, in_d))
            layers.append((W, np.zeros(out_d)))
        return cls(layers=layers)

    def forward(self, X: np.ndarray) -> np.ndarray:
        return self._forward_cached(X)[0]

    def _forward_cached(self, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns output and per-layer inputs (activations feeding each layer)."""
        h = np.asarray(X, dtype=np.float64)
        if h.ndim != 2 or h.shape[1] != self.input_dim:
            raise ValueError(
                f"input shape {h.shape} incompatible with head input dim {self.input_dim}"
            )
        acts = [h]
        last = len(self.layers) - 1
        for li, (W, b) in enumerate(self.layers):
            h = h @ W.T + b
            if li < last:
                h = np.tanh(h)
            acts.append(h)
        return h, acts


@dataclass
class TrainingLog:
    losses: list[float] = field(default_factory=list)
    step_seconds: list[float] = field(default_factory=list)
    config: TrainConfig | None = None


def cosine_sim(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; clamped against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = math.sqrt(np.dot(u, u))
    nv = math.sqrt(np.dot(v, v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroNormError("cosine similarity undefined for zero-norm vector")
    return min(1.0, max(-1.0, float(np.dot(u, v) / (nu * nv))))


def _sense_groups(data: AlignedDataset, inventory: SenseInventory) -> dict:
    groups: dict[tuple[str, str], list[int]] = {}
    for inst in data.corpus:
        groups.setdefault((inst.lemma, inst.sense_id), []).append(data.index[inst.instance_id])
    return groups


def _eligible_groups(groups: dict, inventory: SenseInventory) -> list:
    """Sense groups usable for training: >= 2 instances, not metaphorical."""
    return sorted(
        (key, rows)
        for key, rows in groups.items()
        if len(rows) >= 2 and inventory.label_of(key[1]) is not MetaphorLabel.METAPHORICAL
    )


def _draw_batch(eligible: list, cfg: TrainConfig, rng: np.random.Generator) -> Batch:
    half = cfg.batch_size // 2
    if len(eligible) < half:
        raise InsufficientSensesError(
            f"need {half} trainable senses with >= 2 instances, found {len(eligible)}"
        )
    if cfg.negative_sampling is NegativeSampling.UNIFORM_OTHER_SENSE:
        picks = [int(i) for i in rng.choice(len(eligible), size=half, replace=False)]
    else:
        picks = []
        remaining = list(range(len(eligible)))
        chosen_lemmas: set[str] = set()
        for _ in range(half):
            same = [i for i in remaining if eligible[i][0][0] in chosen_lemmas]
            source = same if same else remaining
            pick = source[int(rng.integers(len(source)))]
            picks.append(pick)
            remaining.remove(pick)
            chosen_lemmas.add(eligible[pick][0][0])
    members: list[int] = []
    senses: list[str] = []
    for pick in picks:
        (_, sense_id), rows = eligible[pick]
        two = rng.choice(len(rows), size=2, replace=False)
        members += [rows[int(two[0])], rows[int(two[1])]]
        senses += [sense_id, sense_id]
    pair = tuple(i + 1 if i % 2 == 0 else i - 1 for i in range(cfg.batch_size))
    return Batch(member_rows=tuple(members), pair_of=pair, sense_of=tuple(senses))


def sample_batch(
    data: AlignedDataset,
    inventory: SenseInventory,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> Batch:
    """Draw one training batch; deterministic given the generator state."""
    return _draw_batch(_eligible_groups(_sense_groups(data, inventory), inventory), cfg, rng)


def _anchor_positions(n: int, mode: AnchorMode) -> list[int]:
    return list(range(n)) if mode is AnchorMode.ALL_ANCHORS else [0]


def _unit_rows(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sq = np.einsum("ij,ij->i", Z, Z)
    if not (sq > 0.0).all():
        raise ZeroNormError("projected vector with zero norm")
    norms = np.sqrt(sq)
    return Z / norms[:, None], norms


def _anchor_loss(x_row: np.ndarray, i: int, p: int) -> float:
    """Stable -log softmax term for one anchor; always > 0 in exact arithmetic.

    x_row holds similarity/temperature logits; candidates are all j != i.
    """
    xp = x_row[p]
    cand = np.delete(x_row, i)
    m = cand.max()
    if xp >= m:
        # positive is the argmax: log1p keeps tiny losses positive
        return float(np.log1p(np.exp(cand - xp).sum() - 1.0))
    return float((m - xp) + np.log(np.exp(cand - m).sum()))


def contrastive_loss(
    projected: np.ndarray,
    batch: Batch,
    temperature: float,
    mode: AnchorMode = AnchorMode.ALL_ANCHORS,
) -> float:
    """In-batch negative objective over the projected batch members."""
    Z = np.asarray(projected, dtype=np.float64)
    n = len(batch.member_rows)
    if Z.shape[0] != n:
        raise ValueError(f"{Z.shape[0]} projected rows for batch of {n}")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    U, _ = _unit_rows(Z)
    X = np.clip(U @ U.T, -1.0, 1.0) / temperature
    anchors = _anchor_positions(n, mode)
    total = 0.0
    for i in anchors:
        term = _anchor_loss(X[i], i, batch.pair_of[i])
        if not math.isfinite(term):
            raise ValueError(f"non-finite loss term for anchor {i}")
        total += term
    return total / len(anchors)


def _loss_and_dz(
    Z: np.ndarray, batch: Batch, temperature: float, mode: AnchorMode
) -> tuple[float, np.ndarray]:
    n = Z.shape[0]
    U, norms = _unit_rows(Z)
    S = np.clip(U @ U.T, -1.0, 1.0)
    X = S / temperature
    anchors = _anchor_positions(n, mode)
    loss = 0.0
    A = X.copy()
    np.fill_diagonal(A, -np.inf)
    m = A.max(axis=1)
    P = np.exp(A - m[:, None])
    P /= P.sum(axis=1)[:, None]
    G = np.zeros((n, n))
    for i in anchors:
        loss += _anchor_loss(X[i], i, batch.pair_of[i])
        G[i] = P[i]
        G[i, batch.pair_of[i]] -= 1.0
    scale = 1.0 / (temperature * len(anchors))
    G *= scale
    loss /= len(anchors)
    dU = (G + G.T) @ U
    dZ = (dU - np.einsum("ij,ij->i", dU, U)[:, None] * U) / norms[:, None]
    return loss, dZ


def _loss_and_gradients(
    X: np.ndarray,
    head: ProjectionHead,
    batch: Batch,
    temperature: float,
    mode: AnchorMode,
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    Z, acts = head._forward_cached(X)
    loss, delta = _loss_and_dz(Z, batch, temperature, mode)
    grads: list[tuple[np.ndarray, np.ndarray] | None] = [None] * len(head.layers)
    for li in range(len(head.layers) - 1, -1, -1):
        W, _ = head.layers[li]
        grads[li] = (delta.T @ acts[li], delta.sum(axis=0))
        if li > 0:
            # acts[li] is the tanh output feeding layer li
            delta = (delta @ W) * (1.0 - acts[li] ** 2)
    return loss, grads  # type: ignore[return-value]


def loss_gradient(
    inputs: np.ndarray,
    head: ProjectionHead,
    batch: Batch,
    temperature: float,
    mode: AnchorMode = AnchorMode.ALL_ANCHORS,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Analytic gradient of the contrastive objective w.r.t. head parameters.

    inputs holds the raw (pre-projection) batch vectors, one row per member.
    """
    X = np.asarray(inputs, dtype=np.float64)
    if X.shape[0] != len(batch.member_rows):
        raise ValueError(f"{X.shape[0]} input rows for batch of {len(batch.member_rows)}")
    return _loss_and_gradients(X, head, batch, temperature, mode)[1]


def train(
    data: AlignedDataset,
    inventory: SenseInventory,
    cfg: TrainConfig,
) -> tuple[ProjectionHead, TrainingLog]:
    """Run cfg.steps Adam updates of a freshly initialized head."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    head = ProjectionHead.initialize(data.matrix.dim, cfg, rng)
    eligible = _eligible_groups(_sense_groups(data, inventory), inventory)
    vectors = data.matrix.vectors.astype(np.float64)
    log = TrainingLog(config=replace(cfg))
    mom = [(np.zeros_like(W), np.zeros_like(b)) for W, b in head.layers]
    vel = [(np.zeros_like(W), np.zeros_like(b)) for W, b in head.layers]
    b1, b2, eps, lr = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, cfg.learning_rate
    for step in range(cfg.steps):
        t0 = time.perf_counter()
        batch = _draw_batch(eligible, cfg, rng)
        loss, grads = _loss_and_gradients(
            vectors[list(batch.member_rows)], head, batch, cfg.temperature, cfg.anchor_mode
        )
        if not math.isfinite(loss):
            raise NonFiniteLossError(step)
        t = step + 1
        c1 = 1.0 - b1**t
        c2 = 1.0 - b2**t
        for li, (gW, gb) in enumerate(grads):
            W, b = head.layers[li]
            mW, mb = mom[li]
            vW, vb = vel[li]
            mW *= b1
            mW += (1 - b1) * gW
            vW *= b2
            vW += (1 - b2) * gW * gW
            mb *= b1
            mb += (1 - b1) * gb
            vb *= b2
            vb += (1 - b2) * gb * gb
            W -= lr * (mW / c1) / (np.sqrt(vW / c2) + eps)
            b -= lr * (mb / c1) / (np.sqrt(vb / c2) + eps)
        log.losses.append(loss)
        log.step_seconds.append(time.perf_counter() - t0)
    return head, log


def project(head: ProjectionHead, matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Apply the head to every row; ids preserved in order."""
    Z = head.forward(matrix.vectors.astype(np.float64))
    if Z.size and not np.isfinite(Z).all():
        raise NonFiniteLossError(-1)
    return EmbeddingMatrix(ids=matrix.ids, vectors=Z.astype(np.float32))


def save_head(path: str | Path, head: ProjectionHead) -> None:
    """Text sidecar: JSON shape header, then row-major full-precision floats."""
    with Path(path).open("w", encoding="utf-8") as fh:
        header = {
            "format": "sor-projection-head",
            "version": 1,
            "activation": "tanh",
            "shapes": [[int(W.shape[0]), int(W.shape[1])] for W, _ in head.layers],
        }
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for W, b in head.layers:
            for row in W:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")
            fh.write(" ".join(repr(float(x)) for x in b) + "\n")


def load_head(path: str | Path) -> ProjectionHead:
    with Path(path).open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "sor-projection-head" or header.get("version") != 1:
            raise ValueError(f"{path}: not a projection head sidecar")
        layers = []
        for out_d, in_d in header["shapes"]:
            W = np.empty((out_d, in_d), dtype=np.float64)
            for r in range(out_d):
                W[r] = [float(x) for x in fh.readline().split()]
            b = np.array([float(x) for x in fh.readline().split()], dtype=np.float64)
            layers.append((W, b))
    return ProjectionHead(layers=layers)
