"""Deterministic synthetic corpus and embedding generator with planted sense
clusters and injected hard examples; the desk-scale ground-truth oracle for
the pipeline.

Geometry lives on the unit sphere because cosine distance is the pipeline
metric. Per lemma, sense centroids are rejection-sampled to keep a 30 degree
angular margin from each other; instances are centroid plus Gaussian noise,
renormalized. A hard_fraction prefix of each sense's instances is instead
placed around a different same-lemma sense's centroid (round-robin over the
other senses, so every sense receives an equal share of foreigners) and
recorded as ground truth. An optional mixing map is applied to all vectors
last: "orthogonal" preserves every cosine distance, "general" is invertible
but entangles the raw space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Instance, MetaphorLabel, Pos, SenseEntry, SenseInventory
from .embedstore import EmbeddingMatrix
from .errors import ConfigError, DataError

ANGULAR_MARGIN_DEG = 30.0
_MAX_REJECTS = 1000

MIXING_KINDS = ("none", "orthogonal", "general")


@dataclass
class SynthConfig:
    n_lemmas: int = 10
    senses_per_lemma: int = 3
    instances_per_sense: int = 20
    dim: int = 16
    noise_sigma: float = 0.05
    hard_fraction: float = 0.0
    metaphor_fraction: float = 0.0
    mixing: str = "none"
    mixing_rank: int = 2
    mixing_strength: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.instances_per_sense < 4:
            raise ConfigError(
                f"instances_per_sense must be >= 4, got {self.instances_per_sense}"
            )
        if self.n_lemmas < 1 or self.senses_per_lemma < 1:
            raise ConfigError("need at least one lemma and one sense per lemma")
        if self.dim < 2:
            raise ConfigError(f"dim must be >= 2, got {self.dim}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not 0 <= self.hard_fraction <= 1:
            raise ConfigError(f"hard_fraction must be in [0, 1], got {self.hard_fraction}")
        if not 0 <= self.metaphor_fraction <= 1:
            raise ConfigError(
                f"metaphor_fraction must be in [0, 1], got {self.metaphor_fraction}"
            )
        if self.hard_fraction > 0 and self.senses_per_lemma < 2:
            raise ConfigError("hard_fraction > 0 needs at least 2 senses per lemma")
        if self.mixing not in MIXING_KINDS:
            raise ConfigError(f"mixing must be one of {MIXING_KINDS}, got {self.mixing!r}")
        if self.mixing == "general":
            if not 1 <= self.mixing_rank <= self.dim - 1:
                raise ConfigError(
                    f"mixing_rank must be in [1, {self.dim - 1}], got {self.mixing_rank}"
                )
            if self.mixing_strength <= 0:
                raise ConfigError("mixing_strength must be positive (map must be invertible)")


@dataclass(frozen=True)
class GroundTruth:
    planted_hard_ids: frozenset[str]


def _sample_centroids(rng: np.random.Generator, n: int, dim: int, cfg: SynthConfig) -> np.ndarray:
    """Unit centroids pairwise separated by at least the angular margin."""
    min_cos = math.cos(math.radians(ANGULAR_MARGIN_DEG))
    centroids: list[np.ndarray] = []
    for _ in range(n):
        for _attempt in range(_MAX_REJECTS):
            c = rng.standard_normal(dim)
            c /= np.linalg.norm(c)
            if all(float(np.dot(c, prev)) < min_cos for prev in centroids):
                centroids.append(c)
                break
        else:
            raise DataError(
                f"could not place {n} sense centroids with a "
                f"{ANGULAR_MARGIN_DEG} degree margin after {_MAX_REJECTS} tries; "
                f"config: {cfg}"
            )
    return np.stack(centroids)


def _mixing_matrix(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray | None:
    if cfg.mixing == "none":
        return None
    if cfg.mixing == "orthogonal":
        q, _ = np.linalg.qr(rng.standard_normal((cfg.dim, cfg.dim)))
        return q
    q1, _ = np.linalg.qr(rng.standard_normal((cfg.dim, cfg.dim)))
    q2, _ = np.linalg.qr(rng.standard_normal((cfg.dim, cfg.dim)))
    spectrum = np.array(
        [1.0] * cfg.mixing_rank + [cfg.mixing_strength] * (cfg.dim - cfg.mixing_rank)
    )
    return q1 @ np.diag(spectrum) @ q2


def generate(cfg: SynthConfig) -> tuple[Corpus, SenseInventory, EmbeddingMatrix, GroundTruth]:
    """Fully seed-determined corpus, inventory, embeddings, and planted ids."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n_hard = int(round(cfg.hard_fraction * cfg.instances_per_sense))
    n_meta = math.ceil(cfg.metaphor_fraction * cfg.senses_per_lemma)

    instances: list[Instance] = []
    entries: list[SenseEntry] = []
    ids: list[str] = []
    rows: list[np.ndarray] = []
    planted: set[str] = set()
    counter = 0
    for li in range(cfg.n_lemmas):
        lemma = f"w{li:04d}"
        centroids = _sample_centroids(rng, cfg.senses_per_lemma, cfg.dim, cfg)
        for si in range(cfg.senses_per_lemma):
            sense_id = f"{lemma}%{si}"
            entries.append(
                SenseEntry(
                    sense_id=sense_id,
                    lemma=lemma,
                    gloss=f"synthetic sense {si} of {lemma}",
                    label=MetaphorLabel.METAPHORICAL if si < n_meta else MetaphorLabel.LITERAL,
                )
            )
            others = [t for t in range(cfg.senses_per_lemma) if t != si]
            noise = rng.standard_normal((cfg.instances_per_sense, cfg.dim))
            for ii in range(cfg.instances_per_sense):
                iid = f"{lemma}%{si}#e{ii:03d}"
                if ii < n_hard:
                    center = centroids[others[ii % len(others)]]
                    planted.add(iid)
                else:
                    center = centroids[si]
                v = center + cfg.noise_sigma * noise[ii]
                norm = np.linalg.norm(v)
                if norm == 0.0:
                    v = center.copy()
                else:
                    v = v / norm
                ids.append(iid)
                rows.append(v)
                instances.append(
                    Instance(
                        instance_id=iid,
                        lemma=lemma,
                        word_form=lemma,
                        pos=Pos.NOUN,
                        sense_id=sense_id,
                        tokens=("synthetic", "passage", str(counter), "about", lemma),
                        target_index=4,
                    )
                )
                counter += 1

    vectors = np.stack(rows)
    mix = _mixing_matrix(rng, cfg)
    if mix is not None:
        vectors = vectors @ mix.T
    return (
        Corpus(instances=tuple(instances), source_name=f"synth-{cfg.seed}"),
        SenseInventory(entries),
        EmbeddingMatrix(ids=tuple(ids), vectors=vectors.astype(np.float32)),
        GroundTruth(planted_hard_ids=frozenset(planted)),
    )


def write_ground_truth(path: str | Path, truth: GroundTruth) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for iid in sorted(truth.planted_hard_ids):
            fh.write(iid + "\n")


def load_ground_truth(path: str | Path) -> GroundTruth:
    with Path(path).open("r", encoding="utf-8") as fh:
        return GroundTruth(
            planted_hard_ids=frozenset(line.strip() for line in fh if line.strip())
        )
