"""sensemine: find word occurrences whose contextual embeddings cannot be
disambiguated from other senses, and curate them into a 1:1 paired dataset.

Pipeline: load a sense-annotated corpus and its labeled sense inventory,
train a contrastive projection head over frozen embeddings (or accept
externally produced sense-only representations through the same binary
format), score every instance with the overlap ratio phi = s/k over its k
nearest same-lemma neighbours, threshold into hard instances, and pair each
hard metaphor with its nearest literal counterpart.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Corpus,
    Instance,
    MetaphorLabel,
    Pos,
    SenseEntry,
    SenseInventory,
    ValidationReport,
    filter_senses,
    load_corpus,
    load_sense_inventory,
    validate,
    write_corpus,
    write_sense_inventory,
)
from .embedstore import (  # noqa: F401
    AlignedDataset,
    EmbeddingMatrix,
    align,
    read_embeddings,
    write_embeddings,
)
from .errors import (  # noqa: F401
    ConfigError,
    DataError,
    InsufficientSensesError,
    MissingEmbeddingError,
    NonFiniteLossError,
    NumericalError,
    OrphanEmbeddingError,
    SenseMineError,
    SoreFormatError,
    ZeroNormError,
)
from .miner import (  # noqa: F401
    HardPair,
    MineConfig,
    Pairing,
    emit_dataset,
    flag_hard,
    pair_literals,
    select_hard_metaphors,
)
from .overlap import (  # noqa: F401
    OverlapScore,
    ScoreTable,
    knn,
    overlap_ratio,
    read_score_table,
    score_all,
    write_score_table,
)
from .report import (  # noqa: F401
    BinReport,
    StatsSummary,
    bin_recall,
    corpus_stats,
    pca_scatter,
    phi_histogram,
)
from .sortrain import (  # noqa: F401
    AnchorMode,
    Batch,
    NegativeSampling,
    ProjectionHead,
    TrainConfig,
    TrainingLog,
    contrastive_loss,
    cosine_sim,
    load_head,
    loss_gradient,
    project,
    sample_batch,
    save_head,
    train,
)
from .synth import (  # noqa: F401
    GroundTruth,
    SynthConfig,
    generate,
    load_ground_truth,
    write_ground_truth,
)
