"""Corpus statistics, phi histograms, recall-per-phi-bin analysis of external
predictions, and PCA scatter export.

Histogram bins are half-open [a, b) except the final bin, which closes at 1,
so threshold values such as 0.8 land unambiguously. Equal-width binning of
phi = s/k is done in integer arithmetic, never via float multiplication.
Per-bin recall over zero gold positives is reported as absent (None), not 0.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .corpus import Corpus, MetaphorLabel, SenseInventory
from .embedstore import EmbeddingMatrix
from .errors import DataError
from .overlap import ScoreTable


@dataclass
class StatsSummary:
    n_words: int
    n_senses: int
    n_examples: int
    senses_per_word: float | None
    examples_per_word: float | None
    tokens_per_example: float | None
    n_metaphorical_senses: int


@dataclass
class BinReport:
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    recalls: tuple[float | None, ...]
    rank_correlation: float


def corpus_stats(corpus: Corpus, inventory: SenseInventory) -> StatsSummary:
    """Exact counts and ratios over the given corpus."""
    lemmas = {inst.lemma for inst in corpus}
    senses = {inst.sense_id for inst in corpus}
    n_words, n_senses, n_examples = len(lemmas), len(senses), len(corpus)
    total_tokens = sum(len(inst.tokens) for inst in corpus)
    return StatsSummary(
        n_words=n_words,
        n_senses=n_senses,
        n_examples=n_examples,
        senses_per_word=n_senses / n_words if n_words else None,
        examples_per_word=n_examples / n_words if n_words else None,
        tokens_per_example=total_tokens / n_examples if n_examples else None,
        n_metaphorical_senses=sum(
            1 for s in senses if inventory.label_of(s) is MetaphorLabel.METAPHORICAL
        ),
    )


def phi_histogram(scores: ScoreTable, n_bins: int) -> list[int]:
    """Counts of phi values per equal-width bin over [0, 1].

    Bin index comes from integer arithmetic on s and k, so rational phi
    values never land in the wrong bin through float rounding.
    """
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    counts = [0] * n_bins
    for sc in scores.scores:
        counts[min((sc.s * n_bins) // sc.k, n_bins - 1)] += 1
    return counts


def _normalize_label(value) -> bool:
    if isinstance(value, bool):
        return value
    token = str(value).strip().lower()
    if token in ("positive", "pos", "1", "true", "meta", "metaphorical"):
        return True
    if token in ("negative", "neg", "0", "false", "literal"):
        return False
    raise DataError(f"unrecognized prediction/gold label {value!r}")


def bin_recall(
    scores: ScoreTable,
    predictions: Mapping[str, object],
    gold: Mapping[str, object],
    bin_edges: Sequence[float],
) -> BinReport:
    """Recall among gold-positive instances per phi bin, plus the Spearman
    rank correlation between phi and per-instance correctness.

    Predictions default to negative when absent; every scored instance must
    carry a gold label. A constant correctness vector reports correlation 0.
    """
    edges = tuple(float(e) for e in bin_edges)
    if len(edges) < 2 or list(edges) != sorted(set(edges)):
        raise ValueError(f"bin_edges must be ascending with >= 2 entries, got {bin_edges}")
    missing = [sc.instance_id for sc in scores.scores if sc.instance_id not in gold]
    if missing:
        raise DataError(f"scored instances without gold labels: {missing[:5]}")

    n_bins = len(edges) - 1
    bin_pos = [0] * n_bins
    bin_correct = [0] * n_bins
    phis: list[float] = []
    correct_flags: list[int] = []
    edge_arr = np.asarray(edges)
    for sc in scores.scores:
        if not _normalize_label(gold[sc.instance_id]):
            continue
        pred = predictions.get(sc.instance_id, False)
        correct = _normalize_label(pred)
        b = int(np.searchsorted(edge_arr, sc.phi, side="right")) - 1
        b = min(max(b, 0), n_bins - 1)
        bin_pos[b] += 1
        bin_correct[b] += int(correct)
        phis.append(sc.phi)
        correct_flags.append(int(correct))

    recalls = tuple(
        (bin_correct[b] / bin_pos[b]) if bin_pos[b] else None for b in range(n_bins)
    )
    if len(phis) >= 2:
        with warnings.catch_warnings():
            # constant correctness is a defined case here: correlation 0
            warnings.simplefilter("ignore", stats.ConstantInputWarning)
            rho = stats.spearmanr(phis, correct_flags).statistic
        rank_corr = 0.0 if math.isnan(rho) else float(rho)
    else:
        rank_corr = 0.0
    return BinReport(
        bin_edges=edges,
        counts=tuple(bin_pos),
        recalls=recalls,
        rank_correlation=rank_corr,
    )


def pca_scatter(
    sor: EmbeddingMatrix,
    subset: Sequence[str],
    sense_of: Mapping[str, str],
) -> list[tuple[str, str, float, float]]:
    """Top-2 principal components of the subset, as (id, sense, x, y) rows.

    Components are covariance eigenvectors by descending eigenvalue, each
    signed so its largest-magnitude loading is positive.
    """
    ids = list(subset)
    if len(ids) < 2:
        raise DataError("pca needs at least 2 instances")
    if sor.dim < 2:
        raise DataError("pca needs dim >= 2")
    index = sor.row_index()
    try:
        X = np.stack([sor.vectors[index[iid]] for iid in ids]).astype(np.float64)
    except KeyError as exc:
        raise DataError(f"subset id {exc.args[0]!r} has no embedding") from None
    Xc = X - X.mean(axis=0)
    if not Xc.any():
        raise DataError("degenerate covariance: all points identical")
    cov = (Xc.T @ Xc) / (len(ids) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:2]
    comps = []
    for ci in order:
        v = eigvecs[:, ci]
        if v[int(np.argmax(np.abs(v)))] < 0:
            v = -v
        comps.append(v)
    coords = Xc @ np.stack(comps).T
    return [
        (iid, sense_of[iid], float(coords[r, 0]), float(coords[r, 1]))
        for r, iid in enumerate(ids)
    ]


def load_predictions(path: str | Path) -> dict[str, bool]:
    """Line-oriented prediction file: keys id, pred."""
    out: dict[str, bool] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out[rec["id"]] = _normalize_label(rec["pred"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}: line {line_no}: bad prediction record: {exc}") from None
    return out


def write_rows(path: str | Path, header: Sequence[str], rows: Sequence[Sequence], fmt: str) -> None:
    """Emit a report table as JSON lines ("jsonl") or comma-separated ("csv")."""
    path = Path(path)
    if fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    elif fmt == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(
                    json.dumps(dict(zip(header, row)), ensure_ascii=False, separators=(",", ":"))
                    + "\n"
                )
    else:
        raise ValueError(f"unknown report format {fmt!r}")
