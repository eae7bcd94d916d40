"""Threshold overlap scores into hard instances, keep the metaphorical ones,
and pair each hard metaphor with its nearest literal counterpart at 1:1.

The threshold is strict: an instance is hard iff phi < threshold. The literal
pool for a metaphor is every same-lemma corpus instance whose sense is
labeled LITERAL; UNKNOWN senses never appear on either side of a pair.
Pairing processes metaphors in ascending instance id and, without
replacement, consumes each chosen literal, so one dataset never repeats a
literal instance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import Corpus, MetaphorLabel, SenseInventory
from .embedstore import EmbeddingMatrix
from .errors import ConfigError
from .overlap import ScoreTable, _unit


class Pairing(Enum):
    WITHOUT_REPLACEMENT = "WITHOUT_REPLACEMENT"
    WITH_REPLACEMENT = "WITH_REPLACEMENT"


@dataclass
class MineConfig:
    threshold: float = 0.8
    pairing: Pairing = Pairing.WITHOUT_REPLACEMENT

    def __post_init__(self):
        if isinstance(self.pairing, str):
            self.pairing = Pairing(self.pairing.upper())
        if not 0 < self.threshold <= 1:
            raise ConfigError(f"threshold must be in (0, 1], got {self.threshold}")


@dataclass(frozen=True)
class HardPair:
    metaphor_instance_id: str
    literal_instance_id: str
    phi: float
    sense_id: str
    gloss: str
    lemma: str
    literal_sense_id: str
    pair_distance: float


def flag_hard(scores: ScoreTable, threshold: float) -> set[str]:
    """Instance ids whose overlap ratio is strictly below the threshold."""
    return {sc.instance_id for sc in scores.scores if sc.phi < threshold}


def select_hard_metaphors(
    hard_ids: Iterable[str], corpus: Corpus, inventory: SenseInventory
) -> list[str]:
    """Hard instances whose sense is labeled METAPHORICAL, ascending by id."""
    hard = set(hard_ids)
    return sorted(
        inst.instance_id
        for inst in corpus
        if inst.instance_id in hard
        and inventory.label_of(inst.sense_id) is MetaphorLabel.METAPHORICAL
    )


def pair_literals(
    hard_metaphors: list[str],
    sor: EmbeddingMatrix,
    corpus: Corpus,
    inventory: SenseInventory,
    scores: ScoreTable,
    cfg: MineConfig,
) -> tuple[list[HardPair], list[tuple[str, str]]]:
    """Greedily pair each hard metaphor with its nearest available literal.

    Returns (pairs, unpairable) where unpairable lists (id, reason) for
    metaphors that could not be paired.
    """
    by_id = {inst.instance_id: inst for inst in corpus}
    index = sor.row_index()
    phi_of = {sc.instance_id: sc.phi for sc in scores.scores}

    literal_pool: dict[str, list[str]] = {}
    for inst in corpus:
        if (
            inventory.label_of(inst.sense_id) is MetaphorLabel.LITERAL
            and inst.instance_id in index
        ):
            literal_pool.setdefault(inst.lemma, []).append(inst.instance_id)

    units: dict[str, np.ndarray] = {}

    def unit_of(iid: str) -> np.ndarray:
        got = units.get(iid)
        if got is None:
            got = units[iid] = _unit(sor.vectors[index[iid]])
        return got

    pairs: list[HardPair] = []
    unpairable: list[tuple[str, str]] = []
    consumed: set[str] = set()
    for mid in sorted(hard_metaphors):
        inst = by_id.get(mid)
        if inst is None:
            unpairable.append((mid, "not in corpus"))
            continue
        if mid not in phi_of:
            unpairable.append((mid, "no overlap score"))
            continue
        available = [
            lid for lid in literal_pool.get(inst.lemma, []) if lid not in consumed
        ]
        if not available:
            unpairable.append((mid, f"no literal instance available for lemma {inst.lemma!r}"))
            continue
        um = unit_of(mid)
        dist, lid = min((1.0 - float(np.dot(um, unit_of(l))), l) for l in available)
        if cfg.pairing is Pairing.WITHOUT_REPLACEMENT:
            consumed.add(lid)
        lit = by_id[lid]
        sense = inventory.get(inst.sense_id)
        pairs.append(
            HardPair(
                metaphor_instance_id=mid,
                literal_instance_id=lid,
                phi=phi_of[mid],
                sense_id=inst.sense_id,
                gloss=sense.gloss if sense else "",
                lemma=inst.lemma,
                literal_sense_id=lit.sense_id,
                pair_distance=dist,
            )
        )
    return pairs, unpairable


def emit_dataset(
    pairs: list[HardPair],
    corpus: Corpus,
    inventory: SenseInventory,
    path: str | Path,
) -> None:
    """Write the paired dataset: a header record, then two records per pair
    (metaphor side carries phi), inheriting word, lemma, sense, gloss, and
    passage from the corpus."""
    by_id = {inst.instance_id: inst for inst in corpus}

    def record(pair_no: int, side: str, iid: str, phi: float | None) -> str:
        inst = by_id[iid]
        sense = inventory.get(inst.sense_id)
        rec = {
            "pair": pair_no,
            "side": side,
            "id": iid,
            "lemma": inst.lemma,
            "word": inst.word_form,
            "sense": inst.sense_id,
            "gloss": sense.gloss if sense else "",
        }
        if phi is not None:
            rec["phi"] = phi
        rec["tokens"] = list(inst.tokens)
        rec["target"] = inst.target_index
        return json.dumps(rec, ensure_ascii=False, separators=(",", ":"))

    with Path(path).open("w", encoding="utf-8") as fh:
        header = {"format": "hmd", "version": 1, "pairs": len(pairs)}
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for pair_no, pair in enumerate(pairs):
            fh.write(record(pair_no, "meta", pair.metaphor_instance_id, pair.phi) + "\n")
            fh.write(record(pair_no, "literal", pair.literal_instance_id, None) + "\n")


def write_unpairable_report(path: str | Path, unpairable: list[tuple[str, str]]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for iid, reason in unpairable:
            fh.write(json.dumps({"id": iid, "reason": reason}, separators=(",", ":")) + "\n")
