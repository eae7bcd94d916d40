import json

import numpy as np
import pytest

from sensemine.corpus import Corpus, Instance, MetaphorLabel, Pos, SenseEntry, SenseInventory
from sensemine.embedstore import EmbeddingMatrix
from sensemine.overlap import OverlapScore, ScoreTable


def make_instance(iid, lemma="run", sense="run%1", tokens=None, target=0, word=None, pos=Pos.VERB):
    tokens = tuple(tokens) if tokens else ("we", "run", "fast")
    return Instance(
        instance_id=iid,
        lemma=lemma,
        word_form=word or lemma,
        pos=pos,
        sense_id=sense,
        tokens=tokens,
        target_index=target,
    )


def make_inventory(*specs):
    """specs: (sense_id, lemma, label) triples."""
    return SenseInventory(
        SenseEntry(sense_id=s, lemma=l, gloss=f"gloss of {s}", label=label)
        for s, l, label in specs
    )


def make_matrix(id_to_vec):
    ids = tuple(id_to_vec)
    return EmbeddingMatrix(ids=ids, vectors=np.array([id_to_vec[i] for i in ids], dtype=np.float32))


def fake_score(iid, sense, s, k):
    return OverlapScore(
        instance_id=iid,
        sense_id=sense,
        k=k,
        s=s,
        phi=s / k,
        neighbor_ids=tuple(f"{iid}/n{j}" for j in range(k)),
    )


def fake_table(entries):
    """entries: (id, sense, s, k) tuples."""
    return ScoreTable(scores=tuple(fake_score(*e) for e in entries), scope="test")


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


@pytest.fixture
def angle_matrix():
    """Unit 2-D vectors by angle in degrees, ids chosen by the caller."""

    def build(id_to_deg):
        return make_matrix(
            {
                iid: [np.cos(np.radians(d)), np.sin(np.radians(d))]
                for iid, d in id_to_deg.items()
            }
        )

    return build


LABELS = MetaphorLabel
