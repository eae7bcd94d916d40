import numpy as np
import pytest

from sensemine.corpus import MetaphorLabel
from sensemine.errors import ConfigError, DataError
from sensemine.overlap import score_all
from sensemine.synth import (
    SynthConfig,
    generate,
    load_ground_truth,
    write_ground_truth,
)


def test_generate_is_bitwise_deterministic():
    cfg = SynthConfig(n_lemmas=2, senses_per_lemma=3, instances_per_sense=5, hard_fraction=0.2, seed=42)
    c1, i1, m1, g1 = generate(cfg)
    c2, i2, m2, g2 = generate(cfg)
    assert c1 == c2
    assert [e.sense_id for e in i1] == [e.sense_id for e in i2]
    assert m1.ids == m2.ids
    assert m1.vectors.tobytes() == m2.vectors.tobytes()
    assert g1 == g2


def test_generate_zero_noise_gives_perfect_clusters():
    cfg = SynthConfig(n_lemmas=2, senses_per_lemma=2, instances_per_sense=4, noise_sigma=0.0, seed=1)
    corpus, inv, matrix, truth = generate(cfg)
    assert not truth.planted_hard_ids
    table = score_all(matrix, corpus, inv, min_examples=4)
    assert all(sc.phi == 1.0 for sc in table.scores)


def test_generate_planted_instances_get_lowest_phi():
    cfg = SynthConfig(
        n_lemmas=1, senses_per_lemma=2, instances_per_sense=10,
        noise_sigma=0.05, hard_fraction=0.1, seed=7,
    )
    corpus, inv, matrix, truth = generate(cfg)
    assert len(truth.planted_hard_ids) == 2
    table = score_all(matrix, corpus, inv, min_examples=4)
    ranked = sorted(table.scores, key=lambda sc: sc.phi)
    assert {sc.instance_id for sc in ranked[:2]} == truth.planted_hard_ids


def test_generate_margin_exhaustion_reports_config():
    cfg = SynthConfig(n_lemmas=1, senses_per_lemma=13, instances_per_sense=4, dim=2, seed=0)
    with pytest.raises(DataError, match="margin"):
        generate(cfg)


def test_generate_metaphor_labels_prefix():
    cfg = SynthConfig(n_lemmas=3, senses_per_lemma=3, instances_per_sense=4, metaphor_fraction=0.34, seed=2)
    _, inv, _, _ = generate(cfg)
    # ceil(0.34 * 3) = 2 metaphorical senses per lemma
    assert inv.n_metaphorical == 6
    labels = {e.sense_id: e.label for e in inv}
    assert labels["w0000%0"] is MetaphorLabel.METAPHORICAL
    assert labels["w0000%1"] is MetaphorLabel.METAPHORICAL
    assert labels["w0000%2"] is MetaphorLabel.LITERAL


def test_orthogonal_mixing_preserves_phi():
    base = SynthConfig(n_lemmas=2, senses_per_lemma=3, instances_per_sense=6,
                       noise_sigma=0.1, hard_fraction=0.15, seed=9)
    mixed = SynthConfig(n_lemmas=2, senses_per_lemma=3, instances_per_sense=6,
                        noise_sigma=0.1, hard_fraction=0.15, seed=9, mixing="orthogonal")
    corpus, inv, m_none, _ = generate(base)
    _, _, m_orth, _ = generate(mixed)
    phi_none = {sc.instance_id: sc.phi for sc in score_all(m_none, corpus, inv, 4).scores}
    phi_orth = {sc.instance_id: sc.phi for sc in score_all(m_orth, corpus, inv, 4).scores}
    assert phi_none == phi_orth


def test_general_mixing_distorts_distances():
    base = SynthConfig(n_lemmas=1, senses_per_lemma=3, instances_per_sense=6,
                       noise_sigma=0.1, seed=4)
    mixed = SynthConfig(n_lemmas=1, senses_per_lemma=3, instances_per_sense=6,
                        noise_sigma=0.1, seed=4, mixing="general",
                        mixing_rank=2, mixing_strength=0.05)
    _, _, m_none, _ = generate(base)
    _, _, m_gen, _ = generate(mixed)

    def pairwise_cos(m):
        v = m.vectors.astype(np.float64)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v @ v.T

    assert not np.allclose(pairwise_cos(m_none), pairwise_cos(m_gen), atol=1e-3)


def test_synth_config_validation():
    with pytest.raises(ConfigError, match="instances_per_sense"):
        SynthConfig(instances_per_sense=3)
    with pytest.raises(ConfigError, match="hard_fraction"):
        SynthConfig(hard_fraction=1.5)
    with pytest.raises(ConfigError, match="senses per lemma"):
        SynthConfig(senses_per_lemma=1, hard_fraction=0.1)
    with pytest.raises(ConfigError, match="mixing"):
        SynthConfig(mixing="diagonal")
    with pytest.raises(ConfigError, match="mixing_rank"):
        SynthConfig(mixing="general", mixing_rank=16, dim=16)


def test_ground_truth_roundtrip(tmp_path):
    cfg = SynthConfig(n_lemmas=2, senses_per_lemma=2, instances_per_sense=5,
                      hard_fraction=0.2, seed=3)
    _, _, _, truth = generate(cfg)
    path = tmp_path / "gt.txt"
    write_ground_truth(path, truth)
    assert load_ground_truth(path) == truth


def test_corpus_passes_min_support_by_construction():
    from sensemine.corpus import validate

    cfg = SynthConfig(n_lemmas=2, senses_per_lemma=2, instances_per_sense=4, seed=8)
    corpus, inv, _, _ = generate(cfg)
    report = validate(corpus, inv, min_examples=4)
    assert report.ok
