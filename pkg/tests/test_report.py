import numpy as np
import pytest

from sensemine.corpus import Corpus
from sensemine.errors import DataError
from sensemine.overlap import ScoreTable
from sensemine.report import (
    bin_recall,
    corpus_stats,
    pca_scatter,
    phi_histogram,
    write_rows,
)
from sensemine.synth import SynthConfig, generate

from conftest import fake_score, fake_table, make_inventory, make_matrix
from oracles import spearman_by_hand


def test_corpus_stats_counted_by_construction():
    cfg = SynthConfig(n_lemmas=3, senses_per_lemma=2, instances_per_sense=4,
                      metaphor_fraction=0.5, seed=1)
    corpus, inv, _, _ = generate(cfg)  # synthetic passages are 5 tokens long
    stats = corpus_stats(corpus, inv)
    assert stats.n_words == 3
    assert stats.n_senses == 6
    assert stats.n_examples == 24
    assert stats.senses_per_word == 2.0
    assert stats.examples_per_word == 8.0
    assert stats.tokens_per_example == 5.0
    assert stats.n_metaphorical_senses == 3


def test_corpus_stats_empty_corpus():
    stats = corpus_stats(Corpus(instances=()), make_inventory())
    assert stats.n_words == stats.n_senses == stats.n_examples == 0
    assert stats.senses_per_word is None
    assert stats.examples_per_word is None
    assert stats.tokens_per_example is None


def test_phi_histogram_binning_conventions():
    table = fake_table([("a", "s", 0, 2), ("b", "s", 1, 2), ("c", "s", 2, 2)])
    assert phi_histogram(table, 2) == [1, 2]  # 0.5 lands in the upper bin
    assert phi_histogram(ScoreTable(scores=(), scope="t"), 3) == [0, 0, 0]
    flat = fake_table([(f"i{j}", "s", 21, 50) for j in range(7)])  # phi 0.42
    counts = phi_histogram(flat, 10)
    assert counts[4] == 7 and sum(counts) == 7


def test_phi_histogram_is_exact_at_bin_edges():
    # 7/10 must land in bin [0.7, 0.8) even though 0.7 * 10 rounds below 7
    table = fake_table([("a", "s", 7, 10), ("b", "s", 8, 10)])
    counts = phi_histogram(table, 10)
    assert counts[7] == 1 and counts[8] == 1


def test_bin_recall_perfect_predictor():
    table = fake_table([("a", "s", 0, 4), ("b", "s", 2, 4), ("c", "s", 4, 4)])
    gold = {i: True for i in ("a", "b", "c")}
    preds = dict(gold)
    rep = bin_recall(table, preds, gold, [0.0, 0.5, 1.0])
    assert rep.counts == (1, 2)  # phi 0.5 lands in the upper half-open bin
    assert rep.recalls == (1.0, 1.0)
    assert rep.rank_correlation == 0.0  # constant correctness


def test_bin_recall_empty_bin_is_absent_not_zero():
    table = fake_table([("a", "s", 0, 4), ("b", "s", 4, 4)])
    gold = {"a": True, "b": True}
    rep = bin_recall(table, {"b": True}, gold, [0.0, 0.4, 0.6, 1.0])
    assert rep.recalls[1] is None
    assert rep.recalls == (0.0, None, 1.0)


def test_bin_recall_prediction_defaults_negative_and_gold_required():
    table = fake_table([("a", "s", 0, 4)])
    rep = bin_recall(table, {}, {"a": True}, [0.0, 1.0])
    assert rep.recalls == (0.0,)
    with pytest.raises(DataError, match="gold"):
        bin_recall(table, {}, {}, [0.0, 1.0])


def test_bin_recall_monotone_for_quantile_thresholded_predictor():
    # correctness: phi >= an instance-indexed quantile from a fixed grid
    quantiles = [0.125, 0.375, 0.625, 0.875]
    entries = [(f"i{j:03d}", "s", j % 9, 8) for j in range(180)]
    table = fake_table(entries)
    gold = {iid: True for iid, *_ in entries}
    preds = {
        sc.instance_id: sc.phi >= quantiles[j % len(quantiles)]
        for j, sc in enumerate(table.scores)
    }
    rep = bin_recall(table, preds, gold, [0.0, 0.25, 0.5, 0.75, 1.0])
    populated = [r for r in rep.recalls if r is not None]
    assert all(a <= b for a, b in zip(populated, populated[1:]))
    assert rep.rank_correlation > 0


def test_bin_recall_spearman_matches_hand_ranks():
    entries = [("a", "s", 0, 4), ("b", "s", 1, 4), ("c", "s", 2, 4),
               ("d", "s", 3, 4), ("e", "s", 4, 4), ("f", "s", 0, 4)]
    table = fake_table(entries)
    gold = {iid: True for iid, *_ in entries}
    preds = {"a": False, "f": False, "b": False, "c": True, "d": True, "e": True}
    rep = bin_recall(table, preds, gold, [0.0, 0.5, 1.0])
    phis = [sc.phi for sc in table.scores]
    flags = [float(preds[sc.instance_id]) for sc in table.scores]
    assert rep.rank_correlation == pytest.approx(spearman_by_hand(phis, flags), abs=1e-12)


def test_pca_recovers_planar_coordinates():
    # y-mirrored pairs make the sample covariance exactly diagonal, so the
    # principal axes are the coordinate axes and coordinates come back intact
    xy = np.array(
        [[3.0, 0.0], [-3.0, 0.0], [1.0, 0.5], [1.0, -0.5],
         [-1.0, 0.5], [-1.0, -0.5], [0.0, 1.5], [0.0, -1.5]]
    )
    vecs = {f"p{i:02d}": [xy[i, 0], xy[i, 1], 0.0, 0.0] for i in range(len(xy))}
    matrix = make_matrix(vecs)
    rows = pca_scatter(matrix, list(vecs), {k: "s" for k in vecs})
    got = np.array([[x, y] for _, _, x, y in rows])
    for col in range(2):
        assert np.allclose(got[:, col], xy[:, col], atol=1e-6) or np.allclose(
            got[:, col], -xy[:, col], atol=1e-6
        )


def test_pca_collinear_points_have_zero_second_component():
    t = np.linspace(-1, 1, 3)
    vecs = {f"p{i}": [2 * ti, -ti, 0.5 * ti] for i, ti in enumerate(t)}
    rows = pca_scatter(make_matrix(vecs), list(vecs), {k: "s" for k in vecs})
    assert all(abs(y) < 1e-9 for _, _, _, y in rows)


def test_pca_separates_planted_clusters():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((50, 6)) * 0.2 + np.array([3.0, 0, 0, 0, 0, 0])
    b = rng.standard_normal((50, 6)) * 0.2 - np.array([3.0, 0, 0, 0, 0, 0])
    vecs = {f"a{i:02d}": a[i] for i in range(50)}
    vecs.update({f"b{i:02d}": b[i] for i in range(50)})
    sense_of = {k: k[0] for k in vecs}
    rows = pca_scatter(make_matrix(vecs), list(vecs), sense_of)
    pts = {iid: np.array([x, y]) for iid, _, x, y in rows}
    cent_a = np.mean([pts[k] for k in pts if k.startswith("a")], axis=0)
    cent_b = np.mean([pts[k] for k in pts if k.startswith("b")], axis=0)
    spread_a = max(np.linalg.norm(pts[k] - cent_a) for k in pts if k.startswith("a"))
    spread_b = max(np.linalg.norm(pts[k] - cent_b) for k in pts if k.startswith("b"))
    assert np.linalg.norm(cent_a - cent_b) >= max(spread_a, spread_b)


def test_pca_invariant_under_orthogonal_maps():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((40, 5))
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    ids = [f"p{i:02d}" for i in range(40)]
    sense_of = {k: "s" for k in ids}
    base = pca_scatter(make_matrix(dict(zip(ids, X))), ids, sense_of)
    rotated = pca_scatter(make_matrix(dict(zip(ids, X @ q.T))), ids, sense_of)
    for (_, _, x1, y1), (_, _, x2, y2) in zip(base, rotated):
        assert abs(abs(x1) - abs(x2)) < 1e-4 and abs(abs(y1) - abs(y2)) < 1e-4


def test_pca_rejects_degenerate_input():
    vecs = {f"p{i}": [1.0, 2.0, 3.0] for i in range(4)}
    with pytest.raises(DataError, match="degenerate"):
        pca_scatter(make_matrix(vecs), list(vecs), {k: "s" for k in vecs})
    with pytest.raises(DataError, match="at least 2"):
        pca_scatter(make_matrix({"a": [1.0, 0.0]}), ["a"], {"a": "s"})


def test_write_rows_formats(tmp_path):
    rows = [("a", 1, 0.5), ("b", 2, 1.0)]
    jl = tmp_path / "t.jsonl"
    cv = tmp_path / "t.csv"
    write_rows(jl, ("id", "n", "phi"), rows, "jsonl")
    write_rows(cv, ("id", "n", "phi"), rows, "csv")
    assert '"id":"a"' in jl.read_text()
    assert cv.read_text().splitlines()[0] == "id,n,phi"
    with pytest.raises(ValueError, match="format"):
        write_rows(tmp_path / "t.x", ("a",), [], "xml")
