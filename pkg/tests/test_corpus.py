import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensemine.corpus import (
    Corpus,
    CorpusFormatError,
    Instance,
    InventoryFormatError,
    MetaphorLabel,
    Pos,
    filter_senses,
    load_corpus,
    load_sense_inventory,
    validate,
    write_corpus,
    write_sense_inventory,
)

from conftest import make_instance, make_inventory


def corpus_line(iid, sense="run%1", lemma="run", tokens=("we", "run"), target=1, **extra):
    rec = {
        "id": iid,
        "lemma": lemma,
        "word": "running",
        "pos": "VERB",
        "sense": sense,
        "tokens": list(tokens),
        "target": target,
    }
    rec.update(extra)
    return json.dumps(rec)


def inventory_line(sense, lemma="run", gloss="to move fast", label="LITERAL", **extra):
    rec = {"sense": sense, "lemma": lemma, "gloss": gloss, "label": label}
    rec.update(extra)
    return json.dumps(rec)


def test_load_corpus_preserves_file_order(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("\n".join(corpus_line(f"x{i}") for i in (3, 1, 2)) + "\n")
    corpus = load_corpus(path)
    assert [i.instance_id for i in corpus] == ["x3", "x1", "x2"]
    assert corpus.source_name == "c.jsonl"


def test_load_corpus_empty_file(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("")
    assert len(load_corpus(path)) == 0


def test_load_corpus_target_out_of_range_names_line(tmp_path):
    path = tmp_path / "c.jsonl"
    lines = [
        corpus_line("a"),
        corpus_line("b", tokens=["t0", "t1", "t2", "t3", "t4"], target=7),
    ]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorpusFormatError, match="line 2.*7"):
        load_corpus(path)


def test_load_corpus_duplicate_id(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(corpus_line("a") + "\n" + corpus_line("a") + "\n")
    with pytest.raises(CorpusFormatError, match="duplicate"):
        load_corpus(path)


def test_load_corpus_malformed_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(corpus_line("a") + "\n{not json\n")
    with pytest.raises(CorpusFormatError, match="line 2"):
        load_corpus(path)


def test_load_corpus_unknown_pos_rejected(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(corpus_line("a", pos="GERUND") + "\n")
    with pytest.raises(CorpusFormatError, match="GERUND"):
        load_corpus(path)


def test_load_corpus_pos_case_insensitive_and_unknown_key_ignored(tmp_path, caplog):
    path = tmp_path / "c.jsonl"
    path.write_text(corpus_line("a", pos="verb", annotator="bob") + "\n")
    with caplog.at_level("WARNING"):
        corpus = load_corpus(path)
    assert corpus.instances[0].pos is Pos.VERB
    assert any("annotator" in rec.message for rec in caplog.records)


def test_instance_invariants():
    with pytest.raises(ValueError):
        make_instance("a", tokens=("only",), target=3)
    with pytest.raises(ValueError):
        Instance("a", "l", "w", Pos.NOUN, "s", (), 0)


def test_load_inventory_counts_labels(tmp_path):
    path = tmp_path / "inv.jsonl"
    lines = [
        inventory_line("s1", label="METAPHORICAL"),
        inventory_line("s2", label="metaphorical"),
        inventory_line("s3", label="LITERAL"),
        inventory_line("s4", label="UNKNOWN"),
        inventory_line("s5"),
    ]
    path.write_text("\n".join(lines) + "\n")
    inv = load_sense_inventory(path)
    assert len(inv) == 5
    assert inv.n_metaphorical == 2
    assert inv.label_of("s2") is MetaphorLabel.METAPHORICAL
    assert inv.label_of("missing") is MetaphorLabel.UNKNOWN


def test_load_inventory_rejects_empty_gloss(tmp_path):
    path = tmp_path / "inv.jsonl"
    path.write_text(inventory_line("s1", gloss="") + "\n")
    with pytest.raises(InventoryFormatError, match="gloss"):
        load_sense_inventory(path)


def test_load_inventory_rejects_duplicates_and_bad_labels(tmp_path):
    path = tmp_path / "inv.jsonl"
    path.write_text(inventory_line("s1") + "\n" + inventory_line("s1") + "\n")
    with pytest.raises(InventoryFormatError, match="duplicate"):
        load_sense_inventory(path)
    path.write_text(inventory_line("s1", label="sorta-metaphorical") + "\n")
    with pytest.raises(InventoryFormatError, match="label"):
        load_sense_inventory(path)


def _support_corpus():
    insts = [make_instance(f"a{i}", sense="run%1") for i in range(3)]
    insts += [make_instance(f"b{i}", sense="run%2") for i in range(4)]
    insts += [make_instance("c0", sense="ghost%9", lemma="ghost")]
    return Corpus(instances=tuple(insts))


def test_validate_reports_support_and_resolution():
    corpus = _support_corpus()
    inv = make_inventory(("run%1", "run", MetaphorLabel.LITERAL), ("run%2", "run", MetaphorLabel.LITERAL))
    report = validate(corpus, inv, min_examples=4)
    assert report.n_instances == 8
    assert report.n_words == 2
    assert report.n_senses == 3
    assert report.unresolved_sense_ids == ["ghost%9"]
    assert ("run%1", 3) in report.senses_below_min
    assert ("run%2", 4) not in report.senses_below_min


def test_validate_clean_corpus_has_empty_problem_lists():
    insts = tuple(make_instance(f"a{i}") for i in range(4))
    inv = make_inventory(("run%1", "run", MetaphorLabel.LITERAL))
    report = validate(Corpus(instances=insts), inv, min_examples=4)
    assert report.unresolved_sense_ids == []
    assert report.senses_below_min == []
    assert report.ok


def test_filter_senses_boundary_inclusive():
    corpus = _support_corpus()
    inv = make_inventory(("run%1", "run", MetaphorLabel.LITERAL), ("run%2", "run", MetaphorLabel.LITERAL))
    kept = filter_senses(corpus, inv, min_examples=4)
    senses = {i.sense_id for i in kept}
    assert senses == {"run%2"}          # 4 instances at min 4 retained, 3 removed
    assert len(kept) == 4


def test_filter_senses_min_zero_drops_only_unresolved():
    corpus = _support_corpus()
    inv = make_inventory(("run%1", "run", MetaphorLabel.LITERAL), ("run%2", "run", MetaphorLabel.LITERAL))
    kept = filter_senses(corpus, inv, min_examples=0)
    assert [i.instance_id for i in kept] == [i.instance_id for i in corpus if i.lemma != "ghost"]


@st.composite
def corpora(draw):
    n = draw(st.integers(min_value=0, max_value=12))
    insts = []
    for i in range(n):
        tokens = tuple(
            draw(st.lists(st.text(min_size=1, max_size=6), min_size=1, max_size=5))
        )
        insts.append(
            Instance(
                instance_id=f"inst{i}",
                lemma=draw(st.sampled_from(["run", "walk", "jump"])),
                word_form="w",
                pos=draw(st.sampled_from(list(Pos))),
                sense_id=draw(st.sampled_from(["s1", "s2", "s3", "s4"])),
                tokens=tokens,
                target_index=draw(st.integers(min_value=0, max_value=len(tokens) - 1)),
            )
        )
    return Corpus(instances=tuple(insts))


@given(corpora())
@settings(max_examples=40)
def test_corpus_roundtrip_bytes(tmp_path_factory, corpus):
    path = tmp_path_factory.mktemp("rt") / "c.jsonl"
    write_corpus(path, corpus)
    first = path.read_bytes()
    write_corpus(path, load_corpus(path))
    assert path.read_bytes() == first


@given(corpora(), st.integers(min_value=0, max_value=6))
@settings(max_examples=40)
def test_filter_senses_idempotent_and_supported(corpus, min_examples):
    inv = make_inventory(*[(s, "x", MetaphorLabel.LITERAL) for s in ("s1", "s2", "s3")])
    once = filter_senses(corpus, inv, min_examples)
    twice = filter_senses(once, inv, min_examples)
    assert once == twice
    counts = corpus.sense_counts()
    assert all(counts[i.sense_id] >= min_examples for i in once)


def test_inventory_roundtrip_bytes(tmp_path):
    path = tmp_path / "inv.jsonl"
    inv = make_inventory(
        ("run%1", "run", MetaphorLabel.METAPHORICAL),
        ("run%2", "run", MetaphorLabel.LITERAL),
        ("walk%1", "walk", MetaphorLabel.UNKNOWN),
    )
    write_sense_inventory(path, inv)
    first = path.read_bytes()
    write_sense_inventory(path, load_sense_inventory(path))
    assert path.read_bytes() == first
