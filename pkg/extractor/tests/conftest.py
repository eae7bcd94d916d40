import json
import string

import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordPiece
from tokenizers.normalizers import BertNormalizer
from tokenizers.pre_tokenizers import BertPreTokenizer
from tokenizers.processors import TemplateProcessing
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

HIDDEN_SIZE = 32

WORDS = [
    "the", "cat", "sat", "on", "mat", "dog", "ran", "fast",
    "run", "walk", "bank", "light", "about", "word", "sense",
]


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    """Tiny randomly initialized BERT-architecture checkpoint saved locally."""
    root = tmp_path_factory.mktemp("tiny_model")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += WORDS
    vocab += list(string.ascii_lowercase)
    vocab += [f"##{c}" for c in string.ascii_lowercase]
    backend = Tokenizer(WordPiece({t: i for i, t in enumerate(vocab)}, unk_token="[UNK]"))
    backend.normalizer = BertNormalizer(lowercase=True)
    backend.pre_tokenizer = BertPreTokenizer()
    backend.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab.index("[CLS]")), ("[SEP]", vocab.index("[SEP]"))],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
        model_max_length=256,
    )
    tokenizer.save_pretrained(root)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=HIDDEN_SIZE,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=256,
        pad_token_id=0,
    )
    BertModel(config).save_pretrained(root)
    return str(root)


def corpus_record(iid, tokens, target):
    return {
        "id": iid,
        "lemma": tokens[target],
        "word": tokens[target],
        "pos": "NOUN",
        "sense": f"{tokens[target]}%1",
        "tokens": tokens,
        "target": target,
    }


@pytest.fixture(scope="session")
def corpus_path(tmp_path_factory):
    """50 instances: known single-piece targets, multi-piece unknown targets,
    and one long passage whose target sits beyond a naive truncation window."""
    path = tmp_path_factory.mktemp("corpus") / "corpus.jsonl"
    records = []
    for i in range(49):
        if i % 5 == 0:
            tokens = ["the", "zigzag", "dog", "ran", "fast"]
            target = 1  # splits into wordpieces
        else:
            tokens = ["the", WORDS[i % len(WORDS)], "sat", "on", "the", "mat"]
            target = 1
        records.append(corpus_record(f"x{i:03d}", tokens, target))
    long_tokens = ["the", "cat"] * 90 + ["bank", "run"]
    records.append(corpus_record("x049", long_tokens, len(long_tokens) - 2))
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return str(path)
