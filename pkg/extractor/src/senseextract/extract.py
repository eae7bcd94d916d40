"""Extract contextual embeddings of target tokens from a transformer.

Each corpus instance contributes one vector: the chosen hidden layer's
states over the target word's subtokens, pooled by MEAN (default) or FIRST.
When a passage exceeds max_length, a window of subtokens centered on the
target span is kept and the model's special tokens are re-attached, so the
target never drops out of a truncated passage; an instance whose target span
alone exceeds the window is a hard error naming the id.

Assumes a single-sequence special-token template of the form
[leading specials] core [trailing specials], which covers the BERT and
RoBERTa families.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .config import ExtractConfig
from .corpusio import TargetedPassage, read_targets
from .sore import write_sore


class ExtractError(Exception):
    pass


def _load(cfg: ExtractConfig):
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(cfg.model, use_fast=True)
        model = AutoModel.from_pretrained(cfg.model)
    except Exception as exc:
        raise ExtractError(f"cannot load model {cfg.model!r}: {exc}") from exc
    if not tokenizer.is_fast:
        raise ExtractError("a fast tokenizer is required for word alignment")
    model.eval()
    n_layers = model.config.num_hidden_layers
    if not -(n_layers + 1) <= cfg.layer <= n_layers:
        raise ExtractError(
            f"layer {cfg.layer} out of range for a model with {n_layers} layers"
        )
    return tokenizer, model


def _encode(tokenizer, passage: TargetedPassage, max_length: int):
    """Token ids (specials attached) and target subtoken positions."""
    enc = tokenizer(list(passage.tokens), is_split_into_words=True, add_special_tokens=True)
    ids = enc["input_ids"]
    word_ids = enc.word_ids()
    span = [i for i, w in enumerate(word_ids) if w == passage.target_index]
    if not span:
        raise ExtractError(f"{passage.instance_id}: target word produced no subtokens")
    if len(ids) <= max_length:
        return ids, span

    core = [i for i, w in enumerate(word_ids) if w is not None]
    lead = core[0]
    trail = len(ids) - core[-1] - 1
    budget = max_length - lead - trail
    span_in_core = [i - lead for i in span]
    if len(span_in_core) > budget:
        raise ExtractError(
            f"{passage.instance_id}: target spans {len(span_in_core)} subtokens, "
            f"more than the {budget}-subtoken window"
        )
    center = (span_in_core[0] + span_in_core[-1]) // 2
    start = min(max(center - budget // 2, 0), len(core) - budget)
    if not (start <= span_in_core[0] and span_in_core[-1] < start + budget):
        raise ExtractError(f"{passage.instance_id}: target truncated away")
    window = ids[lead + start : lead + start + budget]
    final = ids[:lead] + window + ids[len(ids) - trail :]
    positions = [lead + (i - start) for i in span_in_core]
    return final, positions


def _pool(states: torch.Tensor, positions: list[int], pooling: str) -> np.ndarray:
    picked = states[positions]
    if pooling == "FIRST":
        vec = picked[0]
    else:
        vec = picked.mean(dim=0)
    return vec.to(torch.float32).cpu().numpy()


def extract(corpus_path: str | Path, cfg: ExtractConfig, out_path: str | Path) -> int:
    """Embed every corpus instance and write a SORE file; returns the count."""
    passages = read_targets(corpus_path)
    tokenizer, model = _load(cfg)
    pad_id = tokenizer.pad_token_id
    if pad_id is None:
        raise ExtractError("tokenizer has no pad token")

    encoded = [_encode(tokenizer, p, cfg.max_length) for p in passages]
    ids = [p.instance_id for p in passages]
    dim = model.config.hidden_size
    vectors = np.empty((len(passages), dim), dtype=np.float32)
    with torch.no_grad():
        for start in range(0, len(encoded), cfg.batch_size):
            chunk = encoded[start : start + cfg.batch_size]
            width = max(len(ids_) for ids_, _ in chunk)
            input_ids = torch.full((len(chunk), width), pad_id, dtype=torch.long)
            attention = torch.zeros((len(chunk), width), dtype=torch.long)
            for r, (ids_, _) in enumerate(chunk):
                input_ids[r, : len(ids_)] = torch.tensor(ids_, dtype=torch.long)
                attention[r, : len(ids_)] = 1
            out = model(input_ids=input_ids, attention_mask=attention, output_hidden_states=True)
            states = out.hidden_states[cfg.layer]
            for r, (_, positions) in enumerate(chunk):
                vectors[start + r] = _pool(states[r], positions, cfg.pooling)
    if not np.isfinite(vectors).all():
        bad = int(np.argwhere(~np.isfinite(vectors).all(axis=1))[0][0])
        raise ExtractError(f"non-finite embedding for instance {ids[bad]!r}")
    write_sore(out_path, ids, vectors)
    return len(ids)
