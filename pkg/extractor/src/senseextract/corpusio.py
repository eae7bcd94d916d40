"""Reader for the corpus line format consumed by the pipeline.

Only the fields extraction needs are materialized: instance id, pre-tokenized
passage, and the 0-based target token index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class CorpusReadError(Exception):
    pass


@dataclass(frozen=True)
class TargetedPassage:
    instance_id: str
    tokens: tuple[str, ...]
    target_index: int


def read_targets(path: str | Path) -> list[TargetedPassage]:
    out: list[TargetedPassage] = []
    seen: set[str] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                iid = rec["id"]
                tokens = tuple(rec["tokens"])
                target = int(rec["target"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusReadError(f"{path}: line {line_no}: {exc}") from None
            if iid in seen:
                raise CorpusReadError(f"{path}: line {line_no}: duplicate id {iid!r}")
            if not tokens or not 0 <= target < len(tokens):
                raise CorpusReadError(
                    f"{path}: line {line_no}: target {target} out of range for "
                    f"{len(tokens)} tokens"
                )
            seen.add(iid)
            out.append(TargetedPassage(instance_id=iid, tokens=tokens, target_index=target))
    return out
