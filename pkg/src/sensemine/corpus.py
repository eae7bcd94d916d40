"""Sense-annotated corpus and sense inventory: data model, line-format IO,
validation, and minimum-support filtering.

Both file formats are line-oriented JSON (one record per line, UTF-8).
Corpus record keys: id, lemma, word, pos, sense, tokens, target.
Inventory record keys: sense, lemma, gloss, label.
Unknown keys are ignored with a warning; enum tokens parse case-insensitively
and are emitted uppercase.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusFormatError, InventoryFormatError

log = logging.getLogger(__name__)


class Pos(Enum):
    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    ADP = "ADP"
    DET = "DET"
    PRON = "PRON"
    OTHER = "OTHER"


class MetaphorLabel(Enum):
    METAPHORICAL = "METAPHORICAL"
    LITERAL = "LITERAL"
    UNKNOWN = "UNKNOWN"


_CORPUS_KEYS = ("id", "lemma", "word", "pos", "sense", "tokens", "target")
_INVENTORY_KEYS = ("sense", "lemma", "gloss", "label")


@dataclass(frozen=True)
class Instance:
    """One occurrence of a target word in a passage, with its gold sense."""

    instance_id: str
    lemma: str
    word_form: str
    pos: Pos
    sense_id: str
    tokens: tuple[str, ...]
    target_index: int

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"instance {self.instance_id!r}: tokens empty")
        if not 0 <= self.target_index < len(self.tokens):
            raise ValueError(
                f"instance {self.instance_id!r}: target_index "
                f"{self.target_index} out of range for {len(self.tokens)} tokens"
            )


@dataclass(frozen=True)
class SenseEntry:
    sense_id: str
    lemma: str
    gloss: str
    label: MetaphorLabel

    def __post_init__(self):
        if not self.gloss:
            raise ValueError(f"sense {self.sense_id!r}: gloss empty")


class SenseInventory:
    """Sense ids with glosses and metaphor/literal labels; immutable after load."""

    def __init__(self, entries: Iterable[SenseEntry]):
        self._entries: dict[str, SenseEntry] = {}
        for e in entries:
            if e.sense_id in self._entries:
                raise InventoryFormatError(f"duplicate sense id {e.sense_id!r}")
            self._entries[e.sense_id] = e

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[SenseEntry]:
        return iter(self._entries.values())

    def __contains__(self, sense_id: str) -> bool:
        return sense_id in self._entries

    def get(self, sense_id: str) -> SenseEntry | None:
        return self._entries.get(sense_id)

    def label_of(self, sense_id: str) -> MetaphorLabel:
        """Label for a sense; unresolved senses count as UNKNOWN."""
        e = self._entries.get(sense_id)
        return e.label if e is not None else MetaphorLabel.UNKNOWN

    @property
    def n_metaphorical(self) -> int:
        return sum(1 for e in self._entries.values() if e.label is MetaphorLabel.METAPHORICAL)


@dataclass(frozen=True)
class Corpus:
    """Ordered collection of instances; iteration order equals file order."""

    instances: tuple[Instance, ...]
    source_name: str = ""

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    def sense_counts(self) -> Counter:
        return Counter(inst.sense_id for inst in self.instances)

    def ids(self) -> list[str]:
        return [inst.instance_id for inst in self.instances]


@dataclass
class ValidationReport:
    n_instances: int
    n_words: int
    n_senses: int
    unresolved_sense_ids: list[str] = field(default_factory=list)
    senses_below_min: list[tuple[str, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.unresolved_sense_ids and not self.senses_below_min


def _parse_enum(enum_cls, token, what, line_no, err_cls):
    if not isinstance(token, str):
        raise err_cls(f"{what} must be a string, got {token!r}", line_no)
    try:
        return enum_cls(token.upper())
    except ValueError:
        raise err_cls(f"unknown {what} {token!r}", line_no) from None


def _require(record, key, types, what, line_no, err_cls):
    if key not in record:
        raise err_cls(f"missing key {key!r}", line_no)
    value = record[key]
    if not isinstance(value, types):
        raise err_cls(f"key {key!r} has wrong type for {what}: {value!r}", line_no)
    return value


def _warn_unknown_keys(record, known, kind, line_no, seen: set):
    for key in record:
        if key not in known and key not in seen:
            seen.add(key)
            log.warning("%s line %d: ignoring unknown key %r", kind, line_no, key)


def load_corpus(path: str | Path) -> Corpus:
    """Parse a corpus line file; every record parses or the load fails."""
    path = Path(path)
    instances: list[Instance] = []
    seen_ids: set[str] = set()
    warned: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"malformed record: {exc}", line_no) from None
            if not isinstance(record, dict):
                raise CorpusFormatError("record is not an object", line_no)
            _warn_unknown_keys(record, _CORPUS_KEYS, "corpus", line_no, warned)
            inst_id = _require(record, "id", str, "instance id", line_no, CorpusFormatError)
            if inst_id in seen_ids:
                raise CorpusFormatError(f"duplicate instance id {inst_id!r}", line_no)
            seen_ids.add(inst_id)
            tokens = _require(record, "tokens", list, "token list", line_no, CorpusFormatError)
            if not tokens or not all(isinstance(t, str) for t in tokens):
                raise CorpusFormatError("tokens must be a non-empty list of strings", line_no)
            target = _require(record, "target", int, "target index", line_no, CorpusFormatError)
            if isinstance(target, bool) or not 0 <= target < len(tokens):
                raise CorpusFormatError(
                    f"target index {target} out of range for {len(tokens)} tokens", line_no
                )
            instances.append(
                Instance(
                    instance_id=inst_id,
                    lemma=_require(record, "lemma", str, "lemma", line_no, CorpusFormatError),
                    word_form=_require(record, "word", str, "word form", line_no, CorpusFormatError),
                    pos=_parse_enum(Pos, record.get("pos", "OTHER"), "pos tag", line_no, CorpusFormatError),
                    sense_id=_require(record, "sense", str, "sense id", line_no, CorpusFormatError),
                    tokens=tuple(tokens),
                    target_index=target,
                )
            )
    return Corpus(instances=tuple(instances), source_name=path.name)


def corpus_record(inst: Instance) -> str:
    """Canonical single-line serialization of one instance."""
    return json.dumps(
        {
            "id": inst.instance_id,
            "lemma": inst.lemma,
            "word": inst.word_form,
            "pos": inst.pos.value,
            "sense": inst.sense_id,
            "tokens": list(inst.tokens),
            "target": inst.target_index,
        },
        ensure_ascii=False,
        separators=(",", ":"),
    )


def write_corpus(path: str | Path, corpus: Corpus) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for inst in corpus:
            fh.write(corpus_record(inst))
            fh.write("\n")


def load_sense_inventory(path: str | Path) -> SenseInventory:
    path = Path(path)
    entries: list[SenseEntry] = []
    seen: set[str] = set()
    warned: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InventoryFormatError(f"malformed record: {exc}", line_no) from None
            if not isinstance(record, dict):
                raise InventoryFormatError("record is not an object", line_no)
            _warn_unknown_keys(record, _INVENTORY_KEYS, "inventory", line_no, warned)
            sense_id = _require(record, "sense", str, "sense id", line_no, InventoryFormatError)
            if sense_id in seen:
                raise InventoryFormatError(f"duplicate sense id {sense_id!r}", line_no)
            seen.add(sense_id)
            gloss = _require(record, "gloss", str, "gloss", line_no, InventoryFormatError)
            if not gloss:
                raise InventoryFormatError(f"sense {sense_id!r}: gloss empty", line_no)
            entries.append(
                SenseEntry(
                    sense_id=sense_id,
                    lemma=_require(record, "lemma", str, "lemma", line_no, InventoryFormatError),
                    gloss=gloss,
                    label=_parse_enum(
                        MetaphorLabel, record.get("label", "UNKNOWN"), "metaphor label",
                        line_no, InventoryFormatError,
                    ),
                )
            )
    return SenseInventory(entries)


def inventory_record(entry: SenseEntry) -> str:
    return json.dumps(
        {
            "sense": entry.sense_id,
            "lemma": entry.lemma,
            "gloss": entry.gloss,
            "label": entry.label.value,
        },
        ensure_ascii=False,
        separators=(",", ":"),
    )


def write_sense_inventory(path: str | Path, inventory: SenseInventory) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for entry in inventory:
            fh.write(inventory_record(entry))
            fh.write("\n")


def validate(corpus: Corpus, inventory: SenseInventory, min_examples: int) -> ValidationReport:
    """Report unresolved senses and senses with insufficient support.

    Never raises; problems are listed in the report.
    """
    counts = corpus.sense_counts()
    unresolved = sorted(s for s in counts if s not in inventory)
    below = sorted((s, n) for s, n in counts.items() if n < min_examples)
    return ValidationReport(
        n_instances=len(corpus),
        n_words=len({inst.lemma for inst in corpus}),
        n_senses=len(counts),
        unresolved_sense_ids=unresolved,
        senses_below_min=below,
    )


def filter_senses(corpus: Corpus, inventory: SenseInventory, min_examples: int) -> Corpus:
    """Keep instances whose sense resolves and has >= min_examples instances.

    Support is counted in the corpus being filtered. Relative order preserved.
    """
    counts = corpus.sense_counts()
    kept = tuple(
        inst
        for inst in corpus
        if inst.sense_id in inventory and counts[inst.sense_id] >= min_examples
    )
    return Corpus(instances=kept, source_name=corpus.source_name)
